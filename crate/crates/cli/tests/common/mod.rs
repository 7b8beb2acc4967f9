#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hound::{SampleFormat, WavSpec, WavWriter};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfsc"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = bin().args(args).output().expect("spawn lfsc");
    Run {
        code: status.code().expect("exit code"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

impl Run {
    /// Parses `--json` output.
    pub fn json(&self) -> serde_json::Value {
        assert_eq!(self.code, 0, "stderr: {}", self.stderr);
        serde_json::from_str(self.stdout.trim()).expect("json output")
    }

    /// Asserts the exit code and a single prefixed diagnostic line.
    pub fn fails_with(&self, code: i32, kind: &str) {
        assert_eq!(self.code, code, "stderr: {}", self.stderr);
        let lines: Vec<&str> = self.stderr.lines().collect();
        assert_eq!(lines.len(), 1, "diagnostic must be one line: {:?}", self.stderr);
        assert!(lines[0].starts_with(&format!("lfsc: error[{kind}]: ")), "{}", lines[0]);
    }
}

pub fn write_wav(path: &Path, samples: &[i16], sample_rate: u32, channels: u16, bits: u16) {
    let spec = WavSpec { channels, sample_rate, bits_per_sample: bits, sample_format: SampleFormat::Int };
    let mut w = WavWriter::create(path, spec).unwrap();
    for &s in samples {
        if bits == 16 {
            w.write_sample(s).unwrap();
        } else {
            w.write_sample(s as i32 * 256).unwrap();
        }
    }
    w.finalize().unwrap();
}

/// One second of a speech-like test signal at 22050 Hz.
pub fn tone_samples(n: usize) -> Vec<i16> {
    (0..n)
        .map(|i| {
            let t = i as f64 / 22050.0;
            let v = 0.3 * (2.0 * std::f64::consts::PI * 220.0 * t).sin()
                + 0.1 * (2.0 * std::f64::consts::PI * 1750.0 * t).sin();
            (v * 32767.0) as i16
        })
        .collect()
}

pub fn wav_len(path: &Path) -> (u32, usize) {
    let r = hound::WavReader::open(path).unwrap();
    (r.spec().sample_rate, r.len() as usize)
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    /// Reduced-channel random model via `lfsc init`.
    pub fn model(&self, name: &str, extra: &[&str]) -> String {
        let out = self.p(name);
        let mut args = vec!["init", "--reduced", "--seed", "7", "--output", &out];
        args.extend_from_slice(extra);
        let r = run(&args);
        assert_eq!(r.code, 0, "{}", r.stderr);
        out
    }

    pub fn tone_wav(&self, name: &str, n: usize) -> String {
        let out = self.path(name);
        write_wav(&out, &tone_samples(n), 22050, 1, 16);
        out.display().to_string()
    }
}
