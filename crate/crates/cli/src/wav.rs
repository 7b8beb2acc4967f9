//! Mono 16-bit PCM WAV only; anything else is rejected rather than
//! converted.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use lfsc::Audio32;

use crate::error::{CliError, CliResult};

const SCALE: f32 = 32768.0;

pub fn read(path: &Path) -> CliResult<Audio32> {
    let name = path.display().to_string();
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => CliError::io(&name, io),
        e => CliError::unsupported(format!("{name}: not a readable WAV file: {e}")),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CliError::unsupported(format!(
            "{name}: {} channels; only mono 16-bit PCM WAV is supported",
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(CliError::unsupported(format!(
            "{name}: {}-bit {:?} samples; only mono 16-bit PCM WAV is supported",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f32 / SCALE))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::unsupported(format!("{name}: {e}")))?;
    if samples.is_empty() {
        return Err(CliError::unsupported(format!("{name}: WAV file has no samples")));
    }
    Ok(Audio32::mono(samples, spec.sample_rate))
}

pub fn write(path: &Path, audio: &Audio32) -> CliResult<()> {
    let name = path.display().to_string();
    let spec =
        WavSpec { channels: 1, sample_rate: audio.sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let io = |e: hound::Error| CliError::io(&name, e);
    let mut w = WavWriter::create(path, spec).map_err(io)?;
    for &s in &audio.samples {
        let v = (s * SCALE).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16;
        w.write_sample(v).map_err(io)?;
    }
    w.finalize().map_err(io)
}
