use std::fs;
use std::path::Path;

use lfsc::bitstream::{self, MAGIC as STREAM_MAGIC};
use lfsc::metrics::{evaluate, MetricSelection};
use lfsc::model::format::MAGIC as WEIGHTS_MAGIC;
use lfsc::rates::to_f64;
use lfsc::{AudioBuffer, BitstreamHeader, Codec32, FsqSpec, ModelConfig, ModelWeights, RateSummary, SpectralConfig};
use lfsc::{CodeSequence, StreamParams};

use crate::error::{CliError, CliResult};
use crate::report::Report;
use crate::wav;
use crate::{DecodeArgs, EncodeArgs, EvalArgs, InfoArgs, InitArgs, RateArgs, SpecOverride};

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn load_model(path: &Path) -> CliResult<ModelWeights> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| CliError::model(&name, e.into()))?;
    ModelWeights::from_bytes(&bytes).map_err(|e| CliError::model(&name, e))
}

fn describe(spec: &FsqSpec) -> String {
    format!("levels {:?} x {} codebooks", spec.levels(), spec.num_codebooks())
}

impl SpecOverride {
    fn apply(&self, base: &FsqSpec) -> CliResult<FsqSpec> {
        let levels = self.levels.clone().unwrap_or_else(|| base.levels().to_vec());
        let codebooks = self.codebooks.unwrap_or(base.num_codebooks());
        FsqSpec::new(codebooks, levels).map_err(|e| CliError::usage(e.to_string()))
    }
}

fn rate_rows(report: &mut Report, rates: &RateSummary) {
    report
        .float("frames_per_sec", to_f64(rates.frame_rate), 2)
        .float("tokens_per_sec", to_f64(rates.token_rate), 2)
        .float("kbps", rates.kbps(), 2);
}

pub fn encode(args: &EncodeArgs) -> CliResult<Report> {
    let weights = load_model(&args.model)?;
    let config = weights.config();
    let wanted = args.spec.apply(&config.fsq)?;
    if wanted != config.fsq {
        return Err(CliError::spec_mismatch(format!(
            "requested {} but model uses {}",
            describe(&wanted),
            describe(&config.fsq)
        )));
    }
    let audio = wav::read(&args.input)?;
    let codec = Codec32::new(&weights).map_err(|e| CliError::model(&args.model.display().to_string(), e))?;
    let codes = codec.encode(&audio)?;
    let hop = codec.hop_length();
    let params = StreamParams {
        sample_rate: codec.sample_rate(),
        total_stride: u16::try_from(hop)
            .map_err(|_| CliError::usage(format!("stride {hop} does not fit the header")))?,
        original_length: audio.len() as u64,
    };
    let bytes = bitstream::pack(&codes, params)?;
    write_bytes(&args.output, &bytes)?;

    let payload = bitstream::payload_len(codes.num_frames() as u64, codes.spec());
    let coded_secs = (codes.num_frames() * hop) as f64 / codec.sample_rate() as f64;
    let mut report = Report::default();
    report
        .int("frames", codes.num_frames() as u64)
        .int("tokens", codes.num_tokens() as u64)
        .int("bytes", bytes.len() as u64)
        .int("payload_bytes", payload as u64)
        .int("original_length", audio.len() as u64)
        .float("kbps", payload as f64 * 8.0 / coded_secs / 1000.0, 2);
    Ok(report)
}

pub fn decode(args: &DecodeArgs) -> CliResult<Report> {
    let weights = load_model(&args.model)?;
    let config = weights.config();
    let name = args.input.display().to_string();
    let bytes = read_bytes(&args.input)?;
    let (header, _) = bitstream::read_header(&bytes).map_err(|e| CliError::stream(&name, e))?;
    if header.spec != config.fsq {
        return Err(CliError::spec_mismatch(format!(
            "{name} uses {} but model uses {}",
            describe(&header.spec),
            describe(&config.fsq)
        )));
    }
    if header.sample_rate != config.sample_rate || header.total_stride as usize != config.hop_length() {
        return Err(CliError::spec_mismatch(format!(
            "{name} is {} Hz with stride {} but model is {} Hz with stride {}",
            header.sample_rate,
            header.total_stride,
            config.sample_rate,
            config.hop_length()
        )));
    }
    let (header, codes) = bitstream::unpack(&bytes).map_err(|e| CliError::stream(&name, e))?;
    let codec = Codec32::new(&weights).map_err(|e| CliError::model(&args.model.display().to_string(), e))?;
    let length = usize::try_from(header.original_length)
        .map_err(|_| CliError::new("corrupt", crate::error::exit::CORRUPT, "original length overflows"))?;
    let audio = codec.decode(&codes, Some(length))?;
    wav::write(&args.output, &audio)?;

    let mut report = Report::default();
    report
        .int("frames", codes.num_frames() as u64)
        .int("samples", audio.len() as u64)
        .int("sample_rate", audio.sample_rate as u64);
    Ok(report)
}

fn stream_info(name: &str, bytes: &[u8]) -> CliResult<Report> {
    let (header, codes): (BitstreamHeader, CodeSequence) =
        bitstream::unpack(bytes).map_err(|e| CliError::stream(name, e))?;
    let rates = RateSummary::new(&header.spec, header.sample_rate, header.total_stride as u32)?;
    let mut report = Report::default();
    report
        .text("format", "lfsc")
        .int("version", header.version as u64)
        .int("sample_rate", header.sample_rate as u64)
        .int("total_stride", header.total_stride as u64)
        .int("num_codebooks", header.spec.num_codebooks() as u64)
        .list("levels", header.spec.levels())
        .int("code_bits", header.spec.code_bit_width() as u64)
        .int("num_frames", codes.num_frames() as u64)
        .int("original_length", header.original_length)
        .int("payload_bytes", header.payload_len() as u64);
    rate_rows(&mut report, &rates);
    Ok(report)
}

fn weights_info(name: &str, bytes: &[u8]) -> CliResult<Report> {
    let weights = ModelWeights::from_bytes(bytes).map_err(|e| CliError::model(name, e))?;
    let config = weights.config();
    let count = weights.parameter_count();
    let rates = RateSummary::new(&config.fsq, config.sample_rate, config.hop_length() as u32)?;
    let mut report = Report::default();
    report
        .text("format", "weights")
        .int("sample_rate", config.sample_rate as u64)
        .int("hop_length", config.hop_length() as u64)
        .int("num_codebooks", config.fsq.num_codebooks() as u64)
        .list("levels", config.fsq.levels())
        .int("latent_dim", config.latent_dim() as u64)
        .int("tensors", weights.tensors().len() as u64)
        .int("params_encoder", count.encoder as u64)
        .int("params_decoder", count.decoder as u64)
        .int("params_total", count.total() as u64);
    rate_rows(&mut report, &rates);
    Ok(report)
}

pub fn info(args: &InfoArgs) -> CliResult<Report> {
    let name = args.input.display().to_string();
    let bytes = read_bytes(&args.input)?;
    match bytes.get(..4) {
        Some(m) if m == STREAM_MAGIC => stream_info(&name, &bytes),
        Some(m) if m == WEIGHTS_MAGIC => weights_info(&name, &bytes),
        _ => Err(CliError::new(
            "unknown-format",
            crate::error::exit::UNSUPPORTED,
            format!("{name}: neither a .lfsc bitstream nor a weight file"),
        )),
    }
}

fn parse_metrics(names: &[String]) -> CliResult<MetricSelection> {
    let mut sel = MetricSelection::NONE;
    for n in names {
        match n.trim() {
            "all" => sel = MetricSelection::ALL,
            "si_sdr" | "si-sdr" => sel.si_sdr = true,
            "mel" => sel.mel = true,
            "stft" => sel.stft = true,
            "bandwidth" => sel.bandwidth = true,
            other => return Err(CliError::usage(format!("unknown metric `{other}`"))),
        }
    }
    Ok(sel)
}

fn widen(audio: &AudioBuffer<f32>, len: usize) -> AudioBuffer<f64> {
    AudioBuffer::mono(audio.samples[..len].iter().map(|&v| v as f64).collect(), audio.sample_rate)
}

pub fn eval(args: &EvalArgs) -> CliResult<Report> {
    let which = parse_metrics(&args.metrics)?;
    let reference = wav::read(&args.reference)?;
    let estimate = wav::read(&args.input)?;
    if reference.sample_rate != estimate.sample_rate {
        return Err(CliError::new(
            "rate-mismatch",
            crate::error::exit::UNSUPPORTED,
            format!("reference is {} Hz but input is {} Hz", reference.sample_rate, estimate.sample_rate),
        ));
    }
    let len = reference.len().min(estimate.len());
    if !args.trim && reference.len() != estimate.len() {
        return Err(CliError::unsupported(format!(
            "lengths differ ({} vs {} samples); pass --trim to compare the common prefix",
            reference.len(),
            estimate.len()
        )));
    }
    let cfg = SpectralConfig::for_rate(reference.sample_rate);
    let m = evaluate(&widen(&reference, len), &widen(&estimate, len), &cfg, which)?;

    let mut report = Report::default();
    report.int("samples", len as u64);
    if let Some(v) = m.si_sdr {
        report.float("si_sdr_db", v, 2);
    }
    if let Some(v) = m.mel_dist {
        report.float("mel_distance", v, 4);
    }
    if let Some(v) = m.stft_dist {
        report.float("stft_distance", v, 4);
    }
    if let Some(v) = m.bandwidth {
        report.float("bandwidth_hz", v, 1);
    }
    Ok(report)
}

pub fn rate(args: &RateArgs) -> CliResult<Report> {
    let spec = FsqSpec::new(args.codebooks, args.levels.clone()).map_err(|e| CliError::usage(e.to_string()))?;
    let rates = RateSummary::new(&spec, args.sample_rate, args.stride).map_err(|e| CliError::usage(e.to_string()))?;
    let row = rates.table_row();
    let mut report = Report::default();
    report
        .int("codes_per_codebook", spec.codes_per_codebook())
        .int("code_bits", spec.code_bit_width() as u64)
        .text("frame_rate_exact", &rates.frame_rate.to_string())
        .text("bitrate_exact", &rates.bitrate.to_string());
    rate_rows(&mut report, &rates);
    report.float("table_frames_per_sec", row.frames_per_sec, 1).int("table_tokens_per_sec", row.tokens_per_sec).float(
        "table_kbps",
        row.kbps,
        2,
    );
    Ok(report)
}

pub fn init(args: &InitArgs) -> CliResult<Report> {
    let mut config = if args.reduced { ModelConfig::reduced() } else { ModelConfig::default() };
    config.fsq = args.spec.apply(&config.fsq)?;
    let weights = ModelWeights::random(config, args.seed).map_err(|e| CliError::usage(e.to_string()))?;
    let mut file = Vec::new();
    weights.save(&mut file)?;
    write_bytes(&args.output, &file)?;
    let count = weights.parameter_count();
    let mut report = Report::default();
    report
        .int("bytes", file.len() as u64)
        .int("params_encoder", count.encoder as u64)
        .int("params_decoder", count.decoder as u64)
        .int("params_total", count.total() as u64);
    Ok(report)
}
