//! `evtcrypt`: event-stream encryption experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 key error.
//! One JSON object per run goes to stdout; diagnostics go to stderr.

mod args;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use evtcrypt_core::analysis::{self, SceneKind, SceneSpec, Snr};
use evtcrypt_core::attacks::{self, NnfConfig, Voxel};
use evtcrypt_core::io;
use evtcrypt_core::{Error, EventStream, ExactConfig, LabeledStream, MaskMode, Scalar};

use args::{Cli, Command, FilterKind, Format, Kind};

const SECRET_VAR: &str = "EVTCRYPT_SECRET";

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self {
            code: if err.is_key_error() { 3 } else { 2 },
            message: err.to_string(),
        }
    }
}

type CmdResult = Result<Value, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let fmt = cli.format;
    match cli.command {
        Command::Encrypt(a) => cmd_encrypt(a, fmt),
        Command::Decrypt(a) => cmd_decrypt(a, fmt),
        Command::Attack(a) => cmd_attack(a, fmt),
        Command::Frame(a) => cmd_frame(a),
        Command::Snr(a) => cmd_snr(a),
        Command::Inject(a) => cmd_inject(a, fmt),
        Command::Label(a) => cmd_label(a),
        Command::Gen(a) => cmd_gen(a, fmt),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Output files staged next to their targets and renamed only once every
/// output of the command has been written.
struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn stage(&mut self, target: &Path) -> Result<PathBuf, Failure> {
        let dir = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let tmp = NamedTempFile::new_in(&dir).map_err(|e| Failure {
            code: 2,
            message: format!("cannot create output in {}: {e}", dir.display()),
        })?;
        let path = tmp.path().to_path_buf();
        self.files.push((tmp, target.to_path_buf()));
        Ok(path)
    }

    fn stream(&mut self, stream: &EventStream, target: &Path, fmt: Format) -> Result<(), Failure> {
        let tmp = self.stage(target)?;
        match fmt {
            Format::Text => io::write_text(stream, &tmp)?,
            Format::Binary => io::write_binary(stream, &tmp)?,
        }
        Ok(())
    }

    fn labels(&mut self, labels: &[bool], target: &Path) -> Result<(), Failure> {
        let tmp = self.stage(target)?;
        io::write_labels(labels, &tmp)?;
        Ok(())
    }

    fn commit(self) -> Result<(), Failure> {
        for (tmp, target) in self.files {
            tmp.persist(&target).map_err(|e| Failure {
                code: 2,
                message: format!("cannot write {}: {}", target.display(), e.error),
            })?;
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<EventStream, Failure> {
    let loaded = io::read_stream(path)?;
    if loaded.reordered {
        eprintln!("warning: {} was not in canonical order; re-sorted", path.display());
    }
    Ok(loaded.stream)
}

fn load_labeled(stream_path: &Path, labels_path: &Path) -> Result<LabeledStream, Failure> {
    // Labels are aligned with the file order, so pair them before sorting.
    let bytes = std::fs::read(stream_path).map_err(|e| Failure {
        code: 2,
        message: format!("cannot read {}: {e}", stream_path.display()),
    })?;
    let raw = if bytes.starts_with(&io::STREAM_MAGIC) {
        io::decode_binary(&bytes)?
    } else {
        io::parse_text(&String::from_utf8_lossy(&bytes))?
    };
    let labels = io::read_labels(labels_path)?;
    if raw.reordered {
        return Err(Error::InvalidConfig(format!(
            "{} is not in canonical order; labels cannot be aligned",
            stream_path.display()
        ))
        .into());
    }
    Ok(LabeledStream::new(raw.stream, labels)?)
}

fn read_secret() -> Result<u64, Failure> {
    let raw = match std::env::var(SECRET_VAR) {
        Ok(v) => v,
        Err(_) => {
            eprint!("secret: ");
            let _ = std::io::stderr().flush();
            let mut line = String::new();
            std::io::stdin()
                .lock()
                .read_line(&mut line)
                .map_err(|e| Failure::usage(format!("cannot read secret: {e}")))?;
            line
        }
    };
    parse_secret(raw.trim())
        .ok_or_else(|| Failure::usage(format!("secret must be a decimal or 0x-hex u64, set {SECRET_VAR}")))
}

fn parse_secret(s: &str) -> Option<u64> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

fn parse_mask(s: &str) -> Result<MaskMode, Failure> {
    match s {
        "full" => Ok(MaskMode::FullComplement),
        _ => s
            .strip_prefix("band:")
            .and_then(|r| r.parse().ok())
            .map(MaskMode::DilatedBand)
            .ok_or_else(|| Failure::usage(format!("invalid --mask `{s}`, expected full or band:<radius>"))),
    }
}

fn snr_json(s: &Snr<f64>) -> Value {
    json!({
        "signal": s.signal,
        "noise": s.noise,
        "snr_linear": if s.is_infinite() { Value::Null } else { json!(s.ratio) },
        "snr_infinite": s.is_infinite(),
    })
}

fn cmd_encrypt(a: args::EncryptArgs, fmt: Format) -> CmdResult {
    let sigma = evtcrypt_core::Exact::parse_decimal(&a.sigma)
        .ok_or_else(|| Failure::usage(format!("invalid --sigma `{}`", a.sigma)))?;
    let cfg = ExactConfig {
        sigma,
        t_threshold: a.tt,
        spatial_threshold: a.tx,
        seed: a.seed,
        mask_mode: parse_mask(&a.mask)?,
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let stream = load(&a.input)?;
    let secret = read_secret()?;
    let start = Instant::now();
    let bundle = evtcrypt_core::encrypt(&stream, &cfg)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut out = Staged::new();
    out.stream(&bundle.stream, &a.output, fmt)?;
    let key_tmp = out.stage(&a.key)?;
    io::write_key(&bundle.plane, secret, &key_tmp)?;
    if let Some(path) = &a.labels_out {
        let labeled = attacks::label_encrypted(&stream, &bundle.stream);
        out.labels(&labeled.labels, path)?;
    }
    out.commit()?;
    Ok(json!({
        "command": "encrypt",
        "input_events": stream.len(),
        "output_events": bundle.stream.len(),
        "mask_pixels": bundle.mask_pixels,
        "key_pixels": bundle.plane.len(),
        "elapsed_ms": elapsed_ms,
    }))
}

fn cmd_decrypt(a: args::DecryptArgs, fmt: Format) -> CmdResult {
    let stream = load(&a.input)?;
    let secret = read_secret()?;
    let plane = io::read_key(&a.key, secret)?;
    let recovered = evtcrypt_core::decrypt(&stream, &plane)?;
    let mut out = Staged::new();
    out.stream(&recovered, &a.output, fmt)?;
    out.commit()?;
    Ok(json!({
        "command": "decrypt",
        "input_events": stream.len(),
        "output_events": recovered.len(),
        "key_pixels": plane.len(),
    }))
}

fn cmd_attack(a: args::AttackArgs, fmt: Format) -> CmdResult {
    let labeled = match &a.labels {
        Some(lp) => Some(load_labeled(&a.input, lp)?),
        None => None,
    };
    let stream = match &labeled {
        Some(l) => l.stream.clone(),
        None => load(&a.input)?,
    };
    let keep = match a.filter {
        FilterKind::Nnf => {
            let cfg = NnfConfig {
                t_space: a.tx,
                t_time: a.tt,
                min_neighbors: a.k,
            };
            cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
            attacks::nnf_keep(&stream, &cfg)
        }
        FilterKind::Density => {
            let voxel = Voxel {
                dx: a.dx,
                dy: a.dy,
                dt: a.dt,
            };
            attacks::density_keep(&stream, voxel, a.min_count)
                .map_err(|e| Failure::usage(e.to_string()))?
        }
    };
    let filtered = LabeledStream::all_signal(stream.clone()).retain(&keep).stream;

    let mut out = Staged::new();
    out.stream(&filtered, &a.output, fmt)?;
    let mut summary = json!({
        "command": "attack",
        "filter": format!("{:?}", a.filter).to_lowercase(),
        "input_events": stream.len(),
        "output_events": filtered.len(),
    });
    if let Some(l) = &labeled {
        let post = l.retain(&keep);
        if let Some(path) = &a.labels_out {
            out.labels(&post.labels, path)?;
        }
        let pre_snr = analysis::snr::<f64>(l);
        let post_snr = analysis::snr::<f64>(&post);
        summary["pre"] = snr_json(&pre_snr);
        summary["post"] = snr_json(&post_snr);
    }
    out.commit()?;
    Ok(summary)
}

fn cmd_frame(a: args::FrameArgs) -> CmdResult {
    let stream = load(&a.input)?;
    let (lo, hi) = stream.time_span().unwrap_or((0, 0));
    let (t0, t1) = (a.t0.unwrap_or(lo), a.t1.unwrap_or(hi));
    let frame = analysis::render_frame(&stream, t0, t1).map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = Staged::new();
    let tmp = out.stage(&a.output)?;
    frame.write_pgm(&tmp)?;
    out.commit()?;
    Ok(json!({
        "command": "frame",
        "width": frame.width,
        "height": frame.height,
        "t0": t0,
        "t1": t1,
        "events_in_window": stream.events.iter().filter(|e| (t0..=t1).contains(&e.t)).count(),
    }))
}

fn cmd_snr(a: args::SnrArgs) -> CmdResult {
    let labeled = load_labeled(&a.input, &a.labels)?;
    let mut summary = snr_json(&analysis::snr::<f64>(&labeled));
    summary["command"] = json!("snr");
    Ok(summary)
}

fn cmd_inject(a: args::InjectArgs, fmt: Format) -> CmdResult {
    let stream = load(&a.input)?;
    if !(a.snr.is_finite() && a.snr > 0.0) {
        return Err(Failure::usage("--snr must be positive"));
    }
    let labeled = attacks::inject_random_noise(&stream, a.snr, a.seed)?;
    let labels_path = a
        .labels_out
        .unwrap_or_else(|| PathBuf::from(format!("{}.labels", a.output.display())));
    let mut out = Staged::new();
    out.stream(&labeled.stream, &a.output, fmt)?;
    out.labels(&labeled.labels, &labels_path)?;
    out.commit()?;
    let mut summary = snr_json(&analysis::snr::<f64>(&labeled));
    summary["command"] = json!("inject");
    summary["input_events"] = json!(stream.len());
    summary["output_events"] = json!(labeled.stream.len());
    Ok(summary)
}

fn cmd_label(a: args::LabelArgs) -> CmdResult {
    let original = load(&a.original)?;
    let encrypted = load(&a.encrypted)?;
    let labeled = attacks::label_encrypted(&original, &encrypted);
    let mut out = Staged::new();
    out.labels(&labeled.labels, &a.output)?;
    out.commit()?;
    let mut summary = snr_json(&analysis::snr::<f64>(&labeled));
    summary["command"] = json!("label");
    Ok(summary)
}

fn cmd_gen(a: args::GenArgs, fmt: Format) -> CmdResult {
    let spec = SceneSpec {
        kind: match a.kind {
            Kind::EdgeSweep => SceneKind::EdgeSweep,
            Kind::TwoBlobs => SceneKind::TwoBlobs,
        },
        width: a.width,
        height: a.height,
        duration_us: a.duration,
        rate_hz: a.rate,
        seed: a.seed,
    };
    let scene = analysis::generate_scene(&spec).map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = Staged::new();
    out.stream(&scene.stream, &a.output, fmt)?;
    if let Some(path) = &a.labels_out {
        out.labels(&scene.labels, path)?;
    }
    out.commit()?;
    Ok(json!({
        "command": "gen",
        "kind": format!("{:?}", a.kind).to_lowercase(),
        "output_events": scene.stream.len(),
    }))
}

fn cmd_bench(a: args::BenchArgs) -> CmdResult {
    let report = analysis::bench_encrypt(a.width, a.height, a.count, a.trials)
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(json!({
        "command": "bench",
        "width": a.width,
        "height": a.height,
        "input_events": report.input_events,
        "output_events": report.output_events,
        "trials": report.trials,
        "events_per_sec": report.events_per_sec,
        "p50_ms": report.p50_ms,
        "p95_ms": report.p95_ms,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secrets_parse() {
        assert_eq!(parse_secret("42"), Some(42));
        assert_eq!(parse_secret("0xff"), Some(255));
        assert_eq!(parse_secret("nope"), None);
    }

    #[test]
    fn masks_parse() {
        assert_eq!(parse_mask("full").unwrap(), MaskMode::FullComplement);
        assert_eq!(parse_mask("band:3").unwrap(), MaskMode::DilatedBand(3));
        assert_eq!(parse_mask("band:x").unwrap_err().code, 1);
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::WrongSecret).code, 3);
        assert_eq!(Failure::from(Error::CorruptKey("x".into())).code, 3);
        assert_eq!(Failure::from(Error::EmptyStream).code, 2);
        assert_eq!(Failure::from(Error::InvalidKey("x".into())).code, 2);
    }
}
