//! Metrics and visual artifacts: SNR, event frames, frame correlation,
//! synthetic scenes, and encryption throughput.

use std::path::Path;
use std::time::Instant;

use num_traits::Float;

use crate::encrypt::{encrypt, EncryptConfig};
use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity};
use crate::io::LabeledStream;
use crate::prng::SplitMix64;
use crate::scalar::Exact;

/// Linear signal-to-noise count ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr<F> {
    pub signal: usize,
    pub noise: usize,
    /// `signal / noise`, or `+inf` when there is no noise.
    pub ratio: F,
}

impl<F: Float> Snr<F> {
    pub fn is_infinite(&self) -> bool {
        self.noise == 0
    }
}

pub fn snr<F: Float>(labeled: &LabeledStream) -> Snr<F> {
    let signal = labeled.signal_count();
    let noise = labeled.noise_count();
    let ratio = if noise == 0 {
        F::infinity()
    } else {
        F::from(signal).unwrap() / F::from(noise).unwrap()
    };
    Snr {
        signal,
        noise,
        ratio,
    }
}

/// Polarity accumulation image. `rendered` maps the signed sums to gray
/// levels symmetric around 128.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    pub width: u16,
    pub height: u16,
    pub values: Vec<i64>,
    pub rendered: Vec<u8>,
}

impl EventFrame {
    pub fn from_values(width: u16, height: u16, values: Vec<i64>) -> Self {
        let maxabs = values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0).max(1) as i128;
        let rendered = values
            .iter()
            .map(|&v| {
                // 128 + round(127 v / maxabs), half away from zero
                let num = 127 * v as i128;
                let mag = (2 * num.abs() + maxabs) / (2 * maxabs);
                (128 + num.signum() * mag) as u8
            })
            .collect();
        Self {
            width,
            height,
            values,
            rendered,
        }
    }

    pub fn rendered_at(&self, x: u16, y: u16) -> u8 {
        self.rendered[y as usize * self.width as usize + x as usize]
    }

    /// Binary PGM (P5), row-major.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rendered);
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Accumulates polarities of events with `t0 <= t <= t1`.
pub fn render_frame(stream: &EventStream, t0: u64, t1: u64) -> Result<EventFrame> {
    if t0 > t1 {
        return Err(Error::InvalidWindow(t0, t1));
    }
    let mut values = vec![0i64; stream.pixel_count()];
    for e in stream.events.iter().filter(|e| (t0..=t1).contains(&e.t)) {
        values[stream.index_of(e.pixel)] += e.polarity.as_i8() as i64;
    }
    Ok(EventFrame::from_values(stream.width, stream.height, values))
}

/// Pearson correlation of the rendered gray levels; 0 when either frame is flat.
pub fn frame_similarity<F: Float>(a: &EventFrame, b: &EventFrame) -> Result<F> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let n = F::from(a.rendered.len().max(1)).unwrap();
    let to_f = |v: u8| F::from(v).unwrap();
    let mean = |px: &[u8]| px.iter().fold(F::zero(), |s, &v| s + to_f(v)) / n;
    let (ma, mb) = (mean(&a.rendered), mean(&b.rendered));
    let (mut cov, mut va, mut vb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.rendered.iter().zip(&b.rendered) {
        let (dx, dy) = (to_f(x) - ma, to_f(y) - mb);
        cov = cov + dx * dy;
        va = va + dx * dx;
        vb = vb + dy * dy;
    }
    if va == F::zero() || vb == F::zero() {
        return Ok(F::zero());
    }
    let r = cov / (va.sqrt() * vb.sqrt());
    Ok(r.max(-F::one()).min(F::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// A bar spanning the middle half of the rows, moving left to right.
    /// Its leading edge at `x = floor(width * t / duration)` fires +1, the
    /// trailing edge `width / 8` columns behind fires -1.
    EdgeSweep,
    /// Two static discs flickering in polarity.
    TwoBlobs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: u16,
    pub height: u16,
    pub duration_us: u64,
    /// Events per second over the whole sensor.
    pub rate_hz: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn event_count(&self) -> usize {
        (self.rate_hz * self.duration_us as f64 / 1e6).floor().max(0.0) as usize
    }

    /// Rows covered by the edge-sweep bar.
    pub fn band_rows(&self) -> std::ops::Range<u16> {
        let h = self.height;
        if h < 4 {
            0..h
        } else {
            h / 4..h - h / 4
        }
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<LabeledStream> {
    if spec.width == 0 || spec.height == 0 || spec.duration_us == 0 {
        return Err(Error::InvalidConfig("scene dimensions and duration must be positive".into()));
    }
    if !(spec.rate_hz.is_finite() && spec.rate_hz >= 0.0) {
        return Err(Error::InvalidConfig("scene rate must be non-negative".into()));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let (w, h, dur) = (spec.width as u64, spec.height as u64, spec.duration_us);
    let n = spec.event_count();
    let mut events = Vec::with_capacity(n);
    match spec.kind {
        SceneKind::EdgeSweep => {
            let rows = spec.band_rows();
            let bar = (w / 8).max(1);
            for _ in 0..n {
                let t = rng.below(dur);
                let lead = ((w as u128 * t as u128) / dur as u128) as u64;
                let y = rows.start + rng.below((rows.end - rows.start) as u64) as u16;
                let event = if rng.next_bit() && lead >= bar {
                    Event::new(t, (lead - bar) as u16, y, Polarity::Neg)
                } else {
                    Event::new(t, lead as u16, y, Polarity::Pos)
                };
                events.push(event);
            }
        }
        SceneKind::TwoBlobs => {
            let radius = (w.min(h) / 6).max(1) as i64;
            let centers = [(w as i64 / 4, h as i64 / 2), (3 * w as i64 / 4, h as i64 / 2)];
            let phase = (dur / 8).max(1);
            while events.len() < n {
                let (cx, cy) = centers[rng.below(2) as usize];
                let dx = rng.below(2 * radius as u64 + 1) as i64 - radius;
                let dy = rng.below(2 * radius as u64 + 1) as i64 - radius;
                if dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let t = rng.below(dur);
                let pol = Polarity::from_bit((t / phase).is_multiple_of(2));
                events.push(Event::new(t, x as u16, y as u16, pol));
            }
        }
    }
    Ok(LabeledStream::all_signal(EventStream::new(
        spec.width,
        spec.height,
        events,
    )?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub input_events: usize,
    pub output_events: usize,
    pub trials: usize,
    pub events_per_sec: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

/// Times `encrypt` with default settings on a one-second edge-sweep scene.
pub fn bench_encrypt(width: u16, height: u16, event_count: usize, trials: usize) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::EmptyReport);
    }
    if event_count == 0 {
        return Err(Error::InvalidConfig("benchmark needs at least one event".into()));
    }
    let scene = generate_scene(&SceneSpec {
        kind: SceneKind::EdgeSweep,
        width,
        height,
        duration_us: 1_000_000,
        rate_hz: event_count as f64,
        seed: 0,
    })?
    .stream;
    let cfg = EncryptConfig::<Exact>::default();
    let mut times = Vec::with_capacity(trials);
    let mut output_events = 0;
    for _ in 0..trials {
        let start = Instant::now();
        let bundle = encrypt(&scene, &cfg)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        output_events = bundle.stream.len();
    }
    times.sort_by(f64::total_cmp);
    let rank = |q: f64| times[((q * times.len() as f64).ceil() as usize).clamp(1, times.len()) - 1];
    let p50 = rank(0.5);
    Ok(BenchReport {
        input_events: scene.len(),
        output_events,
        trials,
        events_per_sec: scene.len() as f64 / (p50 / 1e3).max(1e-9),
        p50_ms: p50,
        p95_ms: rank(0.95),
    })
}
