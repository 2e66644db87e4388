//! Denoising attacks and the random-noise baseline.

use std::collections::HashMap;

use crate::encrypt::map_event;
use crate::error::{Error, Result};
use crate::event::{canonical_sort, l1_space, l1_time, Event, EventStream, Pixel, Polarity};
use crate::io::LabeledStream;
use crate::prng::SplitMix64;

/// Nearest-neighbor filter parameters. Both thresholds are strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NnfConfig {
    pub t_space: u32,
    pub t_time: u64,
    pub min_neighbors: usize,
}

impl Default for NnfConfig {
    fn default() -> Self {
        Self {
            t_space: 2,
            t_time: 5000,
            min_neighbors: 1,
        }
    }
}

impl NnfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_space == 0 || self.t_time == 0 || self.min_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "nnf thresholds and neighbor count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
fn is_neighbor(a: &Event, b: &Event, cfg: &NnfConfig) -> bool {
    a.polarity == b.polarity
        && l1_space(a.pixel, b.pixel) < cfg.t_space
        && l1_time(a.t, b.t) < cfg.t_time
}

/// Quadratic reference: keep flags aligned with `stream.events`.
pub fn nnf_keep_naive(stream: &EventStream, cfg: &NnfConfig) -> Vec<bool> {
    let ev = &stream.events;
    (0..ev.len())
        .map(|i| {
            let mut count = 0;
            for j in 0..ev.len() {
                if j != i && is_neighbor(&ev[i], &ev[j], cfg) {
                    count += 1;
                    if count >= cfg.min_neighbors {
                        return true;
                    }
                }
            }
            false
        })
        .collect()
}

/// Indexed implementation with the same output as [`nnf_keep_naive`].
///
/// Events are indexed by `(pixel, polarity, t)`; each query scans the
/// spatial neighborhood and binary-searches the time window.
pub fn nnf_keep(stream: &EventStream, cfg: &NnfConfig) -> Vec<bool> {
    let w = stream.width as u64;
    let key = |p: Pixel, pol: Polarity| (p.y as u64 * w + p.x as u64) * 2 + pol.bit() as u64;
    let mut index: Vec<(u64, u64)> = stream
        .events
        .iter()
        .map(|e| (key(e.pixel, e.polarity), e.t))
        .collect();
    index.sort_unstable();

    let r = cfg.t_space.saturating_sub(1) as i32;
    let offsets: Vec<(i32, i32)> = (-r..=r)
        .flat_map(|dx| (-r..=r).map(move |dy| (dx, dy)))
        .filter(|(dx, dy)| dx.abs() + dy.abs() <= r)
        .collect();
    let (wi, hi) = (stream.width as i32, stream.height as i32);

    stream
        .events
        .iter()
        .map(|e| {
            let lo = e.t.saturating_sub(cfg.t_time - 1);
            let hi_t = e.t.saturating_add(cfg.t_time - 1);
            // The event's own entry is always inside its window.
            let mut count: usize = 0;
            let need = cfg.min_neighbors + 1;
            for &(dx, dy) in &offsets {
                let (x, y) = (e.pixel.x as i32 + dx, e.pixel.y as i32 + dy);
                if x < 0 || y < 0 || x >= wi || y >= hi {
                    continue;
                }
                let k = key(Pixel::new(x as u16, y as u16), e.polarity);
                let a = index.partition_point(|&(ik, it)| (ik, it) < (k, lo));
                let b = index.partition_point(|&(ik, it)| (ik, it) <= (k, hi_t));
                count += b - a;
                if count >= need {
                    return true;
                }
            }
            false
        })
        .collect()
}

fn apply_keep(stream: &EventStream, keep: &[bool]) -> EventStream {
    canonical_sort(EventStream {
        width: stream.width,
        height: stream.height,
        events: stream
            .events
            .iter()
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|(e, _)| *e)
            .collect(),
    })
}

pub fn nnf_filter(stream: &EventStream, cfg: &NnfConfig) -> EventStream {
    apply_keep(stream, &nnf_keep(stream, cfg))
}

/// Spatiotemporal voxel edge lengths for [`density_filter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Voxel {
    pub dx: u16,
    pub dy: u16,
    pub dt: u64,
}

impl Default for Voxel {
    fn default() -> Self {
        Self {
            dx: 2,
            dy: 2,
            dt: 5000,
        }
    }
}

pub fn density_keep(stream: &EventStream, voxel: Voxel, min_count: usize) -> Result<Vec<bool>> {
    if voxel.dx == 0 || voxel.dy == 0 || voxel.dt == 0 {
        return Err(Error::InvalidConfig("voxel dimensions must be >= 1".into()));
    }
    let cell = |e: &Event| (e.pixel.x / voxel.dx, e.pixel.y / voxel.dy, e.t / voxel.dt);
    let mut counts: HashMap<(u16, u16, u64), usize> = HashMap::new();
    for e in &stream.events {
        *counts.entry(cell(e)).or_default() += 1;
    }
    Ok(stream
        .events
        .iter()
        .map(|e| counts[&cell(e)] >= min_count)
        .collect())
}

pub fn density_filter(stream: &EventStream, voxel: Voxel, min_count: usize) -> Result<EventStream> {
    Ok(apply_keep(stream, &density_keep(stream, voxel, min_count)?))
}

/// Adds `floor(|E| / target_snr)` uniformly random events over the sensor and
/// the stream's time span. Originals are labeled signal, injected events noise.
pub fn inject_random_noise(stream: &EventStream, target_snr: f64, seed: u64) -> Result<LabeledStream> {
    if stream.is_empty() {
        return Err(Error::EmptyInjection);
    }
    if !(target_snr.is_finite() && target_snr > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "target SNR must be positive, got {target_snr}"
        )));
    }
    let (t_min, t_max) = stream.time_span().expect("nonempty");
    let count = (stream.len() as f64 / target_snr).floor() as usize;
    let mut rng = SplitMix64::new(seed);
    let mut events = stream.events.clone();
    let mut labels = vec![true; events.len()];
    events.reserve(count);
    for _ in 0..count {
        let x = rng.below(stream.width as u64) as u16;
        let y = rng.below(stream.height as u64) as u16;
        let t = rng.in_range(t_min, t_max);
        let polarity = Polarity::from_bit(rng.next_bit());
        events.push(Event::new(t, x, y, polarity));
        labels.push(false);
    }
    LabeledStream::new(
        EventStream {
            width: stream.width,
            height: stream.height,
            events,
        },
        labels,
    )
}

/// Ground truth for an encrypted stream: an event is signal when it sits on a
/// true-event pixel and, after undoing the polarity map, matches an original
/// event not already claimed.
pub fn label_encrypted(original: &EventStream, encrypted: &EventStream) -> LabeledStream {
    let mut remaining: HashMap<Event, usize> = HashMap::new();
    for e in &original.events {
        *remaining.entry(*e).or_default() += 1;
    }
    let stream = canonical_sort(encrypted.clone());
    let labels = stream
        .events
        .iter()
        .map(|e| match remaining.get_mut(&map_event(e)) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        })
        .collect();
    LabeledStream { stream, labels }
}
