//! Event encryption by correlated noise synthesis.
//!
//! Noise spreads outward from the true-event pixels through the mask as a
//! breadth-first flood fill. Each filled pixel receives one noise event per
//! event of its parent pixel, with the timestamp dilated by the spatial
//! distance and a random polarity. Finally every polarity is XORed with the
//! parity of its pixel's Szudzik code. The true-event plane is the key.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::event::{
    canonical_sort, l1_time, project_plane, Event, EventStream, Pixel, Polarity, SpatialPlane,
};
use crate::prng::SplitMix64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Every sensor pixel without a true event.
    FullComplement,
    /// Pixels within this L1 radius of a true event.
    DilatedBand(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncryptConfig<S> {
    /// Timestamp scaling factor per unit of spatial distance.
    pub sigma: S,
    /// Absolute temporal bound in µs. `None` leaves the bound adaptive, which
    /// every dilated timestamp satisfies by construction.
    pub t_threshold: Option<u64>,
    /// Inclusive L1 radius of the neighbor query.
    pub spatial_threshold: u32,
    pub seed: u64,
    pub mask_mode: MaskMode,
}

impl<S: Scalar> Default for EncryptConfig<S> {
    fn default() -> Self {
        Self {
            sigma: S::parse_decimal("0.05").expect("0.05 parses for every scalar"),
            t_threshold: None,
            spatial_threshold: 1,
            seed: 0,
            mask_mode: MaskMode::FullComplement,
        }
    }
}

impl<S: Scalar> EncryptConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite_non_negative() {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and non-negative, got {:?}",
                self.sigma
            )));
        }
        if self.spatial_threshold == 0 {
            return Err(Error::InvalidConfig("spatial threshold must be >= 1".into()));
        }
        if self.t_threshold == Some(0) {
            return Err(Error::InvalidConfig("temporal threshold must be >= 1".into()));
        }
        Ok(())
    }
}

/// Pixels eligible to receive noise, stored as a row-major bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseMask {
    width: u16,
    height: u16,
    cells: Vec<bool>,
    len: usize,
}

impl NoiseMask {
    pub fn empty(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            cells: vec![false; width as usize * height as usize],
            len: 0,
        }
    }

    pub fn from_pixels(width: u16, height: u16, pixels: impl IntoIterator<Item = Pixel>) -> Self {
        let mut mask = Self::empty(width, height);
        for p in pixels {
            mask.insert(p);
        }
        mask
    }

    fn idx(&self, p: Pixel) -> usize {
        p.y as usize * self.width as usize + p.x as usize
    }

    pub fn insert(&mut self, p: Pixel) -> bool {
        if !p.within(self.width, self.height) {
            return false;
        }
        let i = self.idx(p);
        let fresh = !self.cells[i];
        self.cells[i] = true;
        self.len += fresh as usize;
        fresh
    }

    pub fn remove(&mut self, p: Pixel) -> bool {
        if !self.contains(p) {
            return false;
        }
        let i = self.idx(p);
        self.cells[i] = false;
        self.len -= 1;
        true
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.within(self.width, self.height) && self.cells[self.idx(p)]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width as usize;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(move |(i, _)| Pixel::new((i % w) as u16, (i / w) as u16))
    }
}

/// Result of [`encrypt`]: the ciphertext stream and the key plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedBundle {
    pub stream: EventStream,
    pub plane: SpatialPlane,
    pub mask_pixels: usize,
}

/// Hooks into the flood fill, used to audit noise provenance.
pub trait FillObserver {
    /// `pixel` was filled from `parent` with `count` events.
    fn on_fill(&mut self, _pixel: Pixel, _parent: Pixel, _count: usize) {}
    /// One synthesized event together with the parent event it was derived from.
    fn on_noise(&mut self, _noise: &Event, _parent_pixel: Pixel, _parent_t: u64) {}
}

impl FillObserver for () {}

fn check_bounds(stream: &EventStream) -> Result<()> {
    match stream
        .events
        .iter()
        .find(|e| !e.pixel.within(stream.width, stream.height))
    {
        Some(e) => Err(Error::OutOfBounds {
            pixel: e.pixel,
            width: stream.width,
            height: stream.height,
        }),
        None => Ok(()),
    }
}

pub fn build_mask<S: Scalar>(stream: &EventStream, cfg: &EncryptConfig<S>) -> Result<NoiseMask> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    check_bounds(stream)?;
    let (w, h) = (stream.width, stream.height);
    let mut occupied = vec![false; stream.pixel_count()];
    for e in &stream.events {
        occupied[stream.index_of(e.pixel)] = true;
    }
    let mut mask = NoiseMask::empty(w, h);
    match cfg.mask_mode {
        MaskMode::FullComplement => {
            for (i, &occ) in occupied.iter().enumerate() {
                if !occ {
                    mask.cells[i] = true;
                    mask.len += 1;
                }
            }
        }
        MaskMode::DilatedBand(radius) => {
            // Multi-source BFS on the open 4-grid yields exact L1 distances.
            let mut dist = vec![u32::MAX; occupied.len()];
            let mut queue = VecDeque::new();
            for (i, &occ) in occupied.iter().enumerate() {
                if occ {
                    dist[i] = 0;
                    queue.push_back(i);
                }
            }
            let wu = w as usize;
            while let Some(i) = queue.pop_front() {
                let d = dist[i];
                if d >= radius {
                    continue;
                }
                let (x, y) = (i % wu, i / wu);
                let mut visit = |j: usize| {
                    if dist[j] == u32::MAX {
                        dist[j] = d + 1;
                        mask.cells[j] = true;
                        mask.len += 1;
                        queue.push_back(j);
                    }
                };
                if x + 1 < wu {
                    visit(i + 1);
                }
                if x > 0 {
                    visit(i - 1);
                }
                if y + 1 < h as usize {
                    visit(i + wu);
                }
                if y > 0 {
                    visit(i - wu);
                }
            }
        }
    }
    Ok(mask)
}

/// Offsets with L1 length in `1..=radius`, in the fixed visiting order:
/// by distance, then by `|dy|`, then `dy` positive first, then `dx` positive first.
/// For radius 1 this is `(+1,0), (-1,0), (0,+1), (0,-1)`.
pub fn neighbor_offsets(radius: u32) -> Vec<(i32, i32)> {
    let r = radius as i32;
    let mut out = Vec::new();
    for d in 1..=r {
        for ady in 0..=d {
            let adx = d - ady;
            for dy in if ady == 0 { vec![0] } else { vec![ady, -ady] } {
                for dx in if adx == 0 { vec![0] } else { vec![adx, -adx] } {
                    out.push((dx, dy));
                }
            }
        }
    }
    out
}

fn offset_pixel(p: Pixel, (dx, dy): (i32, i32), width: u16, height: u16) -> Option<Pixel> {
    let x = p.x as i32 + dx;
    let y = p.y as i32 + dy;
    (x >= 0 && y >= 0 && x < width as i32 && y < height as i32)
        .then(|| Pixel::new(x as u16, y as u16))
}

/// Mask pixels within the inclusive spatial threshold of `center`, in visiting order.
pub fn spatial_neighbors(center: Pixel, mask: &NoiseMask, spatial_threshold: u32) -> Vec<Pixel> {
    neighbor_offsets(spatial_threshold)
        .into_iter()
        .filter_map(|off| offset_pixel(center, off, mask.width, mask.height))
        .filter(|p| mask.contains(*p))
        .collect()
}

#[inline]
fn noise_timestamp<S: Scalar>(parent_t: u64, distance: u32, cfg: &EncryptConfig<S>) -> u64 {
    let t = cfg.sigma.dilate(parent_t, distance);
    match cfg.t_threshold {
        Some(tt) if l1_time(t, parent_t) >= tt => {
            if t >= parent_t {
                parent_t.saturating_add(tt - 1)
            } else {
                parent_t.saturating_sub(tt - 1)
            }
        }
        _ => t,
    }
}

/// One noise event at `target` per parent event, drawing polarities from `rng`
/// in parent order.
pub fn synthesize_at<S: Scalar>(
    target: Pixel,
    parent_events: &[Event],
    parent_pixel: Pixel,
    cfg: &EncryptConfig<S>,
    rng: &mut SplitMix64,
) -> Vec<Event> {
    let d = crate::event::l1_space(target, parent_pixel);
    parent_events
        .iter()
        .map(|pe| Event {
            pixel: target,
            polarity: Polarity::from_bit(rng.next_bit()),
            t: noise_timestamp(pe.t, d, cfg),
        })
        .collect()
}

pub fn fill_noise<S: Scalar>(
    stream: &EventStream,
    mask: &NoiseMask,
    cfg: &EncryptConfig<S>,
) -> Result<EventStream> {
    fill_noise_observed(stream, mask, cfg, &mut ())
}

/// [`fill_noise`] with a hook receiving every filled pixel and noise event.
pub fn fill_noise_observed<S: Scalar, O: FillObserver>(
    stream: &EventStream,
    mask: &NoiseMask,
    cfg: &EncryptConfig<S>,
    observer: &mut O,
) -> Result<EventStream> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    cfg.validate()?;
    check_bounds(stream)?;
    if mask.width != stream.width || mask.height != stream.height {
        return Err(Error::InvalidConfig("mask resolution differs from stream".into()));
    }
    let (w, h) = (stream.width, stream.height);

    // Seeds: true-event pixels in ascending code order, each with its events by time.
    let mut by_pixel = stream.events.clone();
    by_pixel.sort_unstable_by_key(|e| (e.pixel.code(), e.t, e.polarity));

    let mut remaining = mask.clone();
    // Timestamps of every parent set live in one arena; queue entries index into it.
    let mut arena: Vec<u64> = Vec::with_capacity(by_pixel.len() * 2);
    let mut queue: VecDeque<(Pixel, usize, usize)> = VecDeque::new();
    for group in by_pixel.chunk_by(|a, b| a.pixel == b.pixel) {
        let p = group[0].pixel;
        if remaining.contains(p) {
            return Err(Error::InvalidConfig(
                "mask overlaps the true-event plane".into(),
            ));
        }
        let start = arena.len();
        arena.extend(group.iter().map(|e| e.t));
        queue.push_back((p, start, group.len()));
    }

    let offsets = neighbor_offsets(cfg.spatial_threshold);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut events = stream.events.clone();
    while let Some((center, start, len)) = queue.pop_front() {
        if remaining.is_empty() {
            break;
        }
        for &off in &offsets {
            let Some(target) = offset_pixel(center, off, w, h) else {
                continue;
            };
            if !remaining.remove(target) {
                continue;
            }
            let distance = (off.0.unsigned_abs()) + (off.1.unsigned_abs());
            observer.on_fill(target, center, len);
            let child_start = arena.len();
            for k in start..start + len {
                let parent_t = arena[k];
                let noise = Event {
                    pixel: target,
                    polarity: Polarity::from_bit(rng.next_bit()),
                    t: noise_timestamp(parent_t, distance, cfg),
                };
                observer.on_noise(&noise, center, parent_t);
                arena.push(noise.t);
                events.push(noise);
            }
            queue.push_back((target, child_start, len));
        }
    }
    debug_assert!(remaining.is_empty(), "mask pixels unreachable from seeds");

    Ok(canonical_sort(EventStream {
        width: w,
        height: h,
        events,
    }))
}

/// XORs each polarity bit with the parity of the pixel's Szudzik code. Self-inverse.
pub fn polarity_map(stream: &EventStream) -> EventStream {
    EventStream {
        width: stream.width,
        height: stream.height,
        events: stream.events.iter().map(map_event).collect(),
    }
}

#[inline]
pub(crate) fn map_event(e: &Event) -> Event {
    let flip = e.pixel.code() & 1 == 1;
    Event {
        polarity: Polarity::from_bit(e.polarity.bit() ^ flip),
        ..*e
    }
}

pub fn encrypt<S: Scalar>(stream: &EventStream, cfg: &EncryptConfig<S>) -> Result<EncryptedBundle> {
    encrypt_observed(stream, cfg, &mut ())
}

pub fn encrypt_observed<S: Scalar, O: FillObserver>(
    stream: &EventStream,
    cfg: &EncryptConfig<S>,
    observer: &mut O,
) -> Result<EncryptedBundle> {
    cfg.validate()?;
    let mask = build_mask(stream, cfg)?;
    let filled = fill_noise_observed(stream, &mask, cfg, observer)?;
    Ok(EncryptedBundle {
        stream: canonical_sort(polarity_map(&filled)),
        plane: project_plane(stream),
        mask_pixels: mask.len(),
    })
}

/// Keeps the events on key pixels and restores their polarity.
pub fn decrypt(stream: &EventStream, plane: &SpatialPlane) -> Result<EventStream> {
    if let Some(p) = plane
        .pixels
        .iter()
        .find(|p| !p.within(stream.width, stream.height))
    {
        return Err(Error::InvalidKey(format!(
            "pixel ({}, {}) outside {}x{} stream",
            p.x, p.y, stream.width, stream.height
        )));
    }
    let mut on_key = vec![false; stream.pixel_count()];
    for p in &plane.pixels {
        on_key[stream.index_of(*p)] = true;
    }
    let events = stream
        .events
        .iter()
        .filter(|e| e.pixel.within(stream.width, stream.height) && on_key[stream.index_of(e.pixel)])
        .map(map_event)
        .collect();
    Ok(canonical_sort(EventStream {
        width: stream.width,
        height: stream.height,
        events,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn pos(t: u64, x: u16, y: u16) -> Event {
        Event::new(t, x, y, Polarity::Pos)
    }

    fn cfg() -> EncryptConfig<Exact> {
        EncryptConfig::default()
    }

    fn hand_stream() -> EventStream {
        EventStream::new(3, 3, vec![pos(100, 1, 1), pos(200, 1, 1)]).unwrap()
    }

    fn times_at(s: &EventStream, p: Pixel) -> Vec<u64> {
        s.events.iter().filter(|e| e.pixel == p).map(|e| e.t).collect()
    }

    #[test]
    fn full_complement_mask() {
        let s = EventStream::new(3, 3, vec![pos(0, 1, 1)]).unwrap();
        let mask = build_mask(&s, &cfg()).unwrap();
        assert_eq!(mask.len(), 8);
        assert!(!mask.contains(Pixel::new(1, 1)));

        let all: Vec<Event> = (0..3).flat_map(|x| (0..3).map(move |y| pos(0, x, y))).collect();
        let s = EventStream::new(3, 3, all).unwrap();
        assert!(build_mask(&s, &cfg()).unwrap().is_empty());

        assert!(matches!(
            build_mask(&EventStream::empty(3, 3), &cfg()),
            Err(Error::EmptyStream)
        ));
    }

    #[test]
    fn dilated_band_mask() {
        let s = EventStream::new(5, 5, vec![pos(0, 1, 1)]).unwrap();
        let c = EncryptConfig {
            mask_mode: MaskMode::DilatedBand(1),
            ..cfg()
        };
        let mask = build_mask(&s, &c).unwrap();
        let mut got: Vec<Pixel> = mask.pixels().collect();
        got.sort();
        let mut want = vec![
            Pixel::new(0, 1),
            Pixel::new(2, 1),
            Pixel::new(1, 0),
            Pixel::new(1, 2),
        ];
        want.sort();
        assert_eq!(got, want);

        let c2 = EncryptConfig {
            mask_mode: MaskMode::DilatedBand(2),
            ..cfg()
        };
        // L1 ball of radius 2 around (1,1), clipped to the grid, minus the center.
        let brute = (0..5u16)
            .flat_map(|x| (0..5u16).map(move |y| Pixel::new(x, y)))
            .filter(|p| {
                let d = crate::event::l1_space(*p, Pixel::new(1, 1));
                (1..=2).contains(&d)
            })
            .count();
        assert_eq!(build_mask(&s, &c2).unwrap().len(), brute);
    }

    #[test]
    fn offsets_order() {
        assert_eq!(neighbor_offsets(1), vec![(1, 0), (-1, 0), (0, 1), (0, -1)]);
        let two = neighbor_offsets(2);
        assert_eq!(two.len(), 12);
        assert!(two.iter().all(|(dx, dy)| (1..=2).contains(&(dx.abs() + dy.abs()))));
    }

    #[test]
    fn neighbors_examples() {
        let s = EventStream::new(3, 3, vec![pos(0, 1, 1)]).unwrap();
        let mask = build_mask(&s, &cfg()).unwrap();
        assert_eq!(
            spatial_neighbors(Pixel::new(1, 1), &mask, 1),
            vec![
                Pixel::new(2, 1),
                Pixel::new(0, 1),
                Pixel::new(1, 2),
                Pixel::new(1, 0)
            ]
        );
        assert!(spatial_neighbors(Pixel::new(1, 1), &NoiseMask::empty(3, 3), 1).is_empty());

        let s = EventStream::new(3, 3, vec![pos(0, 0, 0)]).unwrap();
        let mask = build_mask(&s, &cfg()).unwrap();
        assert_eq!(
            spatial_neighbors(Pixel::new(0, 0), &mask, 1),
            vec![Pixel::new(1, 0), Pixel::new(0, 1)]
        );
    }

    #[test]
    fn synthesis_examples() {
        let mut rng = SplitMix64::new(1);
        let parents = [pos(100, 1, 1), pos(200, 1, 1)];
        let n = synthesize_at(Pixel::new(2, 1), &parents, Pixel::new(1, 1), &cfg(), &mut rng);
        assert_eq!(n.iter().map(|e| e.t).collect::<Vec<_>>(), vec![105, 210]);
        assert!(n.iter().all(|e| e.pixel == Pixel::new(2, 1)));

        let n = synthesize_at(Pixel::new(2, 2), &[pos(210, 2, 1)], Pixel::new(2, 1), &cfg(), &mut rng);
        assert_eq!(n[0].t, 221);

        let zero = EncryptConfig {
            sigma: Exact::from_integer(0),
            ..cfg()
        };
        let n = synthesize_at(Pixel::new(2, 1), &parents, Pixel::new(1, 1), &zero, &mut rng);
        assert_eq!(n.iter().map(|e| e.t).collect::<Vec<_>>(), vec![100, 200]);
    }

    #[test]
    fn absolute_threshold_clamps() {
        let c = EncryptConfig {
            t_threshold: Some(3),
            ..cfg()
        };
        let mut rng = SplitMix64::new(1);
        // 200 -> 210 exceeds the bound of 3, clamped to 200 + 2; 20 -> 21 is within it.
        let n = synthesize_at(
            Pixel::new(1, 0),
            &[pos(200, 0, 0), pos(20, 0, 0)],
            Pixel::new(0, 0),
            &c,
            &mut rng,
        );
        assert_eq!(n[0].t, 202);
        assert_eq!(n[1].t, 21);
    }

    #[test]
    fn hand_bfs_trace() {
        let s = hand_stream();
        let mask = build_mask(&s, &cfg()).unwrap();
        let out = fill_noise(&s, &mask, &cfg()).unwrap();
        assert_eq!(out.len(), 18);
        for p in [(0, 1), (2, 1), (1, 0), (1, 2)] {
            assert_eq!(times_at(&out, Pixel::new(p.0, p.1)), vec![105, 210], "{p:?}");
        }
        for p in [(0, 0), (2, 0), (0, 2), (2, 2)] {
            assert_eq!(times_at(&out, Pixel::new(p.0, p.1)), vec![110, 221], "{p:?}");
        }
        assert!(out.is_canonical());
    }

    #[test]
    fn empty_mask_fill_is_identity() {
        let s = hand_stream();
        let out = fill_noise(&s, &NoiseMask::empty(3, 3), &cfg()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn overlapping_mask_is_rejected() {
        let s = hand_stream();
        let mask = NoiseMask::from_pixels(3, 3, [Pixel::new(1, 1)]);
        assert!(matches!(fill_noise(&s, &mask, &cfg()), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn polarity_map_examples() {
        let s = EventStream::new(3, 3, vec![pos(0, 1, 1), pos(0, 0, 0)]).unwrap();
        let m = polarity_map(&s);
        let at = |p: Pixel| m.events.iter().find(|e| e.pixel == p).unwrap().polarity;
        assert_eq!(at(Pixel::new(1, 1)), Polarity::Neg);
        assert_eq!(at(Pixel::new(0, 0)), Polarity::Pos);
        assert_eq!(polarity_map(&m), s);
    }

    #[test]
    fn encrypt_hand_example() {
        let s = hand_stream();
        let b = encrypt(&s, &cfg()).unwrap();
        assert_eq!(b.stream.len(), 18);
        assert_eq!(b.mask_pixels, 8);
        assert_eq!(b.plane.pixels.iter().copied().collect::<Vec<_>>(), vec![Pixel::new(1, 1)]);
        // (1,1) has an odd code so the true events come out flipped.
        let true_evts: Vec<_> = b.stream.events.iter().filter(|e| e.pixel == Pixel::new(1, 1)).collect();
        assert!(true_evts.iter().all(|e| e.polarity == Polarity::Neg));
        assert_eq!(decrypt(&b.stream, &b.plane).unwrap(), s);
        assert_eq!(project_plane(&b.stream).len(), 9);
    }

    #[test]
    fn encrypt_full_coverage_is_polarity_map_only() {
        let all: Vec<Event> = (0..3).flat_map(|x| (0..2).map(move |y| pos(x as u64, x, y))).collect();
        let s = EventStream::new(3, 2, all).unwrap();
        let b = encrypt(&s, &cfg()).unwrap();
        assert_eq!(b.stream, canonical_sort(polarity_map(&s)));
        assert_eq!(b.plane.len(), 6);
    }

    #[test]
    fn decrypt_edge_cases() {
        let s = hand_stream();
        let b = encrypt(&s, &cfg()).unwrap();
        assert!(decrypt(&b.stream, &SpatialPlane::default()).unwrap().is_empty());
        let bad: SpatialPlane = [Pixel::new(5, 5)].into_iter().collect();
        assert!(matches!(decrypt(&b.stream, &bad), Err(Error::InvalidKey(_))));
        assert!(matches!(encrypt(&EventStream::empty(3, 3), &cfg()), Err(Error::EmptyStream)));
    }

    #[test]
    fn config_validation() {
        let bad = EncryptConfig::<f64> { sigma: -0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = EncryptConfig::<f64> { sigma: f64::NAN, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = EncryptConfig::<Exact> { spatial_threshold: 0, ..cfg() };
        assert!(bad.validate().is_err());
        let bad = EncryptConfig::<Exact> { t_threshold: Some(0), ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn float_scalar_matches_exact_on_hand_example() {
        let s = hand_stream();
        let exact = encrypt(&s, &cfg()).unwrap();
        let float = encrypt(&s, &EncryptConfig::<f64>::default()).unwrap();
        assert_eq!(exact, float);
    }
}
