//! Event tuples, streams, and the small set of measures shared by every
//! other module: Szudzik pairing, L1 distances, canonical ordering.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Largest code produced by [`szudzik_pair`] on 16-bit coordinates.
pub const MAX_CODE: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub x: u16,
    pub y: u16,
}

impl Pixel {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }

    pub fn code(self) -> u64 {
        szudzik_pair(self)
    }

    pub fn within(self, width: u16, height: u16) -> bool {
        self.x < width && self.y < height
    }
}

/// Sign of a brightness change. Orders `Neg < Pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Neg,
    Pos,
}

impl Polarity {
    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Polarity::Neg),
            1 => Ok(Polarity::Pos),
            other => Err(Error::InvalidPolarity(other)),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Neg => -1,
            Polarity::Pos => 1,
        }
    }

    /// Bit form: -1 -> 0, +1 -> 1.
    pub fn bit(self) -> bool {
        self == Polarity::Pos
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Polarity::Pos
        } else {
            Polarity::Neg
        }
    }

    pub fn flip(self) -> Self {
        Self::from_bit(!self.bit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub pixel: Pixel,
    pub polarity: Polarity,
    /// Microseconds.
    pub t: u64,
}

impl Event {
    pub const fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self {
            pixel: Pixel::new(x, y),
            polarity,
            t,
        }
    }

    /// Sort key for the canonical order: timestamp, Szudzik code, polarity.
    #[inline]
    pub fn canonical_key(&self) -> (u64, u64, Polarity) {
        (self.t, self.pixel.code(), self.polarity)
    }
}

/// A batch of events from one sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, checking every pixel against the resolution and
    /// putting the events in canonical order.
    pub fn new(width: u16, height: u16, events: Vec<Event>) -> Result<Self> {
        if let Some(e) = events.iter().find(|e| !e.pixel.within(width, height)) {
            return Err(Error::OutOfBounds {
                pixel: e.pixel,
                width,
                height,
            });
        }
        Ok(canonical_sort(Self {
            width,
            height,
            events,
        }))
    }

    pub fn empty(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major index of `p` into a `width * height` buffer.
    #[inline]
    pub fn index_of(&self, p: Pixel) -> usize {
        p.y as usize * self.width as usize + p.x as usize
    }

    pub fn is_canonical(&self) -> bool {
        self.events
            .windows(2)
            .all(|w| w[0].canonical_key() <= w[1].canonical_key())
    }

    pub fn time_span(&self) -> Option<(u64, u64)> {
        let lo = self.events.iter().map(|e| e.t).min()?;
        let hi = self.events.iter().map(|e| e.t).max()?;
        Some((lo, hi))
    }
}

/// Distinct pixels that host at least one event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpatialPlane {
    pub pixels: BTreeSet<Pixel>,
}

impl SpatialPlane {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.pixels.contains(&p)
    }

    /// Szudzik codes of the plane in ascending order.
    pub fn sorted_codes(&self) -> Vec<u64> {
        let mut codes: Vec<u64> = self.pixels.iter().map(|p| p.code()).collect();
        codes.sort_unstable();
        codes
    }
}

impl FromIterator<Pixel> for SpatialPlane {
    fn from_iter<I: IntoIterator<Item = Pixel>>(iter: I) -> Self {
        Self {
            pixels: iter.into_iter().collect(),
        }
    }
}

#[inline]
pub fn szudzik_pair(p: Pixel) -> u64 {
    let (x, y) = (p.x as u64, p.y as u64);
    if x >= y {
        x * x + x + y
    } else {
        y * y + x
    }
}

pub fn szudzik_unpair(code: u64) -> Result<Pixel> {
    if code > MAX_CODE {
        return Err(Error::CodeRange(code));
    }
    let b = code.isqrt();
    let r = code - b * b;
    // Both coordinates fit 16 bits for every code up to MAX_CODE.
    let (x, y) = if r < b { (r, b) } else { (b, r - b) };
    Ok(Pixel::new(x as u16, y as u16))
}

#[inline]
pub fn l1_space(a: Pixel, b: Pixel) -> u32 {
    a.x.abs_diff(b.x) as u32 + a.y.abs_diff(b.y) as u32
}

#[inline]
pub fn l1_time(a: u64, b: u64) -> u64 {
    a.abs_diff(b)
}

pub fn canonical_sort(mut stream: EventStream) -> EventStream {
    stream.events.sort_unstable_by_key(Event::canonical_key);
    stream
}

pub fn project_plane(stream: &EventStream) -> SpatialPlane {
    stream.events.iter().map(|e| e.pixel).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_hand_values() {
        assert_eq!(szudzik_pair(Pixel::new(0, 0)), 0);
        assert_eq!(szudzik_pair(Pixel::new(1, 2)), 5);
        assert_eq!(szudzik_pair(Pixel::new(2, 1)), 7);
        assert_eq!(szudzik_pair(Pixel::new(1, 1)), 3);
        assert_eq!(szudzik_pair(Pixel::new(u16::MAX, u16::MAX)), MAX_CODE);
    }

    #[test]
    fn unpair_hand_values() {
        assert_eq!(szudzik_unpair(0).unwrap(), Pixel::new(0, 0));
        assert_eq!(szudzik_unpair(5).unwrap(), Pixel::new(1, 2));
        assert_eq!(szudzik_unpair(7).unwrap(), Pixel::new(2, 1));
        assert_eq!(
            szudzik_unpair(MAX_CODE).unwrap(),
            Pixel::new(u16::MAX, u16::MAX)
        );
        assert!(matches!(
            szudzik_unpair(MAX_CODE + 1),
            Err(Error::CodeRange(_))
        ));
    }

    #[test]
    fn pairing_enumerates_codes_densely() {
        // All pixels of a 64x64 square map onto exactly 0..64*64.
        let mut codes: Vec<u64> = (0..64)
            .flat_map(|x| (0..64).map(move |y| szudzik_pair(Pixel::new(x, y))))
            .collect();
        codes.sort_unstable();
        assert!(codes.iter().copied().eq(0..64 * 64));
    }

    #[test]
    fn distances() {
        let p = Pixel::new;
        assert_eq!(l1_space(p(1, 1), p(1, 1)), 0);
        assert_eq!(l1_space(p(1, 1), p(2, 1)), 1);
        assert_eq!(l1_space(p(0, 0), p(2, 3)), 5);
        assert_eq!(l1_time(100, 100), 0);
        assert_eq!(l1_time(100, 150), 50);
        assert_eq!(l1_time(221, 105), 116);
    }

    #[test]
    fn canonical_sort_examples() {
        let s = canonical_sort(EventStream::empty(4, 4));
        assert!(s.is_empty());

        let s = EventStream::new(
            4,
            4,
            vec![
                Event::new(200, 1, 1, Polarity::Pos),
                Event::new(100, 0, 0, Polarity::Neg),
            ],
        )
        .unwrap();
        assert_eq!(s.events[0].t, 100);
        assert_eq!(s.events[1].t, 200);

        let s = EventStream::new(
            4,
            4,
            vec![
                Event::new(100, 2, 1, Polarity::Pos),
                Event::new(100, 1, 2, Polarity::Pos),
            ],
        )
        .unwrap();
        assert_eq!(s.events[0].pixel, Pixel::new(1, 2));
        assert_eq!(s.events[1].pixel, Pixel::new(2, 1));
    }

    #[test]
    fn stream_rejects_out_of_bounds() {
        let err = EventStream::new(4, 4, vec![Event::new(0, 9, 0, Polarity::Pos)]);
        assert!(matches!(err, Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn projection() {
        assert!(project_plane(&EventStream::empty(3, 3)).is_empty());
        let s = EventStream::new(
            3,
            3,
            vec![
                Event::new(1, 1, 1, Polarity::Pos),
                Event::new(2, 1, 1, Polarity::Neg),
                Event::new(3, 0, 2, Polarity::Pos),
            ],
        )
        .unwrap();
        let plane = project_plane(&s);
        assert_eq!(plane.len(), 2);
        assert!(plane.contains(Pixel::new(1, 1)) && plane.contains(Pixel::new(0, 2)));

        let s = EventStream::new(
            8,
            8,
            (0..1000).map(|t| Event::new(t, 5, 5, Polarity::Pos)).collect(),
        )
        .unwrap();
        assert_eq!(project_plane(&s).len(), 1);
    }

    fn arb_pixel() -> impl Strategy<Value = Pixel> {
        (any::<u16>(), any::<u16>()).prop_map(|(x, y)| Pixel::new(x, y))
    }

    proptest! {
        #[test]
        fn pair_is_injective(a in arb_pixel(), b in arb_pixel()) {
            prop_assert_eq!(szudzik_pair(a) == szudzik_pair(b), a == b);
        }

        #[test]
        fn unpair_inverts_pair(p in arb_pixel()) {
            prop_assert_eq!(szudzik_unpair(szudzik_pair(p)).unwrap(), p);
        }

        #[test]
        fn pair_inverts_unpair(code in 0..=MAX_CODE) {
            prop_assert_eq!(szudzik_pair(szudzik_unpair(code).unwrap()), code);
        }

        #[test]
        fn l1_metric_laws(a in arb_pixel(), b in arb_pixel(), c in arb_pixel()) {
            prop_assert_eq!(l1_space(a, b), l1_space(b, a));
            prop_assert!(l1_space(a, c) <= l1_space(a, b) + l1_space(b, c));
        }

        #[test]
        fn canonical_sort_ignores_input_permutation(
            raw in prop::collection::vec((0u64..50, 0u16..6, 0u16..6, any::<bool>()), 0..60),
            rot in 0usize..60,
        ) {
            let events: Vec<Event> = raw.iter()
                .map(|&(t, x, y, p)| Event::new(t, x, y, Polarity::from_bit(p)))
                .collect();
            let mut shuffled = events.clone();
            shuffled.reverse();
            if !shuffled.is_empty() {
                let k = rot % shuffled.len();
                shuffled.rotate_left(k);
            }
            let a = EventStream::new(6, 6, events).unwrap();
            let b = EventStream::new(6, 6, shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(canonical_sort(a.clone()), a);
        }
    }
}
