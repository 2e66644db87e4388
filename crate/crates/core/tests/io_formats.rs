use evtcrypt_core::io::{self, KeyFile};
use evtcrypt_core::prng::SplitMix64;
use evtcrypt_core::{project_plane, Error, Event, EventStream, Pixel, Polarity, SpatialPlane};
use proptest::prelude::*;

fn random_stream(seed: u64, n: usize, w: u16, h: u16) -> EventStream {
    let mut rng = SplitMix64::new(seed);
    let events = (0..n)
        .map(|_| {
            Event::new(
                rng.next_u64() >> rng.below(64),
                rng.below(w as u64) as u16,
                rng.below(h as u64) as u16,
                Polarity::from_bit(rng.next_bit()),
            )
        })
        .collect();
    EventStream::new(w, h, events).unwrap()
}

#[test]
fn binary_round_trip_ten_thousand_events() {
    let s = random_stream(11, 10_000, 346, 260);
    let bytes = io::encode_binary(&s);
    assert_eq!(bytes.len(), 16 + 14 * 10_000);
    let back = io::decode_binary(&bytes).unwrap();
    assert!(!back.reordered);
    assert_eq!(back.stream, s);
}

#[test]
fn text_write_of_read_is_canonical_golden() {
    let raw = "# evt v1 4 4\n200 1 1 1\n100 2 1 -1\n100 1 2 1\n\n150 3 3 -1\n";
    let canon = "# evt v1 4 4\n100 1 2 1\n100 2 1 -1\n150 3 3 -1\n200 1 1 1\n";
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    std::fs::write(&a, raw).unwrap();
    let loaded = io::read_text(&a).unwrap();
    assert!(loaded.reordered);
    io::write_text(&loaded.stream, &b).unwrap();
    assert_eq!(std::fs::read_to_string(&b).unwrap(), canon);
}

#[test]
fn serialization_is_deterministic() {
    let a = random_stream(3, 500, 20, 20);
    let mut shuffled = a.events.clone();
    shuffled.reverse();
    let b = EventStream::new(20, 20, shuffled).unwrap();
    assert_eq!(io::encode_binary(&a), io::encode_binary(&b));
    assert_eq!(io::format_text(&a), io::format_text(&b));
}

#[test]
fn wrong_secret_rejected_on_random_planes() {
    let mut rng = SplitMix64::new(77);
    let mut rejected = 0;
    for _ in 0..1000 {
        let n = 1 + rng.below(50) as usize;
        let plane: SpatialPlane = (0..n)
            .map(|_| Pixel::new(rng.below(400) as u16, rng.below(400) as u16))
            .collect();
        let secret = rng.next_u64();
        let key = KeyFile::from_bytes(&KeyFile::seal(&plane, secret, io::plane_nonce(&plane)).unwrap().to_bytes()).unwrap();
        assert_eq!(key.open(secret).unwrap(), plane);
        if matches!(key.open(secret.wrapping_add(1)), Err(Error::WrongSecret)) {
            rejected += 1;
        }
    }
    assert!(rejected >= 990, "only {rejected}/1000 rejected");
}

#[test]
fn key_file_is_deterministic() {
    let s = random_stream(5, 300, 30, 30);
    let plane = project_plane(&s);
    let dir = tempfile::tempdir().unwrap();
    io::write_key(&plane, 1, dir.path().join("a")).unwrap();
    io::write_key(&plane, 1, dir.path().join("b")).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("a")).unwrap(),
        std::fs::read(dir.path().join("b")).unwrap()
    );
}

proptest! {
    #[test]
    fn text_binary_text_preserves_content(seed in any::<u64>(), n in 0usize..300, w in 1u16..50, h in 1u16..50) {
        let s = random_stream(seed, n, w, h);
        let text = io::format_text(&s);
        let via_text = io::parse_text(&text).unwrap().stream;
        let via_bin = io::decode_binary(&io::encode_binary(&via_text)).unwrap().stream;
        prop_assert_eq!(io::format_text(&via_bin), text);
    }

    #[test]
    fn key_round_trip(codes in prop::collection::btree_set((0u16..2000, 0u16..2000), 1..100), secret in any::<u64>()) {
        let plane: SpatialPlane = codes.into_iter().map(|(x, y)| Pixel::new(x, y)).collect();
        let key = KeyFile::seal(&plane, secret, io::plane_nonce(&plane)).unwrap();
        prop_assert_eq!(KeyFile::from_bytes(&key.to_bytes()).unwrap().open(secret).unwrap(), plane);
    }
}
