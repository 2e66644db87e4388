//! On-disk formats. All multi-byte integers are little-endian.
//!
//! * text: `# evt v1 <width> <height>` then one `<t> <x> <y> <p>` line per event
//! * binary: `EVT1`, u16 width, u16 height, u64 count, then 14-byte records
//!   `(u64 t, u16 x, u16 y, i8 p, pad)`
//! * labels: one `0` or `1` per line, aligned with the canonical event order
//! * key: see [`KeyFile`]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{
    canonical_sort, szudzik_unpair, Event, EventStream, Pixel, Polarity, SpatialPlane,
};
use crate::prng::SplitMix64;

pub const STREAM_MAGIC: [u8; 4] = *b"EVT1";
pub const KEY_MAGIC: [u8; 4] = *b"EKEY";
const STREAM_HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 14;

/// A stream as read from disk. `reordered` is set when the file was not in
/// canonical order and had to be re-sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loaded {
    pub stream: EventStream,
    pub reordered: bool,
}

impl Loaded {
    fn from_parsed(width: u16, height: u16, events: Vec<Event>) -> Self {
        let stream = EventStream {
            width,
            height,
            events,
        };
        let reordered = !stream.is_canonical();
        Self {
            stream: canonical_sort(stream),
            reordered,
        }
    }
}

/// An event stream with one ground-truth bit per event (`true` = signal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledStream {
    pub stream: EventStream,
    pub labels: Vec<bool>,
}

impl LabeledStream {
    /// Pairs events with labels and sorts both into canonical order together.
    pub fn new(stream: EventStream, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != stream.events.len() {
            return Err(Error::LabelMismatch {
                labels: labels.len(),
                events: stream.events.len(),
            });
        }
        let EventStream {
            width,
            height,
            events,
        } = stream;
        let mut pairs: Vec<(Event, bool)> = events.into_iter().zip(labels).collect();
        pairs.sort_by_key(|(e, l)| (e.canonical_key(), *l));
        let (events, labels) = pairs.into_iter().unzip();
        Ok(Self {
            stream: EventStream {
                width,
                height,
                events,
            },
            labels,
        })
    }

    pub fn all_signal(stream: EventStream) -> Self {
        let labels = vec![true; stream.events.len()];
        Self { stream, labels }
    }

    /// Keeps the events whose `keep` flag is set, along with their labels.
    pub fn retain(&self, keep: &[bool]) -> Self {
        let (events, labels) = self
            .stream
            .events
            .iter()
            .zip(&self.labels)
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|((e, l), _)| (*e, *l))
            .unzip();
        Self {
            stream: EventStream {
                width: self.stream.width,
                height: self.stream.height,
                events,
            },
            labels,
        }
    }

    pub fn signal_count(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.len() - self.signal_count()
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// ---- text ----

pub fn parse_text(text: &str) -> Result<Loaded> {
    let mut lines = text.lines().enumerate();
    let (width, height) = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break parse_header(l)?,
            None => return Err(Error::MalformedHeader("missing header".into())),
        }
    };
    let mut events = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let bad = |msg: &str| Error::MalformedLine {
            line: lineno,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad("expected `<t> <x> <y> <p>`"));
        }
        let t: u64 = fields[0].parse().map_err(|_| bad("bad timestamp"))?;
        let x: u16 = fields[1].parse().map_err(|_| bad("bad x"))?;
        let y: u16 = fields[2].parse().map_err(|_| bad("bad y"))?;
        let p: i64 = fields[3].parse().map_err(|_| bad("bad polarity"))?;
        let pixel = Pixel::new(x, y);
        if !pixel.within(width, height) {
            return Err(Error::OutOfBounds {
                pixel,
                width,
                height,
            });
        }
        events.push(Event {
            pixel,
            polarity: Polarity::from_i64(p)?,
            t,
        });
    }
    Ok(Loaded::from_parsed(width, height, events))
}

fn parse_header(line: &str) -> Result<(u16, u16)> {
    let bad = || Error::MalformedHeader(line.to_string());
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["#", "evt", "v1", w, h] => {
            let w: u16 = w.parse().map_err(|_| bad())?;
            let h: u16 = h.parse().map_err(|_| bad())?;
            Ok((w, h))
        }
        _ => Err(bad()),
    }
}

pub fn format_text(stream: &EventStream) -> String {
    let mut out = String::with_capacity(24 + stream.events.len() * 20);
    let _ = writeln!(out, "# evt v1 {} {}", stream.width, stream.height);
    for e in &stream.events {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            e.t,
            e.pixel.x,
            e.pixel.y,
            e.polarity.as_i8()
        );
    }
    out
}

pub fn read_text(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::MalformedHeader("file is not UTF-8 text".into()))?;
    parse_text(&text)
}

/// Writes the stream in canonical order.
pub fn write_text(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let stream = canonical_sort(stream.clone());
    write_bytes(path.as_ref(), format_text(&stream).as_bytes())
}

// ---- binary ----

pub fn encode_binary(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(STREAM_HEADER_LEN + RECORD_LEN * stream.events.len());
    out.extend_from_slice(&STREAM_MAGIC);
    out.extend_from_slice(&stream.width.to_le_bytes());
    out.extend_from_slice(&stream.height.to_le_bytes());
    out.extend_from_slice(&(stream.events.len() as u64).to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.pixel.x.to_le_bytes());
        out.extend_from_slice(&e.pixel.y.to_le_bytes());
        out.push(e.polarity.as_i8() as u8);
        out.push(0);
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<Loaded> {
    if bytes.len() < STREAM_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != STREAM_MAGIC {
            return Err(Error::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(Error::Truncated {
            needed: STREAM_HEADER_LEN,
            have: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != STREAM_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]);
    let height = u16::from_le_bytes([bytes[6], bytes[7]]);
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let payload = &bytes[STREAM_HEADER_LEN..];
    let declared_len = (count as u128) * RECORD_LEN as u128;
    if (payload.len() as u128) < declared_len {
        return Err(Error::Truncated {
            needed: usize::try_from(declared_len + STREAM_HEADER_LEN as u128)
                .unwrap_or(usize::MAX),
            have: bytes.len(),
        });
    }
    if payload.len() as u128 != declared_len {
        return Err(Error::CountMismatch {
            declared: count,
            actual: (payload.len() / RECORD_LEN) as u64,
        });
    }
    let mut events = Vec::with_capacity(count as usize);
    for rec in payload.chunks_exact(RECORD_LEN) {
        let t = u64::from_le_bytes(rec[..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let polarity = Polarity::from_i64(rec[12] as i8 as i64)?;
        let pixel = Pixel::new(x, y);
        if !pixel.within(width, height) {
            return Err(Error::OutOfBounds {
                pixel,
                width,
                height,
            });
        }
        events.push(Event { pixel, polarity, t });
    }
    Ok(Loaded::from_parsed(width, height, events))
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<Loaded> {
    decode_binary(&read_bytes(path.as_ref())?)
}

pub fn write_binary(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let stream = canonical_sort(stream.clone());
    write_bytes(path.as_ref(), &encode_binary(&stream))
}

/// Reads either format, choosing binary when the file starts with `EVT1`.
pub fn read_stream(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.starts_with(&STREAM_MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::MalformedHeader("neither EVT1 binary nor text".into()))?;
        parse_text(&text)
    }
}

// ---- labels ----

pub fn format_labels(labels: &[bool]) -> String {
    let mut out = String::with_capacity(labels.len() * 2);
    for &l in labels {
        out.push(if l { '1' } else { '0' });
        out.push('\n');
    }
    out
}

pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(Error::MalformedLine {
                line: i + 1,
                msg: "label must be 0 or 1".into(),
            }),
        })
        .collect()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn write_labels(labels: &[bool], path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), format_labels(labels).as_bytes())
}

// ---- key ----

/// Cipher used to protect the list of true-event pixel codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum KeyCipher {
    /// Codes XORed with successive SplitMix64 outputs seeded by `secret ^ nonce`.
    SplitMixXor = 1,
}

impl KeyCipher {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(KeyCipher::SplitMixXor),
            other => Err(Error::UnknownCipher(other)),
        }
    }

    fn apply(self, secret: u64, nonce: u64, words: &mut [u64]) {
        match self {
            KeyCipher::SplitMixXor => {
                let mut ks = SplitMix64::new(secret ^ nonce);
                for w in words {
                    *w ^= ks.next_u64();
                }
            }
        }
    }
}

const KEY_HEADER_LEN: usize = 4 + 1 + 8 + 8;

/// Encrypted key material.
///
/// Layout: magic `EKEY`, u8 cipher id, u64 nonce, u64 code count,
/// `8 * count` ciphertext bytes, u32 CRC-32 over everything before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub cipher: KeyCipher,
    pub nonce: u64,
    pub ciphertext: Vec<u8>,
}

impl KeyFile {
    /// Encrypts the ascending Szudzik codes of `plane`.
    pub fn seal(plane: &SpatialPlane, secret: u64, nonce: u64) -> Result<Self> {
        if plane.is_empty() {
            return Err(Error::EmptyPlane);
        }
        let mut words = plane.sorted_codes();
        let cipher = KeyCipher::SplitMixXor;
        cipher.apply(secret, nonce, &mut words);
        let ciphertext = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        Ok(Self {
            cipher,
            nonce,
            ciphertext,
        })
    }

    pub fn code_count(&self) -> u64 {
        (self.ciphertext.len() / 8) as u64
    }

    /// Decrypts and validates the codes. Codes that are out of range or not
    /// strictly increasing mean the secret was wrong.
    pub fn open(&self, secret: u64) -> Result<SpatialPlane> {
        let mut words: Vec<u64> = self
            .ciphertext
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.cipher.apply(secret, self.nonce, &mut words);
        if words.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::WrongSecret);
        }
        words
            .into_iter()
            .map(|c| szudzik_unpair(c).map_err(|_| Error::WrongSecret))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(KEY_HEADER_LEN + self.ciphertext.len() + 4);
        out.extend_from_slice(&KEY_MAGIC);
        out.push(self.cipher as u8);
        out.extend_from_slice(&self.nonce.to_le_bytes());
        out.extend_from_slice(&self.code_count().to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < KEY_HEADER_LEN + 4 {
            return Err(Error::CorruptKey("file too short".into()));
        }
        if bytes[..4] != KEY_MAGIC {
            return Err(Error::CorruptKey("bad magic".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(Error::CorruptKey("checksum mismatch".into()));
        }
        let cipher = KeyCipher::from_id(body[4])?;
        let nonce = u64::from_le_bytes(body[5..13].try_into().unwrap());
        let count = u64::from_le_bytes(body[13..21].try_into().unwrap());
        let ciphertext = &body[KEY_HEADER_LEN..];
        if count == 0 || ciphertext.len() as u128 != count as u128 * 8 {
            return Err(Error::CorruptKey(format!(
                "code count {count} does not match {} ciphertext bytes",
                ciphertext.len()
            )));
        }
        Ok(Self {
            cipher,
            nonce,
            ciphertext: ciphertext.to_vec(),
        })
    }
}

/// Nonce derived from the plane contents, so identical inputs give identical key files.
pub fn plane_nonce(plane: &SpatialPlane) -> u64 {
    let mut h = SplitMix64::new(0x6576_7463_7279_7074 ^ plane.len() as u64);
    let mut acc = h.next_u64();
    for code in plane.sorted_codes() {
        acc = SplitMix64::new(acc ^ code).next_u64();
    }
    acc
}

pub fn write_key(plane: &SpatialPlane, secret: u64, path: impl AsRef<Path>) -> Result<KeyFile> {
    let key = KeyFile::seal(plane, secret, plane_nonce(plane))?;
    write_bytes(path.as_ref(), &key.to_bytes())?;
    Ok(key)
}

pub fn read_key(path: impl AsRef<Path>, secret: u64) -> Result<SpatialPlane> {
    let bytes = read_bytes(path.as_ref())?;
    KeyFile::from_bytes(&bytes)?.open(secret)
}
