//! Encryption of neuromorphic event streams with spatiotemporally correlated
//! synthetic noise, key-based lossless decryption, and the denoising attacks
//! and metrics used to evaluate it.
//!
//! The timestamp scaling factor is generic over [`Scalar`]; the aliases below
//! fix it to the exact rational used by the command-line tool, or to floats.

pub mod analysis;
pub mod attacks;
pub mod encrypt;
pub mod error;
pub mod event;
pub mod io;
pub mod prng;
pub mod scalar;

pub use encrypt::{
    build_mask, decrypt, encrypt, encrypt_observed, fill_noise, fill_noise_observed,
    polarity_map, spatial_neighbors, synthesize_at, EncryptConfig, EncryptedBundle, FillObserver,
    MaskMode, NoiseMask,
};
pub use error::{Error, Result};
pub use event::{
    canonical_sort, l1_space, l1_time, project_plane, szudzik_pair, szudzik_unpair, Event,
    EventStream, Pixel, Polarity, SpatialPlane,
};
pub use io::{KeyFile, LabeledStream, Loaded};
pub use scalar::{Exact, Scalar};

/// Configuration with an exact rational scaling factor.
pub type ExactConfig = EncryptConfig<Exact>;
pub type F64Config = EncryptConfig<f64>;
pub type F32Config = EncryptConfig<f32>;
