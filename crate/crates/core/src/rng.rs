//! Reproducible per-trial random streams.
//!
//! Every draw comes from a ChaCha8 generator keyed by `(seed, trial)`:
//! key bytes `0..8` hold the seed and `8..16` the trial index (both
//! little-endian, remaining bytes zero). The ChaCha stream id selects the
//! purpose ([`Stream`]), so system, channel and symbol draws never share
//! state and a trial's output does not depend on execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;
use crate::scalar::{Real, C};

/// Purpose tag, used as the ChaCha stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    /// `A` and `y` of a random linear system.
    System = 1,
    /// Channel taps.
    Channel = 2,
    /// Constellation symbols.
    Symbols = 3,
    /// Test-vector draws outside the experiments.
    Probe = 4,
}

pub fn stream_rng(seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, var: f64) -> C<T> {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::lit(re * s), T::lit(im * s))
}

pub fn complex_normal_vec<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> Vec<C<T>> {
    (0..len).map(|_| complex_normal(rng, var)).collect()
}

/// Matrix with i.i.d. `CN(0, var)` entries, filled row by row.
pub fn complex_normal_matrix<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: f64,
) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, var))
}
