//! Sparse multi-tap analog SI canceller.
//!
//! The canceller matrix `C_k` has exactly `n_tap` non-zero entries. Taps are
//! placed on the largest-magnitude entries of the estimated SI channel and
//! each tap copies that entry, perturbed by a uniformly distributed
//! amplitude error (voltage dB) and phase error (degrees) to model analog
//! hardware inaccuracy. This placement rule is an implementation choice of
//! this crate: it cancels the dominant, line-of-sight heavy couplings.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::units::amplitude_db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellerSpec {
    pub n_tap: usize,
    /// Half-width of the uniform amplitude error, dB.
    pub amp_imperf_db: f64,
    /// Half-width of the uniform phase error, degrees.
    pub phase_imperf_deg: f64,
}

impl CancellerSpec {
    pub fn ideal(n_tap: usize) -> Self {
        Self { n_tap, amp_imperf_db: 0.0, phase_imperf_deg: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canceller {
    pub matrix: CMat,
    /// Tap positions `(row, col)`, in row-major order.
    pub support: Vec<(usize, usize)>,
}

impl Canceller {
    /// All-zero canceller (no analog cancellation).
    pub fn none(rows: usize, cols: usize) -> Self {
        Self { matrix: CMat::zeros(rows, cols), support: Vec::new() }
    }
}

/// Positions of the `n_tap` largest-magnitude entries, ties broken by
/// row-major order. Returned in row-major order.
pub fn tap_support(h_hat_si: &CMat, n_tap: usize) -> Vec<(usize, usize)> {
    let (rows, cols) = h_hat_si.shape();
    let mut idx: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .collect();
    // stable sort keeps row-major order among equal magnitudes
    idx.sort_by(|a, b| {
        let ma = h_hat_si[*a].norm_sqr();
        let mb = h_hat_si[*b].norm_sqr();
        mb.partial_cmp(&ma).unwrap_or(Ordering::Equal)
    });
    idx.truncate(n_tap);
    idx.sort();
    idx
}

pub fn build_canceller(h_hat_si: &CMat, spec: &CancellerSpec, seed: u64) -> Result<Canceller> {
    let (rows, cols) = h_hat_si.shape();
    if spec.n_tap == 0 || spec.n_tap > rows * cols {
        return Err(Error::InvalidConfig {
            field: "n_tap",
            expected: "in [1, M*N]",
            got: spec.n_tap.to_string(),
        });
    }
    if !(spec.amp_imperf_db >= 0.0 && spec.phase_imperf_deg >= 0.0) {
        return Err(Error::InvalidConfig {
            field: "canceller imperfection",
            expected: "half-widths >= 0",
            got: format!("amp={}, phase={}", spec.amp_imperf_db, spec.phase_imperf_deg),
        });
    }

    let support = tap_support(h_hat_si, spec.n_tap);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = CMat::zeros(rows, cols);
    for &(r, c) in &support {
        let a_db = uniform_sym(&mut rng, spec.amp_imperf_db);
        let phi = uniform_sym(&mut rng, spec.phase_imperf_deg).to_radians();
        matrix[(r, c)] = h_hat_si[(r, c)] * C64::from_polar(amplitude_db_to_linear(a_db), phi);
    }
    Ok(Canceller { matrix, support })
}

fn uniform_sym<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width == 0.0 {
        0.0
    } else {
        rng.random_range(-half_width..=half_width)
    }
}
