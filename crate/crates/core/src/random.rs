//! Seeded smooth random functions. Everything random in the lab flows
//! through a ChaCha8 stream so that a seed pins every output bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::field::{ComplexField, Grid, RealField, C64};

pub const MAX_MODES: usize = 8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream for a given purpose, so adding a consumer never
/// shifts the draws of another.
pub fn substream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amp: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

/// `f(x, y) = Σ a_k cos(kx_k x + ky_k y + φ_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub modes: Vec<Mode>,
}

impl TrigSeries {
    /// `n_modes` modes (capped at [`MAX_MODES`]) with wave numbers in
    /// `[-max_freq, max_freq]²` and amplitudes decaying like `1/(1+|k|)`.
    pub fn random(rng: &mut impl Rng, n_modes: usize, max_freq: f64) -> Self {
        let modes = (0..n_modes.clamp(1, MAX_MODES))
            .map(|_| {
                let kx = rng.random_range(-max_freq..=max_freq);
                let ky = rng.random_range(-max_freq..=max_freq);
                let k = (kx * kx + ky * ky).sqrt();
                Mode {
                    amp: rng.random_range(0.2..1.0) / (1.0 + k),
                    kx,
                    ky,
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        TrigSeries { modes }
    }

    #[inline]
    pub fn eval(&self, z: C64) -> f64 {
        self.modes.iter().map(|m| m.amp * (m.kx * z.re + m.ky * z.im + m.phase).cos()).sum()
    }

    /// Analytic bound `Σ|a_k| ≥ sup |f|`.
    pub fn bound(&self) -> f64 {
        self.modes.iter().map(|m| m.amp.abs()).sum()
    }

    pub fn sample(&self, grid: Grid) -> RealField {
        RealField::from_fn(grid, |z| self.eval(z))
    }
}

/// A smooth complex function from two independent series.
pub fn smooth_complex(seed: u64, grid: Grid, max_freq: f64) -> ComplexField {
    let mut r = rng(seed);
    let re = TrigSeries::random(&mut r, MAX_MODES, max_freq);
    let im = TrigSeries::random(&mut r, MAX_MODES, max_freq);
    ComplexField::from_fn(grid, |z| C64::new(re.eval(z), im.eval(z)))
}

/// Complex Gaussian coefficients for a polynomial of the given degree.
pub fn gaussian_coefficients(rng: &mut impl Rng, degree: usize) -> Vec<C64> {
    (0..=degree)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// Horner evaluation.
pub fn polyval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn same_seed_same_series() {
        let a = TrigSeries::random(&mut rng(7), 5, 3.0);
        let b = TrigSeries::random(&mut rng(7), 5, 3.0);
        assert_eq!(a, b);
        assert_ne!(a, TrigSeries::random(&mut rng(8), 5, 3.0));
    }

    #[test]
    fn substreams_are_independent() {
        let a = rand::RngCore::next_u64(&mut substream(1, 0));
        let b = rand::RngCore::next_u64(&mut substream(1, 1));
        assert_ne!(a, b);
    }

    proptest! {
        #[test]
        fn bound_dominates_values(seed in any::<u64>(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let s = TrigSeries::random(&mut rng(seed), 8, 4.0);
            prop_assert!(s.eval(C64::new(x, y)).abs() <= s.bound() + 1e-12);
        }
    }
}
