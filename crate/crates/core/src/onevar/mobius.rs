//! Disk automorphisms `m_r(z) = (z − r)/(1 − r z)` and the shrink-or-left dichotomy.

use crate::error::{ExposeError, Result};
use crate::sampling::{stream_rng, uniform_in_disk};
use crate::C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerance under which a failed alternative is still counted as holding.
pub const DICHOTOMY_TOL: f64 = 1e-12;

/// `m(z) = (z − r)/(1 − r z)` stored through its strip translation length `T`, with
/// `r = tanh(T/2)`, so that `r` arbitrarily close to 1 stays representable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskAutomorphism {
    shift: f64,
}

impl DiskAutomorphism {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(ExposeError::InvalidInput(format!("r must lie in (0, 1), got {r}")));
        }
        Ok(DiskAutomorphism { shift: ((1.0 + r) / (1.0 - r)).ln() })
    }

    pub fn from_complement(one_minus_r: f64) -> Result<Self> {
        if !(one_minus_r > 0.0 && one_minus_r < 1.0) {
            return Err(ExposeError::InvalidInput(format!("1 - r must lie in (0, 1), got {one_minus_r}")));
        }
        Ok(DiskAutomorphism { shift: ((2.0 - one_minus_r) / one_minus_r).ln() })
    }

    pub fn from_shift(shift: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(ExposeError::InvalidInput(format!("strip shift must be positive, got {shift}")));
        }
        Ok(DiskAutomorphism { shift })
    }

    /// Translation length in strip coordinates `s = log((1+z)/(1−z))`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn r(&self) -> f64 {
        (self.shift / 2.0).tanh()
    }

    /// `1 − r = 2/(1 + e^T)`; underflows to zero for very long shifts.
    pub fn one_minus_r(&self) -> f64 {
        let e = (-self.shift).exp();
        2.0 * e / (1.0 + e)
    }

    /// `log(1 − r)`, finite for every shift.
    pub fn log_one_minus_r(&self) -> f64 {
        std::f64::consts::LN_2 - self.shift - (-self.shift).exp().ln_1p()
    }

    fn denom(&self, z: C64) -> C64 {
        (C64::new(1.0, 0.0) - z) + z * self.one_minus_r()
    }

    pub fn eval(&self, z: C64) -> C64 {
        ((z - 1.0) + self.one_minus_r()) / self.denom(z)
    }

    pub fn deriv(&self, z: C64) -> C64 {
        let e = self.one_minus_r();
        let d = self.denom(z);
        C64::new(e * (2.0 - e), 0.0) / (d * d)
    }

    /// `m⁻¹(w) = (w + r)/(1 + r w)`.
    pub fn inverse(&self, w: C64) -> C64 {
        let e = self.one_minus_r();
        ((w + 1.0) - e) / ((C64::new(1.0, 0.0) + w) - w * e)
    }
}

/// Which alternative of the dichotomy holds at a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    Shrinks,
    LeftHalfPlane,
    Both,
    /// Neither holds strictly but one holds within [`DICHOTOMY_TOL`].
    Marginal,
}

/// Classifies `m_r(z)`: `|m_r(z)| < |z|` or `Re m_r(z) < 0`.
pub fn mobius_dichotomy_check(r: f64, z: C64) -> Result<Dichotomy> {
    if !(r > 0.0 && r < 1.0) {
        return Err(ExposeError::InvalidInput(format!("r must lie in (0, 1), got {r}")));
    }
    if !(z.norm() < 1.0) {
        return Err(ExposeError::InvalidInput(format!("|z| must be below 1, got {}", z.norm())));
    }
    let w = (z - r) / (C64::new(1.0, 0.0) - z * r);
    let shrinks = w.norm() < z.norm();
    let left = w.re < 0.0;
    Ok(match (shrinks, left) {
        (true, true) => Dichotomy::Both,
        (true, false) => Dichotomy::Shrinks,
        (false, true) => Dichotomy::LeftHalfPlane,
        (false, false) => {
            if w.norm() - z.norm() <= DICHOTOMY_TOL || w.re <= DICHOTOMY_TOL {
                Dichotomy::Marginal
            } else {
                return Err(ExposeError::DichotomyViolation { r, z_re: z.re, z_im: z.im });
            }
        }
    })
}

/// Counts from a random dichotomy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusFuzzReport {
    pub samples: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub violations: u64,
    pub shrinks: u64,
    pub left_half_plane: u64,
    pub both: u64,
    pub marginal: u64,
    pub first_violation: Option<[f64; 3]>,
}

const CHUNK: u64 = 1 << 16;

/// Checks the dichotomy on `samples` random `(r, z)` with `r ∈ (0,1)` and `z` uniform in the disk.
pub fn mobius_fuzz(samples: u64, seed: u64) -> MobiusFuzzReport {
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<[u64; 5]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut tally = [0u64; 5];
            for _ in 0..count {
                let r = loop {
                    let r: f64 = rng.gen();
                    if r > 0.0 {
                        break r;
                    }
                };
                let z = uniform_in_disk(&mut rng);
                let slot = match mobius_dichotomy_check(r, z) {
                    Ok(Dichotomy::Shrinks) => 0,
                    Ok(Dichotomy::LeftHalfPlane) => 1,
                    Ok(Dichotomy::Both) => 2,
                    Ok(Dichotomy::Marginal) => 3,
                    Err(_) => 4,
                };
                tally[slot] += 1;
            }
            tally
        })
        .collect();
    let mut total = [0u64; 5];
    for p in &parts {
        for k in 0..5 {
            total[k] += p[k];
        }
    }
    MobiusFuzzReport {
        samples,
        seed,
        tolerance: DICHOTOMY_TOL,
        violations: total[4],
        shrinks: total[0],
        left_half_plane: total[1],
        both: total[2],
        marginal: total[3],
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_and_origin() {
        assert_eq!(mobius_dichotomy_check(0.4, C64::new(0.4, 0.0)).unwrap(), Dichotomy::Shrinks);
        assert_eq!(mobius_dichotomy_check(0.4, C64::new(0.0, 0.0)).unwrap(), Dichotomy::LeftHalfPlane);
    }

    #[test]
    fn complement_form_agrees() {
        let m = DiskAutomorphism::new(0.7).unwrap();
        let z = C64::new(0.2, -0.5);
        let direct = (z - 0.7) / (C64::new(1.0, 0.0) - z * 0.7);
        assert!((m.eval(z) - direct).norm() < 1e-15);
        assert!((m.inverse(m.eval(z)) - z).norm() < 1e-15);
        assert!((m.r() - 0.7).abs() < 1e-15);
        assert!((m.log_one_minus_r() - 0.3f64.ln()).abs() < 1e-14);
        let far = DiskAutomorphism::from_shift(2000.0).unwrap();
        assert!(far.log_one_minus_r().is_finite() && far.log_one_minus_r() < -1990.0);
        let h = 1e-6;
        let fd = (m.eval(z + h) - m.eval(z - h)) / (2.0 * h);
        assert!((fd - m.deriv(z)).norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(mobius_dichotomy_check(1.0, C64::new(0.0, 0.0)).is_err());
        assert!(mobius_dichotomy_check(0.5, C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn small_fuzz_is_clean_and_deterministic() {
        let a = mobius_fuzz(100_000, 9);
        assert_eq!(a.violations, 0);
        assert_eq!(a.shrinks + a.left_half_plane + a.both + a.marginal, 100_000);
        assert_eq!(a, mobius_fuzz(100_000, 9));
    }
}
