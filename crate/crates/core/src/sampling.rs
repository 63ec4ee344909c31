//! Deterministic random streams and geometric samplers.

use crate::{CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for independent item `index` of a run seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal variate (Box–Muller).
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Complex normal variate with independent standard parts.
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

/// Uniform direction on the unit sphere of `C^n = R^{2n}`.
pub fn unit_direction<R: Rng>(rng: &mut R, n: usize) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| complex_gaussian(rng));
        let len = v.norm();
        if len > 1e-12 {
            return v / C64::new(len, 0.0);
        }
    }
}

/// Uniform point in the closed ball of radius `radius` about `center`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &CVec, radius: f64) -> CVec {
    let n = center.len();
    let d = unit_direction(rng, n);
    let rad = radius * rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
    center + d * C64::new(rad, 0.0)
}

/// Uniform point in the unit disk.
pub fn uniform_in_disk<R: Rng>(rng: &mut R) -> C64 {
    let rad = rng.gen::<f64>().sqrt();
    let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    C64::from_polar(rad, th)
}

/// Points of the cubic lattice with `per_axis` nodes per real axis on `[-radius, radius]^{2n}`
/// around `center`, restricted to the closed ball of that radius.
pub fn ball_lattice(center: &CVec, radius: f64, per_axis: usize) -> Vec<CVec> {
    let n = center.len();
    let dim = 2 * n;
    let nodes: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis).map(|k| -radius + 2.0 * radius * k as f64 / (per_axis - 1) as f64).collect()
    };
    let total = nodes.len().pow(dim as u32);
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut sq = 0.0;
        for &i in &idx {
            sq += nodes[i] * nodes[i];
        }
        if sq <= radius * radius * (1.0 + 1e-12) {
            let p = CVec::from_fn(n, |i, _| center[i] + C64::new(nodes[idx[i]], nodes[idx[i + n]]));
            out.push(p);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < nodes.len() {
                break;
            }
            *slot = 0;
        }
    }
    out
}
