use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5EED_2019;

/// Number of pseudo-random unit vectors added to the axis directions.
pub const RANDOM_PROBES: usize = 64;

/// A standard normal variate by Box–Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = crate::linalg::norm(&v);
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn axis_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            out.push(e);
        }
    }
    out
}

/// `2d` axis directions followed by `extra` seeded random unit vectors.
/// In one dimension the two axis directions are the whole sphere.
pub fn unit_directions(dim: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = axis_directions(dim);
    if dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        dirs.extend((0..extra).map(|_| random_unit(dim, &mut rng)));
    }
    dirs
}

/// Radial probe directions used by the weight checkers.
pub fn probe_directions(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    unit_directions(dim, RANDOM_PROBES, seed)
}
