//! Deterministic direction sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `k` derived from `seed`.
pub fn substream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

pub fn uniform_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn normalized(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `count` well-spread unit directions in `R^dim`: an angular grid in the
/// plane, a Fibonacci lattice on S², Halton points pushed through Box–Muller
/// above that.
pub fn direction_grid(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            assert!(dim <= PRIMES.len());
            let pairs = dim.div_ceil(2);
            (1..=count as u64)
                .map(|i| {
                    let mut v = Vec::with_capacity(2 * pairs);
                    for p in 0..pairs {
                        let u1 = radical_inverse(i, PRIMES[2 * p]).max(1e-300);
                        let u2 = if 2 * p + 1 < PRIMES.len() {
                            radical_inverse(i, PRIMES[2 * p + 1])
                        } else {
                            0.5
                        };
                        let rad = (-2.0 * u1.ln()).sqrt();
                        let t = std::f64::consts::TAU * u2;
                        v.push(rad * t.cos());
                        v.push(rad * t.sin());
                    }
                    v.truncate(dim);
                    normalized(&v)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_unit_and_sized() {
        for dim in 2..=6 {
            let g = direction_grid(dim, 100);
            assert_eq!(g.len(), 100);
            for v in &g {
                assert_eq!(v.len(), dim);
                assert!((norm(v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a = uniform_sphere(&mut substream(7, 3), 4);
        let b = uniform_sphere(&mut substream(7, 3), 4);
        let c = uniform_sphere(&mut substream(7, 4), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
