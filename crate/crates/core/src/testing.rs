//! Seeded random instances shared by tests, sweeps and the CLI.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::germ::Germ;
use crate::minkowski::NormModel;
use crate::pencil::SymPencil;

/// A Randers norm with `a = MMᵀ + I` and a drift of dual length in `[0, 0.6)`.
pub fn random_randers(rng: &mut ChaCha8Rng, dim: usize) -> NormModel {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let a = &m * m.transpose() + DMatrix::identity(dim, dim);
    let b = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let ainv_b: DVector<f64> = a.clone().try_inverse().expect("SPD matrix") * &b;
    let dual: f64 = b.dot(&ainv_b).sqrt();
    let target = rng.random_range(0.0..0.6);
    let b = if dual > 0.0 { b * (target / dual) } else { b };
    NormModel::randers(a, b).expect("admissible Randers data")
}

/// A germ with jet entries uniform in `[-1, 1]` before symmetrization.
pub fn random_germ(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Germ {
    let d2 = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    let d3 = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    Germ::new(n, p, d2, d3).expect("well-shaped germ")
}

/// A random matrix with entries in `[-1, 1]` plus `shift · I`.
pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize, shift: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        rng.random_range(-1.0..1.0) + if i == j { shift } else { 0.0 }
    })
}

/// Pencil with independent standard normal entries on and above the diagonal.
pub fn random_pencil(rng: &mut ChaCha8Rng, dim: usize) -> SymPencil {
    let mut sym = || {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v: f64 = StandardNormal.sample(rng);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    let a1 = sym();
    let a2 = sym();
    SymPencil::new(a1, a2).expect("symmetric by construction")
}
