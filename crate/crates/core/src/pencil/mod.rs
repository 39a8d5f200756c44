//! Two-parameter families `λ₁A₁ + λ₂A₂` of real symmetric forms.

mod canonical;
mod spectral;
mod zeros;

pub use canonical::{build_canonical, classify_topology, CanonicalData, TopologyLabel, CANONICAL_TOL};
pub use spectral::{
    genericity_check, spectral_split, type_exact, Genericity, SpectralData, ANTIPODAL_TOL, CLUSTER_TOL,
    PIVOT_CONDITION,
};
pub use zeros::{common_zero_search, CommonZero, CubicForm, ZeroSearchOptions, RESIDUAL_TOL};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// Relative symmetry tolerance for input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues within `INERTIA_TOL · (1 + spectral radius)` of zero count as zero.
pub const INERTIA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SymPencil {
    a1: DMatrix<f64>,
    a2: DMatrix<f64>,
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("{name} is not square")));
    }
    let scale = 1.0 + m.amax();
    if (m - m.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::InvalidInput(format!("{name} is not symmetric")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Ok(())
}

impl SymPencil {
    pub fn new(a1: DMatrix<f64>, a2: DMatrix<f64>) -> Result<SymPencil> {
        check_symmetric("A1", &a1)?;
        check_symmetric("A2", &a2)?;
        if a1.shape() != a2.shape() {
            return Err(Error::DimensionMismatch {
                expected: a1.nrows(),
                got: a2.nrows(),
            });
        }
        let a1 = (&a1 + a1.transpose()) * 0.5;
        let a2 = (&a2 + a2.transpose()) * 0.5;
        Ok(SymPencil { a1, a2 })
    }

    pub fn from_rows(a1: &[Vec<f64>], a2: &[Vec<f64>]) -> Result<SymPencil> {
        SymPencil::new(from_rows(a1)?, from_rows(a2)?)
    }

    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }

    pub fn a2(&self) -> &DMatrix<f64> {
        &self.a2
    }

    pub fn member(&self, l1: f64, l2: f64) -> DMatrix<f64> {
        &self.a1 * l1 + &self.a2 * l2
    }

    pub fn at_angle(&self, theta: f64) -> DMatrix<f64> {
        self.member(theta.cos(), theta.sin())
    }

    /// `(Xᵀ A₁ X, Xᵀ A₂ X)`.
    pub fn congruent(&self, x: &DMatrix<f64>) -> SymPencil {
        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        SymPencil {
            a1: sym(x.transpose() * &self.a1 * x),
            a2: sym(x.transpose() * &self.a2 * x),
        }
    }

    /// Restriction to the column span of `basis`.
    pub fn restrict(&self, basis: &DMatrix<f64>) -> SymPencil {
        self.congruent(basis)
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &SymPencil) -> SymPencil {
        let (n, m) = (self.dim(), other.dim());
        let block = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(n + m, n + m);
            out.view_mut((0, 0), (n, n)).copy_from(a);
            out.view_mut((n, n), (m, m)).copy_from(b);
            out
        };
        SymPencil {
            a1: block(&self.a1, &other.a1),
            a2: block(&self.a2, &other.a2),
        }
    }

    fn is_zero(&self) -> bool {
        self.a1.amax() == 0.0 && self.a2.amax() == 0.0
    }
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix rows must form a square array".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn rank(&self) -> usize {
        self.pos + self.neg
    }

    pub fn flipped(&self) -> Inertia {
        Inertia {
            pos: self.neg,
            neg: self.pos,
            zero: self.zero,
        }
    }
}

/// The default zero threshold `INERTIA_TOL · (1 + spectral radius)`.
pub fn default_tol(m: &DMatrix<f64>) -> f64 {
    let radius = m.clone().symmetric_eigenvalues().amax();
    INERTIA_TOL * (1.0 + radius)
}

fn count(eig: &nalgebra::DVector<f64>, tol: f64) -> Inertia {
    let pos = eig.iter().filter(|v| **v > tol).count();
    let neg = eig.iter().filter(|v| **v < -tol).count();
    Inertia {
        pos,
        neg,
        zero: eig.len() - pos - neg,
    }
}

/// Counts of eigenvalues above `tol`, below `-tol` and in between.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> Inertia {
    count(&m.clone().symmetric_eigenvalues(), tol)
}

/// Inertia at the default threshold.
pub fn inertia_default(m: &DMatrix<f64>) -> Inertia {
    let eig = m.clone().symmetric_eigenvalues();
    count(&eig, INERTIA_TOL * (1.0 + eig.amax()))
}

/// Minimum positive inertia over maximal-rank members, sampled at
/// `samples` angles of the half circle; the opposite half comes from
/// swapping the inertia counts.
pub fn type_sampled(p: &SymPencil, samples: usize) -> Result<usize> {
    if p.is_zero() {
        return Err(Error::ZeroPencil);
    }
    let samples = samples.max(8);
    let mut best_rank = 0;
    let mut best_pos = usize::MAX;
    for k in 0..samples {
        let theta = std::f64::consts::PI * k as f64 / samples as f64;
        let i = inertia_default(&p.at_angle(theta));
        let rank = i.rank();
        let pos = i.pos.min(i.neg);
        if rank > best_rank {
            best_rank = rank;
            best_pos = pos;
        } else if rank == best_rank {
            best_pos = best_pos.min(pos);
        }
    }
    Ok(best_pos)
}

/// Adds `ε`-scaled symmetric Gaussian noise to `A₁`.
pub fn perturb(p: &SymPencil, eps: f64, seed: u64) -> SymPencil {
    let mut rng = sampling::rng(seed);
    let n = p.dim();
    let mut noise = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = StandardNormal.sample(&mut rng);
            noise[(i, j)] = v;
            noise[(j, i)] = v;
        }
    }
    SymPencil {
        a1: &p.a1 + noise * eps,
        a2: p.a2.clone(),
    }
}

/// Pencil file: `{"A1": [[..]], "A2": [[..]], "psi1": [[[..]]], "psi2": [[[..]]]}`.
/// Cubic forms are coefficient arrays `c[i][j][k]` of `Σ c_ijk x_i x_j x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilFile {
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<f64>>,
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi1: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi2: Option<Vec<Vec<Vec<f64>>>>,
}

impl PencilFile {
    pub fn pencil(&self) -> Result<SymPencil> {
        SymPencil::from_rows(&self.a1, &self.a2)
    }

    pub fn from_pencil(p: &SymPencil) -> PencilFile {
        PencilFile {
            a1: to_rows(&p.a1),
            a2: to_rows(&p.a2),
            psi1: None,
            psi2: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn inertia_examples() {
        assert_eq!(
            inertia(&DMatrix::identity(3, 3), 1e-9),
            Inertia { pos: 3, neg: 0, zero: 0 }
        );
        assert_eq!(
            inertia(&diag(&[1.0, -1.0, 0.0]), 1e-9),
            Inertia { pos: 1, neg: 1, zero: 1 }
        );
        let hyper = diag(&[1.0, -1.0]);
        assert_eq!(inertia(&hyper, default_tol(&hyper)), Inertia { pos: 1, neg: 1, zero: 0 });
    }

    #[test]
    fn inertia_sign_symmetry() {
        let mut rng = sampling::rng(1);
        for _ in 0..20 {
            let m = crate::testing::random_matrix(&mut rng, 5, 0.0);
            let s = &m + m.transpose();
            assert_eq!(inertia(&-&s, 1e-9), inertia(&s, 1e-9).flipped());
        }
    }

    #[test]
    fn identity_against_signature_has_type_zero() {
        let p = SymPencil::new(DMatrix::identity(3, 3), diag(&[1.0, -1.0, 1.0])).unwrap();
        assert_eq!(type_sampled(&p, 64).unwrap(), 0);
    }

    #[test]
    fn zero_pencil_is_an_error() {
        let z = DMatrix::zeros(2, 2);
        let p = SymPencil::new(z.clone(), z).unwrap();
        assert_eq!(type_sampled(&p, 16), Err(Error::ZeroPencil));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(SymPencil::new(a, DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn exact_type_matches_sampling_on_random_pencils() {
        let mut rng = sampling::rng(5);
        for trial in 0..100 {
            let n = 2 + trial % 7;
            let p = crate::testing::random_pencil(&mut rng, n);
            let data = spectral_split(&p).unwrap();
            assert!(data.matches_inertia_of(&p));
            assert_eq!(type_exact(&data), type_sampled(&p, 10_000).unwrap(), "trial {trial}");
        }
    }

    #[test]
    fn perturbation_is_seeded_and_touches_a1_only() {
        let p = SymPencil::new(DMatrix::identity(3, 3), diag(&[1.0, 2.0, 3.0])).unwrap();
        let q1 = perturb(&p, 1e-3, 4);
        let q2 = perturb(&p, 1e-3, 4);
        assert_eq!(q1, q2);
        assert_eq!(q1.a2(), p.a2());
        assert!((q1.a1() - p.a1()).amax() > 0.0);
        assert!((q1.a1() - q1.a1().transpose()).amax() == 0.0);
    }
}
