//! Multistart search for a common zero of two quadratic and two cubic forms
//! on the unit sphere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SymPencil;
use crate::error::{Error, Result};
use crate::sampling;

/// Acceptance threshold on `sqrt(φ₁² + φ₂² + ψ₁² + ψ₂²)`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// `Σ c_ijk x_i x_j x_k`, stored fully symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicForm {
    c: Vec<f64>,
    n: usize,
}

impl CubicForm {
    pub fn zero(n: usize) -> CubicForm {
        CubicForm { c: vec![0.0; n * n * n], n }
    }

    pub fn new(coeffs: &[Vec<Vec<f64>>]) -> Result<CubicForm> {
        let n = coeffs.len();
        if coeffs.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(Error::InvalidInput("cubic form must be an n×n×n array".into()));
        }
        let mut f = CubicForm::zero(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let perms = [
                        coeffs[i][j][k],
                        coeffs[i][k][j],
                        coeffs[j][i][k],
                        coeffs[j][k][i],
                        coeffs[k][i][j],
                        coeffs[k][j][i],
                    ];
                    f.c[(i * n + j) * n + k] = perms.iter().sum::<f64>() / 6.0;
                }
            }
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.n;
        let mut grad = DVector::zeros(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += self.at(i, j, k) * x[j] * x[k];
                }
            }
            grad[i] = 3.0 * s;
        }
        (grad.dot(x) / 3.0, grad)
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSearchOptions {
    /// Number of local descents.
    pub starts: usize,
    pub seed: u64,
    pub descent_iters: usize,
    pub newton_iters: usize,
}

impl Default for ZeroSearchOptions {
    fn default() -> Self {
        ZeroSearchOptions {
            starts: 64,
            seed: 0,
            descent_iters: 300,
            newton_iters: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonZero {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Index of the successful start.
    pub start: usize,
}

struct System<'a> {
    pencil: &'a SymPencil,
    cubics: [&'a CubicForm; 2],
}

impl System<'_> {
    fn residuals(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut r = DVector::zeros(4);
        let mut jac = DMatrix::zeros(4, n);
        for (row, a) in [self.pencil.a1(), self.pencil.a2()].into_iter().enumerate() {
            let ax = a * x;
            r[row] = x.dot(&ax);
            jac.row_mut(row).copy_from(&(ax * 2.0).transpose());
        }
        for (t, c) in self.cubics.iter().enumerate() {
            let (v, g) = c.eval(x);
            r[2 + t] = v;
            jac.row_mut(2 + t).copy_from(&g.transpose());
        }
        (r, jac)
    }

    fn objective(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (r, jac) = self.residuals(x);
        (r.norm_squared(), jac.transpose() * r * 2.0)
    }

    fn residual(&self, x: &DVector<f64>) -> f64 {
        self.residuals(x).0.norm()
    }

    fn descend(&self, mut x: DVector<f64>, iters: usize) -> DVector<f64> {
        let (mut v, mut g) = self.objective(&x);
        let mut step = 1.0;
        for _ in 0..iters {
            let tangent = &g - &x * g.dot(&x);
            let t2 = tangent.norm_squared();
            if t2 == 0.0 {
                break;
            }
            let mut accepted = false;
            while step > 1e-16 {
                let trial = (&x - &tangent * step).normalize();
                let (tv, tg) = self.objective(&trial);
                // Armijo condition.
                if tv <= v - 1e-4 * step * t2 {
                    (x, v, g) = (trial, tv, tg);
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        x
    }

    /// Minimum-norm Gauss–Newton steps tangent to the sphere.
    fn polish(&self, mut x: DVector<f64>, iters: usize) -> DVector<f64> {
        let n = x.len();
        let mut best = self.residual(&x);
        for _ in 0..iters {
            if best <= 1e-3 * RESIDUAL_TOL {
                break;
            }
            let (r, jac) = self.residuals(&x);
            let mut m = DMatrix::zeros(5, n);
            m.view_mut((0, 0), (4, n)).copy_from(&jac);
            m.row_mut(4).copy_from(&x.transpose());
            let mut rhs = DVector::zeros(5);
            rhs.rows_mut(0, 4).copy_from(&(-r));
            let Ok(pinv) = m.pseudo_inverse(1e-12) else {
                break;
            };
            let dx = pinv * rhs;
            let trial = (&x + dx).normalize();
            let res = self.residual(&trial);
            if !res.is_finite() || res >= best {
                break;
            }
            x = trial;
            best = res;
        }
        x
    }
}

/// Looks for `x` on the unit sphere with `φ₁(x) = φ₂(x) = ψ₁(x) = ψ₂(x) = 0`
/// to [`RESIDUAL_TOL`]; each start is seeded from its own substream.
pub fn common_zero_search(
    pencil: &SymPencil,
    psi1: &CubicForm,
    psi2: &CubicForm,
    opts: &ZeroSearchOptions,
) -> Result<Option<CommonZero>> {
    let n = pencil.dim();
    for c in [psi1, psi2] {
        if c.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.dim() });
        }
    }
    if n == 0 {
        return Ok(None);
    }
    if pencil.is_zero() && psi1.is_zero() && psi2.is_zero() {
        let mut point = vec![0.0; n];
        point[0] = 1.0;
        return Ok(Some(CommonZero { point, residual: 0.0, start: 0 }));
    }
    let sys = System { pencil, cubics: [psi1, psi2] };
    for k in 0..opts.starts {
        let mut rng = sampling::substream(opts.seed, k as u64);
        let x0 = DVector::from_vec(sampling::uniform_sphere(&mut rng, n));
        let x = sys.polish(sys.descend(x0, opts.descent_iters), opts.newton_iters);
        let residual = sys.residual(&x);
        if residual <= RESIDUAL_TOL {
            return Ok(Some(CommonZero {
                point: x.iter().copied().collect(),
                residual,
                start: k,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{build_canonical, CanonicalData};
    use rand::Rng;

    fn random_cubic(rng: &mut impl Rng, n: usize) -> CubicForm {
        let c: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
            .collect();
        CubicForm::new(&c).unwrap()
    }

    #[test]
    fn cubic_gradient_matches_euler() {
        let mut rng = sampling::rng(2);
        let c = random_cubic(&mut rng, 4);
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        let (v, g) = c.eval(&x);
        assert!((g.dot(&x) - 3.0 * v).abs() < 1e-14);
        let h = 1e-6;
        let mut xp = x.clone();
        xp[2] += h;
        let mut xm = x.clone();
        xm[2] -= h;
        let fd = (c.eval(&xp).0 - c.eval(&xm).0) / (2.0 * h);
        assert!((fd - g[2]).abs() < 1e-8);
    }

    #[test]
    fn all_zero_forms_give_first_basis_vector() {
        let z = DMatrix::zeros(3, 3);
        let p = SymPencil::new(z.clone(), z).unwrap();
        let found = common_zero_search(&p, &CubicForm::zero(3), &CubicForm::zero(3), &Default::default())
            .unwrap()
            .unwrap();
        assert_eq!(found.point, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn definite_form_has_no_zero() {
        let p = SymPencil::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let opts = ZeroSearchOptions { starts: 8, ..Default::default() };
        let found = common_zero_search(&p, &CubicForm::zero(2), &CubicForm::zero(2), &opts).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn type_three_pencil_with_cubics() {
        let p = build_canonical(&CanonicalData::new(0, vec![], 3).unwrap()).unwrap();
        let mut rng = sampling::rng(9);
        for _ in 0..5 {
            let (c1, c2) = (random_cubic(&mut rng, 6), random_cubic(&mut rng, 6));
            let z = common_zero_search(&p, &c1, &c2, &Default::default()).unwrap().unwrap();
            assert!(z.residual <= RESIDUAL_TOL);
            let x = DVector::from_vec(z.point);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }
}
