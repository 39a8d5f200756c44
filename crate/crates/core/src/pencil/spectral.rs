use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{inertia_default, SymPencil};
use crate::error::{Error, Result};
use crate::sampling;

/// Eigenvalues of `B₂⁻¹B₁` closer than this (relative) are one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Largest accepted condition number of the pivot member.
pub const PIVOT_CONDITION: f64 = 1e10;
/// Two real directions this close to antipodal (radians) break smoothness.
pub const ANTIPODAL_TOL: f64 = 1e-9;

/// Simultaneous normal form: real directions `(α_i, β_i)` with weight one
/// each, and complex blocks `ν(v² − w²) + 2ρvw` against `2vw`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralData {
    pub real_pairs: Vec<(f64, f64)>,
    /// `(ρ, ν)` with `ν > 0`.
    pub complex_pairs: Vec<(f64, f64)>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.real_pairs.len() + 2 * self.complex_pairs.len()
    }

    /// The block-diagonal pencil realizing this data.
    pub fn pencil(&self) -> SymPencil {
        let n = self.dim();
        let mut a1 = DMatrix::zeros(n, n);
        let mut a2 = DMatrix::zeros(n, n);
        for (i, (a, b)) in self.real_pairs.iter().enumerate() {
            a1[(i, i)] = *a;
            a2[(i, i)] = *b;
        }
        let r = self.real_pairs.len();
        for (t, (rho, nu)) in self.complex_pairs.iter().enumerate() {
            let (v, w) = (r + 2 * t, r + 2 * t + 1);
            a1[(v, v)] = *nu;
            a1[(w, w)] = -nu;
            a1[(v, w)] = *rho;
            a1[(w, v)] = *rho;
            a2[(v, w)] = 1.0;
            a2[(w, v)] = 1.0;
        }
        SymPencil { a1, a2 }
    }

    /// Angles of the real directions in `(-π, π]`.
    pub fn angles(&self) -> Vec<f64> {
        self.real_pairs.iter().map(|(a, b)| b.atan2(*a)).collect()
    }

    /// True when no two real directions are antipodal.
    pub fn smooth(&self) -> bool {
        let ang = self.angles();
        for i in 0..ang.len() {
            for j in i + 1..ang.len() {
                let d = (ang[i] - ang[j]).rem_euclid(TAU);
                if (d - PI).abs() <= ANTIPODAL_TOL {
                    return false;
                }
            }
        }
        true
    }

    /// Compares sampled inertia of this data's pencil with `p` at 32 angles.
    pub fn matches_inertia_of(&self, p: &SymPencil) -> bool {
        let q = self.pencil();
        (0..32).all(|k| {
            // Offset keeps samples off the canonical angles.
            let theta = TAU * (k as f64 + 0.37) / 32.0;
            inertia_default(&q.at_angle(theta)) == inertia_default(&p.at_angle(theta))
        })
    }
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let min = sv.min();
    if min > 0.0 {
        sv.max() / min
    } else {
        f64::INFINITY
    }
}

/// Rotation `(B₁, B₂) = (cA₁ + sA₂, −sA₁ + cA₂)` whose second member is
/// invertible. Tries `A₂`, then `A₁`, then `A₁ + A₂`, then other angles.
fn pivot(p: &SymPencil) -> Option<(f64, f64)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut candidates = vec![(1.0, 0.0), (0.0, -1.0), (h, -h)];
    candidates.extend((1..=24).map(|k| {
        let theta: f64 = 0.1 + 0.13 * k as f64;
        (theta.cos(), theta.sin())
    }));
    candidates.into_iter().find(|&(c, s)| {
        let b2 = p.a1() * (-s) + p.a2() * c;
        condition(&b2) < PIVOT_CONDITION
    })
}

fn null_dim_real(m: &DMatrix<f64>, tol: f64) -> (usize, DMatrix<f64>) {
    let n = m.nrows();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max();
    let cols: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol * (1.0 + smax))
        .collect();
    let basis = DMatrix::from_fn(n, cols.len(), |r, c| vt[(cols[c], r)]);
    (cols.len(), basis)
}

fn null_dim_complex(m: &DMatrix<Complex<f64>>, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .filter(|s| **s <= tol * (1.0 + smax))
        .count()
}

/// Clusters of eigenvalues: (mean, multiplicity).
fn clusters(eig: &[Complex<f64>]) -> Vec<(Complex<f64>, usize)> {
    let mut out: Vec<(Complex<f64>, usize)> = Vec::new();
    let mut used = vec![false; eig.len()];
    for i in 0..eig.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![eig[i]];
        used[i] = true;
        for j in i + 1..eig.len() {
            if !used[j] && (eig[j] - eig[i]).norm() <= CLUSTER_TOL * (1.0 + eig[i].norm()) {
                members.push(eig[j]);
                used[j] = true;
            }
        }
        let mean = members.iter().sum::<Complex<f64>>() / members.len() as f64;
        out.push((mean, members.len()));
    }
    out
}

/// Real directions and complex blocks of a semisimple pencil.
pub fn spectral_split(p: &SymPencil) -> Result<SpectralData> {
    let n = p.dim();
    let (c, s) = pivot(p).ok_or(Error::SingularA2)?;
    let b1 = p.a1() * c + p.a2() * s;
    let b2 = p.a1() * (-s) + p.a2() * c;
    let m = b2.clone().lu().solve(&b1).ok_or(Error::SingularA2)?;
    let eig: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();

    let mut data = SpectralData::default();
    for (mu, mult) in clusters(&eig) {
        let scale = 1.0 + mu.norm();
        if mu.im.abs() <= CLUSTER_TOL * scale {
            let mu = mu.re;
            let (dim, basis) = null_dim_real(&(&b1 - &b2 * mu), CLUSTER_TOL);
            if dim != mult {
                return Err(Error::NotSemisimple(format!("{mu}")));
            }
            let restricted = basis.transpose() * &b2 * &basis;
            let d = restricted.symmetric_eigenvalues();
            for dk in d.iter() {
                // (α', β') = d_k (μ, 1) in the rotated frame.
                let (ap, bp) = (dk * mu, *dk);
                let (a, b) = (c * ap - s * bp, s * ap + c * bp);
                let norm = (a * a + b * b).sqrt();
                let unit = if b.abs() > 1e-12 * norm { b.abs() } else { a.abs() };
                data.real_pairs.push((a / unit, b / unit));
            }
        } else if mu.im > 0.0 {
            let shifted = b1.map(Complex::from) - b2.map(Complex::from) * mu;
            if null_dim_complex(&shifted, CLUSTER_TOL) != mult {
                return Err(Error::NotSemisimple(format!("{mu}")));
            }
            let w = (mu * c - s) / (Complex::from(c) + mu * s);
            for _ in 0..mult {
                data.complex_pairs.push((w.re, w.im.abs()));
            }
        }
    }
    if data.dim() != n {
        return Err(Error::NotSemisimple(format!(
            "recovered dimension {} of {n}",
            data.dim()
        )));
    }
    data.real_pairs
        .sort_by(|x, y| x.1.atan2(x.0).total_cmp(&y.1.atan2(y.0)));
    data.complex_pairs
        .sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(data)
}

/// `s + min_λ #{i : λ·(α_i, β_i) > 0}`, evaluated once per open arc between
/// consecutive sign-change angles.
pub fn type_exact(data: &SpectralData) -> usize {
    let s = data.complex_pairs.len();
    let phis = data.angles();
    if phis.is_empty() {
        return s;
    }
    let mut crit: Vec<f64> = phis
        .iter()
        .flat_map(|phi| [(phi + FRAC_PI_2).rem_euclid(TAU), (phi - FRAC_PI_2).rem_euclid(TAU)])
        .collect();
    crit.sort_by(f64::total_cmp);
    crit.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let count = |theta: f64| phis.iter().filter(|phi| (theta - **phi).cos() > 0.0).count();
    let mut best = usize::MAX;
    for k in 0..crit.len() {
        let next = if k + 1 < crit.len() { crit[k + 1] } else { crit[0] + TAU };
        best = best.min(count(0.5 * (crit[k] + next)));
    }
    s + best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Genericity {
    pub det_not_identically_zero: bool,
    pub semisimple: bool,
    pub smooth_intersection: bool,
    /// True when smoothness came from a sampled search rather than from
    /// spectral data.
    pub smoothness_sampled: bool,
}

impl Genericity {
    pub fn generic(&self) -> bool {
        self.det_not_identically_zero && self.semisimple && self.smooth_intersection
    }
}

fn det_not_identically_zero(p: &SymPencil) -> bool {
    let n = p.dim() as i32;
    let scale = 1.0 + p.a1().amax().max(p.a2().amax());
    (0..16).any(|k| {
        let theta = 0.1 + 0.37 * k as f64;
        p.at_angle(theta).determinant().abs() > 1e-9 * scale.powi(n)
    })
}

/// Smallest value of `φ₁² + φ₂² + |A₁x ∧ A₂x|²` found on the unit sphere.
fn min_dependency(p: &SymPencil, starts: usize, seed: u64) -> f64 {
    let (a1, a2) = (p.a1(), p.a2());
    let value_grad = |x: &DVector<f64>| {
        let (a, b) = (a1 * x, a2 * x);
        let (f1, f2) = (x.dot(&a), x.dot(&b));
        let (aa, bb, ab) = (a.dot(&a), b.dot(&b), a.dot(&b));
        let value = f1 * f1 + f2 * f2 + aa * bb - ab * ab;
        let grad = &a * (4.0 * f1)
            + &b * (4.0 * f2)
            + a1 * (&a * bb - &b * ab) * 2.0
            + a2 * (&b * aa - &a * ab) * 2.0;
        (value, grad)
    };
    let mut rng = sampling::rng(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut x = DVector::from_vec(sampling::uniform_sphere(&mut rng, p.dim()));
        let (mut v, mut g) = value_grad(&x);
        let mut step = 1.0;
        for _ in 0..500 {
            let tangent = &g - &x * g.dot(&x);
            if tangent.norm() < 1e-300 {
                break;
            }
            let mut accepted = false;
            while step > 1e-20 {
                let trial = (&x - &tangent * step).normalize();
                let (tv, tg) = value_grad(&trial);
                if tv <= v - 1e-4 * step * tangent.norm_squared() {
                    x = trial;
                    v = tv;
                    g = tg;
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
        best = best.min(v);
    }
    best
}

/// The three genericity conditions for a pencil.
pub fn genericity_check(p: &SymPencil) -> Genericity {
    let det = det_not_identically_zero(p);
    let split = if det { spectral_split(p).ok() } else { None };
    let (smooth, sampled) = match &split {
        Some(data) => (data.smooth(), false),
        None => {
            let scale = 1.0 + p.a1().amax().max(p.a2().amax());
            (min_dependency(p, 32, 0) > 1e-12 * scale.powi(4), true)
        }
    };
    Genericity {
        det_not_identically_zero: det,
        semisimple: split.is_some(),
        smooth_intersection: smooth,
        smoothness_sampled: sampled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::type_sampled;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn diagonal_pair() {
        let p = SymPencil::new(diag(&[2.0, 3.0]), DMatrix::identity(2, 2)).unwrap();
        let d = spectral_split(&p).unwrap();
        assert!(d.complex_pairs.is_empty());
        let mut pairs = d.real_pairs.clone();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((pairs[0].0 - 2.0).abs() < 1e-12 && (pairs[0].1 - 1.0).abs() < 1e-12);
        assert!((pairs[1].0 - 3.0).abs() < 1e-12 && (pairs[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_block() {
        let (nu, rho) = (0.7, -0.4);
        let p = SymPencil::new(
            DMatrix::from_row_slice(2, 2, &[nu, rho, rho, -nu]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        let d = spectral_split(&p).unwrap();
        assert!(d.real_pairs.is_empty());
        assert!((d.complex_pairs[0].0 - rho).abs() < 1e-12);
        assert!((d.complex_pairs[0].1 - nu).abs() < 1e-12);
    }

    #[test]
    fn direct_sum_round_trip() {
        let real = SymPencil::new(diag(&[2.0, 3.0]), DMatrix::identity(2, 2)).unwrap();
        let cplx = SymPencil::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, -0.5]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        for p in [real.direct_sum(&cplx), cplx.direct_sum(&real)] {
            let d = spectral_split(&p).unwrap();
            assert_eq!(d.real_pairs.len(), 2);
            assert_eq!(d.complex_pairs.len(), 1);
            assert!((d.complex_pairs[0].0 - 0.2).abs() < 1e-12);
            assert!((d.complex_pairs[0].1 - 0.5).abs() < 1e-12);
            assert!(d.matches_inertia_of(&p));
        }
    }

    #[test]
    fn singular_a2_uses_another_member() {
        let p = SymPencil::new(diag(&[1.0, 2.0, -1.0]), diag(&[0.0, 1.0, 1.0])).unwrap();
        let d = spectral_split(&p).unwrap();
        assert_eq!(d.real_pairs.len(), 3);
        assert!(d.real_pairs.iter().any(|(a, b)| b.abs() < 1e-12 && (*a - 1.0).abs() < 1e-12));
        assert!(d.matches_inertia_of(&p));
    }

    #[test]
    fn defective_pencil_is_rejected() {
        // A₂⁻¹A₁ is a Jordan block.
        let p = SymPencil::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(spectral_split(&p), Err(Error::NotSemisimple(_))));
    }

    #[test]
    fn type_exact_examples() {
        let d = SpectralData {
            real_pairs: vec![(0.0, 1.0); 3],
            complex_pairs: vec![(0.0, 1.0); 2],
        };
        assert_eq!(type_exact(&d), 2);
        assert_eq!(type_exact(&d), type_sampled(&d.pencil(), 1000).unwrap());
    }

    #[test]
    fn genericity_of_equal_forms() {
        let a = diag(&[1.0, -1.0]);
        let g = genericity_check(&SymPencil::new(a.clone(), a).unwrap());
        assert!(g.det_not_identically_zero);
        assert!(g.semisimple);
        assert!(!g.smooth_intersection);
        assert!(!g.smoothness_sampled);
    }

    #[test]
    fn genericity_of_odd_block() {
        let a1 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let a2 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let g = genericity_check(&SymPencil::new(a1, a2).unwrap());
        assert!(!g.det_not_identically_zero);
        assert!(!g.semisimple);
        assert!(g.smoothness_sampled);
        // The common isotropic plane spanned by e₂, e₃ is singular.
        assert!(!g.smooth_intersection);
    }
}
