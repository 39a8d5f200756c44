//! Fundamental tensor, spray and Ricci curvature of an induced Finsler
//! metric at the adapted origin of a germ.
//!
//! Every derivative in the direction variable `u` comes from jets of `H` in
//! the ambient variables, restricted to the tangent lift `u ↦ (u, 0)`.

mod oracle;
mod sweep;

pub use oracle::{ricci_oracle, OracleScheme, FD_STEP};
pub use sweep::{ricci_sweep, write_sweep_csv};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::jets::Jet4;
use crate::minkowski::NormModel;

/// Largest accepted condition number of the fundamental tensor.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub u: Vec<f64>,
    #[serde(rename = "S")]
    pub s: f64,
    pub g: Vec<Vec<f64>>,
    /// `h[i][α]`.
    pub h: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    #[serde(rename = "G")]
    pub spray: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    /// `rho[i][α][β]`.
    pub rho: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Rik")]
    pub rik: Vec<Vec<f64>>,
    #[serde(rename = "Ric")]
    pub ric: f64,
    /// The cubic, ζ, η and ρ groups whose sum is `Ric`.
    pub ric_terms: [f64; 4],
}

type JetMatrix = Vec<Vec<Jet4>>;

fn check_direction(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<Vec<f64>> {
    if norm.dim() != germ.dim() {
        return Err(Error::DimensionMismatch {
            expected: germ.dim(),
            got: norm.dim(),
        });
    }
    if u.len() != germ.n {
        return Err(Error::DimensionMismatch {
            expected: germ.n,
            got: u.len(),
        });
    }
    let mut lifted = u.to_vec();
    lifted.resize(germ.dim(), 0.0);
    if u.iter().all(|v| *v == 0.0) || norm.is_excluded(&lifted) {
        return Err(Error::SingularDirection(lifted));
    }
    Ok(lifted)
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Inverse of a symmetric positive definite matrix, refusing indefinite or
/// badly conditioned input.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigenvalues();
    let (min, max) = (eig.min(), eig.max());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(min > 0.0) || !(condition <= MAX_CONDITION) {
        return Err(Error::NonPDTensor {
            min_eigenvalue: min,
            condition,
        });
    }
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NonPDTensor {
            min_eigenvalue: min,
            condition,
        })
}

/// Inverse of a matrix of jets by a Neumann series around its value.
pub(crate) fn jet_inverse(m: &JetMatrix, inv0: &DMatrix<f64>) -> JetMatrix {
    let n = m.len();
    let dim = m[0][0].dim();
    let order = m[0][0].order();
    // E = inv0 · (M − M0); M⁻¹ = (Σ_k (−E)^k) · inv0.
    let e: JetMatrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Jet4::zero(dim);
                    for k in 0..n {
                        let d = &m[k][j] - Jet4::constant(dim, m[k][j].value());
                        acc += &(&d * -inv0[(i, k)]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut term: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| Jet4::constant(dim, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut sum = term.clone();
    for _ in 0..order {
        term = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = Jet4::zero(dim);
                        for k in 0..n {
                            acc += &(&term[i][k] * &e[k][j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += &term[i][j];
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Jet4::zero(dim);
                    for k in 0..n {
                        acc += &(&sum[i][k] * inv0[(k, j)]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Second derivatives `H_ab(u, 0)` as jets in `u`, valid to order two.
fn hessian_jets(norm: &NormModel, lifted: &[f64], n: usize) -> Result<JetMatrix> {
    let jet = norm.jet(lifted)?;
    let d = lifted.len();
    let first: Vec<Jet4> = (0..d).map(|a| jet.partial(a)).collect();
    Ok((0..d)
        .map(|a| (0..d).map(|b| first[a].partial(b).restrict(n)).collect())
        .collect())
}

fn values(m: &JetMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
    let (r0, c0) = (rows.start, cols.start);
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[r0 + i][c0 + j].value())
}

/// `g_ij(0, u) = H_ij(u, 0)`.
pub fn fundamental_tensor(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<DMatrix<f64>> {
    let lifted = check_direction(norm, germ, u)?;
    let jet = norm.jet(&lifted)?;
    let n = germ.n;
    let g = DMatrix::from_fn(n, n, |i, j| jet.second(i, j));
    spd_inverse(&g)?;
    Ok(g)
}

/// `G^i(0, u) = ½ h^i_α κ^α` with `h = g⁻¹ H_{·α}`.
pub fn spray_at_origin(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<Vec<f64>> {
    let lifted = check_direction(norm, germ, u)?;
    let jet = norm.jet(&lifted)?;
    let n = germ.n;
    let g = DMatrix::from_fn(n, n, |i, j| jet.second(i, j));
    let ginv = spd_inverse(&g)?;
    let kappa = germ.kappa(u);
    let mut w = nalgebra::DVector::zeros(n);
    for (a, k) in kappa.iter().enumerate() {
        for j in 0..n {
            w[j] += jet.second(j, n + a) * k;
        }
    }
    Ok((ginv * w * 0.5).iter().copied().collect())
}

/// `ζ_αβ = H_αβ − g^{rs} H_rα H_sβ` and, for `p = 1`, the residual against
/// `det H[n+1] / det H[n]`.
pub fn zeta_check(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<(DMatrix<f64>, Option<f64>)> {
    let lifted = check_direction(norm, germ, u)?;
    let jet = norm.jet(&lifted)?;
    let (n, p) = (germ.n, germ.p);
    let full = DMatrix::from_fn(n + p, n + p, |i, j| jet.second(i, j));
    let g = full.view((0, 0), (n, n)).into_owned();
    let ginv = spd_inverse(&g)?;
    let cross = full.view((0, n), (n, p)).into_owned();
    let zeta = full.view((n, n), (p, p)).into_owned() - cross.transpose() * &ginv * &cross;
    let min = zeta.clone().symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::NonPDZeta(min));
    }
    let residual = (p == 1).then(|| {
        let ratio = full.view((0, 0), (n + 1, n + 1)).determinant() / g.determinant();
        (zeta[(0, 0)] - ratio).abs()
    });
    Ok((zeta, residual))
}

/// Every quantity of the expanded Ricci formula at direction `u`.
pub fn ricci_expanded(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<CurvatureReport> {
    let lifted = check_direction(norm, germ, u)?;
    let (n, p) = (germ.n, germ.p);
    let hj = hessian_jets(norm, &lifted, n)?;
    let g0 = values(&hj, 0..n, 0..n);
    let ginv0 = spd_inverse(&g0)?;
    let g_block: JetMatrix = (0..n).map(|i| hj[i][..n].to_vec()).collect();
    let ginv = jet_inverse(&g_block, &ginv0);
    let dim = n;

    // h[i][α] and ζ[α][β] as jets in u.
    let h: JetMatrix = (0..n)
        .map(|i| {
            (0..p)
                .map(|a| {
                    let mut acc = Jet4::zero(dim);
                    for j in 0..n {
                        acc += &(&ginv[i][j] * &hj[j][n + a]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let zeta: JetMatrix = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    let mut acc = hj[n + a][n + b].clone();
                    for r in 0..n {
                        acc = acc - &hj[n + a][r] * &h[r][b];
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let h0: Vec<Vec<f64>> = h.iter().map(|r| r.iter().map(Jet4::value).collect()).collect();
    let z0: Vec<Vec<f64>> = zeta.iter().map(|r| r.iter().map(Jet4::value).collect()).collect();
    let gi = |i: usize, j: usize| ginv0[(i, j)];
    // dh[i][α][k] = ∂_k h^i_α
    let dh: Vec<Vec<Vec<f64>>> = h
        .iter()
        .map(|r| r.iter().map(|j| (0..n).map(|k| j.first(k)).collect()).collect())
        .collect();
    let dz: Vec<Vec<Vec<f64>>> = zeta
        .iter()
        .map(|r| r.iter().map(|j| (0..n).map(|k| j.first(k)).collect()).collect())
        .collect();

    // D[α][β][i] = g^{ij} ∂_j ζ_αβ and its first derivatives.
    let mut d_dz = vec![vec![vec![vec![0.0; n]; n]; p]; p];
    // GZ[α][β][i][j] = g^{ij} ζ_αβ; only ∂_j GZ^{ij} and ∂_k GZ^{ij} are used.
    let mut d_gz = vec![vec![vec![vec![vec![0.0; n]; n]; n]; p]; p];
    for a in 0..p {
        for b in 0..p {
            let zp: Vec<Jet4> = (0..n).map(|j| zeta[a][b].partial(j)).collect();
            for i in 0..n {
                let mut acc = Jet4::zero(dim);
                for j in 0..n {
                    acc += &(&ginv[i][j] * &zp[j]);
                    let gz = &ginv[i][j] * &zeta[a][b];
                    for k in 0..n {
                        d_gz[a][b][i][j][k] = gz.first(k);
                    }
                }
                for k in 0..n {
                    d_dz[a][b][i][k] = acc.first(k);
                }
            }
        }
    }

    let xi: Vec<f64> = (0..p)
        .map(|a| -0.5 * (0..n).map(|i| dh[i][a][i]).sum::<f64>())
        .collect();
    let eta: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s += 0.75 * dh[i][a][j] * dh[j][b][i];
                        }
                        s += 0.5 * d_dz[a][b][i][i];
                    }
                    s
                })
                .collect()
        })
        .collect();
    let rho: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..p)
                .map(|a| {
                    (0..p)
                        .map(|b| {
                            let mut s = 3.0 * xi[a] * h0[i][b];
                            for j in 0..n {
                                s += 0.5 * d_gz[a][b][i][j][j] + 0.5 * gi(i, j) * dz[a][b][j];
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let kappa = germ.kappa(u);
    let fu = germ.d2_u(u);
    let cub = germ.cubic(u);

    let t1: f64 = (0..p).map(|a| xi[a] * cub[a]).sum();
    let mut t2 = 0.0;
    for a in 0..p {
        for b in 0..p {
            let mut s = 0.0;
            for i in 0..n {
                for l in 0..n {
                    s += gi(i, l) * (germ.d2[b][i][l] * kappa[a] - fu[b][l] * fu[a][i]);
                }
            }
            t2 += z0[a][b] * s;
        }
    }
    let mut t3 = 0.0;
    for a in 0..p {
        for b in 0..p {
            t3 -= kappa[a] * eta[a][b] * kappa[b];
        }
    }
    let mut t4 = 0.0;
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                t4 -= rho[i][a][b] * kappa[b] * fu[a][i];
            }
        }
    }

    let mut rik = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for a in 0..p {
                s -= 0.5 * dh[i][a][k] * cub[a];
                for b in 0..p {
                    let kk = kappa[a] * kappa[b];
                    s -= 0.5 * d_dz[a][b][i][k] * kk;
                    for j in 0..n {
                        s -= 0.75 * dh[i][a][j] * dh[j][b][k] * kk;
                        s += 1.5 * dh[i][a][k] * h0[j][b] * kappa[b] * fu[a][j];
                        s -= 0.5 * d_gz[a][b][i][j][k] * kappa[b] * fu[a][j];
                        s -= 0.5 * gi(i, j) * dz[a][b][j] * kappa[b] * fu[a][k];
                    }
                    for l in 0..n {
                        s += gi(i, l)
                            * z0[a][b]
                            * (germ.d2[b][k][l] * kappa[a] - fu[b][l] * fu[a][k]);
                    }
                }
            }
            rik[i][k] = s;
        }
    }

    let spray: Vec<f64> = (0..n)
        .map(|i| 0.5 * (0..p).map(|a| h0[i][a] * kappa[a]).sum::<f64>())
        .collect();
    let s = norm.norm(&lifted)?;

    Ok(CurvatureReport {
        u: u.to_vec(),
        s,
        g: to_rows(&g0),
        h: h0,
        kappa,
        spray,
        xi,
        zeta: z0,
        eta,
        rho,
        rik,
        ric: t1 + t2 + t3 + t4,
        ric_terms: [t1, t2, t3, t4],
    })
}

impl CurvatureReport {
    pub fn rik_trace(&self) -> f64 {
        (0..self.rik.len()).map(|i| self.rik[i][i]).sum()
    }
}

/// `Σ_α (tr A_α · κ^α(u) − |A_α u|²)`: the Ricci curvature of a Euclidean
/// submanifold from its second fundamental form.
pub fn gauss_equation_ric(germ: &Germ, u: &[f64]) -> f64 {
    let kappa = germ.kappa(u);
    let fu = germ.d2_u(u);
    (0..germ.p)
        .map(|a| {
            let tr: f64 = (0..germ.n).map(|i| germ.d2[a][i][i]).sum();
            tr * kappa[a] - fu[a].iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::Example4;
    use crate::testing::{random_germ, random_randers};
    use crate::sampling;

    fn paraboloid(n: usize) -> Germ {
        let id = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Germ::quadratic(vec![id]).unwrap()
    }

    #[test]
    fn euclidean_paraboloid_has_ric_n_minus_one() {
        for n in 2..=4 {
            let g = paraboloid(n);
            let m = NormModel::euclidean(n + 1);
            let mut u = vec![0.0; n];
            u[0] = 1.0;
            let r = ricci_expanded(&m, &g, &u).unwrap();
            assert!((r.ric - (n as f64 - 1.0)).abs() < 1e-12);
            assert!((r.rik_trace() - r.ric).abs() < 1e-12);
            assert_eq!(r.spray, vec![0.0; n]);
        }
    }

    #[test]
    fn saddle_has_ric_minus_four() {
        let g = Germ::quadratic(vec![vec![vec![2.0, 0.0], vec![0.0, -2.0]]]).unwrap();
        let r = ricci_expanded(&NormModel::euclidean(3), &g, &[1.0, 0.0]).unwrap();
        assert!((r.ric + 4.0).abs() < 1e-12);
    }

    #[test]
    fn flat_germ_has_zero_ric() {
        let m = random_randers(&mut sampling::rng(3), 4);
        let r = ricci_expanded(&m, &Germ::flat(2, 2), &[0.3, -0.8]).unwrap();
        assert_eq!(r.ric, 0.0);
    }

    #[test]
    fn example_fundamental_tensor() {
        let p = Example4 {
            a: 10.0,
            b: 10.0,
            eps1: 0.01,
            eps2: 0.01,
        };
        let m = NormModel::example4(p).unwrap();
        let g = fundamental_tensor(&m, &Germ::flat(2, 1), &[1.0, 0.0]).unwrap();
        // H = A r² on the plane z = 0.
        assert!((g[(0, 0)] - 20.0).abs() < 1e-12);
        assert!((g[(1, 1)] - 20.0).abs() < 1e-12);
        assert!(g[(0, 1)].abs() < 1e-12);
        let (zeta, res) = zeta_check(&m, &Germ::flat(2, 1), &[1.0, 0.0]).unwrap();
        assert!(res.unwrap() < 1e-10);
        assert!(zeta[(0, 0)] > 0.0);
    }

    #[test]
    fn homogeneity_in_u() {
        let mut rng = sampling::rng(11);
        let m = random_randers(&mut rng, 4);
        let germ = random_germ(&mut rng, 2, 2);
        let u = [0.4, -0.7];
        let r1 = ricci_expanded(&m, &germ, &u).unwrap();
        let r2 = ricci_expanded(&m, &germ, &[0.8, -1.4]).unwrap();
        assert!((r2.ric - 4.0 * r1.ric).abs() < 1e-10 * (1.0 + r2.ric.abs()));
        for i in 0..2 {
            assert!((r2.spray[i] - 4.0 * r1.spray[i]).abs() < 1e-12 * (1.0 + r2.spray[i].abs()));
            for a in 0..2 {
                assert!((r2.h[i][a] - r1.h[i][a]).abs() < 1e-12);
            }
        }
        let g1 = fundamental_tensor(&m, &germ, &u).unwrap();
        let g2 = fundamental_tensor(&m, &germ, &[0.8, -1.4]).unwrap();
        assert!((g1 - g2).abs().max() < 1e-12);
    }

    #[test]
    fn spray_matches_report() {
        let mut rng = sampling::rng(5);
        let m = random_randers(&mut rng, 3);
        let germ = random_germ(&mut rng, 2, 1);
        let u = [1.0, 0.5];
        let g = spray_at_origin(&m, &germ, &u).unwrap();
        let r = ricci_expanded(&m, &germ, &u).unwrap();
        for i in 0..2 {
            assert!((g[i] - r.spray[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn rik_trace_is_ric() {
        let mut rng = sampling::rng(9);
        for _ in 0..10 {
            let m = random_randers(&mut rng, 5);
            let germ = random_germ(&mut rng, 3, 2);
            let u = sampling::uniform_sphere(&mut rng, 3);
            let r = ricci_expanded(&m, &germ, &u).unwrap();
            assert!((r.rik_trace() - r.ric).abs() < 1e-11 * (1.0 + r.ric.abs()));
        }
    }

    #[test]
    fn zero_direction_is_singular() {
        let r = ricci_expanded(&NormModel::euclidean(3), &paraboloid(2), &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::SingularDirection(_))));
    }
}
