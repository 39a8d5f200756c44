//! Ricci curvature straight from the spray, without the expanded formula.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_direction, jet_inverse, spd_inverse};
use crate::error::{Error, Result};
use crate::finite_diff;
use crate::germ::Germ;
use crate::jets::Jet4;
use crate::minkowski::NormModel;

/// Base finite-difference step in both `x` and `u`.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleScheme {
    /// Jets in `(x, u)` of `S² = 2H(u, Df(x)u)`, with the spray from its
    /// variational definition.
    Jet,
    /// The explicit graph spray evaluated pointwise and differentiated by
    /// central differences.
    FiniteDifference,
}

/// `Ric(u)` as the trace of
/// `R^i_k = 2∂G^i/∂x^k − u^j ∂²G^i/∂x^j∂u^k + 2G^j ∂²G^i/∂u^j∂u^k − ∂G^i/∂u^j ∂G^j/∂u^k`
/// at `x = 0`.
pub fn ricci_oracle(norm: &NormModel, germ: &Germ, u: &[f64], scheme: OracleScheme) -> Result<f64> {
    check_direction(norm, germ, u)?;
    match scheme {
        OracleScheme::Jet => jet_oracle(norm, germ, u),
        OracleScheme::FiniteDifference => fd_oracle(norm, germ, u),
    }
}

fn singular(e: Error, at: &[f64]) -> Error {
    match e {
        Error::DimensionMismatch { .. } | Error::NonPDTensor { .. } => e,
        _ => Error::SingularDirection(at.to_vec()),
    }
}

/// Ambient point `(u, Df(x) u)` as jets over `(x, u)`.
fn lifted_jets(germ: &Germ, u0: &[f64]) -> Vec<Jet4> {
    let n = germ.n;
    let mut base = vec![0.0; 2 * n];
    base[n..].copy_from_slice(u0);
    let vars = Jet4::variables(&base);
    let (x, u) = vars.split_at(n);
    let mut y: Vec<Jet4> = u.to_vec();
    for a in 0..germ.p {
        let mut acc = Jet4::zero(2 * n);
        for j in 0..n {
            // ∂_j f^α(x) = f_jk x^k + ½ f_jkl x^k x^l
            let mut dj = Jet4::zero(2 * n);
            for k in 0..n {
                if germ.d2[a][j][k] != 0.0 {
                    dj += &(&x[k] * germ.d2[a][j][k]);
                }
                for l in 0..n {
                    let c = germ.d3[a][j][k][l];
                    if c != 0.0 {
                        dj += &(&(&x[k] * &x[l]) * (0.5 * c));
                    }
                }
            }
            acc += &(&dj * &u[j]);
        }
        y.push(acc);
    }
    y
}

fn jet_oracle(norm: &NormModel, germ: &Germ, u0: &[f64]) -> Result<f64> {
    let n = germ.n;
    let y = lifted_jets(germ, u0);
    let at: Vec<f64> = y.iter().map(Jet4::value).collect();
    let s2 = norm.eval(&y).map_err(|e| singular(e, &at))? * 2.0;
    let du: Vec<Jet4> = (0..n).map(|j| s2.partial(n + j)).collect();
    let g: Vec<Vec<Jet4>> = (0..n)
        .map(|i| (0..n).map(|j| du[i].partial(n + j) * 0.5).collect())
        .collect();
    let g0 = DMatrix::from_fn(n, n, |i, j| g[i][j].value());
    let ginv = jet_inverse(&g, &spd_inverse(&g0)?);
    let uvars: Vec<Jet4> = (0..n).map(|k| Jet4::variable(2 * n, n + k, u0[k])).collect();
    // t_j = u^k ∂x_k ∂u_j S² − ∂x_j S²
    let t: Vec<Jet4> = (0..n)
        .map(|j| {
            let mut acc = -s2.partial(j);
            for k in 0..n {
                acc += &(&uvars[k] * &du[j].partial(k));
            }
            acc
        })
        .collect();
    let spray: Vec<Jet4> = (0..n)
        .map(|i| {
            let mut acc = Jet4::zero(2 * n);
            for j in 0..n {
                acc += &(&ginv[i][j] * &t[j]);
            }
            acc * 0.25
        })
        .collect();
    let mut ric = 0.0;
    for i in 0..n {
        let gi = &spray[i];
        let mut r = 2.0 * gi.first(i);
        for j in 0..n {
            r -= u0[j] * gi.second(j, n + i);
            r += 2.0 * spray[j].value() * gi.second(n + j, n + i);
            r -= gi.first(n + j) * spray[j].first(n + i);
        }
        ric += r;
    }
    Ok(ric)
}

/// `G^i(x, u) = ½ g^{ij} f^α_kl u^k u^l (H_jα + H_αβ f^β_j)` with every
/// derivative of `H` taken at `(u, Df(x) u)`.
fn graph_spray(norm: &NormModel, germ: &Germ, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (germ.n, germ.p);
    let mut df = vec![vec![0.0; n]; p];
    let mut ddf = vec![vec![vec![0.0; n]; n]; p];
    for a in 0..p {
        for j in 0..n {
            for k in 0..n {
                let mut second = germ.d2[a][j][k];
                for l in 0..n {
                    second += germ.d3[a][j][k][l] * x[l];
                    df[a][j] += 0.5 * germ.d3[a][j][k][l] * x[k] * x[l];
                }
                df[a][j] += germ.d2[a][j][k] * x[k];
                ddf[a][j][k] = second;
            }
        }
    }
    let mut y = u.to_vec();
    for a in 0..p {
        y.push((0..n).map(|j| df[a][j] * u[j]).sum());
    }
    let jet = norm.jet(&y)?;
    let hh = |a: usize, b: usize| jet.second(a, b);
    // Tangent vectors ∂_i + f^α_i ∂_α and the induced metric g_ij.
    let e = |i: usize, c: usize| -> f64 {
        if c < n {
            (c == i) as u8 as f64
        } else {
            df[c - n][i]
        }
    };
    let d = n + p;
    let g = DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for c in 0..d {
            for c2 in 0..d {
                let w = e(i, c) * e(j, c2);
                if w != 0.0 {
                    s += w * hh(c, c2);
                }
            }
        }
        s
    });
    let ginv = spd_inverse(&g)?;
    let kappa: Vec<f64> = (0..p)
        .map(|a| {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    s += ddf[a][k][l] * u[k] * u[l];
                }
            }
            s
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for a in 0..p {
                let mut coupling = hh(j, n + a);
                for b in 0..p {
                    coupling += hh(n + a, n + b) * df[b][j];
                }
                s += kappa[a] * coupling;
            }
            s
        })
        .collect();
    Ok((0..n)
        .map(|i| 0.5 * (0..n).map(|j| ginv[(i, j)] * w[j]).sum::<f64>())
        .collect())
}

fn fd_oracle(norm: &NormModel, germ: &Germ, u0: &[f64]) -> Result<f64> {
    let n = germ.n;
    let unorm = u0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hx = FD_STEP;
    let hu = FD_STEP * (1.0 + unorm);
    for v in u0 {
        if v + 0.5 * hu == *v {
            return Err(Error::StepUnderflow(hu));
        }
    }
    let mut z0 = vec![0.0; 2 * n];
    z0[n..].copy_from_slice(u0);
    // Rescale u so that one step size serves both halves of z.
    let ratio = hu / hx;
    let f = |z: &[f64]| -> Result<Vec<f64>> {
        let u: Vec<f64> = (0..n).map(|k| u0[k] + (z[n + k] - u0[k]) * ratio).collect();
        graph_spray(norm, germ, &z[..n], &u)
    };
    let deriv = |m: &[u8]| finite_diff::richardson_vec(&f, &z0, m, hx);
    let index = |a: usize, b: Option<usize>| {
        let mut m = vec![0u8; 2 * n];
        m[a] += 1;
        if let Some(b) = b {
            m[b] += 1;
        }
        m
    };
    let chain = |m: &[u8]| ratio.powi(m[n..].iter().map(|&k| k as i32).sum::<i32>());
    let g0 = graph_spray(norm, germ, &vec![0.0; n], u0)?;
    let mut dx = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    for k in 0..n {
        dx.push(deriv(&index(k, None))?);
        let m = index(n + k, None);
        du.push(deriv(&m)?.into_iter().map(|v| v / chain(&m)).collect::<Vec<_>>());
    }
    let mut ric = 0.0;
    for i in 0..n {
        ric += 2.0 * dx[i][i];
        for j in 0..n {
            let m = index(j, Some(n + i));
            ric -= u0[j] * deriv(&m)?[i] / chain(&m);
            let m = index(n + j, Some(n + i));
            ric += 2.0 * g0[j] * deriv(&m)?[i] / chain(&m);
            ric -= du[j][i] * du[i][j];
        }
    }
    Ok(ric)
}
