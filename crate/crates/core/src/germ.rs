//! Submanifold germs in graph form `y^α = f^α(x)` with `f(0) = df(0) = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Jet4;

/// Asymmetry above this is reported when symmetrizing input jets.
pub const SYMMETRY_WARN_TOL: f64 = 1e-10;

/// Second and third jets of a graph germ; `d2[α][i][j] = f^α_ij`,
/// `d3[α][i][j][k] = f^α_ijk`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Germ {
    pub n: usize,
    pub p: usize,
    pub d2: Vec<Vec<Vec<f64>>>,
    pub d3: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(skip)]
    asymmetry: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GermSpec {
    n: usize,
    p: usize,
    d2: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    d3: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

impl<'de> Deserialize<'de> for Germ {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = GermSpec::deserialize(d)?;
        let d3 = s
            .d3
            .unwrap_or_else(|| vec![vec![vec![vec![0.0; s.n]; s.n]; s.n]; s.p]);
        Germ::new(s.n, s.p, s.d2, d3).map_err(serde::de::Error::custom)
    }
}

fn check_shape(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what}: expected length {expected}, got {got}"
        )))
    }
}

impl Germ {
    /// Builds a germ, averaging `d2` and `d3` over index permutations.
    pub fn new(
        n: usize,
        p: usize,
        mut d2: Vec<Vec<Vec<f64>>>,
        mut d3: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Germ> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("n and p must be positive".into()));
        }
        check_shape("d2", d2.len(), p)?;
        check_shape("d3", d3.len(), p)?;
        for a in 0..p {
            check_shape("d2 rows", d2[a].len(), n)?;
            check_shape("d3 rows", d3[a].len(), n)?;
            for i in 0..n {
                check_shape("d2 columns", d2[a][i].len(), n)?;
                check_shape("d3 slices", d3[a][i].len(), n)?;
                for j in 0..n {
                    check_shape("d3 fibres", d3[a][i][j].len(), n)?;
                }
            }
        }
        let mut asymmetry = 0.0f64;
        for a in 0..p {
            for i in 0..n {
                for j in i..n {
                    let m = 0.5 * (d2[a][i][j] + d2[a][j][i]);
                    asymmetry = asymmetry.max((d2[a][i][j] - m).abs());
                    d2[a][i][j] = m;
                    d2[a][j][i] = m;
                }
            }
            let src = d3[a].clone();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let m = (src[i][j][k]
                            + src[i][k][j]
                            + src[j][i][k]
                            + src[j][k][i]
                            + src[k][i][j]
                            + src[k][j][i])
                            / 6.0;
                        asymmetry = asymmetry.max((src[i][j][k] - m).abs());
                        d3[a][i][j][k] = m;
                    }
                }
            }
        }
        if d2.iter().flatten().flatten().any(|v| !v.is_finite())
            || d3.iter().flatten().flatten().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("germ jets must be finite".into()));
        }
        Ok(Germ {
            n,
            p,
            d2,
            d3,
            asymmetry,
        })
    }

    /// The germ with all jets zero.
    pub fn flat(n: usize, p: usize) -> Germ {
        Germ::new(
            n,
            p,
            vec![vec![vec![0.0; n]; n]; p],
            vec![vec![vec![vec![0.0; n]; n]; n]; p],
        )
        .expect("flat germ")
    }

    /// A germ with the given second jets and vanishing third jets.
    pub fn quadratic(d2: Vec<Vec<Vec<f64>>>) -> Result<Germ> {
        let p = d2.len();
        let n = d2.first().map_or(0, |m| m.len());
        Germ::new(n, p, d2, vec![vec![vec![vec![0.0; n]; n]; n]; p])
    }

    /// Largest deviation from symmetry removed at construction.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.asymmetry > SYMMETRY_WARN_TOL {
            vec![format!(
                "input jets were symmetrized (max asymmetry {:.3e})",
                self.asymmetry
            )]
        } else {
            Vec::new()
        }
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    pub fn d2_matrix(&self, a: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.d2[a][i][j])
    }

    /// `κ^α(u) = f^α_kl u^k u^l`.
    pub fn kappa(&self, u: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|a| {
                let mut s = 0.0;
                for k in 0..self.n {
                    for l in 0..self.n {
                        s += self.d2[a][k][l] * u[k] * u[l];
                    }
                }
                s
            })
            .collect()
    }

    /// `f^α_jl u^l`, indexed `[α][j]`.
    pub fn d2_u(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|a| {
                (0..self.n)
                    .map(|j| (0..self.n).map(|l| self.d2[a][j][l] * u[l]).sum())
                    .collect()
            })
            .collect()
    }

    /// `f^α_jlr u^j u^l u^r`.
    pub fn cubic(&self, u: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|a| {
                let mut s = 0.0;
                for j in 0..self.n {
                    for l in 0..self.n {
                        for r in 0..self.n {
                            s += self.d3[a][j][l][r] * u[j] * u[l] * u[r];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `f^α_jl(x) u^l` for the cubic Taylor polynomial, as jets over `x`.
    pub fn d2_u_at(&self, x: &[Jet4], u: &[Jet4], a: usize, j: usize) -> Jet4 {
        let dim = x[0].dim();
        let mut acc = Jet4::zero(dim);
        for l in 0..self.n {
            let mut coef = Jet4::constant(dim, self.d2[a][j][l]);
            for (m, xm) in x.iter().enumerate() {
                let c = self.d3[a][j][l][m];
                if c != 0.0 {
                    coef += &(xm * c);
                }
            }
            acc += &(&coef * &u[l]);
        }
        acc
    }

    /// `f^α(x)` for the cubic Taylor polynomial, over jets.
    pub fn eval_jet(&self, x: &[Jet4], a: usize) -> Jet4 {
        let dim = x[0].dim();
        let mut acc = Jet4::zero(dim);
        for i in 0..self.n {
            for j in 0..self.n {
                let xij = &x[i] * &x[j];
                if self.d2[a][i][j] != 0.0 {
                    acc += &(&xij * (0.5 * self.d2[a][i][j]));
                }
                for k in 0..self.n {
                    let c = self.d3[a][i][j][k];
                    if c != 0.0 {
                        acc += &(&(&xij * &x[k]) * (c / 6.0));
                    }
                }
            }
        }
        acc
    }
}

/// Cartesian chart of the ambient space: a point with coordinates `z` is
/// `origin + basis · z`; the first `n` columns span the tangent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientFrame {
    pub origin: Vec<f64>,
    /// Row-major.
    pub basis: Vec<Vec<f64>>,
}

impl AmbientFrame {
    pub fn standard(dim: usize) -> AmbientFrame {
        AmbientFrame {
            origin: vec![0.0; dim],
            basis: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.origin.len();
        DMatrix::from_fn(d, d, |i, j| self.basis[i][j])
    }

    fn from_matrix(origin: Vec<f64>, m: &DMatrix<f64>) -> AmbientFrame {
        AmbientFrame {
            origin,
            basis: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

fn check_frame(m: &DMatrix<f64>) -> Result<()> {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(min > 1e-12 * max) || !max.is_finite() {
        return Err(Error::NonInvertibleFrame);
    }
    Ok(())
}

/// Removes the gradient `raw_d1` (`p × n`) by the substitution
/// `ỹ^α = y^α − d1^α_i x^i`. Higher jets are unchanged; the frame absorbs
/// the shear.
pub fn adapt_germ(
    raw_d1: &[Vec<f64>],
    raw_d2: Vec<Vec<Vec<f64>>>,
    raw_d3: Vec<Vec<Vec<Vec<f64>>>>,
    frame: &AmbientFrame,
) -> Result<(Germ, AmbientFrame)> {
    let p = raw_d2.len();
    let n = raw_d2.first().map_or(0, |m| m.len());
    let germ = Germ::new(n, p, raw_d2, raw_d3)?;
    check_shape("d1", raw_d1.len(), p)?;
    for row in raw_d1 {
        check_shape("d1 row", row.len(), n)?;
    }
    let d = n + p;
    check_shape("frame origin", frame.origin.len(), d)?;
    check_shape("frame basis", frame.basis.len(), d)?;
    for row in &frame.basis {
        check_shape("frame basis row", row.len(), d)?;
    }
    let basis = frame.matrix();
    check_frame(&basis)?;
    let mut shear = DMatrix::identity(d, d);
    for a in 0..p {
        for i in 0..n {
            shear[(n + a, i)] = raw_d1[a][i];
        }
    }
    let composed = basis * shear;
    Ok((germ, AmbientFrame::from_matrix(frame.origin.clone(), &composed)))
}

/// Re-expresses the germ after the ambient linear change `z ↦ L z` and
/// re-adapts it. The tangent block `L[..n, ..n]` restricted to the tangent
/// space must be invertible.
pub fn apply_linear_map(germ: &Germ, l: &DMatrix<f64>) -> Result<(Germ, AmbientFrame)> {
    let (n, p) = (germ.n, germ.p);
    let d = n + p;
    if l.nrows() != d || l.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: l.nrows(),
        });
    }
    check_frame(l)?;
    let l11 = l.view((0, 0), (n, n)).into_owned();
    check_frame(&l11)?;
    let l11_inv = l11.try_inverse().ok_or(Error::NonInvertibleFrame)?;

    // Series reversion of x' = L11 x + L12 f(x): two fixed-point passes
    // reach order three since f is quadratic at leading order.
    let xp = Jet4::variables(&vec![0.0; n]);
    let lin = |v: &[Jet4]| -> Vec<Jet4> {
        (0..n)
            .map(|i| {
                let mut acc = Jet4::zero(n);
                for (j, vj) in v.iter().enumerate() {
                    if l11_inv[(i, j)] != 0.0 {
                        acc += &(vj * l11_inv[(i, j)]);
                    }
                }
                acc
            })
            .collect()
    };
    let mut x = lin(&xp);
    for _ in 0..2 {
        let fx: Vec<Jet4> = (0..p).map(|a| germ.eval_jet(&x, a)).collect();
        let rhs: Vec<Jet4> = (0..n)
            .map(|i| {
                let mut acc = xp[i].clone();
                for (a, fa) in fx.iter().enumerate() {
                    acc = acc - fa * l[(i, n + a)];
                }
                acc
            })
            .collect();
        x = lin(&rhs);
    }
    let fx: Vec<Jet4> = (0..p).map(|a| germ.eval_jet(&x, a)).collect();
    let mut d1 = vec![vec![0.0; n]; p];
    let mut d2 = vec![vec![vec![0.0; n]; n]; p];
    let mut d3 = vec![vec![vec![vec![0.0; n]; n]; n]; p];
    for a in 0..p {
        let mut y = Jet4::zero(n);
        for (i, xi) in x.iter().enumerate() {
            y += &(xi * l[(n + a, i)]);
        }
        for (b, fb) in fx.iter().enumerate() {
            y += &(fb * l[(n + a, n + b)]);
        }
        let mut m = vec![0u8; n];
        for i in 0..n {
            m[i] += 1;
            d1[a][i] = y.derivative(&m)?;
            for j in 0..n {
                m[j] += 1;
                d2[a][i][j] = y.derivative(&m)?;
                for k in 0..n {
                    m[k] += 1;
                    d3[a][i][j][k] = y.derivative(&m)?;
                    m[k] -= 1;
                }
                m[j] -= 1;
            }
            m[i] -= 1;
        }
    }
    let inv = l.clone().try_inverse().ok_or(Error::NonInvertibleFrame)?;
    let frame = AmbientFrame::from_matrix(vec![0.0; d], &inv);
    adapt_germ(&d1, d2, d3, &frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_warns() {
        let g = Germ::new(
            2,
            1,
            vec![vec![vec![1.0, 0.5], vec![0.3, 2.0]]],
            vec![vec![vec![vec![0.0; 2]; 2]; 2]],
        )
        .unwrap();
        assert_eq!(g.d2[0][0][1], 0.4);
        assert_eq!(g.d2[0][1][0], 0.4);
        assert_eq!(g.warnings().len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let g = Germ::quadratic(vec![vec![vec![1.0, 0.0], vec![0.0, -1.0]]]).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: Germ = serde_json::from_str(&text).unwrap();
        assert_eq!(g, back);
        let short: Germ = serde_json::from_str(r#"{"n":1,"p":1,"d2":[[[2.0]]]}"#).unwrap();
        assert_eq!(short.d3[0][0][0][0], 0.0);
    }

    #[test]
    fn rejects_bad_shape() {
        let r = Germ::new(2, 1, vec![vec![vec![1.0]]], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn adapt_with_zero_gradient_is_identity() {
        let frame = AmbientFrame::standard(3);
        let d2 = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]];
        let d3 = vec![vec![vec![vec![0.0; 2]; 2]; 2]];
        let (g, f) = adapt_germ(&[vec![0.0, 0.0]], d2.clone(), d3, &frame).unwrap();
        assert_eq!(g.d2, d2);
        assert_eq!(f, frame);
        let (again, f2) = adapt_germ(&[vec![0.0, 0.0]], g.d2.clone(), g.d3.clone(), &f).unwrap();
        assert_eq!(again, g);
        assert_eq!(f2, f);
    }

    #[test]
    fn adapt_line_plus_parabola() {
        // f(x) = x + x²
        let (g, f) = adapt_germ(
            &[vec![1.0]],
            vec![vec![vec![2.0]]],
            vec![vec![vec![vec![0.0]]]],
            &AmbientFrame::standard(2),
        )
        .unwrap();
        assert_eq!(g.d2[0][0][0], 2.0);
        assert_eq!(f.basis, vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn singular_frame_is_rejected() {
        let frame = AmbientFrame {
            origin: vec![0.0; 2],
            basis: vec![vec![1.0, 2.0], vec![2.0, 4.0]],
        };
        let r = adapt_germ(&[vec![0.0]], vec![vec![vec![1.0]]], vec![vec![vec![vec![0.0]]]], &frame);
        assert!(matches!(r, Err(Error::NonInvertibleFrame)));
    }

    #[test]
    fn linear_map_of_paraboloid() {
        // Shear x ↦ x + y e₁ keeps the graph of ½|x|² a graph with the same
        // second jet; the third jet picks up the shear.
        let germ = Germ::quadratic(vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]]).unwrap();
        let mut l = DMatrix::identity(3, 3);
        l[(0, 2)] = 1.0;
        let (g, _) = apply_linear_map(&germ, &l).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.d2[0][i][j] - germ.d2[0][i][j]).abs() < 1e-12);
            }
        }
        // x₁' = x₁ + ½|x|², so y = ½|x|² gains −3 x₁ (...) terms: f_111 = −3.
        assert!((g.d3[0][0][0][0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_map_rescales_jets() {
        let germ = Germ::quadratic(vec![vec![vec![2.0]]]).unwrap();
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let (g, _) = apply_linear_map(&germ, &l).unwrap();
        // y' = 3·(x'/2)², so f'' = 2·3/4.
        assert!((g.d2[0][0][0] - 1.5).abs() < 1e-14);
    }
}
