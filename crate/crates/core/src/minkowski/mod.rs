//! Minkowski norms, represented through `H = F²/2`.
//!
//! Every norm is evaluated by one generic formula over [`Scalar`], so the
//! same code produces point values (`f64`) and fourth-order jets ([`Jet4`]).

mod expr;
mod validate;

pub use expr::{parse_norm, Expr, ExprTree};
pub use validate::{validate_norm, ValidationOptions, ValidationReport, EULER_TOL};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{Jet4, Scalar};

/// Directions closer than this (in squared sine of the angle) to an excluded
/// ray are rejected.
pub const EXCLUDED_RAY_TOL: f64 = 1e-12;

/// Parameters of the three-dimensional example norm
/// `H = A r² + ε₁ z r sin 3θ + z² (B + ε₂ cos 6θ)` in cylindrical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example4 {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Example4 {
    /// The Cartesian form, written out as expression text.
    pub fn expression_text(&self) -> String {
        let Example4 { a, b, eps1, eps2 } = *self;
        format!(
            "{a}*(y1^2 + y2^2) + {eps1}*y3*(3*y2*y1^2 - y2^3)/(y1^2 + y2^2) \
             + y3^2*({b} + {eps2}*(y1^6 - 15*y1^4*y2^2 + 15*y1^2*y2^4 - y2^6)/(y1^2 + y2^2)^3)"
        )
    }

    fn eval<T: Scalar>(&self, y: &[T]) -> Result<T> {
        let (y1, y2, y3) = (&y[0], &y[1], &y[2]);
        let s1 = y1.clone() * y1.clone();
        let s2 = y2.clone() * y2.clone();
        let r2 = s1.clone() + s2.clone();
        let cubic = (y2.clone() * s1.clone() * 3.0 - y2.clone() * s2.clone()).checked_div(&r2)?;
        let sextic = s1.checked_powi(3)? - s1.checked_powi(2)? * s2.clone() * 15.0
            + s1.clone() * s2.checked_powi(2)? * 15.0
            - s2.checked_powi(3)?;
        let angular = sextic.checked_div(&r2.checked_powi(3)?)?;
        let z2 = y3.clone() * y3.clone();
        Ok(r2 * self.a
            + y3.clone() * cubic * self.eps1
            + z2 * (angular * self.eps2 + y[0].lift(self.b)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormSource {
    Euclidean,
    /// `F(y) = sqrt(yᵀ a y) + b·y`.
    Randers {
        a: DMatrix<f64>,
        b: DVector<f64>,
    },
    Example4(Example4),
    /// A user expression for `H` itself.
    Expression(ExprTree),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormModel {
    dim: usize,
    source: NormSource,
}

impl NormModel {
    pub fn euclidean(dim: usize) -> NormModel {
        assert!(dim >= 1);
        NormModel {
            dim,
            source: NormSource::Euclidean,
        }
    }

    /// Randers norm; `a` must be symmetric positive definite and `b` must have
    /// dual length `sqrt(bᵀ a⁻¹ b) < 1`.
    pub fn randers(a: DMatrix<f64>, b: DVector<f64>) -> Result<NormModel> {
        let dim = a.nrows();
        if a.ncols() != dim || b.len() != dim || dim == 0 {
            return Err(Error::InvalidInput(
                "randers: `a` must be square and match the length of `b`".into(),
            ));
        }
        if (&a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) {
            return Err(Error::InvalidInput("randers: `a` is not symmetric".into()));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("randers: `a` is not positive definite".into()))?;
        let dual = b.dot(&chol.solve(&b)).sqrt();
        if dual >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "randers: drift has dual length {dual} >= 1"
            )));
        }
        Ok(NormModel {
            dim,
            source: NormSource::Randers { a, b },
        })
    }

    pub fn example4(params: Example4) -> Result<NormModel> {
        let Example4 { a, b, eps1, eps2 } = params;
        if [a, b, eps1, eps2].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(
                "example4: A, B, eps1, eps2 must be positive".into(),
            ));
        }
        Ok(NormModel {
            dim: 3,
            source: NormSource::Example4(params),
        })
    }

    pub fn expression(text: &str, dim: usize) -> Result<NormModel> {
        Ok(NormModel {
            dim,
            source: NormSource::Expression(parse_norm(text, dim)?),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &NormSource {
        &self.source
    }

    /// Coordinate axis along which the norm is undefined, if any.
    pub fn excluded_axis(&self) -> Option<usize> {
        match self.source {
            NormSource::Example4(_) => Some(2),
            _ => None,
        }
    }

    /// True for the origin and for directions on an excluded ray.
    pub fn is_excluded(&self, y: &[f64]) -> bool {
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        if norm2 == 0.0 || !norm2.is_finite() {
            return true;
        }
        match self.excluded_axis() {
            Some(axis) => {
                let off: f64 = y
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != axis)
                    .map(|(_, v)| v * v)
                    .sum();
                off < EXCLUDED_RAY_TOL * norm2
            }
            None => false,
        }
    }

    /// `H(y)` over any scalar type.
    pub fn eval<T: Scalar>(&self, y: &[T]) -> Result<T> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        match &self.source {
            NormSource::Euclidean => {
                let mut acc = y[0].clone() * y[0].clone();
                for v in &y[1..] {
                    acc = acc + v.clone() * v.clone();
                }
                Ok(acc * 0.5)
            }
            NormSource::Randers { a, b } => {
                let mut quad = y[0].lift(0.0);
                let mut drift = y[0].lift(0.0);
                for i in 0..self.dim {
                    drift = drift + y[i].clone() * b[i];
                    for j in 0..self.dim {
                        if a[(i, j)] != 0.0 {
                            quad = quad + y[i].clone() * y[j].clone() * a[(i, j)];
                        }
                    }
                }
                let f = quad.checked_sqrt()? + drift;
                Ok(f.clone() * f * 0.5)
            }
            NormSource::Example4(p) => p.eval(y),
            NormSource::Expression(tree) => tree.eval(y),
        }
    }

    pub fn h(&self, y: &[f64]) -> Result<f64> {
        if self.is_excluded(y) {
            return Err(Error::SingularDirection(y.to_vec()));
        }
        self.eval(y)
            .map_err(|e| singular_unless_dimension(e, y))
    }

    /// The Minkowski norm `F = sqrt(2H)`.
    pub fn norm(&self, y: &[f64]) -> Result<f64> {
        Ok((2.0 * self.h(y)?).max(0.0).sqrt())
    }

    /// Fourth-order jet of `H` centred at `base`.
    pub fn jet(&self, base: &[f64]) -> Result<Jet4> {
        if base.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: base.len(),
            });
        }
        if self.is_excluded(base) {
            return Err(Error::SingularDirection(base.to_vec()));
        }
        self.eval(&Jet4::variables(base))
            .map_err(|e| singular_unless_dimension(e, base))
    }

    pub fn spec(&self) -> NormSpec {
        match &self.source {
            NormSource::Euclidean => NormSpec::Euclidean { dim: self.dim },
            NormSource::Randers { a, b } => NormSpec::Randers {
                a: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
                b: b.iter().copied().collect(),
            },
            NormSource::Example4(p) => NormSpec::Example4(*p),
            NormSource::Expression(t) => NormSpec::Expression {
                dim: self.dim,
                expr: t.to_string(),
            },
        }
    }
}

fn singular_unless_dimension(e: Error, y: &[f64]) -> Error {
    match e {
        Error::DimensionMismatch { .. } => e,
        _ => Error::SingularDirection(y.to_vec()),
    }
}

/// Norm description as it appears in JSON configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NormSpec {
    Euclidean { dim: usize },
    Randers { a: Vec<Vec<f64>>, b: Vec<f64> },
    Example4(Example4),
    Expression { dim: usize, expr: String },
}

impl NormSpec {
    pub fn build(&self) -> Result<NormModel> {
        match self {
            NormSpec::Euclidean { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("euclidean: dim must be positive".into()));
                }
                Ok(NormModel::euclidean(*dim))
            }
            NormSpec::Randers { a, b } => {
                let n = b.len();
                if a.len() != n || a.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput(format!(
                        "randers: `a` must be {n}x{n}"
                    )));
                }
                let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                NormModel::randers(a, DVector::from_column_slice(b))
            }
            NormSpec::Example4(p) => NormModel::example4(*p),
            NormSpec::Expression { dim, expr } => NormModel::expression(expr, *dim),
        }
    }
}
