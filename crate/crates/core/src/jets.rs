//! Truncated multivariate Taylor jets of total order at most four.
//!
//! A [`Jet4`] stores the Taylor coefficients `c_m = ∂^m f / m!` of a scalar
//! function at an expansion point, for every multi-index `m` with `|m| <= 4`.
//! Arithmetic is exact truncation of the Cauchy product, so composing
//! elementary operations on jets of the coordinate functions yields the
//! exact fourth-order Taylor polynomial of the composite.
//!
//! Every jet also carries a *validity order*. Jets built from constants and
//! coordinates are valid to order four; differentiating once lowers the
//! validity by one, and binary operations take the minimum. Coefficients
//! above the validity order are kept at zero.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
/// Largest number of variables supported by the cached layouts.
pub const MAX_DIM: usize = 16;

/// Graded monomial layout for a fixed number of variables.
pub(crate) struct Layout {
    dim: usize,
    monomials: Vec<Vec<u8>>,
    degrees: Vec<u8>,
    degree_end: [usize; MAX_ORDER + 1],
    lookup: HashMap<Vec<u8>, usize>,
    mul: Vec<(u32, u32, u32)>,
    /// `shift[k][i]`: index of `monomials[i] + e_k`, if that has degree <= 4.
    shift: Vec<Vec<Option<u32>>>,
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut monomials = Vec::new();
        let mut degree_end = [0; MAX_ORDER + 1];
        for (d, end) in degree_end.iter_mut().enumerate() {
            let mut current = vec![0u8; dim];
            push_compositions(&mut monomials, &mut current, 0, d as u8);
            *end = monomials.len();
        }
        let degrees: Vec<u8> = monomials.iter().map(|m| m.iter().sum()).collect();
        let lookup: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let mut mul = Vec::new();
        for i in 0..monomials.len() {
            let room = MAX_ORDER - degrees[i] as usize;
            for j in 0..degree_end[room] {
                let sum: Vec<u8> = monomials[i]
                    .iter()
                    .zip(&monomials[j])
                    .map(|(a, b)| a + b)
                    .collect();
                mul.push((i as u32, j as u32, lookup[&sum] as u32));
            }
        }

        let shift = (0..dim)
            .map(|k| {
                monomials
                    .iter()
                    .map(|m| {
                        let mut up = m.clone();
                        up[k] += 1;
                        lookup.get(&up).map(|&i| i as u32)
                    })
                    .collect()
            })
            .collect();

        Layout {
            dim,
            monomials,
            degrees,
            degree_end,
            lookup,
            mul,
            shift,
        }
    }

    fn len(&self) -> usize {
        self.monomials.len()
    }

    fn index(&self, m: &[u8]) -> Option<usize> {
        self.lookup.get(m).copied()
    }
}

fn push_compositions(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, left: u8) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.len().checked_sub(1) {
            current[last] = left;
            out.push(current.clone());
            current[last] = 0;
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=left).rev() {
        current[pos] = k;
        push_compositions(out, current, pos + 1, left - k);
    }
    current[pos] = 0;
}

static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];

fn layout(dim: usize) -> &'static Layout {
    assert!(
        (1..=MAX_DIM).contains(&dim),
        "jet dimension {dim} outside 1..={MAX_DIM}"
    );
    LAYOUTS[dim].get_or_init(|| Layout::build(dim))
}

fn factorial(m: &[u8]) -> f64 {
    m.iter()
        .map(|&k| (1..=k as u32).product::<u32>() as f64)
        .product()
}

/// Fourth-order truncated Taylor jet of a scalar function of `dim` variables.
#[derive(Clone)]
pub struct Jet4 {
    layout: &'static Layout,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .layout
            .monomials
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| format!("{c}·{m:?}"))
            .collect();
        f.debug_struct("Jet4")
            .field("dim", &self.dim())
            .field("order", &self.order)
            .field("terms", &terms)
            .finish()
    }
}

impl PartialEq for Jet4 {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet4 {
    pub fn zero(dim: usize) -> Jet4 {
        let layout = layout(dim);
        Jet4 {
            layout,
            order: MAX_ORDER as u8,
            coeffs: vec![0.0; layout.len()],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Jet4 {
        let mut j = Jet4::zero(dim);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `y_k` expanded at `y_k = at`.
    pub fn variable(dim: usize, k: usize, at: f64) -> Jet4 {
        assert!(k < dim, "variable index {k} out of range for dim {dim}");
        let mut j = Jet4::constant(dim, at);
        let mut m = vec![0u8; dim];
        m[k] = 1;
        let i = j.layout.index(&m).expect("degree-one monomial");
        j.coeffs[i] = 1.0;
        j
    }

    /// Coordinate jets `y_k = base_k + δ_k` for every `k`.
    pub fn variables(base: &[f64]) -> Vec<Jet4> {
        (0..base.len())
            .map(|k| Jet4::variable(base.len(), k, base[k]))
            .collect()
    }

    /// Builds a jet from `(multi-index, Taylor coefficient)` terms.
    pub fn from_terms(dim: usize, terms: &[(&[u8], f64)]) -> Result<Jet4> {
        let mut j = Jet4::zero(dim);
        for (m, c) in terms {
            let i = j.checked_index(m)?;
            j.coeffs[i] += c;
        }
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Highest total degree whose coefficients are exact.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.layout.monomials
    }

    fn checked_index(&self, m: &[u8]) -> Result<usize> {
        if m.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.len(),
            });
        }
        let degree: usize = m.iter().map(|&k| k as usize).sum();
        if degree > self.order() {
            return Err(Error::OrderExceeded {
                requested: degree,
                available: self.order(),
            });
        }
        Ok(self.layout.index(m).expect("index of admissible degree"))
    }

    /// Taylor coefficient at multi-index `m`.
    pub fn coeff(&self, m: &[u8]) -> Result<f64> {
        Ok(self.coeffs[self.checked_index(m)?])
    }

    /// Partial derivative `∂^m f` at the expansion point, i.e. `m! · c_m`.
    pub fn derivative(&self, m: &[u8]) -> Result<f64> {
        Ok(factorial(m) * self.coeff(m)?)
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.first(k)).collect()
    }

    /// Hessian at the expansion point, row-major.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.second(a, b)).collect())
            .collect()
    }

    pub(crate) fn first(&self, k: usize) -> f64 {
        let mut m = vec![0u8; self.dim()];
        m[k] = 1;
        self.derivative(&m).expect("first derivative")
    }

    pub(crate) fn second(&self, a: usize, b: usize) -> f64 {
        let mut m = vec![0u8; self.dim()];
        m[a] += 1;
        m[b] += 1;
        self.derivative(&m).expect("second derivative")
    }

    /// Jet of the partial derivative `∂f/∂y_k`; validity drops by one.
    pub fn partial(&self, k: usize) -> Jet4 {
        assert!(k < self.dim());
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut out = vec![0.0; self.coeffs.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            if self.layout.degrees[i] > order {
                break;
            }
            if let Some(up) = self.layout.shift[k][i] {
                let mk = self.layout.monomials[i][k] as f64 + 1.0;
                *slot = mk * self.coeffs[up as usize];
            }
        }
        Jet4 {
            layout: self.layout,
            order,
            coeffs: out,
        }
    }

    /// Restriction to the first `n` variables (the remaining ones set to their
    /// expansion point).
    pub fn restrict(&self, n: usize) -> Jet4 {
        assert!(n >= 1 && n <= self.dim());
        let target = layout(n);
        let mut coeffs = vec![0.0; target.len()];
        let mut full = vec![0u8; self.dim()];
        for (i, m) in target.monomials.iter().enumerate() {
            full[..n].copy_from_slice(m);
            coeffs[i] = self.coeffs[self.layout.index(&full).expect("restricted index")];
        }
        Jet4 {
            layout: target,
            order: self.order,
            coeffs,
        }
    }

    /// Evaluates the Taylor polynomial at offset `delta` from the expansion point.
    pub fn eval_offset(&self, delta: &[f64]) -> f64 {
        assert_eq!(delta.len(), self.dim());
        self.layout
            .monomials
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| {
                c * m
                    .iter()
                    .zip(delta)
                    .map(|(&k, d)| d.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Jet4 {
        Jet4 {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn check_same(&self, other: &Jet4) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "jet dimension mismatch in arithmetic"
        );
    }

    fn clear_above_order(&mut self) {
        let end = self.layout.degree_end[self.order as usize];
        for c in &mut self.coeffs[end..] {
            *c = 0.0;
        }
    }

    fn zip_with(&self, other: &Jet4, f: impl Fn(f64, f64) -> f64) -> Jet4 {
        self.check_same(other);
        let mut out = Jet4 {
            layout: self.layout,
            order: self.order.min(other.order),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        };
        out.clear_above_order();
        out
    }

    fn product(&self, other: &Jet4) -> Jet4 {
        self.check_same(other);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.mul {
            let a = self.coeffs[i as usize];
            if a != 0.0 {
                coeffs[k as usize] += a * other.coeffs[j as usize];
            }
        }
        let mut out = Jet4 {
            layout: self.layout,
            order: self.order.min(other.order),
            coeffs,
        };
        out.clear_above_order();
        out
    }

    /// `φ(self)` for a univariate `φ` given by its derivatives
    /// `[φ(a₀), φ'(a₀), …, φ''''(a₀)]` at the constant term `a₀`.
    pub fn compose_univariate(&self, derivs: [f64; MAX_ORDER + 1]) -> Jet4 {
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let taylor = [
            derivs[0],
            derivs[1],
            derivs[2] / 2.0,
            derivs[3] / 6.0,
            derivs[4] / 24.0,
        ];
        let mut acc = Jet4::constant(self.dim(), taylor[MAX_ORDER]);
        acc.order = self.order;
        for c in taylor[..MAX_ORDER].iter().rev() {
            acc = acc.product(&nil);
            acc.coeffs[0] += c;
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet4> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::DivisionByZeroJet);
        }
        let r = 1.0 / a;
        Ok(self.compose_univariate([
            r,
            -r * r,
            2.0 * r.powi(3),
            -6.0 * r.powi(4),
            24.0 * r.powi(5),
        ]))
    }

    pub fn checked_div(&self, other: &Jet4) -> Result<Jet4> {
        Ok(self.product(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet4> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::NegativeSqrtJet(a));
        }
        let s = a.sqrt();
        Ok(self.compose_univariate([
            s,
            0.5 / s,
            -0.25 / (a * s),
            0.375 / (a * a * s),
            -0.9375 / (a * a * a * s),
        ]))
    }

    pub fn powi(&self, n: i32) -> Result<Jet4> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet4::constant(self.dim(), 1.0);
        acc.order = self.order;
        for _ in 0..n {
            acc = acc.product(self);
        }
        Ok(acc)
    }
}

macro_rules! jet_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Jet4> for &Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &Jet4) -> Jet4 {
                let f: fn(&Jet4, &Jet4) -> Jet4 = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: Jet4) -> Jet4 {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &Jet4) -> Jet4 {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet4> for &Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: Jet4) -> Jet4 {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));

impl AddAssign<&Jet4> for Jet4 {
    fn add_assign(&mut self, rhs: &Jet4) {
        self.check_same(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        self.order = self.order.min(rhs.order);
        self.clear_above_order();
    }
}

impl Mul<f64> for Jet4 {
    type Output = Jet4;
    fn mul(self, rhs: f64) -> Jet4 {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Jet4 {
    type Output = Jet4;
    fn mul(self, rhs: f64) -> Jet4 {
        self.scale(rhs)
    }
}

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

impl Neg for &Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

/// Number type that norm formulas are evaluated over: plain `f64` for point
/// values, [`Jet4`] for Taylor expansions.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
{
    /// A constant in the same space as `self`.
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn checked_div(&self, rhs: &Self) -> Result<Self>;
    fn checked_sqrt(&self) -> Result<Self>;
    fn checked_powi(&self, n: i32) -> Result<Self>;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> f64 {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn checked_div(&self, rhs: &f64) -> Result<f64> {
        if *rhs == 0.0 {
            return Err(Error::DivisionByZeroJet);
        }
        Ok(self / rhs)
    }

    fn checked_sqrt(&self) -> Result<f64> {
        // sqrt(0) is fine for a value but has no Taylor expansion; keep the
        // two number types consistent.
        if *self <= 0.0 {
            return Err(Error::NegativeSqrtJet(*self));
        }
        Ok(self.sqrt())
    }

    fn checked_powi(&self, n: i32) -> Result<f64> {
        if n < 0 && *self == 0.0 {
            return Err(Error::DivisionByZeroJet);
        }
        Ok(self.powi(n))
    }
}

impl Scalar for Jet4 {
    fn lift(&self, c: f64) -> Jet4 {
        Jet4::constant(self.dim(), c)
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn checked_div(&self, rhs: &Jet4) -> Result<Jet4> {
        Jet4::checked_div(self, rhs)
    }

    fn checked_sqrt(&self) -> Result<Jet4> {
        self.sqrt()
    }

    fn checked_powi(&self, n: i32) -> Result<Jet4> {
        self.powi(n)
    }
}
