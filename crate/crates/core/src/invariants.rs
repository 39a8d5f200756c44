//! Relative nullity, point type and auditors for the local curvature
//! propositions on hypersurfaces, codimension-two and ruled germs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curvature::ricci_expanded;
use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::minkowski::NormModel;
use crate::pencil::{
    common_zero_search, inertia_default, spectral_split, type_exact, type_sampled, CubicForm,
    SymPencil, ZeroSearchOptions,
};
use crate::sampling;

/// Relative singular-value threshold for the common kernel.
pub const NULLITY_TOL: f64 = 1e-9;
/// Normal samples used for the type when `p ≥ 3`.
pub const NORMAL_SAMPLES: usize = 10_000;
/// `Ric ≥ −RIC_TOL` counts as nonnegative.
pub const RIC_TOL: f64 = 1e-8;
/// Ruling precondition tolerance on `κ(u)` and the cubic at unit `u`.
pub const RULED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Nullity {
    pub mu: usize,
    /// Orthonormal columns spanning the common kernel.
    pub null_basis: DMatrix<f64>,
    /// Orthonormal columns spanning its complement.
    pub complement: DMatrix<f64>,
}

/// Common kernel of the second-order blocks `d2[α]`.
pub fn nullity(germ: &Germ, tol: f64) -> Nullity {
    let (n, p) = (germ.n, germ.p);
    let stacked = DMatrix::from_fn(p * n, n, |r, j| germ.d2[r / n][r % n][j]);
    if p == 0 || stacked.amax() == 0.0 {
        return Nullity {
            mu: n,
            null_basis: DMatrix::identity(n, n),
            complement: DMatrix::zeros(n, 0),
        };
    }
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max();
    let (null, rest): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| svd.singular_values[i] <= tol * smax);
    let columns = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |r, c| vt[(idx[c], r)]);
    Nullity {
        mu: null.len(),
        null_basis: columns(&null),
        complement: columns(&rest),
    }
}

/// Exact type, or sampled bounds in codimension three and higher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointType {
    Exact(usize),
    Interval { lower: usize, upper: usize },
}

impl PointType {
    pub fn exact(&self) -> Option<usize> {
        match self {
            PointType::Exact(t) => Some(*t),
            PointType::Interval { .. } => None,
        }
    }

    pub fn upper(&self) -> usize {
        match self {
            PointType::Exact(t) => *t,
            PointType::Interval { upper, .. } => *upper,
        }
    }
}

impl std::fmt::Display for PointType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointType::Exact(t) => write!(f, "{t}"),
            PointType::Interval { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

/// Pencil of the first two second-order blocks restricted to `basis`.
fn restricted_pencil(germ: &Germ, basis: &DMatrix<f64>) -> SymPencil {
    let a1 = germ.d2_matrix(0);
    let a2 = if germ.p > 1 {
        germ.d2_matrix(1)
    } else {
        DMatrix::zeros(germ.n, germ.n)
    };
    SymPencil::new(a1, a2)
        .expect("germ blocks are symmetric")
        .restrict(basis)
}

fn restricted_cubic(germ: &Germ, a: usize, basis: &DMatrix<f64>) -> CubicForm {
    let (n, m) = (germ.n, basis.ncols());
    if a >= germ.p {
        return CubicForm::zero(m);
    }
    let c: Vec<Vec<Vec<f64>>> = (0..m)
        .map(|x| {
            (0..m)
                .map(|y| {
                    (0..m)
                        .map(|z| {
                            let mut s = 0.0;
                            for i in 0..n {
                                for j in 0..n {
                                    for k in 0..n {
                                        s += germ.d3[a][i][j][k]
                                            * basis[(i, x)]
                                            * basis[(j, y)]
                                            * basis[(k, z)];
                                    }
                                }
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    CubicForm::new(&c).expect("cube-shaped array")
}

/// Minimum positive inertia of `Σ ν_α d2[α]` over normals `ν` of maximal rank.
pub fn point_type(germ: &Germ) -> PointType {
    match germ.p {
        0 => PointType::Exact(0),
        1 => {
            let i = inertia_default(&germ.d2_matrix(0));
            PointType::Exact(i.pos.min(i.neg))
        }
        2 => {
            let basis = nullity(germ, NULLITY_TOL).complement;
            if basis.ncols() == 0 {
                return PointType::Exact(0);
            }
            let pencil = restricted_pencil(germ, &basis);
            let t = match spectral_split(&pencil) {
                Ok(data) => type_exact(&data),
                Err(_) => type_sampled(&pencil, NORMAL_SAMPLES).unwrap_or(0),
            };
            PointType::Exact(t)
        }
        p => {
            let blocks: Vec<DMatrix<f64>> = (0..p).map(|a| germ.d2_matrix(a)).collect();
            let mut rng = sampling::rng(0);
            let mut best_rank = 0;
            let mut best = 0;
            for _ in 0..NORMAL_SAMPLES {
                let nu = sampling::uniform_sphere(&mut rng, p);
                let m = blocks
                    .iter()
                    .zip(&nu)
                    .fold(DMatrix::zeros(germ.n, germ.n), |acc, (b, w)| acc + b * *w);
                let i = inertia_default(&m);
                let pos = i.pos.min(i.neg);
                if i.rank() > best_rank {
                    best_rank = i.rank();
                    best = pos;
                } else if i.rank() == best_rank {
                    best = best.min(pos);
                }
            }
            PointType::Interval { lower: best, upper: best }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Consistent,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub min_ric: f64,
    pub argmin_direction: Vec<f64>,
    #[serde(rename = "type")]
    pub point_type: PointType,
    pub mu: usize,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    /// A direction in the complement of the null space where the forms and
    /// cubics vanish, when one was searched for and found.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Direction count; 720 in the plane and 4096 above when unset.
    pub grid: Option<usize>,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            grid: None,
            tol: RIC_TOL,
            seed: 0,
        }
    }
}

impl AuditOptions {
    pub fn grid_size(&self, n: usize) -> usize {
        self.grid.unwrap_or(if n == 2 { 720 } else { 4096 })
    }
}

/// Smallest `Ric` over the direction grid.
pub fn min_ric(norm: &NormModel, germ: &Germ, count: usize) -> Result<(f64, Vec<f64>)> {
    let mut best = (f64::INFINITY, Vec::new());
    for u in sampling::direction_grid(germ.n, count) {
        let ric = ricci_expanded(norm, germ, &u)?.ric;
        if ric < best.0 {
            best = (ric, u);
        }
    }
    Ok(best)
}

/// Unit direction orthogonal to the null space on which both quadratic and
/// both cubic forms vanish.
fn witness(germ: &Germ, seed: u64) -> Result<Option<Vec<f64>>> {
    let basis = nullity(germ, NULLITY_TOL).complement;
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let pencil = restricted_pencil(germ, &basis);
    let (c1, c2) = (restricted_cubic(germ, 0, &basis), restricted_cubic(germ, 1, &basis));
    let opts = ZeroSearchOptions { seed, ..Default::default() };
    Ok(common_zero_search(&pencil, &c1, &c2, &opts)?.map(|z| {
        let u = &basis * DVector::from_vec(z.point);
        sampling::normalized(u.as_slice())
    }))
}

struct Scan {
    min_ric: f64,
    argmin: Vec<f64>,
    point_type: PointType,
    mu: usize,
    witness: Option<Vec<f64>>,
    notes: Vec<String>,
}

/// Grid minimum of `Ric`, plus the witness direction when the type exceeds
/// `threshold`.
fn scan(norm: &NormModel, germ: &Germ, opts: &AuditOptions, threshold: usize) -> Result<Scan> {
    let (mut lo, mut arg) = min_ric(norm, germ, opts.grid_size(germ.n))?;
    let point_type = point_type(germ);
    let mu = nullity(germ, NULLITY_TOL).mu;
    let mut notes = Vec::new();
    let mut found = None;
    if point_type.upper() > threshold {
        match witness(germ, opts.seed)? {
            Some(u) => {
                let ric = ricci_expanded(norm, germ, &u)?.ric;
                notes.push(format!("witness direction with vanishing forms has Ric = {ric:e}"));
                if ric < lo {
                    (lo, arg) = (ric, u.clone());
                }
                found = Some(u);
            }
            None => notes.push("no witness direction found".into()),
        }
    }
    Ok(Scan {
        min_ric: lo,
        argmin: arg,
        point_type,
        mu,
        witness: found,
        notes,
    })
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg.into()))
    }
}

/// Nonnegative Ricci curvature and type other than one force a semidefinite
/// second fundamental form.
pub fn audit_hypersurface(norm: &NormModel, germ: &Germ, opts: &AuditOptions) -> Result<AuditReport> {
    require(germ.p == 1, "hypersurface audit needs p = 1")?;
    require(germ.n >= 2, "hypersurface audit needs n >= 2")?;
    let mut s = scan(norm, germ, opts, 1)?;
    let t = s.point_type.upper();
    let i = inertia_default(&germ.d2_matrix(0));
    let semidefinite = i.pos == 0 || i.neg == 0;
    let nonneg = s.min_ric >= -opts.tol;
    if !nonneg {
        s.notes.push(format!("hypothesis Ric >= 0 fails (min Ric = {:e})", s.min_ric));
    }
    if t == 1 {
        s.notes.push("hypothesis t != 1 fails".into());
    }
    s.notes.push(format!(
        "second fundamental form is {}",
        if semidefinite { "semidefinite" } else { "indefinite" }
    ));
    let verdict = if nonneg && t != 1 && !semidefinite {
        Verdict::Violation
    } else {
        Verdict::Consistent
    };
    Ok(finish(s, verdict))
}

/// Nonnegative Ricci curvature forces type at most two in codimension two.
pub fn audit_codim2(norm: &NormModel, germ: &Germ, opts: &AuditOptions) -> Result<AuditReport> {
    require(germ.p == 2, "codimension-two audit needs p = 2")?;
    let mut s = scan(norm, germ, opts, 2)?;
    let t = s.point_type.upper();
    let nonneg = s.min_ric >= -opts.tol;
    if !nonneg {
        s.notes.push(format!("hypothesis Ric >= 0 fails (min Ric = {:e})", s.min_ric));
    }
    s.notes.push(format!("type {}", s.point_type));
    let verdict = if nonneg && t > 2 {
        Verdict::Violation
    } else {
        Verdict::Consistent
    };
    Ok(finish(s, verdict))
}

fn finish(s: Scan, verdict: Verdict) -> AuditReport {
    AuditReport {
        min_ric: s.min_ric,
        argmin_direction: s.argmin,
        point_type: s.point_type,
        mu: s.mu,
        verdict,
        notes: s.notes,
        witness: s.witness,
    }
}

/// `−ζ_αβ g^{il} f^β_{jl} f^α_{ir} u^j u^r` from the Hessian of `H` at `(u, 0)`.
pub fn reduced_ruled_ric(norm: &NormModel, germ: &Germ, u: &[f64]) -> Result<f64> {
    let (n, p) = (germ.n, germ.p);
    let mut lifted = u.to_vec();
    lifted.resize(n + p, 0.0);
    let rows = norm.jet(&lifted)?.hessian();
    let hess = DMatrix::from_fn(n + p, n + p, |i, j| rows[i][j]);
    let g = hess.view((0, 0), (n, n)).into_owned();
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularDirection(u.to_vec()))?;
    let cross = hess.view((0, n), (n, p)).into_owned();
    let zeta = hess.view((n, n), (p, p)).into_owned() - cross.transpose() * &ginv * &cross;
    let fu = germ.d2_u(u);
    let fu = DMatrix::from_fn(p, n, |a, i| fu[a][i]);
    Ok(-(zeta.component_mul(&(&fu * &ginv * fu.transpose()))).sum())
}

/// Along a ruling, nonnegative Ricci curvature puts the direction in the
/// null space.
pub fn audit_ruled(norm: &NormModel, germ: &Germ, ruling: &[f64], opts: &AuditOptions) -> Result<AuditReport> {
    if ruling.len() != germ.n {
        return Err(Error::DimensionMismatch { expected: germ.n, got: ruling.len() });
    }
    let len = sampling::norm(ruling);
    if len == 0.0 {
        return Err(Error::NotRuledDirection("zero direction".into()));
    }
    let u = sampling::normalized(ruling);
    let kappa = germ.kappa(&u);
    let cubic = germ.cubic(&u);
    let worst = kappa.iter().chain(&cubic).fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > RULED_TOL {
        return Err(Error::NotRuledDirection(format!(
            "kappa {kappa:?}, cubic {cubic:?}"
        )));
    }
    let ric = ricci_expanded(norm, germ, &u)?.ric;
    let reduced = reduced_ruled_ric(norm, germ, &u)?;
    let fu = germ.d2_u(&u);
    let in_null = fu.iter().flatten().all(|v| v.abs() <= opts.tol.sqrt());
    let agree = (ric - reduced).abs() <= 1e-9 * (1.0 + ric.abs());
    let nonneg = ric >= -opts.tol;
    let mut notes = vec![format!("Ric(u) = {ric:e}, reduced formula = {reduced:e}")];
    if !agree {
        notes.push("full and reduced Ricci curvature disagree".into());
    }
    if !nonneg {
        notes.push("hypothesis Ric >= 0 fails".into());
    }
    notes.push(format!(
        "direction {} the null space",
        if in_null { "lies in" } else { "is outside" }
    ));
    let verdict = if agree && (!nonneg || in_null) {
        Verdict::Consistent
    } else {
        Verdict::Violation
    };
    Ok(AuditReport {
        min_ric: ric,
        argmin_direction: u,
        point_type: point_type(germ),
        mu: nullity(germ, NULLITY_TOL).mu,
        verdict,
        notes,
        witness: None,
    })
}
