use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::anyhow;
use nalgebra::DMatrix;
use finsub::curvature::{ricci_expanded, ricci_oracle, ricci_sweep, write_sweep_csv, CurvatureReport, OracleScheme};
use finsub::example::{self, ExampleParams, ExampleReport, ExampleVerdict};
use finsub::invariants::{self, AuditOptions, AuditReport, PointType, Verdict};
use finsub::minkowski::{validate_norm, ValidationOptions, EULER_TOL};
use finsub::pencil::{
    self, CanonicalData, CubicForm, Genericity, PencilFile, SpectralData, TopologyLabel,
    ZeroSearchOptions,
};
use finsub::{sampling, Germ, NormModel};
use serde::{Deserialize, Serialize};

use crate::config::{load, RunConfig};
use crate::{CliError, Common, OracleArg, Outcome};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    tolerances: BTreeMap<&'static str, f64>,
    result: T,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::Runtime(anyhow!("cannot write {}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(
    command: &str,
    seed: u64,
    tolerances: &[(&'static str, f64)],
    result: T,
    common: &Common,
) -> Result<(), CliError> {
    let env = Envelope {
        command,
        seed,
        tolerances: tolerances.iter().copied().collect(),
        result,
    };
    let mut w = sink(common.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &env).map_err(|e| CliError::Runtime(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

struct Loaded {
    cfg: RunConfig,
    norm: NormModel,
    seed: u64,
}

fn load_config(path: &Path, common: &Common) -> Result<Loaded, CliError> {
    let cfg: RunConfig = load(path)?;
    let norm = cfg
        .norm
        .build()
        .map_err(|e| CliError::Usage(anyhow!("{}: /norm: {e}", path.display())))?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    Ok(Loaded { cfg, norm, seed })
}

fn pass_if(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

pub fn check_norm(config: &Path, common: &Common) -> Result<Outcome, CliError> {
    let l = load_config(config, common)?;
    let opts = ValidationOptions {
        samples: common.grid.unwrap_or(2000),
        seed: l.seed,
        ..Default::default()
    };
    let report = validate_norm(&l.norm, &opts);
    let valid = report.valid;
    emit("check-norm", l.seed, &[("euler", EULER_TOL)], report, common)?;
    Ok(pass_if(valid))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleOut {
    scheme: OracleScheme,
    ric: f64,
    difference: f64,
}

#[derive(Serialize)]
struct CurvatureOut {
    #[serde(flatten)]
    report: CurvatureReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleOut>,
}

pub fn curvature(config: &Path, direction: &[f64], oracle: Option<OracleArg>, common: &Common) -> Result<Outcome, CliError> {
    let l = load_config(config, common)?;
    let germ = l.cfg.germ()?;
    let report = ricci_expanded(&l.norm, germ, direction)?;
    let oracle = match oracle {
        Some(arg) => {
            let scheme = match arg {
                OracleArg::Jet => OracleScheme::Jet,
                OracleArg::Fd => OracleScheme::FiniteDifference,
            };
            let ric = ricci_oracle(&l.norm, germ, direction, scheme)?;
            Some(OracleOut { scheme, ric, difference: ric - report.ric })
        }
        None => None,
    };
    let tols = [
        ("maxCondition", finsub::curvature::MAX_CONDITION),
        ("fdStep", finsub::curvature::FD_STEP),
    ];
    emit("curvature", l.seed, &tols, CurvatureOut { report, oracle }, common)?;
    Ok(Outcome::Pass)
}

fn default_grid(n: usize) -> usize {
    if n == 2 {
        720
    } else {
        4096
    }
}

pub fn ricci_grid(config: &Path, common: &Common) -> Result<Outcome, CliError> {
    let l = load_config(config, common)?;
    let germ = l.cfg.germ()?;
    let dirs = sampling::direction_grid(germ.n, common.grid.unwrap_or_else(|| default_grid(germ.n)));
    let reports = ricci_sweep(&l.norm, germ, &dirs)?;
    write_sweep_csv(&reports, sink(common.out.as_deref())?)?;
    Ok(Outcome::Pass)
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct InvariantsOut {
    mu: usize,
    #[serde(rename = "type")]
    point_type: PointType,
    null_basis: Vec<Vec<f64>>,
    complement_basis: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

pub fn invariants(config: &Path, common: &Common) -> Result<Outcome, CliError> {
    let l = load_config(config, common)?;
    let germ: &Germ = l.cfg.germ()?;
    let tol = common.tol.unwrap_or(invariants::NULLITY_TOL);
    let nl = invariants::nullity(germ, tol);
    let out = InvariantsOut {
        mu: nl.mu,
        point_type: invariants::point_type(germ),
        null_basis: columns(&nl.null_basis),
        complement_basis: columns(&nl.complement),
        warnings: germ.warnings(),
    };
    emit("invariants", l.seed, &[("nullity", tol)], out, common)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TypeOut {
    dim: usize,
    type_sampled: usize,
    samples: usize,
    type_exact: Option<usize>,
    spectral: Option<SpectralData>,
    genericity: Genericity,
}

pub fn pencil_type(file: &Path, common: &Common) -> Result<Outcome, CliError> {
    let pf: PencilFile = load(file)?;
    let p = pf.pencil().map_err(|e| CliError::Usage(anyhow!("{}: {e}", file.display())))?;
    let samples = common.grid.unwrap_or(10_000);
    let sampled = pencil::type_sampled(&p, samples)?;
    let spectral = pencil::spectral_split(&p).ok();
    let out = TypeOut {
        dim: p.dim(),
        type_sampled: sampled,
        samples,
        type_exact: spectral.as_ref().map(pencil::type_exact),
        spectral,
        genericity: pencil::genericity_check(&p),
    };
    let seed = common.seed.unwrap_or(0);
    let tols = [("clusterRelative", pencil::CLUSTER_TOL), ("inertiaRelative", pencil::INERTIA_TOL)];
    emit("pencil type", seed, &tols, out, common)?;
    Ok(Outcome::Pass)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ClassifyInput {
    Canonical(CanonicalData),
    Pencil(PencilFile),
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassifyOut {
    canonical: CanonicalData,
    label: TopologyLabel,
    dimension: Option<usize>,
    #[serde(rename = "type")]
    type_formula: usize,
    d: Vec<usize>,
}

pub fn pencil_classify(file: &Path, common: &Common) -> Result<Outcome, CliError> {
    let canonical = match load::<ClassifyInput>(file)? {
        ClassifyInput::Canonical(c) => c,
        ClassifyInput::Pencil(pf) => {
            let p = pf.pencil().map_err(|e| CliError::Usage(anyhow!("{}: {e}", file.display())))?;
            let data = pencil::spectral_split(&p)?;
            CanonicalData::from_spectral(&data)
                .ok_or_else(|| CliError::Runtime(anyhow!("pencil directions are not at canonical angles")))?
        }
    };
    let label = pencil::classify_topology(&canonical)?;
    let out = ClassifyOut {
        dimension: label.dimension(),
        type_formula: canonical.type_formula(),
        d: canonical.d(),
        canonical,
        label,
    };
    let seed = common.seed.unwrap_or(0);
    emit("pencil classify", seed, &[("canonicalAngle", pencil::CANONICAL_TOL)], out, common)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ZeroOut {
    found: bool,
    point: Option<Vec<f64>>,
    residual: Option<f64>,
    start: Option<usize>,
    starts: usize,
}

pub fn common_zero(file: &Path, budget: Option<usize>, common: &Common) -> Result<Outcome, CliError> {
    let pf: PencilFile = load(file)?;
    let bad = |e: finsub::Error| CliError::Usage(anyhow!("{}: {e}", file.display()));
    let p = pf.pencil().map_err(bad)?;
    let cubic = |c: &Option<Vec<Vec<Vec<f64>>>>| match c {
        Some(c) => CubicForm::new(c).map_err(bad),
        None => Ok(CubicForm::zero(p.dim())),
    };
    let (psi1, psi2) = (cubic(&pf.psi1)?, cubic(&pf.psi2)?);
    let seed = common.seed.unwrap_or(0);
    let opts = ZeroSearchOptions {
        starts: budget.unwrap_or(ZeroSearchOptions::default().starts),
        seed,
        ..Default::default()
    };
    let found = pencil::common_zero_search(&p, &psi1, &psi2, &opts)?;
    let out = ZeroOut {
        found: found.is_some(),
        point: found.as_ref().map(|z| z.point.clone()),
        residual: found.as_ref().map(|z| z.residual),
        start: found.as_ref().map(|z| z.start),
        starts: opts.starts,
    };
    let ok = out.found;
    emit("pencil common-zero", seed, &[("residual", pencil::RESIDUAL_TOL)], out, common)?;
    Ok(pass_if(ok))
}

fn example_tols() -> [(&'static str, f64); 2] {
    [("agreementRelative", example::AGREEMENT_TOL), ("axisCap", example::AXIS_CAP)]
}

pub fn verify_example(
    params: Option<&Path>,
    auto: bool,
    budget: usize,
    csv_out: Option<&Path>,
    common: &Common,
) -> Result<Outcome, CliError> {
    let params: ExampleParams = match params {
        Some(path) => load(path)?,
        None if auto => example::find_example_params(budget)?,
        None => return Err(CliError::Usage(anyhow!("either --params or --auto is required"))),
    };
    let grid = common.grid.unwrap_or(720);
    let report: ExampleReport = example::verify_example(&params, grid)
        .map_err(|e| match e {
            finsub::Error::InvalidInput(_) => CliError::Usage(e.into()),
            e => e.into(),
        })?;
    if let Some(path) = csv_out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(e.into()))?;
        w.write_record(["angle", "ric_closed", "ric_pipeline"])
            .map_err(|e| CliError::Runtime(e.into()))?;
        for g in &report.grid {
            w.write_record([g.angle, g.ric_closed, g.ric_pipeline].map(|v| format!("{v:e}")))
                .map_err(|e| CliError::Runtime(e.into()))?;
        }
        w.flush()?;
    }
    let ok = report.verdict == ExampleVerdict::Success;
    emit("verify-example", common.seed.unwrap_or(0), &example_tols(), report, common)?;
    Ok(pass_if(ok))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FindOut {
    found: bool,
    budget: usize,
    params: Option<ExampleParams>,
}

pub fn find_params(budget: usize, common: &Common) -> Result<Outcome, CliError> {
    if budget == 0 {
        return Err(CliError::Usage(anyhow!("--budget must be at least 1")));
    }
    let params = match example::find_example_params(budget) {
        Ok(p) => Some(p),
        Err(finsub::Error::NoParamsFound(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let out = FindOut { found: params.is_some(), budget, params };
    let ok = out.found;
    emit("find-params", common.seed.unwrap_or(0), &example_tols(), out, common)?;
    Ok(pass_if(ok))
}

pub enum AuditKind {
    Hyper,
    Codim2,
    Ruled(Vec<f64>),
}

pub fn audit(config: &Path, kind: AuditKind, common: &Common) -> Result<Outcome, CliError> {
    let l = load_config(config, common)?;
    let germ = l.cfg.germ()?;
    let opts = AuditOptions {
        grid: common.grid,
        tol: common.tol.unwrap_or(invariants::RIC_TOL),
        seed: l.seed,
    };
    let (name, result) = match kind {
        AuditKind::Hyper => ("audit hyper", invariants::audit_hypersurface(&l.norm, germ, &opts)),
        AuditKind::Codim2 => ("audit codim2", invariants::audit_codim2(&l.norm, germ, &opts)),
        AuditKind::Ruled(u) => ("audit ruled", invariants::audit_ruled(&l.norm, germ, &u, &opts)),
    };
    let report: AuditReport = result.map_err(|e| match e {
        finsub::Error::InvalidInput(_) => CliError::Usage(e.into()),
        e => e.into(),
    })?;
    let ok = report.verdict == Verdict::Consistent;
    let tols = [("ric", opts.tol), ("nullity", invariants::NULLITY_TOL), ("ruled", invariants::RULED_TOL)];
    emit(name, l.seed, &tols, report, common)?;
    Ok(pass_if(ok))
}
