//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use finsub::curvature::{gauss_equation_ric, ricci_expanded, ricci_oracle, zeta_check, OracleScheme};
use finsub::example::{find_example_params, verify_example, ExampleVerdict, AGREEMENT_TOL};
use finsub::germ::apply_linear_map;
use finsub::invariants::{
    audit_codim2, audit_hypersurface, audit_ruled, nullity, point_type, AuditOptions, AuditReport, Verdict,
    NULLITY_TOL,
};
use finsub::minkowski::{validate_norm, Example4, ValidationOptions};
use finsub::pencil::{
    build_canonical, classify_topology, common_zero_search, spectral_split, type_exact, type_sampled, CanonicalData,
    CubicForm, SymPencil, TopologyLabel, ZeroSearchOptions, RESIDUAL_TOL,
};
use finsub::sampling::{self, substream};
use finsub::testing::{random_germ, random_matrix, random_pencil, random_randers};
use finsub::{Germ, NormModel};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    sampling::uniform_sphere(rng, n)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn random_cubic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|_| (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .collect()
}

fn shape(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..=4), rng.random_range(1..=2))
}

fn euclidean_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = sampling::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (n, p) = shape(&mut rng);
        let germ = random_germ(&mut rng, n, p);
        let norm = NormModel::euclidean(n + p);
        let u = unit(&mut rng, n);
        let ric = ricci_expanded(&norm, &germ, &u).unwrap().ric;
        let gauss = gauss_equation_ric(&germ, &u);
        worst = worst.max((ric - gauss).abs() / gauss.abs().max(1e-300));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && within(elapsed, Duration::from_secs(5)),
        format!("50 germs, max relative error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = sampling::rng(202);
    let (mut jet, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (n, p) = shape(&mut rng);
        let norm = random_randers(&mut rng, n + p);
        let germ = random_germ(&mut rng, n, p);
        let u = unit(&mut rng, n);
        let ric = ricci_expanded(&norm, &germ, &u).unwrap().ric;
        let scale = 1.0 + ric.abs();
        let j = ricci_oracle(&norm, &germ, &u, OracleScheme::Jet).unwrap();
        let f = ricci_oracle(&norm, &germ, &u, OracleScheme::FiniteDifference).unwrap();
        jet = jet.max((ric - j).abs() / scale);
        fd = fd.max((ric - f).abs() / scale);
    }
    let elapsed = start.elapsed();
    outcome(
        jet <= 1e-9 && fd <= 1e-5 && within(elapsed, Duration::from_secs(60)),
        format!("100 triples, jet {jet:.2e}, finite differences {fd:.2e}, {elapsed:.2?}"),
    )
}

fn zeta_positivity() -> Outcome {
    let mut rng = sampling::rng(303);
    let mut evaluated = 0;
    let mut not_pd = 0;
    let mut worst = 0.0f64;
    let mut ratio_checks = 0;
    let mut check = |norm: &NormModel, germ: &Germ, u: &[f64]| {
        evaluated += 1;
        match zeta_check(norm, germ, u) {
            Ok((zeta, residual)) => {
                if let Some(r) = residual {
                    ratio_checks += 1;
                    worst = worst.max(r / (1.0 + zeta[(0, 0)].abs()));
                }
            }
            Err(_) => not_pd += 1,
        }
    };
    for k in 0..200 {
        let n = 1 + k % 4;
        let norm = if k % 10 == 0 { NormModel::euclidean(n + 1) } else { random_randers(&mut rng, n + 1) };
        let germ = random_germ(&mut rng, n, 1);
        check(&norm, &germ, &unit(&mut rng, n));
    }
    for _ in 0..50 {
        let norm = random_randers(&mut rng, 4);
        let germ = random_germ(&mut rng, 2, 2);
        check(&norm, &germ, &unit(&mut rng, 2));
    }
    let params = Example4 { a: 10.0, b: 10.0, eps1: 0.1, eps2: 0.1 };
    let example = NormModel::example4(params).unwrap();
    let flat = Germ::flat(2, 1);
    for k in 0..72 {
        let t = 0.3 + std::f64::consts::TAU * k as f64 / 72.0;
        let u = [t.cos(), t.sin()];
        if (u[0].abs() < 1e-3) || (u[1].abs() < 1e-3) {
            continue;
        }
        check(&example, &flat, &u);
    }
    outcome(
        not_pd == 0 && ratio_checks >= 200 && worst <= 1e-10,
        format!(
            "{evaluated} directions, {not_pd} not positive definite, {ratio_checks} determinant-ratio checks, max residual {worst:.2e}"
        ),
    )
}

fn example_reproduction() -> Outcome {
    let start = Instant::now();
    let params = match find_example_params(729) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("search failed: {e}")),
    };
    let report = verify_example(&params, 720).unwrap();
    let (_, germ) = finsub::example::build_example(&params).unwrap();
    let det = germ.d2[0][0][0] * germ.d2[0][1][1] - germ.d2[0][0][1].powi(2);
    let det_ok = report.gauss_determinant_exact == -params.eps3
        && -params.eps3 < 0.0
        && (det + params.eps3).abs() <= 8.0 * f64::EPSILON;
    let mut agreement = 0.0f64;
    for g in &report.grid {
        agreement = agreement.max((g.ric_closed - g.ric_pipeline).abs() / g.ric_pipeline.abs());
    }
    let min_pipeline = report.grid.iter().map(|g| g.ric_pipeline).fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    outcome(
        det_ok
            && min_pipeline > 0.0
            && report.min_ric > 0.0
            && agreement <= AGREEMENT_TOL
            && report.verdict == ExampleVerdict::Success
            && within(elapsed, Duration::from_secs(300)),
        format!(
            "A={} B={} eps1={} eps2={} eps3={} C={}, det {det:.3e}, min Ric {min_pipeline:.4e} on {} points, agreement {agreement:.2e}, {elapsed:.2?}",
            params.a, params.b, params.eps1, params.eps2, params.eps3, params.c, report.grid.len()
        ),
    )
}

fn expected_type(c: &CanonicalData) -> usize {
    if c.l < 2 {
        return c.s;
    }
    let m = 2 * c.l - 1;
    let min_d = (0..m)
        .map(|j| (0..c.l - 1).map(|i| c.n_j[(j + i) % m]).sum::<usize>())
        .min()
        .unwrap();
    c.s + min_d
}

fn pencil_type() -> Outcome {
    let start = Instant::now();
    let all = CanonicalData::enumerate(3, 3, 3, usize::MAX);
    let mut mismatches = 0;
    for c in &all {
        let p = build_canonical(c).unwrap();
        let exact = type_exact(&spectral_split(&p).unwrap());
        let sampled = type_sampled(&p, 360).unwrap();
        if exact != expected_type(c) || sampled != expected_type(c) {
            mismatches += 1;
        }
    }
    let mut rng = sampling::rng(505);
    let mut random_mismatches = 0;
    for k in 0..500 {
        let p = random_pencil(&mut rng, 2 + k % 7);
        let exact = type_exact(&spectral_split(&p).unwrap());
        if exact != type_sampled(&p, 10_000).unwrap() {
            random_mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && random_mismatches == 0 && within(elapsed, Duration::from_secs(120)),
        format!(
            "{} canonical pencils ({mismatches} mismatches), 500 random pencils ({random_mismatches} mismatches), {elapsed:.2?}",
            all.len()
        ),
    )
}

/// The case list, written out independently of the library.
fn expected_label(c: &CanonicalData) -> TopologyLabel {
    let r: usize = c.n_j.iter().sum();
    let s = c.s;
    if r == 0 {
        return if s <= 1 { TopologyLabel::Empty } else { TopologyLabel::UnitTangentBundle { sphere: s - 1 } };
    }
    if c.l == 1 {
        return if s == 0 { TopologyLabel::Empty } else { TopologyLabel::ProductTwoSpheres { a: s - 1, b: r + s - 2 } };
    }
    if c.l == 2 && s == 0 {
        return TopologyLabel::ProductThreeSpheres { a: c.n_j[0] - 1, b: c.n_j[1] - 1, c: c.n_j[2] - 1 };
    }
    let m = 2 * c.l - 1;
    let pairs = (0..m)
        .map(|j| {
            let d: usize = (0..c.l - 1).map(|i| c.n_j[(j + i) % m]).sum();
            (d + s - 1, r - d + s - 2)
        })
        .collect();
    TopologyLabel::ConnectedSum { pairs }
}

fn topology_labels() -> Outcome {
    let all = CanonicalData::enumerate(4, 7, 3, 7);
    let mut wrong = 0;
    let mut bad_dim = 0;
    let mut bad_emptiness = 0;
    for (k, c) in all.iter().enumerate() {
        let label = classify_topology(c).unwrap();
        if label != expected_label(c) {
            wrong += 1;
        }
        let n = c.dim();
        match label.dimension() {
            Some(d) if n < 3 || d != n - 3 => bad_dim += 1,
            _ => {}
        }
        let p = build_canonical(c).unwrap();
        let zero = CubicForm::zero(n);
        let opts = ZeroSearchOptions { seed: k as u64, ..Default::default() };
        let found = common_zero_search(&p, &zero, &zero, &opts).unwrap().is_some();
        if found == (label == TopologyLabel::Empty) {
            bad_emptiness += 1;
        }
    }
    outcome(
        wrong == 0 && bad_dim == 0 && bad_emptiness == 0,
        format!(
            "{} configurations, {wrong} wrong labels, {bad_dim} wrong dimensions, {bad_emptiness} emptiness disagreements",
            all.len()
        ),
    )
}

fn common_zeros() -> Outcome {
    let p = build_canonical(&CanonicalData::new(0, vec![], 3).unwrap()).unwrap();
    let mut not_found = 0;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let mut rng = substream(707, k);
        let c1 = CubicForm::new(&random_cubic(&mut rng, 6)).unwrap();
        let c2 = CubicForm::new(&random_cubic(&mut rng, 6)).unwrap();
        match common_zero_search(&p, &c1, &c2, &ZeroSearchOptions::default()).unwrap() {
            Some(z) => worst = worst.max(z.residual),
            None => not_found += 1,
        }
    }
    outcome(
        not_found == 0 && worst <= RESIDUAL_TOL,
        format!("50 instances, {not_found} not found, max residual {worst:.2e}"),
    )
}

fn invariance_suite() -> Outcome {
    let mut rng = sampling::rng(808);
    let mut norms: Vec<NormModel> = (2..=6).map(|d| random_randers(&mut rng, d)).collect();
    norms.push(NormModel::euclidean(4));
    norms.push(NormModel::example4(Example4 { a: 10.0, b: 10.0, eps1: 0.1, eps2: 0.1 }).unwrap());
    let opts = ValidationOptions { min_axis_angle: std::f64::consts::FRAC_PI_6, ..Default::default() };
    let mut euler = 0.0f64;
    let mut euler_failures = 0;
    for m in &norms {
        let v = validate_norm(m, &opts);
        euler = euler.max(v.max_euler_residual).max(v.max_euler_gradient_residual);
        euler_failures += v.failures;
    }

    let mut scaling = 0.0f64;
    for _ in 0..100 {
        let (n, p) = shape(&mut rng);
        let norm = random_randers(&mut rng, n + p);
        let germ = random_germ(&mut rng, n, p);
        let u = unit(&mut rng, n);
        let lambda = rng.random_range(0.1..10.0);
        let scaled: Vec<f64> = u.iter().map(|v| lambda * v).collect();
        let a = ricci_expanded(&norm, &germ, &u).unwrap().ric;
        let b = ricci_expanded(&norm, &germ, &scaled).unwrap().ric;
        scaling = scaling.max((b - lambda * lambda * a).abs() / (1.0 + lambda * lambda * a.abs()));
    }

    let mut changed = 0;
    for trial in 0..100 {
        let n = 2 + trial % 3;
        let p = 1 + trial % 2;
        let mut germ = random_germ(&mut rng, n, p);
        if trial % 3 == 0 {
            for a in 0..p {
                for i in 0..n {
                    germ.d2[a][i][0] = 0.0;
                    germ.d2[a][0][i] = 0.0;
                }
            }
        }
        let before = nullity(&germ, NULLITY_TOL);
        let before = (before.mu, before.null_basis.ncols(), point_type(&germ));
        let l = random_matrix(&mut rng, n + p, 3.0);
        let (moved, _) = apply_linear_map(&germ, &l).unwrap();
        let after = nullity(&moved, NULLITY_TOL);
        if before != (after.mu, after.null_basis.ncols(), point_type(&moved)) {
            changed += 1;
        }
    }
    outcome(
        euler <= 1e-9 && euler_failures == 0 && scaling <= 1e-10 && changed == 0,
        format!(
            "Euler residual {euler:.2e} ({euler_failures} failures), scaling error {scaling:.2e}, {changed}/100 invariants changed"
        ),
    )
}

fn definite(rng: &mut ChaCha8Rng, n: usize, sign: f64) -> Vec<Vec<f64>> {
    let m = random_matrix(rng, n, 0.0);
    let s = (&m * m.transpose() + DMatrix::identity(n, n) * 0.1) * sign;
    rows(&s)
}

fn with_d2(germ: &mut Germ, a: usize, d2: Vec<Vec<f64>>) {
    germ.d2[a] = d2;
}

/// Random congruence of a canonical pair, so audits see non-diagonal forms.
fn canonical_germ(rng: &mut ChaCha8Rng, c: &CanonicalData) -> Germ {
    let p: SymPencil = build_canonical(c).unwrap();
    let n = p.dim();
    let x = random_matrix(rng, n, 3.0);
    let q = p.congruent(&x);
    let mut germ = random_germ(rng, n, 2);
    with_d2(&mut germ, 0, rows(q.a1()));
    with_d2(&mut germ, 1, rows(q.a2()));
    germ
}

struct AuditTally {
    violations: usize,
    errors: usize,
    hypothesis_held: usize,
}

impl AuditTally {
    fn new() -> Self {
        AuditTally { violations: 0, errors: 0, hypothesis_held: 0 }
    }

    fn record(&mut self, r: finsub::Result<AuditReport>, tol: f64) {
        match r {
            Ok(r) => {
                if r.verdict == Verdict::Violation {
                    self.violations += 1;
                }
                if r.min_ric >= -tol {
                    self.hypothesis_held += 1;
                }
            }
            Err(_) => self.errors += 1,
        }
    }
}

fn auditors() -> Outcome {
    let opts = AuditOptions { grid: Some(512), ..Default::default() };
    let mut rng = sampling::rng(909);

    let mut hyper = AuditTally::new();
    for k in 0..200 {
        let n = 2 + k % 3;
        let norm = if k % 4 == 0 { NormModel::euclidean(n + 1) } else { random_randers(&mut rng, n + 1) };
        let mut germ = random_germ(&mut rng, n, 1);
        match k % 5 {
            0 => with_d2(&mut germ, 0, definite(&mut rng, n, 1.0)),
            1 => with_d2(&mut germ, 0, definite(&mut rng, n, -1.0)),
            2 => {
                let mut d = definite(&mut rng, n, 1.0);
                for i in 0..n {
                    d[i][n - 1] = 0.0;
                    d[n - 1][i] = 0.0;
                }
                with_d2(&mut germ, 0, d);
            }
            _ => {}
        }
        hyper.record(audit_hypersurface(&norm, &germ, &opts), opts.tol);
    }

    let mut codim2 = AuditTally::new();
    let canonical = [
        CanonicalData::new(0, vec![], 3).unwrap(),
        CanonicalData::new(0, vec![], 2).unwrap(),
        CanonicalData::new(2, vec![1, 1, 1], 1).unwrap(),
        CanonicalData::new(1, vec![2], 2).unwrap(),
    ];
    for k in 0..200 {
        let germ = match k % 4 {
            0 => canonical_germ(&mut rng, &canonical[(k / 4) % canonical.len()]),
            1 => {
                let n = 2 + k % 3;
                let mut g = random_germ(&mut rng, n, 2);
                with_d2(&mut g, 0, definite(&mut rng, n, 1.0));
                with_d2(&mut g, 1, vec![vec![0.0; n]; n]);
                g
            }
            _ => random_germ(&mut rng, 2 + k % 3, 2),
        };
        let n = germ.n;
        let norm = if k % 5 == 0 { NormModel::euclidean(n + 2) } else { random_randers(&mut rng, n + 2) };
        codim2.record(audit_codim2(&norm, &germ, &opts), opts.tol);
    }

    let mut ruled = AuditTally::new();
    for k in 0..200 {
        let (n, p) = (2 + k % 3, 1 + k % 2);
        let norm = random_randers(&mut rng, n + p);
        let mut germ = random_germ(&mut rng, n, p);
        let v = unit(&mut rng, n);
        let project = DMatrix::identity(n, n) - DMatrix::from_fn(n, n, |i, j| v[i] * v[j]);
        for a in 0..p {
            let mut d2 = germ.d2_matrix(a);
            if k % 2 == 0 {
                d2 = &project * d2 * &project;
            } else {
                let kappa = germ.kappa(&v)[a];
                d2 -= DMatrix::from_fn(n, n, |i, j| kappa * v[i] * v[j]);
            }
            with_d2(&mut germ, a, rows(&d2));
            let c = germ.cubic(&v)[a];
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        germ.d3[a][i][j][l] -= c * v[i] * v[j] * v[l];
                    }
                }
            }
        }
        ruled.record(audit_ruled(&norm, &germ, &v, &opts), opts.tol);
    }

    let ok = |t: &AuditTally| t.violations == 0 && t.errors == 0;
    outcome(
        ok(&hyper) && ok(&codim2) && ok(&ruled),
        format!(
            "hypersurface {}/{} violations/errors ({} with Ric >= 0), codimension two {}/{} ({}), ruled {}/{} ({})",
            hyper.violations,
            hyper.errors,
            hyper.hypothesis_held,
            codim2.violations,
            codim2.errors,
            codim2.hypothesis_held,
            ruled.violations,
            ruled.errors,
            ruled.hypothesis_held
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("euclidean reduction", euclidean_reduction),
        ("oracle equivalence", oracle_equivalence),
        ("normal block positivity", zeta_positivity),
        ("positive flag curvature example", example_reproduction),
        ("pencil type", pencil_type),
        ("topology labels", topology_labels),
        ("common zeros", common_zeros),
        ("homogeneity and invariance", invariance_suite),
        ("auditors", auditors),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| outcome(false, "panicked")))
            .collect()
    });
    let mut failed = 0;
    for (k, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", k + 1, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
