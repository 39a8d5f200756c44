use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::NormModel;
use crate::sampling;

/// Relative tolerance for the degree-2 Euler identities.
pub const EULER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Uniform sphere samples.
    pub samples: usize,
    /// Extra probes approaching each excluded ray.
    pub near_ray_probes: usize,
    /// Sphere samples closer than this angle (radians) to an excluded ray are
    /// skipped, and so are probes.
    pub min_axis_angle: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            samples: 2000,
            near_ray_probes: 200,
            min_axis_angle: 0.0,
            seed: 0,
        }
    }
}

impl ValidationOptions {
    pub fn with_samples(samples: usize) -> Self {
        ValidationOptions {
            samples,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub samples: usize,
    pub probes: usize,
    /// max |y·∇H − 2H| over evaluated points.
    pub max_euler_residual: f64,
    /// max |Hess(H) y − ∇H|∞ over evaluated points.
    pub max_euler_gradient_residual: f64,
    pub min_hessian_eigenvalue: f64,
    pub argmin_direction: Vec<f64>,
    /// Smallest Hessian eigenvalue among the near-ray probes, if any ran.
    pub near_ray_min_eigenvalue: Option<f64>,
    /// Points where a residual exceeded tolerance, the Hessian was not
    /// positive definite, or evaluation failed.
    pub failures: usize,
    pub options: ValidationOptions,
    pub valid: bool,
}

struct PointCheck {
    euler: f64,
    euler_grad: f64,
    min_eig: f64,
    ok: bool,
}

fn check_point(m: &NormModel, y: &[f64]) -> Option<PointCheck> {
    let jet = m.jet(y).ok()?;
    let h = jet.value();
    let grad = jet.gradient();
    let hess = jet.hessian();
    let n = y.len();
    let euler = (y.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() - 2.0 * h).abs();
    let euler_grad = (0..n)
        .map(|i| ((0..n).map(|j| hess[i][j] * y[j]).sum::<f64>() - grad[i]).abs())
        .fold(0.0, f64::max);
    let mat = DMatrix::from_fn(n, n, |i, j| hess[i][j]);
    let min_eig = mat.symmetric_eigenvalues().min();
    let tol = EULER_TOL * (1.0 + h.abs());
    let ok = euler <= tol && euler_grad <= tol && min_eig > 0.0 && min_eig.is_finite();
    Some(PointCheck {
        euler,
        euler_grad,
        min_eig,
        ok,
    })
}

fn axis_angle(y: &[f64], axis: usize) -> f64 {
    let n = sampling::norm(y);
    (y[axis].abs() / n).clamp(0.0, 1.0).acos()
}

/// Samples the unit sphere and checks the Euler identities and strong
/// convexity of `H`. Validity is relative to the sample, never global.
pub fn validate_norm(m: &NormModel, opts: &ValidationOptions) -> ValidationReport {
    let dim = m.dim();
    let axis = m.excluded_axis();
    let mut rng = sampling::rng(opts.seed);
    let mut report = ValidationReport {
        samples: 0,
        probes: 0,
        max_euler_residual: 0.0,
        max_euler_gradient_residual: 0.0,
        min_hessian_eigenvalue: f64::INFINITY,
        argmin_direction: Vec::new(),
        near_ray_min_eigenvalue: None,
        failures: 0,
        options: *opts,
        valid: false,
    };

    let absorb = |report: &mut ValidationReport, y: &[f64], probe: bool| {
        match check_point(m, y) {
            Some(c) => {
                report.max_euler_residual = report.max_euler_residual.max(c.euler);
                report.max_euler_gradient_residual =
                    report.max_euler_gradient_residual.max(c.euler_grad);
                if c.min_eig < report.min_hessian_eigenvalue {
                    report.min_hessian_eigenvalue = c.min_eig;
                    report.argmin_direction = y.to_vec();
                }
                if probe {
                    let cur = report.near_ray_min_eigenvalue.unwrap_or(f64::INFINITY);
                    report.near_ray_min_eigenvalue = Some(cur.min(c.min_eig));
                }
                if !c.ok {
                    report.failures += 1;
                }
            }
            None => report.failures += 1,
        }
    };

    let mut attempts = 0;
    while report.samples < opts.samples && attempts < 100 * opts.samples.max(1) {
        attempts += 1;
        let y = sampling::uniform_sphere(&mut rng, dim);
        if m.is_excluded(&y) {
            continue;
        }
        if let Some(a) = axis {
            if axis_angle(&y, a) < opts.min_axis_angle {
                continue;
            }
        }
        absorb(&mut report, &y, false);
        report.samples += 1;
    }

    if let Some(a) = axis {
        // Polar angles from 1e-5 to 1e-1 rad, both hemispheres, spread azimuths.
        let others: Vec<usize> = (0..dim).filter(|i| *i != a).collect();
        for k in 0..opts.near_ray_probes {
            let frac = k as f64 / opts.near_ray_probes.max(2).saturating_sub(1) as f64;
            let polar = 1e-5 * 1e4f64.powf(frac);
            if polar < opts.min_axis_angle {
                continue;
            }
            let mut dir = sampling::uniform_sphere(&mut rng, others.len());
            dir.iter_mut().for_each(|v| *v *= polar.sin());
            let mut y = vec![0.0; dim];
            for (slot, v) in others.iter().zip(&dir) {
                y[*slot] = *v;
            }
            y[a] = if k % 2 == 0 { polar.cos() } else { -polar.cos() };
            if m.is_excluded(&y) {
                continue;
            }
            absorb(&mut report, &y, true);
            report.probes += 1;
        }
    }

    report.valid = report.samples > 0 && report.failures == 0;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::Example4;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn euclidean_is_valid() {
        let r = validate_norm(&NormModel::euclidean(3), &ValidationOptions::with_samples(200));
        assert!(r.valid);
        assert!(r.max_euler_residual < 1e-14);
        assert!((r.min_hessian_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissible_randers_is_valid() {
        let m = NormModel::randers(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.5, 0.0]),
        )
        .unwrap();
        let r = validate_norm(&m, &ValidationOptions::with_samples(500));
        assert!(r.valid, "{r:?}");
        assert!(r.min_hessian_eigenvalue > 0.0);
    }

    #[test]
    fn large_angular_perturbation_is_invalid() {
        let m = NormModel::example4(Example4 {
            a: 10.0,
            b: 10.0,
            eps1: 0.01,
            eps2: 10.0,
        })
        .unwrap();
        let opts = ValidationOptions {
            min_axis_angle: std::f64::consts::FRAC_PI_6,
            ..Default::default()
        };
        let r = validate_norm(&m, &opts);
        assert!(!r.valid);
        assert!(r.min_hessian_eigenvalue < 0.0);
    }

    #[test]
    fn example_fails_near_its_axis_but_not_away_from_it() {
        let m = NormModel::example4(Example4 {
            a: 10.0,
            b: 10.0,
            eps1: 0.1,
            eps2: 0.1,
        })
        .unwrap();
        let full = validate_norm(&m, &ValidationOptions::default());
        assert!(!full.valid);
        assert!(full.near_ray_min_eigenvalue.unwrap() < 0.0);
        let off_axis = validate_norm(
            &m,
            &ValidationOptions {
                min_axis_angle: std::f64::consts::FRAC_PI_6,
                ..Default::default()
            },
        );
        assert!(off_axis.valid, "{off_axis:?}");
        assert_eq!(off_axis.probes, 0);
    }
}
