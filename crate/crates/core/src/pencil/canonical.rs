use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::spectral::SpectralData;
use super::SymPencil;
use crate::error::{Error, Result};

/// Tolerance for recognising canonical angles and unit complex blocks.
pub const CANONICAL_TOL: f64 = 1e-6;

/// Normal form data: `2l − 1` direction classes at angles `2πj/(2l − 1)`
/// with multiplicities `n_j`, plus `s` hyperbolic blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalData {
    pub l: usize,
    pub n_j: Vec<usize>,
    pub s: usize,
}

impl CanonicalData {
    pub fn new(l: usize, n_j: Vec<usize>, s: usize) -> Result<CanonicalData> {
        let c = CanonicalData { l, n_j, s };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let classes = if self.l == 0 { 0 } else { 2 * self.l - 1 };
        if self.n_j.len() != classes {
            return Err(Error::UnclassifiedConfiguration(format!(
                "l = {} needs {classes} multiplicities, got {}",
                self.l,
                self.n_j.len()
            )));
        }
        if self.n_j.contains(&0) {
            return Err(Error::UnclassifiedConfiguration("zero multiplicity".into()));
        }
        if self.dim() == 0 {
            return Err(Error::UnclassifiedConfiguration("zero-dimensional pencil".into()));
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.n_j.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.r() + 2 * self.s
    }

    /// Angle of class `j` (1-based), reduced so that `j = 2l − 1` is exactly 0.
    pub fn angle(&self, j: usize) -> f64 {
        let m = 2 * self.l - 1;
        TAU * (j % m) as f64 / m as f64
    }

    /// `d_j = n_j + … + n_{j+l−2}`, indices mod `2l − 1`; empty for `l < 2`.
    pub fn d(&self) -> Vec<usize> {
        if self.l < 2 {
            return Vec::new();
        }
        let m = 2 * self.l - 1;
        (0..m)
            .map(|j| (0..self.l - 1).map(|k| self.n_j[(j + k) % m]).sum())
            .collect()
    }

    /// `s + min d_j` for `l ≥ 2`, otherwise `s`.
    pub fn type_formula(&self) -> usize {
        self.s + self.d().into_iter().min().unwrap_or(0)
    }

    pub fn spectral(&self) -> SpectralData {
        let mut real_pairs = Vec::with_capacity(self.r());
        for (idx, &n) in self.n_j.iter().enumerate() {
            let theta = self.angle(idx + 1);
            real_pairs.extend(std::iter::repeat_n((theta.cos(), theta.sin()), n));
        }
        SpectralData {
            real_pairs,
            complex_pairs: vec![(0.0, 1.0); self.s],
        }
    }

    /// Reads canonical data off spectral data whose directions already sit at
    /// the angles `2πj/(2l − 1)` and whose complex blocks are `(0, 1)`.
    pub fn from_spectral(data: &SpectralData) -> Option<CanonicalData> {
        let s = data.complex_pairs.len();
        if data
            .complex_pairs
            .iter()
            .any(|(rho, nu)| rho.abs() > CANONICAL_TOL || (nu - 1.0).abs() > CANONICAL_TOL)
        {
            return None;
        }
        let angles = data.angles();
        if angles.is_empty() {
            return Some(CanonicalData { l: 0, n_j: Vec::new(), s });
        }
        for l in 1..=angles.len().div_ceil(2) {
            let m = 2 * l - 1;
            let mut n_j = vec![0; m];
            let ok = angles.iter().all(|phi| {
                let k = (phi.rem_euclid(TAU) * m as f64 / TAU).round() as usize % m;
                let diff = (phi - TAU * k as f64 / m as f64).rem_euclid(TAU);
                let close = diff.min(TAU - diff) <= CANONICAL_TOL;
                if close {
                    // Class j = m sits at angle 0.
                    n_j[(k + m - 1) % m] += 1;
                }
                close
            });
            if ok && !n_j.contains(&0) {
                return Some(CanonicalData { l, n_j, s });
            }
        }
        None
    }

    /// Every valid configuration with `l ≤ max_l`, `n_j ≤ max_n`, `s ≤ max_s`
    /// and total dimension at most `max_dim`.
    pub fn enumerate(max_l: usize, max_n: usize, max_s: usize, max_dim: usize) -> Vec<CanonicalData> {
        let mut out = Vec::new();
        for l in 0..=max_l {
            let m = if l == 0 { 0 } else { 2 * l - 1 };
            let mut n_j = vec![1; m];
            loop {
                for s in 0..=max_s {
                    let c = CanonicalData { l, n_j: n_j.clone(), s };
                    if (1..=max_dim).contains(&c.dim()) {
                        out.push(c);
                    }
                }
                // Odometer over n_j ∈ [1, max_n]^m.
                let mut k = 0;
                while k < m && n_j[k] == max_n {
                    n_j[k] = 1;
                    k += 1;
                }
                if k == m {
                    break;
                }
                n_j[k] += 1;
            }
        }
        out
    }
}

/// Diffeomorphism type of the common zero set of the two forms on the unit
/// sphere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "camelCase")]
pub enum TopologyLabel {
    Empty,
    /// Unit tangent bundle of `S^k`.
    UnitTangentBundle { sphere: usize },
    /// `S^a × S^b`.
    ProductTwoSpheres { a: usize, b: usize },
    /// `S^a × S^b × S^c`.
    ProductThreeSpheres { a: usize, b: usize, c: usize },
    /// Connected sum of `S^a × S^b` over the listed pairs.
    ConnectedSum { pairs: Vec<(usize, usize)> },
}

impl TopologyLabel {
    /// Manifold dimension, `None` for the empty set.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            TopologyLabel::Empty => None,
            TopologyLabel::UnitTangentBundle { sphere } => Some(2 * sphere - 1),
            TopologyLabel::ProductTwoSpheres { a, b } => Some(a + b),
            TopologyLabel::ProductThreeSpheres { a, b, c } => Some(a + b + c),
            TopologyLabel::ConnectedSum { pairs } => pairs.first().map(|(a, b)| a + b),
        }
    }
}

pub fn classify_topology(c: &CanonicalData) -> Result<TopologyLabel> {
    c.validate()?;
    let (r, s, l) = (c.r(), c.s, c.l);
    if r == 0 {
        return Ok(if s > 1 {
            TopologyLabel::UnitTangentBundle { sphere: s - 1 }
        } else {
            TopologyLabel::Empty
        });
    }
    match (l, s) {
        (1, 0) => Ok(TopologyLabel::Empty),
        (1, _) => Ok(TopologyLabel::ProductTwoSpheres { a: s - 1, b: r + s - 2 }),
        (2, 0) => Ok(TopologyLabel::ProductThreeSpheres {
            a: c.n_j[0] - 1,
            b: c.n_j[1] - 1,
            c: c.n_j[2] - 1,
        }),
        (l, s) if l >= 2 && l + s > 2 => {
            let pairs = c.d().into_iter().map(|d| (d + s - 1, r - d + s - 2)).collect();
            Ok(TopologyLabel::ConnectedSum { pairs })
        }
        _ => Err(Error::UnclassifiedConfiguration(format!("{c:?}"))),
    }
}

/// Block-diagonal pencil realizing the canonical data: `cos θ_j`, `sin θ_j`
/// on each direction class, then `(v² − w², 2vw)` blocks.
pub fn build_canonical(c: &CanonicalData) -> Result<SymPencil> {
    c.validate()?;
    Ok(c.spectral().pencil())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{genericity_check, inertia_default, spectral_split, type_exact, type_sampled};

    fn data(l: usize, n: &[usize], s: usize) -> CanonicalData {
        CanonicalData::new(l, n.to_vec(), s).unwrap()
    }

    #[test]
    fn small_hyperbolic_example() {
        let p = build_canonical(&data(1, &[2], 1)).unwrap();
        let expected = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[
            1.0, 1.0, 1.0, -1.0,
        ]));
        assert_eq!(p.a1(), &expected);
        assert_eq!(p.a2()[(2, 3)], 1.0);
        assert_eq!(p.a2()[(3, 2)], 1.0);
        assert_eq!(p.a2()[(0, 0)], 0.0);
    }

    #[test]
    fn hyperbolic_block_inertia() {
        let p = build_canonical(&data(0, &[], 1)).unwrap();
        let i = inertia_default(&p.at_angle(0.0));
        assert_eq!((i.pos, i.neg, i.zero), (1, 1, 0));
    }

    #[test]
    fn three_classes() {
        let c = data(2, &[1, 1, 1], 0);
        let p = build_canonical(&c).unwrap();
        assert_eq!(type_sampled(&p, 1000).unwrap(), 1);
        assert_eq!(c.type_formula(), 1);
        let g = genericity_check(&p);
        assert!(g.generic());
        let back = spectral_split(&p).unwrap();
        assert_eq!(CanonicalData::from_spectral(&back), Some(c.clone()));
        assert_eq!(
            classify_topology(&c).unwrap(),
            TopologyLabel::ProductThreeSpheres { a: 0, b: 0, c: 0 }
        );
    }

    #[test]
    fn type_with_complex_blocks() {
        assert_eq!(type_sampled(&build_canonical(&data(0, &[], 3)).unwrap(), 1000).unwrap(), 3);
        let c = data(2, &[1, 2, 1], 1);
        assert_eq!(c.d(), vec![1, 2, 1]);
        assert_eq!(type_exact(&c.spectral()), 2);
    }

    #[test]
    fn listed_topologies() {
        assert_eq!(
            classify_topology(&data(0, &[], 3)).unwrap(),
            TopologyLabel::UnitTangentBundle { sphere: 2 }
        );
        assert_eq!(classify_topology(&data(1, &[2], 0)).unwrap(), TopologyLabel::Empty);
        assert_eq!(classify_topology(&data(0, &[], 1)).unwrap(), TopologyLabel::Empty);
        assert!(matches!(
            classify_topology(&CanonicalData { l: 2, n_j: vec![1], s: 0 }),
            Err(Error::UnclassifiedConfiguration(_))
        ));
    }

    #[test]
    fn dimension_count() {
        for c in CanonicalData::enumerate(3, 3, 3, 7) {
            let label = classify_topology(&c).unwrap();
            if let Some(d) = label.dimension() {
                assert_eq!(d + 3, c.dim(), "{c:?}");
            }
        }
    }

    #[test]
    fn round_trip_angles() {
        for c in CanonicalData::enumerate(3, 2, 1, 7) {
            if c.dim() == 0 {
                continue;
            }
            let p = build_canonical(&c).unwrap();
            let d = spectral_split(&p).unwrap();
            assert_eq!(CanonicalData::from_spectral(&d), Some(c));
        }
    }
}
