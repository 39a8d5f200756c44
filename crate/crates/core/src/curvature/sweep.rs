use std::io::Write;

use super::{ricci_expanded, CurvatureReport};
use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::minkowski::NormModel;

pub fn ricci_sweep(norm: &NormModel, germ: &Germ, directions: &[Vec<f64>]) -> Result<Vec<CurvatureReport>> {
    directions
        .iter()
        .map(|u| ricci_expanded(norm, germ, u))
        .collect()
}

fn header(n: usize, p: usize) -> Vec<String> {
    let mut h = Vec::new();
    let one = |name: &str, len: usize, h: &mut Vec<String>| {
        for i in 0..len {
            h.push(format!("{name}_{i}"));
        }
    };
    let two = |name: &str, r: usize, c: usize, h: &mut Vec<String>| {
        for i in 0..r {
            for j in 0..c {
                h.push(format!("{name}_{i}_{j}"));
            }
        }
    };
    one("u", n, &mut h);
    h.push("S".into());
    two("g", n, n, &mut h);
    two("h", n, p, &mut h);
    one("kappa", p, &mut h);
    one("G", n, &mut h);
    one("xi", p, &mut h);
    two("zeta", p, p, &mut h);
    two("eta", p, p, &mut h);
    for i in 0..n {
        two(&format!("rho_{i}"), p, p, &mut h);
    }
    two("Rik", n, n, &mut h);
    h.push("Ric".into());
    one("ric_term", 4, &mut h);
    h
}

fn row(r: &CurvatureReport) -> Vec<f64> {
    let mut v = r.u.clone();
    v.push(r.s);
    v.extend(r.g.iter().flatten());
    v.extend(r.h.iter().flatten());
    v.extend(&r.kappa);
    v.extend(&r.spray);
    v.extend(&r.xi);
    v.extend(r.zeta.iter().flatten());
    v.extend(r.eta.iter().flatten());
    v.extend(r.rho.iter().flatten().flatten());
    v.extend(r.rik.iter().flatten());
    v.push(r.ric);
    v.extend(r.ric_terms);
    v
}

/// One header row naming every report field, then one row per direction.
pub fn write_sweep_csv<W: Write>(reports: &[CurvatureReport], out: W) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    let (n, p) = (first.u.len(), first.kappa.len());
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(n, p)).map_err(io)?;
    for r in reports {
        w.write_record(row(r).iter().map(|v| format!("{v:e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv output: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_width() {
        let germ = Germ::quadratic(vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ])
        .unwrap();
        let dirs = vec![vec![1.0, 0.0], vec![0.6, 0.8]];
        let reports = ricci_sweep(&NormModel::euclidean(4), &germ, &dirs).unwrap();
        assert_eq!(header(2, 2).len(), row(&reports[0]).len());
        let mut buf = Vec::new();
        write_sweep_csv(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("u_0,u_1,S,g_0_0"));
    }
}
