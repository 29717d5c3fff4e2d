//! Tabulated fringe curves for external plotting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fringe::FringeModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta_a: f64,
    pub theta_b: f64,
    pub probability: f64,
    /// `m₁·P/ΔP + m₂`, when fringe parameters were supplied.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<f64>,
}

/// `n` equally spaced points from `start` to `end`, both included.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite()) {
        return Err(Error::Config("grid bounds must be finite".into()));
    }
    match n {
        0 => Err(Error::Config("grid needs at least one point".into())),
        1 => Ok(vec![start]),
        _ => Ok((0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect()),
    }
}

/// Evaluates `model` on the outer product of the two phase grids, `θ_B`
/// varying slowest.
pub fn scan_fringe(
    model: &FringeModel,
    theta_a: &[f64],
    theta_b: &[f64],
    amplitudes: Option<(f64, f64)>,
) -> Vec<ScanRow> {
    theta_b
        .iter()
        .flat_map(|&tb| theta_a.iter().map(move |&ta| (ta, tb)))
        .map(|(ta, tb)| ScanRow {
            theta_a: ta,
            theta_b: tb,
            probability: model.probability(ta, tb),
            counts: amplitudes.map(|(m1, m2)| model.counts(ta, tb, m1, m2)),
        })
        .collect()
}

/// Writes rows as CSV with header `theta_a,theta_b,probability[,counts]`,
/// formatting every value through `format`.
pub fn write_scan_csv<W: Write>(
    rows: &[ScanRow],
    mut out: W,
    format: impl Fn(f64) -> String,
) -> Result<()> {
    let with_counts = rows.first().is_some_and(|r| r.counts.is_some());
    if with_counts {
        writeln!(out, "theta_a,theta_b,probability,counts")?;
    } else {
        writeln!(out, "theta_a,theta_b,probability")?;
    }
    for row in rows {
        write!(
            out,
            "{},{},{}",
            format(row.theta_a),
            format(row.theta_b),
            format(row.probability)
        )?;
        if let (true, Some(c)) = (with_counts, row.counts) {
            write!(out, ",{}", format(c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_is_inclusive() {
        let g = uniform_grid(0.0, 2.0 * PI, 41).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 0.0);
        assert!((g[40] - 2.0 * PI).abs() < 1e-15);
        assert!(uniform_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn plot_sampling() {
        let ta = uniform_grid(0.0, 2.0 * PI, 41).unwrap();
        let tb = uniform_grid(0.0, 7.0 * PI / 4.0, 8).unwrap();
        let rows = scan_fringe(&FringeModel::mes(), &ta, &tb, Some((600.0, 10.0)));
        assert_eq!(rows.len(), 41 * 8);
        assert_eq!(rows[0].counts, Some(610.0));
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf, |x| x.to_string()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 41 * 8 + 1);
        assert!(text.starts_with("theta_a,theta_b,probability,counts\n0,0,0.25,610\n"));
    }
}
