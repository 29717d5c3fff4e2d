//! From coincidence counts to `S_d` with Poisson bootstrap errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cglmp::{s_value, ProbabilityTable, SdResult};
use crate::counts::CountTable;
use crate::error::{Error, Result};

pub const DEFAULT_REPLICATES: usize = 10_000;

/// Normalizes every basis-pair block of `table` by its own total.
pub fn counts_to_probabilities(table: &CountTable) -> Result<ProbabilityTable> {
    normalize(table.dim(), table.as_slice())
}

fn normalize(d: usize, counts: &[u64]) -> Result<ProbabilityTable> {
    let block = d * d;
    let mut probs = Vec::with_capacity(counts.len());
    for (index, chunk) in counts.chunks(block).enumerate() {
        let total: u64 = chunk.iter().sum();
        if total == 0 {
            return Err(Error::InvalidCounts(format!(
                "block ({}, {}) has no counts",
                index / 2,
                index % 2
            )));
        }
        probs.extend(chunk.iter().map(|&n| n as f64 / total as f64));
    }
    ProbabilityTable::new(d, probs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReportJson", from = "ReportJson")]
pub struct AnalysisReport {
    /// Point estimate with bootstrap standard error.
    pub s: SdResult,
    pub probabilities: ProbabilityTable,
    /// Replicates requested.
    pub replicates: usize,
    /// Replicates discarded because a resampled block came out empty.
    pub discarded: usize,
    pub seed: u64,
}

/// Serialized form; `violation_sigmas` is derived on output and ignored on
/// input.
#[derive(Serialize, Deserialize)]
struct ReportJson {
    s: SdResult,
    #[serde(default)]
    violation_sigmas: Option<f64>,
    replicates: usize,
    discarded: usize,
    seed: u64,
    probabilities: ProbabilityTable,
}

impl From<AnalysisReport> for ReportJson {
    fn from(report: AnalysisReport) -> Self {
        Self {
            violation_sigmas: report.violation_sigmas(),
            s: report.s,
            replicates: report.replicates,
            discarded: report.discarded,
            seed: report.seed,
            probabilities: report.probabilities,
        }
    }
}

impl From<ReportJson> for AnalysisReport {
    fn from(json: ReportJson) -> Self {
        Self {
            s: json.s,
            probabilities: json.probabilities,
            replicates: json.replicates,
            discarded: json.discarded,
            seed: json.seed,
        }
    }
}

impl AnalysisReport {
    /// `(S − 2)/σ`, recomputed from the stored estimate.
    pub fn violation_sigmas(&self) -> Option<f64> {
        self.s.violation_sigmas()
    }
}

/// Point estimate of `S_d` from per-block frequencies, plus a bootstrap
/// standard error from `replicates` cell-wise Poisson resamplings.
///
/// Replicate `i` draws from ChaCha8 stream `i` of `seed`, so the result is
/// independent of thread count. The standard error is the sample standard
/// deviation (`n − 1`) over replicates; it is absent for `replicates < 2`.
pub fn analyze_counts(table: &CountTable, replicates: usize, seed: u64) -> Result<AnalysisReport> {
    let probabilities = counts_to_probabilities(table)?;
    let value = s_value(&probabilities).value;

    let cells: Vec<Option<Poisson<f64>>> = table
        .as_slice()
        .iter()
        .map(|&n| (n > 0).then(|| Poisson::new(n as f64).expect("positive mean")))
        .collect();
    let d = table.dim();
    let samples: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let resampled: Vec<u64> = cells
                .iter()
                .map(|cell| cell.as_ref().map_or(0, |p| p.sample(&mut rng) as u64))
                .collect();
            normalize(d, &resampled).ok().map(|t| s_value(&t).value)
        })
        .collect();

    let kept: Vec<f64> = samples.iter().flatten().copied().collect();
    let stderr = (kept.len() >= 2).then(|| {
        let n = kept.len() as f64;
        let mean = kept.iter().sum::<f64>() / n;
        (kept.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    Ok(AnalysisReport {
        s: SdResult { value, stderr },
        probabilities,
        replicates,
        discarded: replicates - kept.len(),
        seed,
    })
}
