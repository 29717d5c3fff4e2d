//! Coincidence count tables, their CSV form, and the two measured
//! ququart datasets.
//!
//! CSV layout (UTF-8, LF line endings):
//!
//! ```text
//! # cglmp coincidence counts
//! # phases: theta_A = (2 pi/d)(l + alpha_a), alpha = (0, 1/2); theta_B = (2 pi/d)(-l + beta_b), beta = (1/4, -1/4)
//! # meta: measurement_time_s=120
//! alice_basis,bob_basis,alice_outcome,bob_outcome,count
//! 0,0,0,0,605
//! ```
//!
//! Outcome columns hold the outcome labels `l`, not phases. Lines starting
//! with `#` are comments; `# meta: key=value` comments carry metadata.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cglmp::table_index;
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const CSV_HEADER: [&str; 5] = [
    "alice_basis",
    "bob_basis",
    "alice_outcome",
    "bob_outcome",
    "count",
];
const PHASE_COMMENT: &str = "# phases: theta_A = (2 pi/d)(l + alpha_a), alpha = (0, 1/2); \
theta_B = (2 pi/d)(-l + beta_b), beta = (1/4, -1/4)";
const META_PREFIX: &str = "# meta: ";

/// Coincidence counts indexed `[alice_basis][bob_basis][l_A][l_B]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    dim: usize,
    counts: Vec<u64>,
    metadata: BTreeMap<String, String>,
}

impl CountTable {
    /// `counts` is flat in `[a][b][l_A][l_B]` order; every basis-pair block
    /// needs at least one count.
    pub fn new(dim: usize, counts: Vec<u64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if counts.len() != 4 * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: 4 * dim * dim,
                found: counts.len(),
            });
        }
        let table = Self {
            dim,
            counts,
            metadata: BTreeMap::new(),
        };
        for a in 0..2 {
            for b in 0..2 {
                if table.block_total(a, b) == 0 {
                    return Err(Error::InvalidCounts(format!(
                        "block ({a}, {b}) has no counts"
                    )));
                }
            }
        }
        Ok(table)
    }

    /// Builds a `d = 4` table from the conventional 8×8 layout: row `4a + l_A`,
    /// column `4b + l_B`.
    pub fn from_grid(grid: &[[u64; 8]; 8]) -> Result<Self> {
        let mut counts = vec![0; 64];
        for (row, values) in grid.iter().enumerate() {
            for (col, &n) in values.iter().enumerate() {
                counts[table_index(4, row / 4, col / 4, row % 4, col % 4)] = n;
            }
        }
        Self::new(4, counts)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, la: usize, lb: usize) -> u64 {
        self.counts[table_index(self.dim, a, b, la, lb)]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn block(&self, a: usize, b: usize) -> &[u64] {
        let start = table_index(self.dim, a, b, 0, 0);
        &self.counts[start..start + self.dim * self.dim]
    }

    pub fn block_total(&self, a: usize, b: usize) -> u64 {
        self.block(a, b).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# cglmp coincidence counts (d = {})", self.dim)?;
        writeln!(out, "{PHASE_COMMENT}")?;
        for (key, value) in &self.metadata {
            writeln!(out, "{META_PREFIX}{key}={value}")?;
        }
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        let d = self.dim;
        for a in 0..2 {
            for b in 0..2 {
                for la in 0..d {
                    for lb in 0..d {
                        writeln!(out, "{a},{b},{la},{lb},{}", self.get(a, b, la, lb))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::parse_csv(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        for line in text.lines() {
            if let Some(entry) = line.strip_prefix(META_PREFIX) {
                let (key, value) = entry
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("metadata line without `=`: {line}")))?;
                metadata.insert(key.to_string(), value.to_string());
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?;
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Parse(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for record in reader.deserialize::<(usize, usize, usize, usize, u64)>() {
            rows.push(record?);
        }

        let d = (1..=64).find(|d| 4 * d * d == rows.len()).ok_or_else(|| {
            Error::InvalidCounts(format!("{} rows is not 4d² for any d", rows.len()))
        })?;
        let mut counts = vec![None; rows.len()];
        for (a, b, la, lb, n) in rows {
            if a > 1 || b > 1 || la >= d || lb >= d {
                return Err(Error::InvalidCounts(format!(
                    "cell ({a}, {b}, {la}, {lb}) out of range for d = {d}"
                )));
            }
            let slot = &mut counts[table_index(d, a, b, la, lb)];
            if slot.replace(n).is_some() {
                return Err(Error::InvalidCounts(format!(
                    "duplicate cell ({a}, {b}, {la}, {lb})"
                )));
            }
        }
        let counts = counts
            .into_iter()
            .map(|c| c.expect("4d² distinct cells"))
            .collect();
        let mut table = Self::new(d, counts)?;
        table.metadata = metadata;
        Ok(table)
    }
}

/// Maximally entangled ququarts: 64 phase combinations, 120 s each, μ = 0.01.
const MES_COUNTS: [[u64; 8]; 8] = [
    [605, 72, 34, 49, 493, 36, 37, 67],
    [46, 453, 74, 17, 62, 545, 31, 38],
    [29, 40, 508, 85, 30, 45, 555, 27],
    [102, 32, 33, 535, 26, 26, 48, 671],
    [102, 529, 40, 47, 515, 94, 23, 53],
    [30, 28, 473, 28, 22, 445, 92, 24],
    [47, 15, 97, 581, 25, 28, 581, 98],
    [611, 22, 18, 48, 67, 27, 34, 600],
];

/// Optimized (γ = 0.739) ququarts: 64 phase combinations, 120 s each, μ = 0.01.
const OES_COUNTS: [[u64; 8]; 8] = [
    [544, 38, 21, 60, 517, 54, 33, 30],
    [57, 426, 46, 24, 24, 458, 47, 53],
    [29, 63, 470, 25, 20, 26, 453, 53],
    [30, 49, 63, 408, 57, 43, 21, 445],
    [57, 462, 64, 42, 517, 40, 18, 84],
    [52, 29, 422, 35, 57, 398, 44, 20],
    [70, 28, 51, 439, 56, 80, 430, 31],
    [459, 55, 48, 30, 44, 40, 71, 408],
];

/// One of the embedded measured datasets, `mes` or `oes`.
pub fn dataset(name: &str) -> Result<CountTable> {
    let (grid, state) = match name {
        "mes" => (&MES_COUNTS, "maximally entangled"),
        "oes" => (&OES_COUNTS, "optimized, gamma = 0.739"),
        other => return Err(Error::UnknownDataset(other.to_string())),
    };
    Ok(CountTable::from_grid(grid)?
        .with_metadata("dataset", name)
        .with_metadata("state", state)
        .with_metadata("mu", 0.01)
        .with_metadata("measurement_time_s", 120))
}
