//! Extended rank likelihood layer.
//!
//! Observed mixed data enter only through the within-column orderings:
//! each latent cell must stay strictly above every latent value whose
//! observation is smaller and strictly below every one whose observation
//! is larger. Ties impose no mutual constraint.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkit::{sample_truncated_normal, std_normal_quantile, TruncationInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Continuous,
    Ordinal,
    Count,
    Binary,
}

impl VariableKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VariableKind::Continuous)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Continuous => "continuous",
            VariableKind::Ordinal => "ordinal",
            VariableKind::Count => "count",
            VariableKind::Binary => "binary",
        }
    }
}

impl std::str::FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continuous" => Ok(VariableKind::Continuous),
            "ordinal" => Ok(VariableKind::Ordinal),
            "count" => Ok(VariableKind::Count),
            "binary" => Ok(VariableKind::Binary),
            other => Err(Error::InvalidArgument(format!("unknown variable kind `{other}`"))),
        }
    }
}

/// `n × p` table of mixed observations with a missing mask.
///
/// Discrete levels are stored as reals. Missing cells hold `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    values: DMatrix<f64>,
    kinds: Vec<VariableKind>,
    missing: DMatrix<bool>,
    names: Vec<String>,
}

impl MixedDataset {
    pub fn new(values: DMatrix<f64>, kinds: Vec<VariableKind>, missing: DMatrix<bool>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("V{}", j + 1)).collect();
        Self::with_names(values, kinds, missing, names)
    }

    pub fn fully_observed(values: DMatrix<f64>, kinds: Vec<VariableKind>) -> Result<Self> {
        let missing = DMatrix::from_element(values.nrows(), values.ncols(), false);
        Self::new(values, kinds, missing)
    }

    pub fn with_names(
        mut values: DMatrix<f64>,
        kinds: Vec<VariableKind>,
        missing: DMatrix<bool>,
        names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = values.shape();
        if n < 2 || p < 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset needs n >= 2 and p >= 2, got {n} x {p}"
            )));
        }
        if kinds.len() != p || names.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: kinds.len().min(names.len()),
            });
        }
        if missing.shape() != (n, p) {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                actual: missing.len(),
            });
        }
        for j in 0..p {
            let mut levels: Vec<f64> = Vec::new();
            for r in 0..n {
                if missing[(r, j)] {
                    values[(r, j)] = 0.0;
                    continue;
                }
                let v = values[(r, j)];
                let bad = |msg: &str| Error::Cell {
                    row: r,
                    col: j,
                    name: names[j].clone(),
                    message: format!("{msg} (value {v})"),
                };
                if !v.is_finite() {
                    return Err(bad("non-finite value"));
                }
                if kinds[j].is_discrete() && v.fract() != 0.0 {
                    return Err(bad("discrete cell must hold an integer level"));
                }
                if kinds[j] == VariableKind::Binary && !levels.contains(&v) {
                    levels.push(v);
                    if levels.len() > 2 {
                        return Err(bad("binary column has more than two levels"));
                    }
                }
            }
        }
        Ok(MixedDataset {
            values,
            kinds,
            missing,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn kinds(&self) -> &[VariableKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn missing(&self) -> &DMatrix<bool> {
        &self.missing
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[(row, col)]
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Observed (non-missing) values of column `j`.
    pub fn observed_column(&self, j: usize) -> Vec<f64> {
        (0..self.n())
            .filter(|&r| !self.missing[(r, j)])
            .map(|r| self.values[(r, j)])
            .collect()
    }

    pub fn rename(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                actual: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    /// Copy with the given cells masked.
    pub fn with_missing(&self, missing: DMatrix<bool>) -> Result<Self> {
        Self::with_names(self.values.clone(), self.kinds.clone(), missing, self.names.clone())
    }
}

/// Latent Gaussian matrix, `n × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    z: DMatrix<f64>,
}

impl LatentMatrix {
    pub fn new(z: DMatrix<f64>) -> Self {
        LatentMatrix { z }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.z
    }

    /// `zᵀz`.
    pub fn scatter(&self) -> DMatrix<f64> {
        self.z.tr_mul(&self.z)
    }

    /// Exact check: for every column, a strictly smaller observation never
    /// carries a larger-or-equal latent value.
    pub fn is_rank_consistent(&self, data: &MixedDataset) -> bool {
        (0..data.p()).all(|j| {
            let mut cells: Vec<(f64, f64)> = (0..data.n())
                .filter(|&r| !data.is_missing(r, j))
                .map(|r| (data.value(r, j), self.z[(r, j)]))
                .collect();
            cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            // compare the max latent value of each level with the min of the next
            let mut prev_max = f64::NEG_INFINITY;
            let mut k = 0;
            while k < cells.len() {
                let level = cells[k].0;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                while k < cells.len() && cells[k].0 == level {
                    lo = lo.min(cells[k].1);
                    hi = hi.max(cells[k].1);
                    k += 1;
                }
                if !(prev_max < lo) {
                    return false;
                }
                prev_max = hi;
            }
            true
        })
    }
}

/// Bounds of the set of latent values for `row` that keep the column
/// rank-consistent, computed directly from the definition.
pub fn truncation_bounds(z_col: &[f64], y_col: &[f64], row: usize, missing: &[bool]) -> TruncationInterval {
    let y = y_col[row];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for (s, (&ys, &zs)) in y_col.iter().zip(z_col).enumerate() {
        if missing[s] {
            continue;
        }
        if ys < y {
            lower = lower.max(zs);
        } else if ys > y {
            upper = upper.min(zs);
        }
    }
    TruncationInterval { lower, upper }
}

/// Per-column grouping of rows by observed level, built once per dataset.
#[derive(Debug, Clone)]
pub struct RankStructure {
    columns: Vec<ColumnLevels>,
}

#[derive(Debug, Clone)]
struct ColumnLevels {
    /// Level index of each row, `None` when missing.
    level_of_row: Vec<Option<usize>>,
    /// Rows at each level, levels in increasing observed value.
    rows: Vec<Vec<usize>>,
}

impl RankStructure {
    pub fn new(data: &MixedDataset) -> Self {
        let columns = (0..data.p())
            .map(|j| {
                let mut by_value: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
                for r in 0..data.n() {
                    if !data.is_missing(r, j) {
                        let v = data.value(r, j);
                        by_value.entry(order_key(v)).or_insert((v, Vec::new())).1.push(r);
                    }
                }
                let rows: Vec<Vec<usize>> = by_value.into_values().map(|(_, rows)| rows).collect();
                let mut level_of_row = vec![None; data.n()];
                for (k, rs) in rows.iter().enumerate() {
                    for &r in rs {
                        level_of_row[r] = Some(k);
                    }
                }
                ColumnLevels { level_of_row, rows }
            })
            .collect();
        RankStructure { columns }
    }

    /// Number of distinct observed levels in column `j`.
    pub fn levels(&self, j: usize) -> usize {
        self.columns[j].rows.len()
    }
}

/// Maps an f64 to a u64 preserving total order, so levels sort numerically.
fn order_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Which cells a latent sweep resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Every cell; observed ones truncated to their rank interval.
    RankTruncated,
    /// Only missing cells; observed cells hold the data themselves.
    MissingOnly,
}

/// One systematic-scan Gibbs sweep over the latent matrix (variables outer,
/// observations inner, ascending). Bounds are read from the live column, so
/// updates earlier in the sweep are visible to later cells.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    z: &mut LatentMatrix,
    k: &DMatrix<f64>,
    ranks: &RankStructure,
    mode: SweepMode,
    rng: &mut R,
) -> Result<()> {
    let (n, p) = z.z.shape();
    if k.nrows() != p || ranks.columns.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: k.nrows(),
        });
    }
    for var in 0..p {
        let col = &ranks.columns[var];
        let kvv = k[(var, var)];
        let sd = 1.0 / kvv.sqrt();
        let nlev = col.rows.len();
        let mut lvl_min = vec![f64::INFINITY; nlev];
        let mut lvl_max = vec![f64::NEG_INFINITY; nlev];
        if mode == SweepMode::RankTruncated {
            for (l, rows) in col.rows.iter().enumerate() {
                for &r in rows {
                    lvl_min[l] = lvl_min[l].min(z.z[(r, var)]);
                    lvl_max[l] = lvl_max[l].max(z.z[(r, var)]);
                }
            }
        }
        for row in 0..n {
            let level = col.level_of_row[row];
            if level.is_some() && mode == SweepMode::MissingOnly {
                continue;
            }
            let mut acc = 0.0;
            for c in 0..p {
                if c != var {
                    acc += k[(var, c)] * z.z[(row, c)];
                }
            }
            let mu = -acc / kvv;
            if !mu.is_finite() || !sd.is_finite() {
                return Err(Error::NonFiniteConditional { row, col: var });
            }
            let Some(l) = level else {
                z.z[(row, var)] = mu + sd * rng.sample::<f64, _>(StandardNormal);
                continue;
            };
            let lower = if l > 0 { lvl_max[l - 1] } else { f64::NEG_INFINITY };
            let upper = if l + 1 < nlev { lvl_min[l + 1] } else { f64::INFINITY };
            let old = z.z[(row, var)];
            let v = sample_truncated_normal(mu, sd, TruncationInterval { lower, upper }, rng)?;
            z.z[(row, var)] = v;
            if v > lvl_max[l] {
                lvl_max[l] = v;
            } else if old == lvl_max[l] {
                lvl_max[l] = col.rows[l].iter().map(|&r| z.z[(r, var)]).fold(f64::NEG_INFINITY, f64::max);
            }
            if v < lvl_min[l] {
                lvl_min[l] = v;
            } else if old == lvl_min[l] {
                lvl_min[l] = col.rows[l].iter().map(|&r| z.z[(r, var)]).fold(f64::INFINITY, f64::min);
            }
        }
    }
    Ok(())
}

/// Resamples every latent cell from its full conditional given `K`, truncated
/// to the rank interval for observed cells and untruncated for missing ones.
pub fn gibbs_update_latent<R: Rng + ?Sized>(
    z: &LatentMatrix,
    k: &DMatrix<f64>,
    data: &MixedDataset,
    rng: &mut R,
) -> Result<LatentMatrix> {
    let ranks = RankStructure::new(data);
    let mut out = z.clone();
    gibbs_sweep(&mut out, k, &ranks, SweepMode::RankTruncated, rng)?;
    debug_assert!(out.is_rank_consistent(data));
    Ok(out)
}

/// Normal scores from mid-ranks, `Φ⁻¹(rank / (n_obs + 1))`, with ties broken
/// by noise smaller than half the smallest gap between distinct scores.
/// Missing cells are drawn from `N(0, 1)`.
pub fn initialize_latent<R: Rng + ?Sized>(data: &MixedDataset, rng: &mut R) -> LatentMatrix {
    let (n, p) = (data.n(), data.p());
    let ranks = RankStructure::new(data);
    let mut z = DMatrix::<f64>::zeros(n, p);
    for j in 0..p {
        let col = &ranks.columns[j];
        let n_obs: usize = col.rows.iter().map(Vec::len).sum();
        let mut before = 0usize;
        let scores: Vec<f64> = col
            .rows
            .iter()
            .map(|rows| {
                let mid = before as f64 + (rows.len() as f64 + 1.0) / 2.0;
                before += rows.len();
                std_normal_quantile(mid / (n_obs as f64 + 1.0))
            })
            .collect();
        let gap = scores
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let jitter = if gap.is_finite() { 0.45 * gap } else { 0.1 };
        for (l, rows) in col.rows.iter().enumerate() {
            for &r in rows {
                let noise = if rows.len() > 1 { jitter * (2.0 * rng.random::<f64>() - 1.0) } else { 0.0 };
                z[(r, j)] = scores[l] + noise;
            }
        }
        for r in 0..n {
            if col.level_of_row[r].is_none() {
                z[(r, j)] = rng.sample(StandardNormal);
            }
        }
    }
    LatentMatrix { z }
}
