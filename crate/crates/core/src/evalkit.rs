//! Structure-recovery metrics and posterior predictive checks.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::bdmcmc::{ChainTrace, EdgeProbMatrix};
use crate::copula::MixedDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numkit::{invert_spd, std_normal_cdf};
use crate::simgen::gen_latent;

/// Edge decisions over unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(estimated: &Graph, truth: &Graph) -> Result<Self> {
        check_dims(estimated.p(), truth.p())?;
        let mut c = ConfusionCounts::default();
        for e in truth.pairs() {
            match (estimated.contains(e), truth.contains(e)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `2TP / (2TP + FP + FN)`, with 1 when both graphs are empty.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: b, actual: a });
    }
    Ok(())
}

pub fn f1_score(estimated: &Graph, truth: &Graph) -> Result<f64> {
    Ok(ConfusionCounts::new(estimated, truth)?.f1())
}

/// `Σ_e (p̂_e − I(e ∈ truth))²` over unordered pairs.
pub fn mse(probs: &EdgeProbMatrix, truth: &Graph) -> Result<f64> {
    check_dims(probs.p(), truth.p())?;
    Ok(truth
        .pairs()
        .map(|e| (probs.get(e) - f64::from(u8::from(truth.contains(e)))).powi(2))
        .sum())
}

/// `(FPR, TPR)` points of a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Trapezoidal area.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    /// Never below the diagonal and with area above one half.
    pub fn dominates_diagonal(&self) -> bool {
        self.points.iter().all(|&(f, t)| t >= f) && self.auc() > 0.5
    }
}

pub fn roc_points(probs: &EdgeProbMatrix, truth: &Graph) -> Result<RocCurve> {
    roc_points_pooled(&[(probs, truth)])
}

/// ROC over the pairs of several `(probabilities, truth)` problems at once.
pub fn roc_points_pooled(problems: &[(&EdgeProbMatrix, &Graph)]) -> Result<RocCurve> {
    let mut scores = Vec::new();
    for (probs, truth) in problems {
        check_dims(probs.p(), truth.p())?;
        scores.extend(truth.pairs().map(|e| (probs.get(e), truth.contains(e))));
    }
    roc_from_scores(scores)
}

/// Thresholds are the distinct scores in decreasing order; a pair counts as
/// positive when its score is at least the threshold.
pub fn roc_from_scores(mut scores: Vec<(f64, bool)>) -> Result<RocCurve> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 {
        return Err(Error::UndefinedRoc("no true edges, TPR undefined"));
    }
    if neg == 0 {
        return Err(Error::UndefinedRoc("no true non-edges, FPR undefined"));
    }
    scores.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < scores.len() {
        let t = scores[k].0;
        while k < scores.len() && scores[k].0 == t {
            if scores[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve { points })
}

/// Upper bin edges: a value falls in the first bin whose edge is `>=` it,
/// and in an extra last bin when it exceeds every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("bin edges must be finite and strictly increasing".into()));
        }
        Ok(BinSpec { edges })
    }

    /// Flexion-angle severity categories: 0, (0,45], (45,90], (90,135], >135.
    pub fn tubiana() -> Self {
        BinSpec { edges: vec![0.0, 45.0, 90.0, 135.0] }
    }

    /// Age groups: ≤50, (50,60], (60,70], >70.
    pub fn age() -> Self {
        BinSpec { edges: vec![50.0, 60.0, 70.0] }
    }

    pub fn bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin_of(&self, v: f64) -> usize {
        self.edges.iter().position(|&e| v <= e).unwrap_or(self.edges.len())
    }

    pub fn labels(&self) -> Vec<String> {
        let e = &self.edges;
        let mut out = vec![format!("<={}", fmt_edge(e[0]))];
        out.extend(e.windows(2).map(|w| format!("({},{}]", fmt_edge(w[0]), fmt_edge(w[1]))));
        out.push(format!(">{}", fmt_edge(e[e.len() - 1])));
        out
    }
}

fn fmt_edge(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// What to tabulate: `target` levels (raw or binned) within bins of `given`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    pub target: usize,
    pub given: usize,
    pub given_bins: BinSpec,
    pub target_bins: Option<BinSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub given_labels: Vec<String>,
    pub target_levels: Vec<String>,
    /// Cell counts, one row per bin of the conditioning column.
    pub counts: Vec<Vec<usize>>,
}

impl ConditionalTable {
    /// Row-normalized frequencies; `None` marks an empty conditioning bin.
    pub fn frequencies(&self) -> Vec<Option<Vec<f64>>> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row.iter().map(|&c| c as f64 / total as f64).collect())
            })
            .collect()
    }
}

pub fn conditional_histogram(data: &MixedDataset, spec: &HistogramSpec) -> Result<ConditionalTable> {
    conditional_histogram_pooled(std::slice::from_ref(data), spec)
}

/// Counts pooled over several datasets with a common layout.
pub fn conditional_histogram_pooled(datasets: &[MixedDataset], spec: &HistogramSpec) -> Result<ConditionalTable> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no datasets to tabulate".into()))?;
    let p = first.p();
    if spec.target == spec.given {
        return Err(Error::InvalidArgument("target and conditioning columns must differ".into()));
    }
    if spec.target >= p || spec.given >= p {
        return Err(Error::DimensionMismatch { expected: p, actual: spec.target.max(spec.given) + 1 });
    }
    let mut cells: Vec<(usize, f64)> = Vec::new();
    for d in datasets {
        check_dims(d.p(), p)?;
        for r in 0..d.n() {
            if !d.is_missing(r, spec.target) && !d.is_missing(r, spec.given) {
                cells.push((spec.given_bins.bin_of(d.value(r, spec.given)), d.value(r, spec.target)));
            }
        }
    }
    let (target_levels, level_of): (Vec<String>, Box<dyn Fn(f64) -> usize>) = match &spec.target_bins {
        Some(tb) => {
            let tb = tb.clone();
            (tb.labels(), Box::new(move |v| tb.bin_of(v)))
        }
        None => {
            let mut levels: Vec<f64> = cells.iter().map(|c| c.1).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let labels = levels.iter().map(|v| format!("{v}")).collect();
            (labels, Box::new(move |v| levels.partition_point(|&l| l < v)))
        }
    };
    let mut counts = vec![vec![0usize; target_levels.len()]; spec.given_bins.bins()];
    for (bin, v) in cells {
        counts[bin][level_of(v)] += 1;
    }
    Ok(ConditionalTable {
        given_labels: spec.given_bins.labels(),
        target_levels,
        counts,
    })
}

/// Smallest observed value whose scaled empirical CDF `#{y ≤ v}/(m+1)`
/// reaches `u`; the largest observed value when none does.
pub fn scaled_empirical_quantile(sorted: &[f64], u: f64) -> f64 {
    let m = sorted.len();
    let k = (u * (m as f64 + 1.0)).ceil().max(1.0) as usize;
    sorted[k.min(m) - 1]
}

/// Replicate datasets from the posterior predictive: for each draw a
/// retained state is picked in proportion to its waiting time, latent rows
/// come from `N(0, K⁻¹)` and each column is mapped to the observed scale
/// through the scaled empirical quantile function of the data.
pub fn posterior_predictive_sample<R: Rng + ?Sized>(
    trace: &ChainTrace,
    data: &MixedDataset,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<MixedDataset>> {
    let states = &trace.kept_states;
    if states.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let p = data.p();
    check_dims(trace.p(), p)?;
    let pick = WeightedIndex::new(states.iter().map(|s| s.weight))
        .map_err(|e| Error::InvalidArgument(format!("state weights: {e}")))?;
    let sorted: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut c = data.observed_column(j);
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    (0..draws)
        .map(|_| {
            let k = states[pick.sample(rng)].precision(p);
            predictive_from_precision(&k, data, &sorted, rng)
        })
        .collect()
}

fn predictive_from_precision<R: Rng + ?Sized>(
    k: &DMatrix<f64>,
    data: &MixedDataset,
    sorted: &[Vec<f64>],
    rng: &mut R,
) -> Result<MixedDataset> {
    let sigma = invert_spd(k)?;
    let z = gen_latent(k, data.n(), rng)?;
    let y = DMatrix::from_fn(data.n(), data.p(), |r, j| {
        let u = std_normal_cdf(z[(r, j)] / sigma[(j, j)].sqrt());
        scaled_empirical_quantile(&sorted[j], u)
    });
    MixedDataset::with_names(
        y,
        data.kinds().to_vec(),
        DMatrix::from_element(data.n(), data.p(), false),
        data.names().to_vec(),
    )
}
