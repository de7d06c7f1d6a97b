//! Continuous-time birth-death sampler over graphs.
//!
//! Each iteration refreshes the latent data, computes a rate for every
//! possible edge toggle, records the current graph with waiting time
//! `1 / Σ rates`, jumps along one toggle chosen in proportion to its rate
//! and redraws the precision matrix from the G-Wishart posterior of the
//! new graph.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::copula::{gibbs_sweep, initialize_latent, LatentMatrix, MixedDataset, RankStructure, SweepMode};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::gwishart::{log_norm_ratio_identity, sample_gwishart, ConstrainedPrecision, GWishartParams};
use crate::numkit::{stream_rng, ChainRng, SpdMatrix};

/// How the data enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMethod {
    /// Latent Gaussian copula with rank-truncated latent updates.
    #[default]
    Copula,
    /// Data taken as Gaussian; only missing cells are imputed.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub b_prior: f64,
    /// Log prior odds per edge; 0 gives the uniform prior over graphs.
    pub prior_edge_logit: f64,
    pub seed: u64,
    /// RNG stream, so replicate chains with one seed stay independent.
    pub stream: u64,
    pub rate_cap: f64,
    pub method: ChainMethod,
    /// Keep every `thin`-th post-burn-in precision matrix; 0 keeps none.
    pub thin: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 10_000,
            burn_in: 5_000,
            b_prior: 3.0,
            prior_edge_logit: 0.0,
            seed: 1,
            stream: 0,
            rate_cap: 20f64.exp(),
            method: ChainMethod::Copula,
            thin: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if !(self.b_prior > 2.0) || !self.b_prior.is_finite() {
            return Err(Error::InvalidArgument(format!("b_prior must exceed 2, got {}", self.b_prior)));
        }
        if !(self.rate_cap > 0.0) {
            return Err(Error::InvalidArgument(format!("rate_cap must be positive, got {}", self.rate_cap)));
        }
        if !self.prior_edge_logit.is_finite() {
            return Err(Error::InvalidArgument("prior_edge_logit must be finite".into()));
        }
        Ok(())
    }

    fn log_rate_cap(&self) -> f64 {
        self.rate_cap.ln()
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub graph: Graph,
    pub k: ConstrainedPrecision,
    pub z: LatentMatrix,
    /// `I + zᵀz`.
    pub dstar: SpdMatrix,
    /// `b + n`.
    pub bstar: f64,
}

impl ChainState {
    /// Posterior G-Wishart parameters for the current latent data.
    pub fn posterior(&self) -> Result<GWishartParams> {
        GWishartParams::new(self.bstar, self.dstar.clone())
    }

    fn refresh_dstar(&mut self) -> Result<()> {
        let p = self.graph.p();
        self.dstar = SpdMatrix::new(DMatrix::identity(p, p) + self.z.scatter())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Waiting time of the graph held before the jump.
    pub waiting_time: f64,
    pub edge: Edge,
    pub kind: JumpKind,
}

/// Precision matrix retained for posterior predictive draws.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KeptState {
    pub weight: f64,
    /// Row-major `p × p`.
    pub k: Vec<f64>,
}

impl KeptState {
    pub fn precision(&self, p: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(p, p, &self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    p: usize,
    pub weighted_graphs: Vec<(String, f64)>,
    pub edge_weight_acc: DMatrix<f64>,
    pub k_weight_acc: DMatrix<f64>,
    pub total_weight: f64,
    /// Edge count at every iteration, burn-in included.
    pub size_trace: Vec<usize>,
    /// Waiting time at every iteration, burn-in included.
    pub waiting_trace: Vec<f64>,
    pub kept_states: Vec<KeptState>,
}

impl ChainTrace {
    pub fn new(p: usize) -> Self {
        ChainTrace {
            p,
            weighted_graphs: Vec::new(),
            edge_weight_acc: DMatrix::zeros(p, p),
            k_weight_acc: DMatrix::zeros(p, p),
            total_weight: 0.0,
            size_trace: Vec::new(),
            waiting_trace: Vec::new(),
            kept_states: Vec::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Adds one post-burn-in visit.
    pub fn record(&mut self, graph: &Graph, k: &DMatrix<f64>, weight: f64) {
        self.weighted_graphs.push((graph.fingerprint(), weight));
        for e in graph.edges() {
            self.edge_weight_acc[(e.i(), e.j())] += weight;
            self.edge_weight_acc[(e.j(), e.i())] += weight;
        }
        self.k_weight_acc += k * weight;
        self.total_weight += weight;
    }

    /// Total waiting time per visited graph, keyed by fingerprint.
    pub fn graph_weights(&self) -> HashMap<String, f64> {
        let mut out = HashMap::new();
        for (fp, w) in &self.weighted_graphs {
            *out.entry(fp.clone()).or_insert(0.0) += w;
        }
        out
    }

    /// Waiting-time weighted mean of the precision matrices.
    pub fn mean_precision(&self) -> Result<DMatrix<f64>> {
        if !(self.total_weight > 0.0) {
            return Err(Error::EmptyTrace);
        }
        Ok(&self.k_weight_acc / self.total_weight)
    }
}

/// Posterior edge inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbMatrix(DMatrix<f64>);

impl EdgeProbMatrix {
    /// Validates symmetry, zero diagonal and range.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let p = m.nrows();
        if m.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: m.ncols() });
        }
        for i in 0..p {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument("edge probabilities need a zero diagonal".into()));
            }
            for j in 0..p {
                let v = m[(i, j)];
                if !(0.0..=1.0).contains(&v) || v != m[(j, i)] {
                    return Err(Error::InvalidArgument(format!("bad edge probability at ({i}, {j}): {v}")));
                }
            }
        }
        Ok(EdgeProbMatrix(m))
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, e: Edge) -> f64 {
        self.0[(e.i(), e.j())]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Selected edge with its posterior probability and the partial
/// correlation `-k̄_ij / sqrt(k̄_ii k̄_jj)` of the mean precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedEdge {
    pub edge: Edge,
    pub prob: f64,
    pub partial_corr: f64,
}

impl SignedEdge {
    pub fn sign(&self) -> char {
        if self.partial_corr >= 0.0 {
            '+'
        } else {
            '-'
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedGraph {
    pub graph: Graph,
    pub edges: Vec<SignedEdge>,
}

/// `log(k_ij-removal rate)` before capping, as a function of everything
/// except the prior tilt. The value depends on `K` only through
/// `K_{-j,-j}` and `K_{R,j}` with `R = V \ {i,j}`.
fn log_death_core(k: &ConstrainedPrecision, dstar: &DMatrix<f64>, b: f64, e: Edge, d: usize) -> Result<f64> {
    let (i, j) = (e.i(), e.j());
    let s = k.sigma();
    let kk = k.k();
    let p = kk.nrows();
    // M = (K_{-j,-j})⁻¹ = Σ_{-j,-j} − Σ_{-j,j} Σ_{j,-j} / Σ_jj
    let sjj = s[(j, j)];
    let m_ii = s[(i, i)] - s[(i, j)] * s[(i, j)] / sjj;
    let a11 = 1.0 / m_ii;
    if !(a11 > 0.0) || !a11.is_finite() {
        return Err(Error::CorruptedPrecision { i, j, value: a11 });
    }
    // u_i = Σ_{r∈R} M_ir K_rj
    let mut u = 0.0;
    for r in 0..p {
        if r != i && r != j {
            u += (s[(i, r)] - s[(i, j)] * s[(j, r)] / sjj) * kk[(r, j)];
        }
    }
    let (dij, djj) = (dstar[(i, j)], dstar[(j, j)]);
    let h = a11 * (dij + djj * u).powi(2) / djj;
    Ok(log_norm_ratio_identity(b, d) - 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * (djj / a11).ln() - 0.5 * h)
}

/// Uncapped log death rate of edge `e ∈ G`.
pub fn log_death_rate(state: &ChainState, e: Edge, cfg: &ChainConfig) -> Result<f64> {
    if !state.graph.contains(e) {
        return Err(Error::InvalidArgument(format!("death rate of absent edge {e:?}")));
    }
    let d = state.graph.triangle_count(e);
    Ok(-cfg.prior_edge_logit + log_death_core(&state.k, state.dstar.as_matrix(), cfg.b_prior, e, d)?)
}

/// Uncapped log birth rate of edge `e ∉ G`: the inverse of the death rate
/// of `e` in `G + e`, which does not involve the entries `(i,j)` and `(j,j)`
/// and so needs no completion of `K`.
pub fn log_birth_rate(state: &ChainState, e: Edge, cfg: &ChainConfig) -> Result<f64> {
    if state.graph.contains(e) {
        return Err(Error::InvalidArgument(format!("birth rate of present edge {e:?}")));
    }
    let d = state.graph.triangle_count(e);
    Ok(cfg.prior_edge_logit - log_death_core(&state.k, state.dstar.as_matrix(), cfg.b_prior, e, d)?)
}

pub fn death_rate(state: &ChainState, e: Edge, cfg: &ChainConfig) -> Result<f64> {
    Ok(log_death_rate(state, e, cfg)?.min(cfg.log_rate_cap()).exp())
}

pub fn birth_rate(state: &ChainState, e: Edge, cfg: &ChainConfig) -> Result<f64> {
    Ok(log_birth_rate(state, e, cfg)?.min(cfg.log_rate_cap()).exp())
}

/// Capped log rates of every toggle, in `Graph::pairs` order.
pub fn log_rates(state: &ChainState, cfg: &ChainConfig) -> Result<Vec<(Edge, JumpKind, f64)>> {
    let cap = cfg.log_rate_cap();
    state
        .graph
        .pairs()
        .map(|e| {
            let (kind, lr) = if state.graph.contains(e) {
                (JumpKind::Death, log_death_rate(state, e, cfg)?)
            } else {
                (JumpKind::Birth, log_birth_rate(state, e, cfg)?)
            };
            Ok((e, kind, lr.min(cap)))
        })
        .collect()
}

/// Index drawn in proportion to `exp(log_weights)`.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let dist = WeightedIndex::new(&w).map_err(|e| Error::InvalidArgument(format!("categorical weights: {e}")))?;
    Ok(dist.sample(rng))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// One birth-death jump: rates, waiting time, toggle, fresh precision.
pub fn step<R: Rng + ?Sized>(state: &mut ChainState, cfg: &ChainConfig, rng: &mut R) -> Result<StepOutcome> {
    let rates = log_rates(state, cfg)?;
    let lrs: Vec<f64> = rates.iter().map(|r| r.2).collect();
    let log_total = log_sum_exp(&lrs);
    let waiting_time = (-log_total).exp();
    if !log_total.is_finite() || !(waiting_time > 0.0) || !waiting_time.is_finite() {
        return Err(Error::ZeroTotalRate {
            log_total,
            edges: state.graph.edge_count(),
        });
    }
    let (edge, kind, _) = rates[sample_log_categorical(&lrs, rng)?];
    state.graph.toggle(edge)?;
    state.k = sample_gwishart(&state.graph, &state.posterior()?, rng)?;
    Ok(StepOutcome {
        waiting_time,
        edge,
        kind,
    })
}

/// Runs the sampler from the empty graph with `K = b I`.
pub fn run_chain(data: &MixedDataset, cfg: &ChainConfig) -> Result<ChainTrace> {
    run_chain_from(data, cfg, None)
}

/// Runs the sampler from `initial` (empty graph when `None`). A non-empty
/// starting graph gets its precision from the posterior given the initial
/// latent data.
pub fn run_chain_from(data: &MixedDataset, cfg: &ChainConfig, initial: Option<&Graph>) -> Result<ChainTrace> {
    cfg.validate()?;
    let p = data.p();
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let mut state = initial_state(data, cfg, initial, &mut rng)?;
    let ranks = RankStructure::new(data);
    let mode = match cfg.method {
        ChainMethod::Copula => SweepMode::RankTruncated,
        ChainMethod::Gaussian => SweepMode::MissingOnly,
    };
    let mut trace = ChainTrace::new(p);
    for it in 0..cfg.iterations {
        if mode == SweepMode::RankTruncated || data.missing_count() > 0 {
            gibbs_sweep(&mut state.z, state.k.k(), &ranks, mode, &mut rng)?;
            state.refresh_dstar()?;
        }
        let size = state.graph.edge_count();
        let pre_graph = (it >= cfg.burn_in).then(|| (state.graph.clone(), state.k.k().clone()));
        let out = step(&mut state, cfg, &mut rng)?;
        trace.size_trace.push(size);
        trace.waiting_trace.push(out.waiting_time);
        if let Some((g, k)) = pre_graph {
            trace.record(&g, &k, out.waiting_time);
            let kept = it - cfg.burn_in;
            if cfg.thin > 0 && kept % cfg.thin == 0 {
                trace.kept_states.push(KeptState {
                    weight: out.waiting_time,
                    k: k.transpose().as_slice().to_vec(),
                });
            }
        }
    }
    Ok(trace)
}

fn initial_state(
    data: &MixedDataset,
    cfg: &ChainConfig,
    initial: Option<&Graph>,
    rng: &mut ChainRng,
) -> Result<ChainState> {
    let (n, p) = (data.n(), data.p());
    let z = match cfg.method {
        ChainMethod::Copula => initialize_latent(data, rng),
        ChainMethod::Gaussian => {
            let init = initialize_latent(data, rng);
            let mut z = data.values().clone();
            for r in 0..n {
                for c in 0..p {
                    if data.is_missing(r, c) {
                        z[(r, c)] = init.as_matrix()[(r, c)];
                    }
                }
            }
            LatentMatrix::new(z)
        }
    };
    let graph = match initial {
        Some(g) if g.p() != p => return Err(Error::DimensionMismatch { expected: p, actual: g.p() }),
        Some(g) => g.clone(),
        None => Graph::empty(p)?,
    };
    let dstar = SpdMatrix::new(DMatrix::identity(p, p) + z.scatter())?;
    let bstar = cfg.b_prior + n as f64;
    let k = if graph.edge_count() == 0 {
        ConstrainedPrecision::new(DMatrix::identity(p, p) * cfg.b_prior, graph.clone())?
    } else {
        sample_gwishart(&graph, &GWishartParams::new(bstar, dstar.clone())?, rng)?
    };
    Ok(ChainState {
        graph,
        k,
        z,
        dstar,
        bstar,
    })
}

/// `p̂_e = Σ_t I(e ∈ G_t) W_t / Σ_t W_t`.
pub fn edge_probabilities(trace: &ChainTrace) -> Result<EdgeProbMatrix> {
    if !(trace.total_weight > 0.0) {
        return Err(Error::EmptyTrace);
    }
    let mut m = &trace.edge_weight_acc / trace.total_weight;
    m.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    for i in 0..m.nrows() {
        m[(i, i)] = 0.0;
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    EdgeProbMatrix::new(m)
}

/// Edges with `p̂_e > threshold`, signed by the partial correlations of
/// `mean_k` when given (zero otherwise).
pub fn select_graph(probs: &EdgeProbMatrix, threshold: f64, mean_k: Option<&DMatrix<f64>>) -> Result<SelectedGraph> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let p = probs.p();
    let mut graph = Graph::empty(p)?;
    let mut edges = Vec::new();
    for e in graph.pairs().collect::<Vec<_>>() {
        let prob = probs.get(e);
        if prob > threshold {
            graph.toggle(e)?;
            let partial_corr = mean_k.map_or(0.0, |k| {
                -k[(e.i(), e.j())] / (k[(e.i(), e.i())] * k[(e.j(), e.j())]).sqrt()
            });
            edges.push(SignedEdge { edge: e, prob, partial_corr });
        }
    }
    Ok(SelectedGraph { graph, edges })
}
