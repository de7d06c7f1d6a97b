//! G-Wishart machinery.
//!
//! Densities follow the convention `p(K) ∝ |K|^{(b-2)/2} exp(-tr(DK)/2)` on
//! the cone of positive definite matrices whose zero pattern is fixed by a
//! graph. Under this convention the unrestricted case is a Wishart with
//! `b + p - 1` degrees of freedom and scale `D⁻¹`, so `E[K] = (b+p-1) D⁻¹`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numkit::{cholesky, invert_spd, log_gamma, SpdMatrix};

/// Sweep cap for the completion loop.
pub const MAX_SWEEPS: usize = 1000;
/// Max absolute change of the working covariance that ends the loop.
pub const COMPLETION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GWishartParams {
    b: f64,
    d: SpdMatrix,
}

impl GWishartParams {
    pub fn new(b: f64, d: SpdMatrix) -> Result<Self> {
        if !(b > 2.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "G-Wishart degrees of freedom must exceed 2, got {b}"
            )));
        }
        Ok(GWishartParams { b, d })
    }

    /// `W_G(b, I_p)`.
    pub fn identity_scale(b: f64, p: usize) -> Result<Self> {
        Self::new(b, SpdMatrix::identity(p))
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> &SpdMatrix {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    /// Conjugate update `(b + n, D + S)`.
    pub fn posterior(&self, n: usize, s: &DMatrix<f64>) -> Result<Self> {
        let d = SpdMatrix::new(self.d.as_matrix() + s)?;
        Self::new(self.b + n as f64, d)
    }
}

/// Precision matrix tied to a graph, together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedPrecision {
    k: DMatrix<f64>,
    sigma: DMatrix<f64>,
    graph: Graph,
}

impl ConstrainedPrecision {
    /// Checks positive definiteness and the zero pattern (|k_ij| ≤ 1e-8 on
    /// non-edges), then writes exact zeros into the non-edge entries.
    pub fn new(mut k: DMatrix<f64>, graph: Graph) -> Result<Self> {
        if k.nrows() != graph.p() || k.ncols() != graph.p() {
            return Err(Error::DimensionMismatch {
                expected: graph.p(),
                actual: k.nrows(),
            });
        }
        for e in graph.non_edges() {
            let v = k[(e.i(), e.j())].abs().max(k[(e.j(), e.i())].abs());
            if v > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "entry ({}, {}) = {v:e} violates the zero pattern",
                    e.i(),
                    e.j()
                )));
            }
            k[(e.i(), e.j())] = 0.0;
            k[(e.j(), e.i())] = 0.0;
        }
        let sigma = invert_spd(&k)?;
        Ok(ConstrainedPrecision { k, sigma, graph })
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// `K⁻¹`.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, Graph) {
        (self.k, self.sigma, self.graph)
    }
}

/// Unrestricted draw via the Bartlett decomposition.
pub fn sample_wishart_full<R: Rng + ?Sized>(params: &GWishartParams, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = params.dim();
    let l = cholesky(&invert_spd(params.d.as_matrix())?)?;
    let df = params.b + p as f64 - 1.0;
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| Error::InvalidArgument(format!("chi-squared: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let la = l * a;
    let k = &la * la.transpose();
    Ok((&k + k.transpose()) * 0.5)
}

/// Diagnostics from one run of the completion loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionReport {
    pub sweeps: usize,
    /// Max absolute entry change of the working covariance, per sweep.
    pub residuals: Vec<f64>,
    /// Largest |k_ij| over non-edges before zeros were written back.
    pub max_nonedge: f64,
}

/// Exact draw from `W_G(b, D)`: an unrestricted Wishart draw whose inverse
/// is completed so that the precision vanishes on non-edges.
pub fn sample_gwishart<R: Rng + ?Sized>(
    graph: &Graph,
    params: &GWishartParams,
    rng: &mut R,
) -> Result<ConstrainedPrecision> {
    sample_gwishart_with_report(graph, params, rng).map(|(k, _)| k)
}

pub fn sample_gwishart_with_report<R: Rng + ?Sized>(
    graph: &Graph,
    params: &GWishartParams,
    rng: &mut R,
) -> Result<(ConstrainedPrecision, CompletionReport)> {
    let p = graph.p();
    if params.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: params.dim(),
        });
    }
    let k0 = sample_wishart_full(params, rng)?;
    if graph.edge_count() == graph.max_edges() {
        let sigma = invert_spd(&k0)?;
        let report = CompletionReport {
            sweeps: 0,
            residuals: Vec::new(),
            max_nonedge: 0.0,
        };
        return Ok((
            ConstrainedPrecision {
                k: k0,
                sigma,
                graph: graph.clone(),
            },
            report,
        ));
    }

    let target = invert_spd(&k0)?;
    let (w, sweeps, residuals) = complete_covariance(graph, &target)?;
    let mut k = invert_spd(&w)?;
    let mut max_nonedge = 0.0f64;
    for e in graph.non_edges() {
        max_nonedge = max_nonedge.max(k[(e.i(), e.j())].abs());
        k[(e.i(), e.j())] = 0.0;
        k[(e.j(), e.i())] = 0.0;
    }
    Ok((
        ConstrainedPrecision {
            k,
            sigma: w,
            graph: graph.clone(),
        },
        CompletionReport {
            sweeps,
            residuals,
            max_nonedge,
        },
    ))
}

/// Iterative completion: keeps the diagonal and edge entries of `target`
/// and adjusts the remaining entries until the inverse is zero on every
/// non-edge. Returns the completed covariance, the sweep count and the
/// per-sweep residuals.
fn complete_covariance(graph: &Graph, target: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize, Vec<f64>)> {
    let p = graph.p();
    let mut w = target.clone();
    let neighbors: Vec<Vec<usize>> = (0..p).map(|j| graph.neighbors(j)).collect();
    let mut residuals = Vec::new();
    let mut column = vec![0.0; p];
    for sweep in 1..=MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let nj = &neighbors[j];
            column.iter_mut().for_each(|c| *c = 0.0);
            if !nj.is_empty() {
                let w_nn = w.select_rows(nj).select_columns(nj);
                let rhs = nalgebra::DVector::from_iterator(nj.len(), nj.iter().map(|&k| target[(k, j)]));
                let beta = nalgebra::Cholesky::new(w_nn)
                    .ok_or(Error::NotPositiveDefinite)?
                    .solve(&rhs);
                for (k, c) in column.iter_mut().enumerate() {
                    if k != j {
                        *c = nj.iter().zip(beta.iter()).map(|(&l, &bl)| w[(k, l)] * bl).sum();
                    }
                }
            }
            for (k, &c) in column.iter().enumerate() {
                if k == j {
                    continue;
                }
                max_change = max_change.max((w[(k, j)] - c).abs());
                w[(k, j)] = c;
                w[(j, k)] = c;
            }
        }
        residuals.push(max_change);
        if !max_change.is_finite() {
            break;
        }
        // a small change in Σ can still leave non-edge K entries above the
        // tolerance when K is large, so both must hold
        if max_change < COMPLETION_TOL && max_nonedge_precision(graph, &w)? <= COMPLETION_TOL {
            return Ok((w, sweep, residuals));
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: residuals.last().copied().unwrap_or(f64::NAN),
    })
}

fn max_nonedge_precision(graph: &Graph, w: &DMatrix<f64>) -> Result<f64> {
    let k = invert_spd(w)?;
    Ok(graph.non_edges().map(|e| k[(e.i(), e.j())].abs()).fold(0.0, f64::max))
}

/// `log( I_G(b, I) / I_{G-e}(b, I) )` for an edge closing `d` triangles:
/// `log 2 + ½ log π + log Γ((b+d+1)/2) − log Γ((b+d)/2)`.
pub fn log_norm_ratio_identity(b: f64, d: usize) -> f64 {
    let d = d as f64;
    let lg = |x: f64| log_gamma(x).expect("positive gamma argument");
    std::f64::consts::LN_2 + 0.5 * std::f64::consts::PI.ln() + lg((b + d + 1.0) / 2.0) - lg((b + d) / 2.0)
}

/// Monte Carlo estimate of a log normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub log_estimate: f64,
    /// Standard error on the log scale (delta method).
    pub std_error: f64,
}

/// Monte Carlo estimate of `log I_G(b, D)` by the free-element
/// decomposition `K = ΦᵀΦ`, `Φ = ΨT`, `D⁻¹ = TᵀT`. The free elements of `Ψ`
/// are independent chi and normal draws; the estimator averages
/// `exp(-½ Σ ψ_ij²)` over the non-free (non-edge) elements.
pub fn mc_log_norm_constant<R: Rng + ?Sized>(
    graph: &Graph,
    params: &GWishartParams,
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let p = graph.p();
    if params.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: params.dim(),
        });
    }
    if samples < 1000 {
        return Err(Error::InvalidArgument("need at least 1000 Monte Carlo samples".into()));
    }
    let b = params.b;
    // upper-triangular T with D⁻¹ = TᵀT
    let t = cholesky(&invert_spd(params.d.as_matrix())?)?.transpose();
    let nu: Vec<usize> = (0..p).map(|i| ((i + 1)..p).filter(|&j| graph.has_edge(i, j)).count()).collect();

    let mut log_c = 0.5 * graph.edge_count() as f64 * (2.0 * std::f64::consts::PI).ln();
    for i in 0..p {
        let a = b + nu[i] as f64;
        log_c += 0.5 * a * std::f64::consts::LN_2
            + log_gamma(0.5 * a)?
            + (b + graph.degree(i) as f64) * t[(i, i)].ln();
    }

    let chis: Vec<ChiSquared<f64>> = nu
        .iter()
        .map(|&v| ChiSquared::new(b + v as f64).map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect::<Result<_>>()?;
    let mut psi = DMatrix::<f64>::zeros(p, p);
    let mut phi = DMatrix::<f64>::zeros(p, p);
    let mut log_f = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut quad = 0.0;
        for i in 0..p {
            psi[(i, i)] = chis[i].sample(rng).sqrt();
            phi[(i, i)] = psi[(i, i)] * t[(i, i)];
            for j in (i + 1)..p {
                let partial: f64 = (i..j).map(|k| psi[(i, k)] * t[(k, j)]).sum();
                if graph.has_edge(i, j) {
                    psi[(i, j)] = rng.sample(StandardNormal);
                    phi[(i, j)] = partial + psi[(i, j)] * t[(j, j)];
                } else {
                    let s: f64 = (0..i).map(|k| phi[(k, i)] * phi[(k, j)]).sum();
                    phi[(i, j)] = -s / phi[(i, i)];
                    psi[(i, j)] = (phi[(i, j)] - partial) / t[(j, j)];
                    quad += psi[(i, j)] * psi[(i, j)];
                }
            }
        }
        log_f.push(-0.5 * quad);
    }
    let m = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_f.iter().map(|&l| (l - m).exp()).collect();
    let n = samples as f64;
    let mean = scaled.iter().sum::<f64>() / n;
    let var = scaled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        log_estimate: log_c + m + mean.ln(),
        std_error: (var / n).sqrt() / mean,
    })
}
