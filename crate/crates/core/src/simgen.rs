//! Synthetic graphs, precision matrices and mixed data.

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::copula::{MixedDataset, VariableKind};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::gwishart::{sample_gwishart, ConstrainedPrecision, GWishartParams};
use crate::numkit::{cholesky, std_normal_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphFamily {
    Random,
    Cluster,
    ScaleFree,
}

impl GraphFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphFamily::Random => "random",
            GraphFamily::Cluster => "cluster",
            GraphFamily::ScaleFree => "scale_free",
        }
    }
}

impl std::str::FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(GraphFamily::Random),
            "cluster" => Ok(GraphFamily::Cluster),
            "scale_free" | "scale-free" | "scalefree" => Ok(GraphFamily::ScaleFree),
            other => Err(Error::InvalidArgument(format!("unknown graph family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalKind {
    Gaussian,
    NonGaussian,
    Ordinal,
    Count,
    Binary,
}

impl MarginalKind {
    pub const ALL: [MarginalKind; 5] = [
        MarginalKind::Gaussian,
        MarginalKind::NonGaussian,
        MarginalKind::Ordinal,
        MarginalKind::Count,
        MarginalKind::Binary,
    ];

    pub fn variable_kind(self) -> VariableKind {
        match self {
            MarginalKind::Gaussian | MarginalKind::NonGaussian => VariableKind::Continuous,
            MarginalKind::Ordinal => VariableKind::Ordinal,
            MarginalKind::Count => VariableKind::Count,
            MarginalKind::Binary => VariableKind::Binary,
        }
    }
}

impl std::str::FromStr for MarginalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(MarginalKind::Gaussian),
            "non_gaussian" => Ok(MarginalKind::NonGaussian),
            "ordinal" => Ok(MarginalKind::Ordinal),
            "count" => Ok(MarginalKind::Count),
            "binary" => Ok(MarginalKind::Binary),
            other => Err(Error::InvalidArgument(format!("unknown marginal kind `{other}`"))),
        }
    }
}

/// Per-column marginal transforms for the latent Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRecipe {
    pub kinds: Vec<MarginalKind>,
    pub ordinal_levels: usize,
    pub count_rate: f64,
    pub binary_quantile: f64,
}

impl MarginalRecipe {
    /// The five kinds cycled across `p` columns, with 4 ordinal levels,
    /// Poisson rate 4 and a median binary split.
    pub fn cycled(p: usize) -> Self {
        MarginalRecipe {
            kinds: (0..p).map(|j| MarginalKind::ALL[j % 5]).collect(),
            ordinal_levels: 4,
            count_rate: 4.0,
            binary_quantile: 0.5,
        }
    }

    /// Every column Gaussian.
    pub fn gaussian(p: usize) -> Self {
        MarginalRecipe {
            kinds: vec![MarginalKind::Gaussian; p],
            ..Self::cycled(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ordinal_levels < 3 {
            return Err(Error::InvalidArgument("ordinal variables need at least 3 levels".into()));
        }
        if !(self.count_rate > 0.0) || !self.count_rate.is_finite() {
            return Err(Error::InvalidArgument("count rate must be positive".into()));
        }
        if !(self.binary_quantile > 0.0 && self.binary_quantile < 1.0) {
            return Err(Error::InvalidArgument("binary split must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Random structure of the given family on `p` vertices.
pub fn gen_graph<R: Rng + ?Sized>(family: GraphFamily, p: usize, rng: &mut R) -> Result<Graph> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("graphs need p >= 2, got {p}")));
    }
    let mut g = Graph::empty(p)?;
    match family {
        GraphFamily::Random => fill_random(&mut g, &(0..p).collect::<Vec<_>>(), rng)?,
        GraphFamily::Cluster => {
            for block in cluster_blocks(p) {
                fill_random(&mut g, &block, rng)?;
            }
        }
        GraphFamily::ScaleFree => {
            // every endpoint of every edge, so a uniform pick is degree-proportional
            let mut ends = vec![0usize, 1];
            g.toggle(Edge::new(0, 1)?)?;
            for v in 2..p {
                let &target = ends.choose(rng).expect("nonempty");
                g.toggle(Edge::new(v, target)?)?;
                ends.push(v);
                ends.push(target);
            }
        }
    }
    Ok(g)
}

/// `max(2, ⌊p/20⌋)` contiguous blocks whose sizes differ by at most one.
pub fn cluster_blocks(p: usize) -> Vec<Vec<usize>> {
    let k = (p / 20).max(2).min(p);
    let (base, extra) = (p / k, p % k);
    let mut start = 0;
    (0..k)
        .map(|b| {
            let size = base + usize::from(b < extra);
            let block = (start..start + size).collect();
            start += size;
            block
        })
        .collect()
}

/// Bernoulli(2/(m−1)) edges among `vertices`.
fn fill_random<R: Rng + ?Sized>(g: &mut Graph, vertices: &[usize], rng: &mut R) -> Result<()> {
    let m = vertices.len();
    if m < 2 {
        return Ok(());
    }
    let prob = (2.0 / (m as f64 - 1.0)).min(1.0);
    for (a, &u) in vertices.iter().enumerate() {
        for &v in &vertices[a + 1..] {
            if rng.random::<f64>() < prob {
                g.toggle(Edge::new(u, v)?)?;
            }
        }
    }
    Ok(())
}

/// `K ~ W_G(3, I_p)`.
pub fn gen_precision<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Result<ConstrainedPrecision> {
    sample_gwishart(graph, &GWishartParams::identity_scale(3.0, graph.p())?, rng)
}

/// Latent rows `N(0, K⁻¹)` mapped column by column through `recipe`.
pub fn gen_mixed_data<R: Rng + ?Sized>(
    k: &ConstrainedPrecision,
    n: usize,
    recipe: &MarginalRecipe,
    rng: &mut R,
) -> Result<MixedDataset> {
    let z = gen_latent(k.k(), n, rng)?;
    apply_recipe(&z, k.sigma(), recipe)
}

/// `n × p` draws from `N(0, K⁻¹)`: `z = L⁻ᵀ ε` with `K = L Lᵀ`.
pub fn gen_latent<R: Rng + ?Sized>(k: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = k.nrows();
    let lt = cholesky(k)?.transpose();
    let mut z = DMatrix::zeros(n, p);
    for r in 0..n {
        let eps = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let row = lt.solve_upper_triangular(&eps).ok_or(Error::NotPositiveDefinite)?;
        z.set_row(r, &row.transpose());
    }
    Ok(z)
}

/// Maps latent columns to observed ones. `sigma` supplies the column scales
/// so quantile-based transforms use the population marginal `Φ(z/σ_j)`.
pub fn apply_recipe(z: &DMatrix<f64>, sigma: &DMatrix<f64>, recipe: &MarginalRecipe) -> Result<MixedDataset> {
    let (n, p) = z.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if recipe.kinds.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: recipe.kinds.len(),
        });
    }
    recipe.validate()?;
    let poisson = Poisson::new(recipe.count_rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut y = DMatrix::zeros(n, p);
    for j in 0..p {
        let sd = sigma[(j, j)].sqrt();
        for r in 0..n {
            let v = z[(r, j)];
            let u = std_normal_cdf(v / sd);
            y[(r, j)] = match recipe.kinds[j] {
                MarginalKind::Gaussian => v,
                MarginalKind::NonGaussian => v.exp(),
                MarginalKind::Ordinal => ((u * recipe.ordinal_levels as f64).floor() as usize)
                    .min(recipe.ordinal_levels - 1) as f64,
                MarginalKind::Count => poisson.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16)) as f64,
                MarginalKind::Binary => f64::from(u > recipe.binary_quantile),
            };
        }
    }
    MixedDataset::fully_observed(y, recipe.kinds.iter().map(|k| k.variable_kind()).collect())
}

/// Masks each cell with probability `fraction`; a draw that would empty a
/// column is redrawn.
pub fn gen_missing<R: Rng + ?Sized>(data: &MixedDataset, fraction: f64, rng: &mut R) -> Result<MixedDataset> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("missing fraction must lie in [0, 1), got {fraction}")));
    }
    let (n, p) = (data.n(), data.p());
    let mut mask = data.missing().clone();
    for j in 0..p {
        loop {
            let col: Vec<bool> = (0..n).map(|r| data.is_missing(r, j) || rng.random::<f64>() < fraction).collect();
            if col.iter().any(|m| !m) {
                for (r, m) in col.into_iter().enumerate() {
                    mask[(r, j)] = m;
                }
                break;
            }
        }
    }
    data.with_missing(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::stream_rng;

    fn ranks(xs: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let mut r = vec![0.0; xs.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut m = k;
            while m + 1 < idx.len() && xs[idx[m + 1]] == xs[idx[k]] {
                m += 1;
            }
            for t in k..=m {
                r[idx[t]] = (k + m) as f64 / 2.0;
            }
            k = m + 1;
        }
        r
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn random_p3_is_complete() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            assert_eq!(gen_graph(GraphFamily::Random, 3, &mut rng).unwrap().edge_count(), 3);
        }
    }

    #[test]
    fn random_edge_count_is_binomial() {
        let mut rng = stream_rng(2, 0);
        let draws = 1000;
        let counts: Vec<usize> = (0..draws)
            .map(|_| gen_graph(GraphFamily::Random, 10, &mut rng).unwrap().edge_count())
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / draws as f64;
        assert!((mean - 10.0).abs() < 0.5, "{mean}");
        // chi-square against Binomial(45, 2/9), tails pooled so every expected count >= 5
        let pmf = |k: usize| {
            let choose = (0..k).fold(1.0, |acc, t| acc * (45 - t) as f64 / (t + 1) as f64);
            choose * (2.0f64 / 9.0).powi(k as i32) * (7.0f64 / 9.0).powi(45 - k as i32)
        };
        let (lo, hi) = (5usize, 15usize);
        let mut chi = 0.0;
        let mut cells = 0;
        for k in lo..=hi {
            let (obs, exp) = if k == lo {
                (counts.iter().filter(|&&c| c <= lo).count(), (0..=lo).map(pmf).sum::<f64>())
            } else if k == hi {
                (counts.iter().filter(|&&c| c >= hi).count(), 1.0 - (0..hi).map(pmf).sum::<f64>())
            } else {
                (counts.iter().filter(|&&c| c == k).count(), pmf(k))
            };
            let e = exp * draws as f64;
            chi += (obs as f64 - e).powi(2) / e;
            cells += 1;
        }
        // 1% critical value of chi-square with 10 degrees of freedom
        assert_eq!(cells - 1, 10);
        assert!(chi < 23.209, "chi-square {chi}");
    }

    #[test]
    fn scale_free_is_a_tree() {
        let mut rng = stream_rng(3, 0);
        let g = gen_graph(GraphFamily::ScaleFree, 40, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 39);
        let mut seen = vec![false; 40];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn cluster_blocks_are_isolated() {
        assert_eq!(cluster_blocks(10).iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5]);
        assert_eq!(cluster_blocks(61).iter().map(Vec::len).collect::<Vec<_>>(), vec![21, 20, 20]);
        let mut rng = stream_rng(4, 0);
        for p in [2, 7, 45, 100] {
            let blocks = cluster_blocks(p);
            let block_of: Vec<usize> = (0..p).map(|v| blocks.iter().position(|b| b.contains(&v)).unwrap()).collect();
            let g = gen_graph(GraphFamily::Cluster, p, &mut rng).unwrap();
            assert!(g.edges().all(|e| block_of[e.i()] == block_of[e.j()]));
        }
    }

    #[test]
    fn precision_matches_graph() {
        let mut rng = stream_rng(5, 0);
        let g = Graph::empty(4).unwrap();
        let k = gen_precision(&g, &mut rng).unwrap();
        assert!(g.pairs().all(|e| k.k()[(e.i(), e.j())] == 0.0));
        let g = gen_graph(GraphFamily::Random, 8, &mut rng).unwrap();
        let k = gen_precision(&g, &mut rng).unwrap();
        assert!(g.non_edges().all(|e| k.k()[(e.i(), e.j())] == 0.0));
    }

    #[test]
    fn scalar_precision_is_chi_square_3() {
        // p = 1: density ∝ k^{1/2} e^{-k/2}, i.e. χ²₃ with mean 3 and variance 6
        let mut rng = stream_rng(10, 0);
        let g = Graph::empty(1).unwrap();
        let draws: Vec<f64> = (0..40_000).map(|_| gen_precision(&g, &mut rng).unwrap().k()[(0, 0)]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
        assert!((var - 6.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn binary_split_frequency() {
        let mut rng = stream_rng(6, 0);
        let g = Graph::empty(5).unwrap();
        let k = gen_precision(&g, &mut rng).unwrap();
        let data = gen_mixed_data(&k, 10_000, &MarginalRecipe::cycled(5), &mut rng).unwrap();
        let ones = (0..10_000).filter(|&r| data.value(r, 4) == 1.0).count() as f64 / 1e4;
        assert!((ones - 0.5).abs() < 0.02, "{ones}");
        // ordinal and count supports
        assert!((0..10_000).all(|r| (0.0..4.0).contains(&data.value(r, 2))));
        let levels: std::collections::BTreeSet<u64> = (0..10_000).map(|r| data.value(r, 2) as u64).collect();
        assert_eq!(levels.len(), 4);
        assert!((0..10_000).all(|r| data.value(r, 3) >= 0.0));
    }

    #[test]
    fn continuous_maps_preserve_ranks() {
        let mut rng = stream_rng(7, 0);
        let g = gen_graph(GraphFamily::Random, 5, &mut rng).unwrap();
        let k = gen_precision(&g, &mut rng).unwrap();
        let z = gen_latent(k.k(), 200, &mut rng).unwrap();
        let data = apply_recipe(&z, k.sigma(), &MarginalRecipe::cycled(5)).unwrap();
        for j in [0, 1] {
            let zc: Vec<f64> = z.column(j).iter().copied().collect();
            let yc = data.observed_column(j);
            assert!((pearson(&ranks(&zc), &ranks(&yc)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_precision_gives_independent_columns() {
        let mut rng = stream_rng(8, 0);
        let n = 5000;
        let k = ConstrainedPrecision::new(DMatrix::identity(2, 2), Graph::empty(2).unwrap()).unwrap();
        for kinds in [[MarginalKind::Gaussian, MarginalKind::Count], [MarginalKind::Ordinal, MarginalKind::Binary]] {
            let recipe = MarginalRecipe { kinds: kinds.to_vec(), ..MarginalRecipe::cycled(2) };
            let data = gen_mixed_data(&k, n, &recipe, &mut rng).unwrap();
            let rho = pearson(&ranks(&data.observed_column(0)), &ranks(&data.observed_column(1)));
            assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "{rho}");
        }
    }

    #[test]
    fn missing_masks() {
        let mut rng = stream_rng(9, 0);
        let k = ConstrainedPrecision::new(DMatrix::identity(10, 10), Graph::empty(10).unwrap()).unwrap();
        let data = gen_mixed_data(&k, 1000, &MarginalRecipe::cycled(10), &mut rng).unwrap();
        assert_eq!(gen_missing(&data, 0.0, &mut rng).unwrap(), data);
        let masked = gen_missing(&data, 0.1, &mut rng).unwrap();
        let share = masked.missing_count() as f64 / 1e4;
        assert!((share - 0.1).abs() < 0.01, "{share}");
        let tiny = gen_mixed_data(&k, 2, &MarginalRecipe::cycled(10), &mut rng).unwrap();
        for _ in 0..50 {
            let m = gen_missing(&tiny, 0.9, &mut rng).unwrap();
            assert!((0..10).all(|j| !m.observed_column(j).is_empty()));
        }
        assert!(gen_missing(&data, 1.0, &mut rng).is_err());
    }
}
