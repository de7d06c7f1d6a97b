use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::Config;
use super::io::{export_csv, fmt_g, format_schema, ingest_csv, read_matrix_csv, schema_for, write_matrix_csv, ColumnSchema};
use crate::bdmcmc::{edge_probabilities, run_chain, select_graph, ChainConfig, ChainMethod, ChainTrace, EdgeProbMatrix, KeptState};
use crate::copula::MixedDataset;
use crate::error::{Error, Result};
use crate::evalkit::{
    conditional_histogram, conditional_histogram_pooled, f1_score, mse, posterior_predictive_sample, roc_points,
    roc_points_pooled, BinSpec, ConditionalTable, HistogramSpec,
};
use crate::graph::Graph;
use crate::numkit::stream_rng;
use crate::simgen::{gen_graph, gen_missing, gen_mixed_data, gen_precision, GraphFamily, MarginalKind, MarginalRecipe};

/// Saved by `fit` for posterior predictive checks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SavedStates {
    pub names: Vec<String>,
    pub total_weight: f64,
    pub states: Vec<KeptState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub family: GraphFamily,
    pub p: usize,
    pub n: usize,
}

impl Scenario {
    pub fn dir_name(&self) -> String {
        format!("{}_p{}_n{}", self.family.as_str(), self.p, self.n)
    }
}

/// `family/p/n` items separated by commas.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || Error::InvalidArgument(format!("scenario `{item}` is not `family/p/n`"));
            let parts: Vec<&str> = item.split('/').map(str::trim).collect();
            let [fam, p, n] = parts.as_slice() else {
                return Err(bad());
            };
            let sc = Scenario {
                family: fam.parse()?,
                p: p.parse().map_err(|_| bad())?,
                n: n.parse().map_err(|_| bad())?,
            };
            if sc.p < 2 || sc.n < 2 {
                return Err(Error::InvalidArgument(format!("scenario `{item}` needs p >= 2 and n >= 2")));
            }
            Ok(sc)
        })
        .collect()
}

/// RNG stream of replicate `rep` in scenario `scenario`.
pub fn replicate_stream(scenario: usize, rep: usize) -> u64 {
    ((scenario as u64) << 32) | rep as u64
}

pub(super) fn chain_config(cfg: &Config) -> Result<ChainConfig> {
    let d = ChainConfig::default();
    let iterations = cfg.parse_or("iterations", d.iterations)?;
    let method = match cfg.get("method").unwrap_or("copula") {
        "copula" => ChainMethod::Copula,
        "gaussian" => ChainMethod::Gaussian,
        other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
    };
    let c = ChainConfig {
        iterations,
        burn_in: cfg.parse_or("burn_in", iterations / 2)?,
        b_prior: cfg.parse_or("b_prior", d.b_prior)?,
        prior_edge_logit: cfg.parse_or("prior_edge_logit", d.prior_edge_logit)?,
        seed: cfg.parse_or("seed", d.seed)?,
        stream: 0,
        rate_cap: cfg.parse_or("rate_cap", d.rate_cap)?,
        method,
        thin: cfg.parse_or("thin", 100)?,
    };
    c.validate()?;
    Ok(c)
}

fn threshold(cfg: &Config) -> Result<f64> {
    let t = cfg.parse_or("threshold", 0.5)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {t}")));
    }
    Ok(t)
}

fn pool(cfg: &Config) -> Result<rayon::ThreadPool> {
    let jobs: usize = cfg.parse_or("jobs", 1)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))
}

fn out_dir(cfg: &Config) -> Result<PathBuf> {
    let out = cfg.path("out").ok_or_else(|| Error::InvalidArgument("missing required key `out`".into()))?;
    fs::create_dir_all(&out)?;
    Ok(out)
}

fn recipe(cfg: &Config, p: usize) -> Result<MarginalRecipe> {
    let base = MarginalRecipe::cycled(p);
    let kinds = match cfg.get("kinds") {
        Some(list) => {
            let cycle: Vec<MarginalKind> = list.split(',').map(|k| k.trim().parse()).collect::<Result<_>>()?;
            if cycle.is_empty() {
                return Err(Error::InvalidArgument("`kinds` is empty".into()));
            }
            (0..p).map(|j| cycle[j % cycle.len()]).collect()
        }
        None => base.kinds,
    };
    let r = MarginalRecipe {
        kinds,
        ordinal_levels: cfg.parse_or("ordinal_levels", base.ordinal_levels)?,
        count_rate: cfg.parse_or("count_rate", base.count_rate)?,
        binary_quantile: cfg.parse_or("binary_quantile", base.binary_quantile)?,
    };
    r.validate()?;
    Ok(r)
}

pub fn cmd_simulate(cfg: &Config) -> Result<()> {
    let scenarios = parse_scenarios(cfg.require("scenarios")?)?;
    let replicates: usize = cfg.parse_or("replicates", 1)?;
    let seed: u64 = cfg.parse_or("seed", 1)?;
    let missing: f64 = cfg.parse_or("missing_fraction", 0.0)?;
    let out = out_dir(cfg)?;
    let mut jobs = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        let r = recipe(cfg, sc.p)?;
        for rep in 0..replicates {
            jobs.push((s, *sc, r.clone(), rep));
        }
    }
    pool(cfg)?.install(|| {
        jobs.par_iter().try_for_each(|(s, sc, recipe, rep)| {
            let dir = out.join(sc.dir_name()).join(format!("rep_{rep}"));
            fs::create_dir_all(&dir)?;
            let mut rng = stream_rng(seed, replicate_stream(*s, *rep));
            let graph = gen_graph(sc.family, sc.p, &mut rng)?;
            let k = gen_precision(&graph, &mut rng)?;
            let mut data = gen_mixed_data(&k, sc.n, recipe, &mut rng)?;
            if missing > 0.0 {
                data = gen_missing(&data, missing, &mut rng)?;
            }
            let schema = schema_for(&data, recipe.ordinal_levels);
            export_csv(&data, &schema, &dir.join("data.csv"))?;
            fs::write(dir.join("schema.txt"), format_schema(&schema))?;
            fs::write(dir.join("truth_graph.edgelist"), graph.to_edge_list())?;
            write_matrix_csv(k.k(), data.names(), &dir.join("truth_precision.csv"))
        })
    })?;
    let mut meta = format!("command = simulate\nseed = {seed}\nreplicates = {replicates}\n");
    for (s, sc) in scenarios.iter().enumerate() {
        let _ = writeln!(meta, "scenario {s} = {} (stream = {s} << 32 | replicate)", sc.dir_name());
    }
    meta.push_str("\n[config]\n");
    meta.push_str(&cfg.echo());
    fs::write(out.join("run_meta.txt"), meta)?;
    Ok(())
}

/// `(scenario dir, [rep dirs])`, both sorted by name.
fn simulation_layout(root: &Path) -> Result<Vec<(PathBuf, Vec<PathBuf>)>> {
    let mut scenarios = Vec::new();
    for entry in sorted_dirs(root)? {
        let reps: Vec<PathBuf> = sorted_dirs(&entry)?
            .into_iter()
            .filter(|d| d.file_name().is_some_and(|n| n.to_string_lossy().starts_with("rep_")))
            .collect();
        if !reps.is_empty() {
            scenarios.push((entry, reps));
        }
    }
    if scenarios.is_empty() {
        return Err(Error::Parse {
            path: root.display().to_string(),
            message: "no scenario directories with rep_* replicates".into(),
        });
    }
    Ok(scenarios)
}

fn sorted_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort_by_key(|p| rep_sort_key(p));
    Ok(dirs)
}

/// Sorts `rep_10` after `rep_9`.
fn rep_sort_key(p: &Path) -> (String, u64) {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    match name.strip_prefix("rep_").and_then(|k| k.parse().ok()) {
        Some(k) => ("rep_".into(), k),
        None => (name, 0),
    }
}

fn rep_index(p: &Path) -> usize {
    rep_sort_key(p).1 as usize
}

pub fn cmd_fit(cfg: &Config) -> Result<()> {
    let chain = chain_config(cfg)?;
    let thr = threshold(cfg)?;
    if let Some(sim) = cfg.get("simulation_dir") {
        let root = cfg.existing_path("simulation_dir")?;
        let _ = sim;
        let mut jobs = Vec::new();
        for (s, (_, reps)) in simulation_layout(&root)?.into_iter().enumerate() {
            for rep in reps {
                let stream = replicate_stream(s, rep_index(&rep));
                jobs.push((rep, stream));
            }
        }
        return pool(cfg)?.install(|| {
            jobs.par_iter().try_for_each(|(rep, stream)| {
                let (data, schema) = ingest_csv(&rep.join("data.csv"), &rep.join("schema.txt"))?;
                let c = ChainConfig { stream: *stream, ..chain.clone() };
                fit_one(&data, &schema, &c, thr, &rep.join("fit"), &cfg.echo())
            })
        });
    }
    let (data, schema) = ingest_csv(&cfg.existing_path("data")?, &cfg.existing_path("schema")?)?;
    fit_one(&data, &schema, &chain, thr, &out_dir(cfg)?, &cfg.echo())
}

/// Runs one chain and writes every fit artifact into `out`.
pub fn fit_one(
    data: &MixedDataset,
    schema: &[ColumnSchema],
    chain: &ChainConfig,
    threshold: f64,
    out: &Path,
    config_echo: &str,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let started = Instant::now();
    let trace = run_chain(data, chain)?;
    let probs = edge_probabilities(&trace)?;
    let mean_k = trace.mean_precision()?;
    let selected = select_graph(&probs, threshold, Some(&mean_k))?;
    let names = data.names();

    write_matrix_csv(probs.as_matrix(), names, &out.join("edge_probs.csv"))?;

    let mut w = csv::Writer::from_path(out.join("selected_edges.csv"))?;
    w.write_record(["i", "j", "prob", "sign"])?;
    let mut edgelist = String::new();
    for s in &selected.edges {
        let sign = s.sign().to_string();
        w.write_record([s.edge.i().to_string(), s.edge.j().to_string(), fmt_g(s.prob), sign.clone()])?;
        let _ = writeln!(edgelist, "{} {} {} {}", s.edge.i(), s.edge.j(), fmt_g(s.prob), sign);
    }
    w.flush()?;
    fs::write(out.join("selected.edgelist"), edgelist)?;

    let dot = selected.graph.to_dot(Some(names), |e| {
        selected.edges.iter().find(|s| s.edge == e).map(|s| s.sign().to_string())
    });
    fs::write(out.join("graph.dot"), dot)?;

    let mut w = csv::Writer::from_path(out.join("size_trace.csv"))?;
    w.write_record(["iteration", "edge_count", "waiting_time"])?;
    for (it, (size, wt)) in trace.size_trace.iter().zip(&trace.waiting_trace).enumerate() {
        w.write_record([it.to_string(), size.to_string(), fmt_g(*wt)])?;
    }
    w.flush()?;

    let saved = SavedStates {
        names: names.to_vec(),
        total_weight: trace.total_weight,
        states: trace.kept_states.clone(),
    };
    fs::write(out.join("states.json"), serde_json::to_string(&saved)?)?;
    let _ = schema;

    let meta = format!(
        "command = fit\nseed = {}\nstream = {}\niterations = {}\nburn_in = {}\nb_prior = {}\n\
         prior_edge_logit = {}\nrate_cap = {}\nmethod = {:?}\nthin = {}\nthreshold = {}\n\
         n = {}\np = {}\nmissing_cells = {}\nselected_edges = {}\n\n[config]\n{}",
        chain.seed,
        chain.stream,
        chain.iterations,
        chain.burn_in,
        chain.b_prior,
        chain.prior_edge_logit,
        chain.rate_cap,
        chain.method,
        chain.thin,
        threshold,
        data.n(),
        data.p(),
        data.missing_count(),
        selected.edges.len(),
        config_echo,
    );
    fs::write(out.join("run_meta.txt"), meta)?;
    fs::write(
        out.join("timing.txt"),
        format!("wall_seconds = {:.3}\n", started.elapsed().as_secs_f64()),
    )?;
    Ok(())
}

struct RepMetrics {
    f1: f64,
    mse: f64,
    auc: Option<f64>,
    probs: EdgeProbMatrix,
    truth: Graph,
}

pub fn cmd_eval(cfg: &Config) -> Result<()> {
    let root = cfg.existing_path("simulation_dir")?;
    let thr = threshold(cfg)?;
    let out = out_dir(cfg)?;
    fs::create_dir_all(out.join("roc"))?;
    let mut metrics = csv::Writer::from_path(out.join("metrics.csv"))?;
    metrics.write_record(["scenario", "replicate", "f1", "mse", "auc"])?;
    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    summary.write_record(["scenario", "replicates", "f1_mean", "f1_sd", "mse_mean", "mse_sd", "auc_mean", "auc_sd"])?;
    for (scenario_dir, reps) in simulation_layout(&root)? {
        let scenario = scenario_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let mut rows = Vec::new();
        for rep in &reps {
            let m = eval_replicate(rep, thr)?;
            metrics.write_record([
                scenario.clone(),
                rep_index(rep).to_string(),
                fmt_g(m.f1),
                fmt_g(m.mse),
                m.auc.map_or("NA".into(), fmt_g),
            ])?;
            rows.push(m);
        }
        let f1: Vec<f64> = rows.iter().map(|m| m.f1).collect();
        let ms: Vec<f64> = rows.iter().map(|m| m.mse).collect();
        let auc: Vec<f64> = rows.iter().filter_map(|m| m.auc).collect();
        let (fm, fs_) = mean_sd(&f1);
        let (mm, msd) = mean_sd(&ms);
        let auc_cells = if auc.is_empty() {
            ["NA".to_string(), "NA".to_string()]
        } else {
            let (am, asd) = mean_sd(&auc);
            [fmt_g(am), fmt_g(asd)]
        };
        summary.write_record([
            scenario.clone(),
            rows.len().to_string(),
            fmt_g(fm),
            fmt_g(fs_),
            fmt_g(mm),
            fmt_g(msd),
            auc_cells[0].clone(),
            auc_cells[1].clone(),
        ])?;
        let problems: Vec<(&EdgeProbMatrix, &Graph)> = rows.iter().map(|m| (&m.probs, &m.truth)).collect();
        if let Ok(curve) = roc_points_pooled(&problems) {
            let mut w = csv::Writer::from_path(out.join("roc").join(format!("{scenario}.csv")))?;
            w.write_record(["fpr", "tpr"])?;
            for (f, t) in curve.points {
                w.write_record([fmt_g(f), fmt_g(t)])?;
            }
            w.flush()?;
        }
    }
    metrics.flush()?;
    summary.flush()?;
    Ok(())
}

fn eval_replicate(rep: &Path, thr: f64) -> Result<RepMetrics> {
    let probs_path = rep.join("fit").join("edge_probs.csv");
    let truth_path = rep.join("truth_graph.edgelist");
    for p in [&probs_path, &truth_path] {
        if !p.exists() {
            return Err(Error::Parse {
                path: p.display().to_string(),
                message: "missing input (run simulate and fit first)".into(),
            });
        }
    }
    let (m, _) = read_matrix_csv(&probs_path)?;
    let probs = EdgeProbMatrix::new(m)?;
    let truth = Graph::parse_edge_list(probs.p(), &fs::read_to_string(&truth_path)?)?;
    let est = select_graph(&probs, thr, None)?.graph;
    Ok(RepMetrics {
        f1: f1_score(&est, &truth)?,
        mse: mse(&probs, &truth)?,
        auc: roc_points(&probs, &truth).ok().map(|c| c.auc()),
        probs,
        truth,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `target:given:given_bins[:target_bins]`, where bins are `age`,
/// `tubiana` or `|`-separated upper edges.
pub fn parse_check(text: &str, schema: &[ColumnSchema]) -> Result<HistogramSpec> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(Error::InvalidArgument(format!(
            "check `{text}` is not `target:given:given_bins[:target_bins]`"
        )));
    }
    let column = |name: &str| {
        schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let bins = |spec: &str| -> Result<BinSpec> {
        match spec {
            "age" => Ok(BinSpec::age()),
            "tubiana" => Ok(BinSpec::tubiana()),
            edges => BinSpec::new(
                edges
                    .split('|')
                    .map(|e| e.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad bin edge `{e}`"))))
                    .collect::<Result<_>>()?,
            ),
        }
    };
    Ok(HistogramSpec {
        target: column(parts[0])?,
        given: column(parts[1])?,
        given_bins: bins(parts[2])?,
        target_bins: parts.get(3).map(|b| bins(b)).transpose()?,
    })
}

pub fn cmd_ppc(cfg: &Config) -> Result<()> {
    let (data, schema) = ingest_csv(&cfg.existing_path("data")?, &cfg.existing_path("schema")?)?;
    let fit_dir = cfg.existing_path("fit_dir")?;
    let saved: SavedStates = serde_json::from_str(&fs::read_to_string(fit_dir.join("states.json"))?)?;
    if saved.names != data.names() {
        return Err(Error::InvalidArgument("saved states do not match the data columns".into()));
    }
    let checks = cfg.get_all("check");
    if checks.is_empty() {
        return Err(Error::InvalidArgument("ppc needs at least one `check` line".into()));
    }
    let specs: Vec<(String, HistogramSpec)> = checks
        .iter()
        .map(|c| Ok((c.to_string(), parse_check(c, &schema)?)))
        .collect::<Result<_>>()?;
    let draws: usize = cfg.parse_or("draws", 100)?;
    let seed: u64 = cfg.parse_or("seed", 1)?;
    let out = out_dir(cfg)?;

    let mut trace = ChainTrace::new(data.p());
    trace.kept_states = saved.states;
    let mut rng = stream_rng(seed, 0);
    let predictive = posterior_predictive_sample(&trace, &data, draws, &mut rng)?;

    let mut w = csv::Writer::from_path(out.join("ppc.csv"))?;
    w.write_record(["check", "bin", "level", "frequency", "source"])?;
    for (label, spec) in &specs {
        let emp = conditional_histogram(&data, spec)?;
        let pred = conditional_histogram_pooled(&predictive, spec)?;
        for (source, table) in [("empirical", &emp), ("predictive", &pred)] {
            write_table(&mut w, label, source, table, spec, &schema)?;
        }
    }
    w.flush()?;
    fs::write(
        out.join("run_meta.txt"),
        format!("command = ppc\nseed = {seed}\ndraws = {draws}\n\n[config]\n{}", cfg.echo()),
    )?;
    Ok(())
}

fn write_table(
    w: &mut csv::Writer<fs::File>,
    label: &str,
    source: &str,
    table: &ConditionalTable,
    spec: &HistogramSpec,
    schema: &[ColumnSchema],
) -> Result<()> {
    let target_levels = &schema[spec.target].levels;
    let level_label = |raw: &str| -> String {
        match (target_levels, &spec.target_bins) {
            (Some(levels), None) => raw
                .parse::<f64>()
                .ok()
                .and_then(|v| levels.get(v as usize).cloned())
                .unwrap_or_else(|| raw.to_string()),
            _ => raw.to_string(),
        }
    };
    for (bin, row) in table.given_labels.iter().zip(table.frequencies()) {
        for (k, level) in table.target_levels.iter().enumerate() {
            let freq = row.as_ref().map_or("NA".to_string(), |r| fmt_g(r[k]));
            w.write_record([label, bin.as_str(), &level_label(level), &freq, source])?;
        }
    }
    Ok(())
}
