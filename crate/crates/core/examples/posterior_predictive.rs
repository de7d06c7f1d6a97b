//! Posterior predictive check of a conditional histogram.
use copulagraph::bdmcmc::{run_chain, ChainConfig};
use copulagraph::evalkit::{conditional_histogram, conditional_histogram_pooled, posterior_predictive_sample, BinSpec, HistogramSpec};
use copulagraph::numkit::stream_rng;
use copulagraph::simgen::{gen_graph, gen_mixed_data, gen_precision, GraphFamily, MarginalRecipe};

fn main() -> copulagraph::Result<()> {
    let p = 5;
    let mut rng = stream_rng(21, 0);
    let truth = gen_graph(GraphFamily::Random, p, &mut rng)?;
    let k = gen_precision(&truth, &mut rng)?;
    // columns cycle continuous, non-Gaussian, ordinal, count, binary
    let data = gen_mixed_data(&k, 200, &MarginalRecipe::cycled(p), &mut rng)?;

    let cfg = ChainConfig { iterations: 3000, burn_in: 1000, thin: 50, ..Default::default() };
    let trace = run_chain(&data, &cfg)?;
    let replicas = posterior_predictive_sample(&trace, &data, 50, &mut rng)?;

    // ordinal column given the continuous one split at 0
    let spec = HistogramSpec { target: 2, given: 0, given_bins: BinSpec::new(vec![0.0])?, target_bins: None };
    let emp = conditional_histogram(&data, &spec)?;
    let pred = conditional_histogram_pooled(&replicas, &spec)?;
    for ((label, e), q) in emp.given_labels.iter().zip(emp.frequencies()).zip(pred.frequencies()) {
        println!("given {label}: empirical {:.2?}", e.unwrap_or_default());
        println!("{:>width$}  predictive {:.2?}", "", q.unwrap_or_default(), width = label.len() + 6);
    }
    Ok(())
}
