//! A small replicated simulation over graph families, fitted in parallel.
use copulagraph::bdmcmc::{edge_probabilities, run_chain, select_graph, ChainConfig};
use copulagraph::evalkit::{f1_score, mse};
use copulagraph::numkit::stream_rng;
use copulagraph::simgen::{gen_graph, gen_mixed_data, gen_precision, GraphFamily, MarginalRecipe};
use rayon::prelude::*;

fn main() -> copulagraph::Result<()> {
    let (p, n, reps) = (8, 80, 4);
    for family in [GraphFamily::Random, GraphFamily::Cluster, GraphFamily::ScaleFree] {
        let scores: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream_rng(10, rep);
                let truth = gen_graph(family, p, &mut rng)?;
                let k = gen_precision(&truth, &mut rng)?;
                let data = gen_mixed_data(&k, n, &MarginalRecipe::cycled(p), &mut rng)?;
                let cfg = ChainConfig { iterations: 3000, burn_in: 1500, stream: rep, ..Default::default() };
                let probs = edge_probabilities(&run_chain(&data, &cfg)?)?;
                let est = select_graph(&probs, 0.5, None)?.graph;
                Ok((f1_score(&est, &truth)?, mse(&probs, &truth)?))
            })
            .collect::<copulagraph::Result<_>>()?;
        let f1 = scores.iter().map(|s| s.0).sum::<f64>() / reps as f64;
        let m = scores.iter().map(|s| s.1).sum::<f64>() / reps as f64;
        println!("{:<10} mean F1 {f1:.2}  mean MSE {m:.2}", family.as_str());
    }
    Ok(())
}
