//! Structure learning on simulated mixed data.
use copulagraph::bdmcmc::{edge_probabilities, run_chain, select_graph, ChainConfig};
use copulagraph::evalkit::f1_score;
use copulagraph::numkit::stream_rng;
use copulagraph::simgen::{gen_graph, gen_mixed_data, gen_precision, GraphFamily, MarginalRecipe};

fn main() -> copulagraph::Result<()> {
    let p = 6;
    let mut rng = stream_rng(3, 0);
    let truth = gen_graph(GraphFamily::Random, p, &mut rng)?;
    let k = gen_precision(&truth, &mut rng)?;
    let data = gen_mixed_data(&k, 150, &MarginalRecipe::cycled(p), &mut rng)?;

    let cfg = ChainConfig { iterations: 4000, burn_in: 2000, ..Default::default() };
    let trace = run_chain(&data, &cfg)?;
    let probs = edge_probabilities(&trace)?;
    let selected = select_graph(&probs, 0.5, Some(&trace.mean_precision()?))?;

    println!("posterior edge probabilities:\n{:.2}", probs.as_matrix());
    for s in &selected.edges {
        println!("{:?} prob {:.2} partial correlation {:+.2}", s.edge, s.prob, s.partial_corr);
    }
    println!("true edges {}, F1 {:.2}", truth.edge_count(), f1_score(&selected.graph, &truth)?);
    Ok(())
}
