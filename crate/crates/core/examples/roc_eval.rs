//! ROC curves and scores from edge-probability matrices.
use copulagraph::bdmcmc::EdgeProbMatrix;
use copulagraph::evalkit::{f1_score, mse, roc_points};
use copulagraph::graph::Graph;
use nalgebra::DMatrix;

fn main() -> copulagraph::Result<()> {
    let truth = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)])?;
    let mut m = DMatrix::zeros(4, 4);
    for (i, j, v) in [(0, 1, 0.9), (1, 2, 0.6), (2, 3, 0.3), (0, 2, 0.4), (0, 3, 0.1), (1, 3, 0.05)] {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let probs = EdgeProbMatrix::new(m)?;

    let curve = roc_points(&probs, &truth)?;
    for (fpr, tpr) in &curve.points {
        println!("fpr {fpr:.3} tpr {tpr:.3}");
    }
    println!("AUC {:.3}, above the diagonal: {}", curve.auc(), curve.dominates_diagonal());
    let est = Graph::from_edges(4, [(0, 1), (1, 2)])?;
    println!("F1 {:.3}, MSE {:.3}", f1_score(&est, &truth)?, mse(&probs, &truth)?);
    Ok(())
}
