//! Rank-constrained latent updates for mixed data.
use copulagraph::copula::{gibbs_update_latent, initialize_latent, MixedDataset, VariableKind};
use copulagraph::numkit::stream_rng;
use nalgebra::DMatrix;

fn main() -> copulagraph::Result<()> {
    let values = DMatrix::from_row_slice(
        6,
        3,
        &[
            0.3, 0.0, 2.0, //
            -1.2, 1.0, 0.0, //
            0.8, 1.0, 5.0, //
            2.1, 0.0, 1.0, //
            -0.4, 1.0, 3.0, //
            1.5, 0.0, 0.0,
        ],
    );
    let kinds = vec![VariableKind::Continuous, VariableKind::Binary, VariableKind::Count];
    let mut missing = DMatrix::from_element(6, 3, false);
    missing[(3, 2)] = true;
    let data = MixedDataset::new(values, kinds, missing)?;

    let mut rng = stream_rng(1, 0);
    let mut z = initialize_latent(&data, &mut rng);
    let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 1.0]);
    for _ in 0..100 {
        z = gibbs_update_latent(&z, &k, &data, &mut rng)?;
    }
    assert!(z.is_rank_consistent(&data));
    println!("latent matrix after 100 sweeps:\n{:.3}", z.as_matrix());
    Ok(())
}
