//! When an early tier exits unanimously but wrongly, would the large model
//! have got it wrong too? Counts these cases for a few configurations.
//!
//!     cargo run --example wrong_agreements

use coe::analysis::{sweep_runs, write_wrong_agreements, wrong_agreements, SweepSpec};
use coe::dataset::{generate_synthetic, SyntheticSpec};

fn main() -> coe::Result<()> {
    let table = generate_synthetic(&SyntheticSpec {
        num_examples: 10_000,
        label_space_size: 10,
        model_accuracies: vec![0.65, 0.64, 0.63, 0.9],
        correlation: 0.5,
        seed: 1,
    })?;
    let spec = SweepSpec {
        ensemble_sizes: vec![2, 3],
        thresholds: vec![2.0 / 3.0, 1.0],
        tier_pool: vec![
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec!["m4".into()],
        ],
        woc_thresholds: None,
    };
    let rows = sweep_runs(&table, &spec)?
        .iter()
        .map(|(config, run)| {
            let label = format!(
                "{} models, threshold={:.2}",
                config.ensemble_size().unwrap(),
                config.theta().unwrap()
            );
            wrong_agreements(&label, run, &table, "m4")
        })
        .collect::<coe::Result<Vec<_>>>()?;
    write_wrong_agreements(std::io::stdout().lock(), &rows)
}
