//! Generate predictions for models of chosen accuracy whose mistakes are
//! correlated, then check the marginals and pairwise agreement.
//!
//!     cargo run --example synthetic_data

use coe::dataset::{generate_synthetic, SyntheticSpec};

fn main() -> coe::Result<()> {
    for correlation in [0.0, 0.5, 1.0] {
        let table = generate_synthetic(&SyntheticSpec {
            num_examples: 20_000,
            label_space_size: 5,
            model_accuracies: vec![0.7, 0.8, 0.9],
            correlation,
            seed: 7,
        })?;
        let acc: Vec<String> = (0..3)
            .map(|m| format!("{:.3}", table.accuracy(m)))
            .collect();
        let truth = table.true_labels();
        let both = (0..table.num_examples())
            .filter(|&i| table.prediction(i, 0) == truth[i] && table.prediction(i, 1) == truth[i])
            .count() as f64
            / table.num_examples() as f64;
        println!(
            "correlation {correlation}: accuracies [{}], P(m1 and m2 right) = {both:.3}",
            acc.join(", ")
        );
    }

    let small = generate_synthetic(&SyntheticSpec {
        num_examples: 4,
        label_space_size: 3,
        model_accuracies: vec![0.5, 0.9],
        correlation: 0.2,
        seed: 3,
    })?;
    print!("{}", small.to_csv_string());
    Ok(())
}
