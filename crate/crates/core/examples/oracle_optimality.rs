//! Exiting exactly when the small model is right gives the lowest possible
//! risk. Check that against every one of the 2^n exit rules on small tables.
//!
//!     cargo run --example oracle_optimality

use coe::dataset::{generate_synthetic, SyntheticSpec};
use coe::engine::{brute_force_min_risk, run_oracle_two_model};

fn main() -> coe::Result<()> {
    for seed in 0..8 {
        let table = generate_synthetic(&SyntheticSpec {
            num_examples: 12,
            label_space_size: 3,
            model_accuracies: vec![0.6, 0.8],
            correlation: 0.3,
            seed,
        })?;
        let oracle = run_oracle_two_model(&table, "m1", "m2")?;
        let best = brute_force_min_risk(&table, "m1", "m2")?;
        println!(
            "seed {seed}: oracle risk {:.4}, exhaustive minimum {:.4}, deferred {}/12",
            oracle.risk,
            best,
            oracle.run.deferrals()
        );
        assert_eq!(oracle.risk, best);
    }
    Ok(())
}
