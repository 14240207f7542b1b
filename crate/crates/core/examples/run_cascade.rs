//! Run a four-tier cascade over recorded predictions and print where examples
//! exit, how accurate the cascade is and what it costs per example.
//!
//!     cargo run --example run_cascade

use std::path::Path;

use coe::costmodel::{aggregate, cascade_tier_costs};
use coe::dataset::{load_predictions, load_prices, load_profiles};
use coe::engine::{run_cascade, Attribution, CascadeSpec};

fn main() -> coe::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let table = load_predictions(&dir.join("cifar10/predictions.csv"))?;
    let prices = load_prices(&dir.join("prices.csv"))?;
    let profiles = load_profiles(&dir.join("cifar10/profiles.csv"), &prices)?;

    // Two models per tier; an example leaves a tier only on a unanimous vote.
    let spec = CascadeSpec::uniform(
        &[
            vec!["t1a", "t1b"],
            vec!["t2a", "t2b"],
            vec!["t3a", "t3b"],
            vec!["t4a", "t4b"],
        ],
        1.0,
    );
    let run = run_cascade(&table, &spec)?;
    let per_tier = cascade_tier_costs(&spec, &profiles)?;

    println!(
        "accuracy {:.3} over {} examples",
        run.accuracy(),
        run.traces.len()
    );
    for (t, (n, cost)) in run.exit_counts().iter().zip(&per_tier).enumerate() {
        println!(
            "tier {}: {n:3} exits, {:.2e} flops, {:.2} ms, ${:.2}/h",
            t + 1,
            cost.flops,
            cost.latency_ms,
            cost.dollars_per_hour
        );
    }
    for mode in [Attribution::ExitTier, Attribution::Cumulative] {
        let r = aggregate(&run.exit_fractions, &per_tier, mode)?;
        println!(
            "{mode:?}: {:.3e} flops, {:.3} ms, ${:.3}/h",
            r.coe_row.flops, r.coe_row.latency_ms, r.coe_row.dollars_per_hour
        );
    }
    Ok(())
}
