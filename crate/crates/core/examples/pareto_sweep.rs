//! Sweep ensemble sizes and vote thresholds, add the confidence-cascade
//! baseline, and keep the configurations no other one beats on both cost and
//! accuracy.
//!
//!     cargo run --example pareto_sweep

use coe::analysis::{default_woc_grid, sweep, SweepSpec};
use coe::costmodel::pareto_frontier;
use coe::dataset::{generate_synthetic, GpuPriceList, ModelProfile, SyntheticSpec};
use coe::engine::ExecutionMode;

fn main() -> coe::Result<()> {
    // Three small models, three medium, one large.
    let accuracies = vec![0.62, 0.6, 0.58, 0.75, 0.73, 0.72, 0.86];
    let table = generate_synthetic(&SyntheticSpec {
        num_examples: 5000,
        label_space_size: 10,
        model_accuracies: accuracies.clone(),
        correlation: 0.4,
        seed: 42,
    })?;
    let prices = GpuPriceList::lambda_cloud();
    let profiles: Vec<ModelProfile> = (0..accuracies.len())
        .map(|i| {
            let (flops, latency, gpu) = match i {
                0..=2 => (1e7, 3.0, "V100"),
                3..=5 => (8e7, 5.0, "A6000"),
                _ => (6e8, 9.0, "H100"),
            };
            ModelProfile {
                model_id: format!("m{}", i + 1),
                flops_per_example: flops,
                latency_ms: latency,
                gpu_tier: gpu.into(),
                dollars_per_hour: prices.price(gpu).unwrap(),
            }
        })
        .collect();

    let spec = SweepSpec {
        ensemble_sizes: vec![1, 2, 3],
        thresholds: vec![0.5, 2.0 / 3.0, 1.0],
        tier_pool: vec![
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec!["m4".into(), "m5".into(), "m6".into()],
            vec!["m7".into()],
        ],
        woc_thresholds: Some(default_woc_grid()),
    };
    let points = sweep(&table, &profiles, &spec, ExecutionMode::Parallel)?;
    let frontier = pareto_frontier(&points.iter().map(|p| p.to_pareto()).collect::<Vec<_>>());
    println!(
        "{} configurations, {} on the frontier:",
        points.len(),
        frontier.len()
    );
    for p in &frontier {
        println!(
            "  {:32} {:10.3e} flops  accuracy {:.4}",
            p.tag, p.cost, p.accuracy
        );
    }
    Ok(())
}
