//! Per-tier GPU cost tables for five recorded cascades, plus how much cheaper
//! each is than running its best single model on every example.
//!
//!     cargo run --example gpu_cost_report

use std::path::Path;

use coe::analysis::reduction_summary;
use coe::costmodel::{aggregate, load_tier_fixture, write_cost_report, BestSingle, CostReportRow};
use coe::engine::Attribution;

fn main() -> coe::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiers");
    let mut rows = Vec::new();
    for name in ["cifar10", "imagenet", "swag", "sst2", "twitter"] {
        let fx = load_tier_fixture(&dir.join(format!("{name}.csv")))?;
        let report = aggregate(&fx.fractions(), &fx.costs(), Attribution::ExitTier)?
            .with_best_single(BestSingle {
                model_id: None,
                cost: fx.best_single,
                accuracy: None,
            });
        let red = reduction_summary(&report)?;
        eprintln!(
            "{name:9} ${:.2}/h vs ${:.2}/h single: {:.2}x cheaper, {:.2}x fewer flops",
            report.coe_row.dollars_per_hour,
            fx.best_single.dollars_per_hour,
            red.dollars,
            red.flops
        );
        rows.extend(CostReportRow::from_report(name, &report));
    }
    write_cost_report(std::io::stdout().lock(), &rows)
}
