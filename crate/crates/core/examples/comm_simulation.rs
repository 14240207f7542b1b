//! Edge-to-cloud latency: each tier sits further from the device, so a
//! deferred example pays a growing network delay on top of compute.
//!
//!     cargo run --example comm_simulation

use std::path::Path;

use coe::costmodel::{
    comm_latency, load_tier_fixture, make_delay_profile, DEFAULT_CANONICAL_DELAYS_MS,
};

fn main() -> coe::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiers");
    println!("canonical delays (ms): {DEFAULT_CANONICAL_DELAYS_MS:?}");
    for name in ["cifar10", "imagenet", "swag", "sst2", "twitter"] {
        let fx = load_tier_fixture(&dir.join(format!("{name}.csv")))?;
        let delays = make_delay_profile(fx.tiers.len(), &DEFAULT_CANONICAL_DELAYS_MS)?;
        let comm = comm_latency(&fx.fractions(), &fx.latencies(), &delays)?;
        println!(
            "{name:9} delays {:?}: cascade {:8.2} ms, cloud-only {:8.2} ms, {:.2}x faster",
            delays.delays_ms, comm.coe_ms, comm.best_single_ms, comm.reduction_ratio
        );
    }
    Ok(())
}
