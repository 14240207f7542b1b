//! The three deferral rules side by side: ensemble vote, single-model
//! confidence, and the oracle that knows the answer.
//!
//!     cargo run --example deferral_rules

use coe::dataset::Label;
use coe::deferral::{confidence_deferral, majority_vote, oracle_deferral, vote_deferral};

fn main() -> coe::Result<()> {
    let votes = [
        vec![Label(3), Label(3), Label(3)],
        vec![Label(3), Label(3), Label(1)],
        vec![Label(0), Label(1), Label(2)],
        // a tie goes to the smaller label
        vec![Label(2), Label(5)],
    ];
    for labels in &votes {
        let v = majority_vote(labels, None)?;
        print!(
            "{labels:?} -> majority {} ({}/{})",
            v.majority_label, v.agreeing, v.ensemble_size
        );
        for theta in [0.5, 2.0 / 3.0, 1.0] {
            print!("  theta {theta:.2}: {:?}", vote_deferral(&v, theta));
        }
        println!();
    }

    for score in [0.55, 0.8, 0.97] {
        println!(
            "confidence {score}: {:?} at 0.8",
            confidence_deferral(Label(4), Some(score), 0.8)?
        );
    }
    // The confidence rule has nothing to go on without a score.
    println!(
        "no score: {}",
        confidence_deferral(Label(4), None, 0.8).unwrap_err()
    );

    println!(
        "oracle, h1 right: {:?}",
        oracle_deferral(Label(7), Label(7))
    );
    println!(
        "oracle, h1 wrong: {:?}",
        oracle_deferral(Label(2), Label(7))
    );
    Ok(())
}
