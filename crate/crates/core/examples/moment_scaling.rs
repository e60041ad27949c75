//! Moments and tails of |F'| at corner points.
//!
//! cargo run --release --example moment_scaling -- [samples]

use sle_kappa::montecarlo::{moment_and_tail, CornerScanConfig};

fn main() -> sle_kappa::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = CornerScanConfig {
        kappa: 1.0,
        n: 6,
        j_list: (2..=10).map(|k| 1u64 << k).collect(),
        sample_count: samples,
        seed: 1,
        level: None,
    };
    let (m, t) = moment_and_tail(&cfg, 0.5)?;
    println!("lambda = {:.4}, zeta = {:.4}", m.lambda, m.zeta);
    for (e, te) in m.estimates.iter().zip(&t.estimates) {
        println!(
            "j = {:>5}  E|F'|^lambda = {:.4e} +- {:.1e}   P(|F'| >= 2^(n beta)) = {:.4} [{:.4}, {:.4}]",
            e.j, e.mean, e.std_error, te.frequency, te.ci_low, te.ci_high
        );
    }
    println!("slope {:.4} +- {:.4}, target {:.4}", m.fit.slope, m.fit.slope_std_error, m.target_slope);
    println!("Markov check holds: {}", t.markov_holds);
    Ok(())
}
