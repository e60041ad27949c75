//! Traces for several kappa drawn from one Brownian sample.
//!
//! cargo run --release --example trace_sle -- [seed] [level]

use sle_kappa::driving::{scale_to_driving, BrownianSample};
use sle_kappa::loewner::{trace, LoewnerChain};

fn main() -> sle_kappa::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let level: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(14);

    let sample = BrownianSample::new(seed, level)?;
    let times: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    for kappa in [0.5, 2.0, 4.0] {
        let chain = LoewnerChain::from_driving(&scale_to_driving(&sample, kappa)?)?;
        let tr = trace(&chain, &times, chain.default_y0())?;
        println!("kappa = {kappa}");
        for s in &tr.samples {
            println!("  t = {:.3}  gamma = {:+.5} {:+.5}i", s.t, s.point.re(), s.point.im());
        }
    }
    Ok(())
}
