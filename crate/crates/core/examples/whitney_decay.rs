//! Image diameters of Whitney boxes and their decay rate, plus a geodesic
//! chain of boxes between two points.

use sle_kappa::driving::BrownianSample;
use sle_kappa::whitney::{boxes_at_level, decay_fit, geodesic_chain, DecayFitConfig};

fn main() -> sle_kappa::Result<()> {
    println!("boxes at level 3 (q = 1, kappa <= 1): {}", boxes_at_level(3, 1.0, 1.0)?.len());

    let sample = BrownianSample::new(5, 12)?;
    for (label, range) in [("zero driving", (0.0, 0.0)), ("kappa in [0, 1]", (0.0, 1.0))] {
        let cfg = DecayFitConfig {
            kappa_range: range,
            n_range: (2, 5),
            boxes_per_level: 16,
            m: 4,
            box_seed: 5,
            ..Default::default()
        };
        let fit = decay_fit(&sample, &cfg)?;
        println!("{label}: delta = {:.3} (r^2 {:.3})", fit.delta_hat, fit.r_squared);
        for l in &fit.levels {
            println!("  n = {}  max diameter {:.4e} over {} boxes", l.n, l.max_diameter, l.boxes);
        }
    }

    let chain = geodesic_chain((0.3, 0.4), (0.3 + 2f64.powi(-10), 0.4), 1.0, 8)?;
    println!("geodesic chain: {} boxes, connect level {}", chain.boxes.len(), chain.connect_level);
    Ok(())
}
