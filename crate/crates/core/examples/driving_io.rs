//! Deterministic drivers, Brownian refinement and the driving-file round trip.

use sle_kappa::driving::{deterministic_driver, sup_distance, BrownianSample, DriverKind, DrivingTerm, TimeGrid};
use sle_kappa::loewner::{trace, LoewnerChain};

fn main() -> sle_kappa::Result<()> {
    let grid = TimeGrid::new(1.0, 2048)?;
    // a sqrt driver c*sqrt(t) gives a straight ray from the origin
    let term = deterministic_driver(DriverKind::Sqrt(1.0), grid)?;
    let chain = LoewnerChain::from_driving(&term)?;
    let tr = trace(&chain, &[0.25, 0.5, 1.0], chain.default_y0())?;
    for s in &tr.samples {
        println!("t = {:.2}  arg gamma = {:.5}", s.t, s.point.to_complex().arg());
    }

    let coarse = BrownianSample::new(3, 6)?;
    let fine = coarse.refine()?;
    println!(
        "refinement keeps coarse points: {}",
        coarse.values().iter().zip(fine.values().iter().step_by(2)).all(|(a, b)| a == b)
    );

    let dir = std::env::temp_dir().join("sle_kappa_driving_io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("driving.txt");
    term.save(&path)?;
    let back = DrivingTerm::load(&path)?;
    println!("saved to {}, sup distance after reload {:e}", path.display(), sup_distance(&term, &back)?);
    Ok(())
}
