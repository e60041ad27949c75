//! Sup-norm perturbation bound on a coupled pair of chains.

use sle_kappa::driving::{scale_to_driving, BrownianSample};
use sle_kappa::loewner::{HalfPlanePoint, LoewnerChain};
use sle_kappa::perturbation::{basic_bound, time_distortion_check, verify_pair};

fn main() -> sle_kappa::Result<()> {
    let sample = BrownianSample::new(11, 12)?;
    let a = LoewnerChain::from_driving(&scale_to_driving(&sample, 1.0)?)?;
    let b = LoewnerChain::from_driving(&scale_to_driving(&sample, 1.1)?)?;

    let ts: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
    let zs: Vec<HalfPlanePoint> = (1..=6)
        .map(|e| HalfPlanePoint::new(0.25, (-(e as f64)).exp2()))
        .collect::<Result<_, _>>()?;
    let r = verify_pair(&a, &b, &ts, &zs)?;
    println!("epsilon            {:.5}", r.epsilon);
    println!("max ratio          {:.5}  (bound holds: {})", r.max_ratio, r.holds());
    println!("worst point        t = {}, z = {} + {}i", r.worst_point.t, r.worst_point.re, r.worst_point.im);
    println!("max refined ratio  {:.5}", r.max_refined_ratio);
    println!("bound at y = 2^-6  {:.5}", basic_bound(r.epsilon, 1.0, 2f64.powi(-6))?);

    let d = time_distortion_check(&a, &ts, &[0.5, 0.25, 0.125])?;
    println!("time distortion    c_ratio {:.4}, c_move {:.4}", d.c_ratio, d.c_move);
    Ok(())
}
