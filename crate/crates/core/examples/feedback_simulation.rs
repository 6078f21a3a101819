//! Closed-form value of the vintage problem against the cost of its optimal
//! feedback, applied sample-and-hold.
//!
//! cargo run --example feedback_simulation

use evoctrl::dynamics::{cost, sample_and_hold};
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::value::{vintage_feedback, vintage_value, BoundaryConvention};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let mut x = StateVec::zeros(spec.dim());
    x[0] = -1.0;
    x[3] = 0.3;

    let v = vintage_value(&spec, 0.0, &x);
    println!("V(0, x) = {v:.9}");
    for pieces in [5, 20, 200] {
        let (u, traj) = sample_and_hold(&problem, 0.0, 1.0, &x, pieces, 1e-3, |t, x| {
            vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
        })?;
        let j = cost(&problem, &traj);
        println!("{pieces:>4} pieces: J = {j:.9}  J - V = {:.3e}  u(0) = {:.4}", j - v, u.values()[0][0]);
    }

    let (_, traj) = sample_and_hold(&problem, 0.0, 1.0, &x, 200, 1e-3, |t, x| {
        vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
    })?;
    let (times, states) = traj.resample(5);
    for (t, s) in times.iter().zip(&states) {
        println!("t = {t:.2}  <alpha, x> = {:+.4}  |x| = {:.4}", s[0], s.norm());
    }
    Ok(())
}
