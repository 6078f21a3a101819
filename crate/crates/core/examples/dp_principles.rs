//! One-sided dynamic programming inequalities: no control beats the value
//! function, and the optimal feedback attains it.
//!
//! cargo run --example dp_principles

use evoctrl::dynamics::sample_and_hold;
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::synthesis::{random_controls, suboptimality_check, superoptimality_gap};
use evoctrl::value::{vintage_feedback, AffineShift, BoundaryConvention, VintageValue};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let v = VintageValue::new(spec.clone());
    let mut x = StateVec::zeros(spec.dim());
    x[0] = -1.0;
    x[2] = 0.1;

    let controls = random_controls(&problem, 0.0, 1.0, 10, 50, 7)?;
    let rep = suboptimality_check(&problem, &v, 0.0, &x, 1.0, &controls, 1e-3, 1e-3)?;
    println!("50 random controls: max gap {:.4e}, pass {}", rep.max_gap, rep.passed);
    for window in [0.25, 0.5] {
        let rep = suboptimality_check(&problem, &v, 0.0, &x, window, &controls, 1e-3, 1e-3)?;
        println!("window {window}: max gap {:.4e}", rep.max_gap);
    }

    let (u, _) = sample_and_hold(&problem, 0.0, 1.0, &x, 200, 1e-3, |t, x| {
        vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
    })?;
    for window in [0.3, 0.6, 1.0] {
        println!("feedback, window {window}: gap {:+.3e}", superoptimality_gap(&problem, &v, 0.0, &x, window, &u, 1e-3)?);
    }

    let too_high = AffineShift {
        inner: v,
        offset: 1.0,
        rate: 0.0,
        horizon: 1.0,
    };
    let rep = suboptimality_check(&problem, &too_high, 0.0, &x, 1.0, &controls, 1e-3, 1e-3)?;
    println!("V + 1 is not a subsolution: max gap {:.4}, pass {}", rep.max_gap, rep.passed);
    Ok(())
}
