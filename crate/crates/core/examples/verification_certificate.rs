//! Sufficient optimality checks: the integral certificate along optimal and
//! non-optimal trajectories, and superdifferential membership at the kink.
//!
//! cargo run --example verification_certificate

use evoctrl::dynamics::{integrate_mild, sample_and_hold, PiecewiseControl};
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::value::{vintage_feedback, BoundaryConvention, VintageValue};
use evoctrl::verify::{check_certificate, check_superdiff_membership, pointwise_residual, CertificateSelectors, DEFAULT_DELTAS};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let mut x = StateVec::zeros(spec.dim());
    x[0] = -1.0;
    for i in 1..spec.dim() {
        x[i] = 0.5 / (i.div_ceil(2) as f64).sqrt();
    }

    let (_, traj) = sample_and_hold(&problem, 0.0, 1.0, &x, 200, 1e-3, |t, x| {
        vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
    })?;
    let rep = check_certificate(&problem, &traj, &CertificateSelectors::vintage(&spec, &traj), Some(1e-3))?;
    println!("optimal pair: lhs {:.6} rhs {:.6} equality {}", rep.lhs, rep.rhs, rep.equality);

    for c in [1.0, -0.5] {
        let u = PiecewiseControl::constant(0.0, 1.0, vec![c])?;
        let traj = integrate_mild(&problem, 0.0, &x, &u, 1e-3)?;
        let rep = check_certificate(&problem, &traj, &CertificateSelectors::vintage(&spec, &traj), None)?;
        println!("u = {c:+}: lhs - rhs = {:.6}, pass {}", rep.lhs - rep.rhs, rep.pass);
    }

    let v = VintageValue::new(spec.clone());
    let t = 0.5;
    let mut k = x.clone();
    k[0] = 0.0;
    let (q, _) = v.branch_derivatives(t, &k);
    for gamma in [-1.5, -1.0, 0.0, 1.0, 1.5] {
        let p = spec.alpha().scaled(gamma * spec.g(t));
        let m = check_superdiff_membership(&v, t, &k, q, &p, 1e-3, 64, 1)?;
        println!("gamma {gamma:+.1}: first-order excess {:.3e}, member {}", m.violation, m.pass);
    }

    let s = 0.3;
    let mut y = x.clone();
    y[0] = -0.7;
    let u_opt = vintage_feedback(&spec, s, &y, BoundaryConvention::Closed);
    for u in [u_opt, u_opt + 0.5] {
        let r = pointwise_residual(&problem, &v, s, &y, &[u], &DEFAULT_DELTAS)?;
        println!("directional residual at u = {u:+.3}: {r:.3e}");
    }
    Ok(())
}
