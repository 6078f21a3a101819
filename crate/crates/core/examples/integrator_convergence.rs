//! Second-order convergence of the exponential midpoint integrator and the
//! chain-rule residual for a smooth test function.
//!
//! cargo run --example integrator_convergence

use std::f64::consts::PI;

use evoctrl::dynamics::{chain_rule_residual, convergence_study, PiecewiseControl};
use evoctrl::problem::{vintage, SmoothScalar, Test1Fn, VintageSpec};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let x = StateVec::new(vec![-1.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.1, 0.3])?;
    let u = PiecewiseControl::uniform(0.0, 1.0, vec![vec![0.8], vec![-0.3], vec![0.1], vec![-1.2]])?;
    let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];
    let rep = convergence_study(&problem, 0.0, &x, &u, &dts)?;

    let n = spec.dim();
    let phi = Test1Fn::linear(
        StateVec::unit(n, 0),
        SmoothScalar::custom(|t| (PI * t).cos(), |t| -PI * (PI * t).sin()),
        SmoothScalar::constant(0.0),
        problem.generator(),
    )?
    .with_quadratic(vec![1.0; n], StateVec::zeros(n))?;

    for (k, (dt, traj)) in dts.iter().zip(&rep.trajectories).enumerate() {
        let r = chain_rule_residual(&problem, &phi, traj)?;
        let ratio = k.checked_sub(1).and_then(|i| rep.ratios.get(i)).map_or(String::from("-"), |r| format!("{r:.4}"));
        println!("dt {dt:.3e}  difference ratio {ratio:>6}  chain-rule residual {r:.3e}  residual/dt^2 {:.4}", r / (dt * dt));
    }
    Ok(())
}
