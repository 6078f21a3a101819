//! Piecewise-constant epsilon-optimal control read off the inf-convolution of
//! the value function, with the parameter schedule.
//!
//! cargo run --release --example synthesis

use evoctrl::convolution::{ConvolutionParams, SearchOptions};
use evoctrl::problem::{vintage, VintageSpec};
use evoctrl::synthesis::{run_schedule, SynthesisConfig};
use evoctrl::value::{vintage_value, VintageValue};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;
    let mut x = StateVec::zeros(spec.dim());
    x[0] = -1.0;
    x[5] = 0.2;
    let w = VintageValue::new(spec.clone());

    let cfg = SynthesisConfig {
        window: 0.9,
        n: 40,
        params: ConvolutionParams::for_problem(&problem, 1e-8, 1e-2, 1e-3)?,
        nu: 0.05,
        delta: 0.05,
        dt: 1e-3,
        search: SearchOptions::default(),
    };
    let report = run_schedule(&problem, &w, 0.0, &x, &cfg, 8)?;
    for a in &report.attempts {
        println!(
            "lambda {:.0e} eps {:.0e} beta {:.0e} n {:>3}: gap {:+.3e}",
            a.params.lambda, a.params.epsilon, a.params.beta, a.n, a.gap
        );
    }
    let res = &report.result;
    println!("target met: {}", report.met);
    println!("cost {:.6} vs V {:.6}", res.cost, vintage_value(&spec, 0.0, &x));
    println!("beta within delta^2/16: {}", res.window.beta_within_margin);
    for s in res.window.per_step.iter().step_by(8) {
        println!("t {:.3}  u {:+.4}  -G(t) {:+.4}  slack {:+.2e}", s.t, s.u[0], -spec.g(s.t), s.slack);
    }
    Ok(())
}
