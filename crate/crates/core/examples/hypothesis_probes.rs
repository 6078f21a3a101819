//! Empirical checks of the structural assumptions: dissipativity and
//! compatibility of the smoothing operator, Lipschitz bounds in the weak norm,
//! and a uniform time modulus of trajectories.
//!
//! cargo run --example hypothesis_probes

use evoctrl::problem::{probe_lipschitz, probe_uniform_modulus, vintage, VintageSpec};
use evoctrl::statespace::{check_b_compatibility, Block};
use evoctrl::synthesis::random_controls;
use evoctrl::{SmoothingOperator, SpectralOperator, StateVec};

fn main() -> evoctrl::Result<()> {
    let spec = VintageSpec::nondegenerate();
    let problem = vintage(&spec)?;

    let rep = check_b_compatibility(problem.generator(), problem.smoothing(), 500, 1)?;
    println!("rotation with Fourier smoothing: max violation {:.2e}, pass {}", rep.max_violation, rep.passed);
    let skewed = SpectralOperator::new(vec![Block::Pair([[-1.0, 3.0], [-2.0, -1.0]])])?;
    let b = SmoothingOperator::new(vec![1.0, 0.2], 0.0)?;
    let rep = check_b_compatibility(&skewed, &b, 500, 1)?;
    println!("non-normal block with anisotropic smoothing: max violation {:.2e}, pass {}", rep.max_violation, rep.passed);

    let lip = probe_lipschitz(&problem, 400, 2.0, 2)?;
    println!("drift ratio {:.3e}, cost ratio {:.3} (K = {})", lip.drift_ratio, lip.cost_ratio, lip.k);

    let mut x = StateVec::zeros(spec.dim());
    x[0] = -1.0;
    x[7] = 0.5;
    let controls = random_controls(&problem, 0.0, 1.0, 8, 10, 3)?;
    let deltas = [0.01, 0.05, 0.1, 0.2];
    let m = probe_uniform_modulus(&problem, 0.0, &x, &controls, &deltas, 1e-3)?;
    for (d, v) in deltas.iter().zip(&m.modulus) {
        println!("delta {d:.2}: modulus {v:.4}");
    }
    println!("spread over controls {:.3}", m.spread);
    Ok(())
}
