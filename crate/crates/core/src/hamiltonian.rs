//! The Hamiltonian `H(t, x, p) = inf_u <p, b(t, x, u)> + L(t, x, u)`.

use crate::error::Result;
use crate::problem::ControlProblem;
use crate::statespace::StateVec;

const INTERIOR_MARGIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianResult {
    pub value: f64,
    pub argmin_u: Vec<f64>,
    /// The minimizer is strictly inside the control box.
    pub interior: bool,
}

fn objective(problem: &ControlProblem, t: f64, x: &StateVec, p: &StateVec, u: &[f64]) -> f64 {
    p.dot(&problem.drift(t, x, u)) + problem.running_cost(t, x, u)
}

/// Grid minimization followed by one three-point parabolic refinement per
/// coordinate. Ties on the grid go to the lexicographically smallest point.
pub fn hamiltonian(problem: &ControlProblem, t: f64, x: &StateVec, p: &StateVec) -> HamiltonianResult {
    let controls = problem.controls();
    let mut best = f64::INFINITY;
    let mut arg = controls.grid()[0].clone();
    for u in controls.grid() {
        let v = objective(problem, t, x, p, u);
        if v < best {
            best = v;
            arg = u.clone();
        }
    }
    for k in 0..controls.dim() {
        let h = controls.spacing(k);
        if h == 0.0 {
            continue;
        }
        let (lo, hi) = (controls.lower()[k], controls.upper()[k]);
        let c = if arg[k] - h < lo - INTERIOR_MARGIN {
            lo + h
        } else if arg[k] + h > hi + INTERIOR_MARGIN {
            hi - h
        } else {
            arg[k]
        };
        let at = |v: f64| {
            let mut u = arg.clone();
            u[k] = v;
            objective(problem, t, x, p, &u)
        };
        let (fm, f0, fp) = (at(c - h), at(c), at(c + h));
        let curv = fm - 2.0 * f0 + fp;
        if curv <= 0.0 {
            continue;
        }
        let vertex = (c + 0.5 * h * (fm - fp) / curv).clamp((c - h).max(lo), (c + h).min(hi));
        let fv = at(vertex);
        if fv < best {
            best = fv;
            arg[k] = vertex;
        }
    }
    let interior = arg
        .iter()
        .zip(controls.lower().iter().zip(controls.upper()))
        .all(|(u, (l, h))| *u > l + INTERIOR_MARGIN && *u < h - INTERIOR_MARGIN);
    HamiltonianResult {
        value: best,
        argmin_u: arg,
        interior,
    }
}

/// `w_t + <A* Dw, x> + H(t, x, Dw)`
pub fn hjb_residual(problem: &ControlProblem, w_t: f64, dw: &StateVec, t: f64, x: &StateVec) -> Result<f64> {
    let pairing = problem.generator().pair_adjoint(dw, x)?;
    Ok(w_t + pairing + hamiltonian(problem, t, x, dw).value)
}
