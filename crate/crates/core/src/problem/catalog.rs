//! Named problem instances.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::problem::{ControlProblem, ControlSet, DEFAULT_CONTROL_GRID};
use crate::statespace::{SmoothingOperator, SpectralOperator, StateVec};
use crate::value::compute_g;

/// Parameters of the rotation-semigroup ("vintage capital") family.
///
/// State space: periodic `L^2(0,1)` truncated to the constant mode plus `modes`
/// cosine/sine pairs. `alpha` is the constant mode, an eigenvector of `A*` with
/// eigenvalue `eigenvalue`. The control enters along
/// `beta = coupling * alpha + square_wave`, so `<alpha, beta> = coupling`.
#[derive(Clone, Debug, PartialEq)]
pub struct VintageSpec {
    pub modes: usize,
    pub horizon: f64,
    pub coupling: f64,
    pub eigenvalue: f64,
    pub control_points: usize,
}

impl VintageSpec {
    /// Mean-zero square wave direction, `<alpha, beta> = 0`.
    pub fn degenerate() -> Self {
        VintageSpec {
            modes: 4,
            horizon: 1.0,
            coupling: 0.0,
            eigenvalue: 0.0,
            control_points: DEFAULT_CONTROL_GRID,
        }
    }

    /// `<alpha, beta> = 1`.
    pub fn nondegenerate() -> Self {
        VintageSpec {
            coupling: 1.0,
            ..VintageSpec::degenerate()
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn alpha(&self) -> StateVec {
        StateVec::unit(self.dim(), 0)
    }

    pub fn beta(&self) -> StateVec {
        let mut beta = square_wave(self.modes);
        beta[0] += self.coupling;
        beta
    }

    /// `G(t) = int_t^T e^{lambda (s - t)} ds`
    pub fn g(&self, t: f64) -> f64 {
        compute_g(self.eigenvalue, t, self.horizon)
    }

    /// `sup_t |<alpha_bar(t), beta>|`; the control box is `[-M-1, M+1]`.
    pub fn control_bound(&self) -> f64 {
        self.coupling.abs() * self.g(0.0)
    }

    pub fn name(&self) -> &'static str {
        if self.coupling == 0.0 {
            "vintage"
        } else {
            "vintage-nondegenerate"
        }
    }
}

/// Coefficients of `chi_[0,1/2] - chi_[1/2,1]` in the real Fourier basis.
pub fn square_wave(modes: usize) -> StateVec {
    let mut c = StateVec::zeros(2 * modes + 1);
    for k in (1..=modes).step_by(2) {
        c[2 * k] = 2.0 * SQRT_2 / (PI * k as f64);
    }
    c
}

pub fn vintage(spec: &VintageSpec) -> Result<ControlProblem> {
    if !(spec.eigenvalue <= 0.0) {
        return Err(Error::param("eigenvalue", "must be nonpositive for a contraction semigroup"));
    }
    if !spec.coupling.is_finite() {
        return Err(Error::param("coupling", "must be finite"));
    }
    let a = SpectralOperator::rotation(spec.modes, spec.eigenvalue)?;
    let b = SmoothingOperator::fourier(spec.modes);
    let m = spec.control_bound();
    let controls = ControlSet::interval(-m - 1.0, m + 1.0, spec.control_points)?;
    let beta = spec.beta();
    let beta_norm = beta.norm();
    let descriptor = format!(
        "modes={};T={:?};coupling={:?};eigenvalue={:?};grid={}",
        spec.modes, spec.horizon, spec.coupling, spec.eigenvalue, spec.control_points
    );
    ControlProblem::builder(spec.name(), a, b, spec.horizon, controls)
        .descriptor(descriptor)
        .drift(move |_, _, u| beta.scaled(u[0]))
        .running_cost(|_, x, u| -x[0].abs() + 0.5 * u[0] * u[0])
        .terminal_cost(|_| 0.0)
        .constants(1.0, (0.5 * (m + 1.0).powi(2)).max((m + 1.0) * beta_norm), 1.0)
        .vintage(spec.clone())
        .build()
}

/// One-dimensional problem with `A = 0`, `b = u`, `L = u^2/2`, `h(x) = x`, `U = [-1, 1]`.
/// Its value function is `V(t, x) = x - (T - t)/2` with optimal control `u = -1`.
pub fn scalar_toy(horizon: f64, control_points: usize) -> Result<ControlProblem> {
    let a = SpectralOperator::diagonal(&[0.0])?;
    let controls = ControlSet::interval(-1.0, 1.0, control_points)?;
    ControlProblem::builder("scalar-toy", a, SmoothingOperator::identity(1), horizon, controls)
        .descriptor(format!("T={horizon:?};grid={control_points}"))
        .drift(|_, _, u| StateVec::from_vec(vec![u[0]]))
        .running_cost(|_, _, u| 0.5 * u[0] * u[0])
        .terminal_cost(|x| x[0])
        .constants(1.0, 1.0, 1.0)
        .build()
}
