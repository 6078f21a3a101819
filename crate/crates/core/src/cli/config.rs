//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::convolution::ConvolutionParams;
use crate::error::{Error, Result};
use crate::problem::{scalar_toy, vintage, ControlProblem, VintageSpec, DEFAULT_CONTROL_GRID};
use crate::statespace::{OperatorSpec, SmoothingOperator, SmoothingSpec, SpectralOperator, StateVec};
use crate::value::BoundaryConvention;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Synthesize,
    Verify,
    ConvolveProbe,
    DpCheck,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Synthesize,
        Command::Verify,
        Command::ConvolveProbe,
        Command::DpCheck,
        Command::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Synthesize => "synthesize",
            Command::Verify => "verify",
            Command::ConvolveProbe => "convolve-probe",
            Command::DpCheck => "dp-check",
            Command::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub synthesize: SynthesizeConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub convolve_probe: ProbeConfig,
    #[serde(default)]
    pub dp_check: DpCheckConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

/// `name` is one of `vintage`, `vintage-nondegenerate` or `scalar-toy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default = "defaults::modes")]
    pub modes: usize,
    #[serde(default = "defaults::one")]
    pub horizon: f64,
    /// Overrides `<alpha, beta>` implied by the name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub eigenvalue: f64,
    #[serde(default = "defaults::control_points")]
    pub control_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    None,
    /// Coefficients `0.5 / k^3` on mode `k`.
    Smooth,
    /// Coefficients `0.5 / sqrt(k)` on mode `k`.
    Rough,
}

/// Initial time and state. An explicit `x` wins over `alpha` and `tail`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub t: f64,
    #[serde(default = "defaults::minus_one")]
    pub alpha: f64,
    #[serde(default = "defaults::tail")]
    pub tail: Tail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            t: 0.0,
            alpha: -1.0,
            tail: Tail::None,
            x: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Closed,
    Open,
}

impl From<Convention> for BoundaryConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Closed => BoundaryConvention::Closed,
            Convention::Open => BoundaryConvention::Open,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub pieces: usize,
    pub dt: f64,
    pub tolerance: f64,
    pub convention: Convention,
    /// Strictly decreasing steps for the integrator order study; empty skips it.
    pub convergence_dts: Vec<f64>,
    /// Accepted range of successive error ratios under step halving.
    pub ratio_band: [f64; 2],
    /// Minimal observed order of the chain-rule residual.
    pub chain_rule_order: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            pieces: 200,
            dt: 1e-3,
            tolerance: 2e-3,
            convention: Convention::Closed,
            convergence_dts: Vec::new(),
            ratio_band: [3.5, 4.5],
            chain_rule_order: 1.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub beta: f64,
}

impl RegularizationConfig {
    pub fn params(&self, problem: &ControlProblem) -> Result<ConvolutionParams> {
        ConvolutionParams::for_problem(problem, self.lambda, self.epsilon, self.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesizeConfig {
    pub window: f64,
    pub n: usize,
    pub nu: f64,
    pub delta: f64,
    pub dt: f64,
    pub max_rounds: usize,
    pub regularization: RegularizationConfig,
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        SynthesizeConfig {
            window: 0.9,
            n: 40,
            nu: 0.05,
            delta: 0.05,
            dt: 1e-3,
            max_rounds: 8,
            regularization: RegularizationConfig {
                lambda: 1e-8,
                epsilon: 1e-2,
                beta: 1e-3,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCheck {
    Certificate,
    Membership,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub checks: Vec<VerifyCheck>,
    pub pieces: usize,
    pub dt: f64,
    pub tolerance: f64,
    /// Constant control expected to violate the certificate.
    pub bad_control: f64,
    pub bad_margin: f64,
    /// Time of the membership check at the kink `<alpha, x> = 0`.
    pub membership_t: f64,
    pub pass_gammas: Vec<f64>,
    pub fail_gammas: Vec<f64>,
    pub radius: f64,
    pub directions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: vec![VerifyCheck::Certificate, VerifyCheck::Membership],
            pieces: 200,
            dt: 1e-3,
            tolerance: 1e-3,
            bad_control: 1.0,
            bad_margin: 0.05,
            membership_t: 0.5,
            pass_gammas: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            fail_gammas: vec![-1.5, 1.5],
            radius: 1e-3,
            directions: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeCheck {
    Semiconvexity,
    Lipschitz,
    Gradient,
    Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub checks: Vec<ProbeCheck>,
    pub regularization: RegularizationConfig,
    pub t_min: f64,
    pub t_max: f64,
    pub radius: f64,
    pub triples: usize,
    pub semiconvexity_tolerance: f64,
    pub lipschitz_samples: usize,
    pub doubling_tolerance: f64,
    pub gradient_points: usize,
    pub gradient_step: f64,
    pub gradient_tolerance: f64,
    pub residual_points: usize,
    pub residual_tolerance: f64,
    /// Minimal `|<alpha, x>|` for residual and gradient sample points.
    pub kink_margin: f64,
    /// Rate of the `V - rate (T - t)` control.
    pub shift_rate: f64,
    pub shift_tolerance: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            checks: vec![ProbeCheck::Semiconvexity, ProbeCheck::Lipschitz, ProbeCheck::Gradient],
            regularization: RegularizationConfig {
                lambda: 1e-8,
                epsilon: 1e-2,
                beta: 1e-3,
            },
            t_min: 0.1,
            t_max: 0.9,
            radius: 1.0,
            triples: 500,
            semiconvexity_tolerance: 1e-6,
            lipschitz_samples: 200,
            doubling_tolerance: 1.2,
            gradient_points: 100,
            gradient_step: 1e-5,
            gradient_tolerance: 1e-4,
            residual_points: 50,
            residual_tolerance: 1e-3,
            kink_margin: 0.1,
            shift_rate: 10.0,
            shift_tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpCheckConfig {
    pub controls: usize,
    pub pieces: usize,
    /// Defaults to the remaining horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    pub dt: f64,
    pub tolerance: f64,
}

impl Default for DpCheckConfig {
    fn default() -> Self {
        DpCheckConfig {
            controls: 50,
            pieces: 10,
            window: None,
            dt: 1e-3,
            tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n_steps: usize,
    pub grid_points: usize,
    pub dt: f64,
    /// Allowed distance from the closed-form value.
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_steps: 4,
            grid_points: 5,
            dt: 0.25,
            tolerance: 1e-12,
            cache: None,
        }
    }
}

mod defaults {
    use super::Tail;

    pub fn modes() -> usize {
        4
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn minus_one() -> f64 {
        -1.0
    }
    pub fn control_points() -> usize {
        super::DEFAULT_CONTROL_GRID
    }
    pub fn tail() -> Tail {
        Tail::None
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The vintage parameters, or `None` for the scalar toy.
    pub fn vintage_spec(&self) -> Result<Option<VintageSpec>> {
        let p = &self.problem;
        let base = match p.name.as_str() {
            "vintage" => VintageSpec::degenerate(),
            "vintage-nondegenerate" => VintageSpec::nondegenerate(),
            "scalar-toy" => return Ok(None),
            other => return Err(Error::config("problem.name", format!("unknown problem `{other}`"))),
        };
        if p.modes == 0 {
            return Err(Error::config("problem.modes", "must be at least 1"));
        }
        Ok(Some(VintageSpec {
            modes: p.modes,
            horizon: p.horizon,
            coupling: p.coupling.unwrap_or(base.coupling),
            eigenvalue: p.eigenvalue,
            control_points: p.control_points,
        }))
    }

    pub fn build_problem(&self) -> Result<ControlProblem> {
        let p = &self.problem;
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(Error::config("problem.horizon", "must be positive"));
        }
        if p.control_points == 0 {
            return Err(Error::config("problem.control_points", "must be at least 1"));
        }
        let problem = match self.vintage_spec()? {
            Some(spec) => vintage(&spec)?,
            None => scalar_toy(p.horizon, p.control_points)?,
        };
        if p.generator.is_none() && p.smoothing.is_none() {
            return Ok(problem);
        }
        let a = match &p.generator {
            Some(s) => SpectralOperator::from_spec(s)?,
            None => problem.generator().clone(),
        };
        let b = match &p.smoothing {
            Some(s) => SmoothingOperator::from_spec(s)?,
            None => problem.smoothing().clone(),
        };
        problem.with_operators(a, b)
    }

    pub fn initial_state(&self, problem: &ControlProblem) -> Result<StateVec> {
        let s = &self.state;
        if !(s.t >= 0.0 && s.t <= problem.horizon()) {
            return Err(Error::config("state.t", format!("must lie in [0, {}]", problem.horizon())));
        }
        if let Some(x) = &s.x {
            if x.len() != problem.dim() {
                return Err(Error::config("state.x", format!("expected {} coefficients, got {}", problem.dim(), x.len())));
            }
            return StateVec::new(x.clone()).map_err(|_| Error::config("state.x", "coefficients must be finite"));
        }
        if !s.alpha.is_finite() {
            return Err(Error::config("state.alpha", "must be finite"));
        }
        let mut x = tail_state(problem.dim(), s.tail);
        x[0] = s.alpha;
        Ok(x)
    }
}

/// A state with zero constant mode and the given tail on the Fourier pairs.
pub fn tail_state(dim: usize, tail: Tail) -> StateVec {
    let mut x = StateVec::zeros(dim);
    for i in 1..dim {
        let k = i.div_ceil(2) as f64;
        x[i] = match tail {
            Tail::None => 0.0,
            Tail::Smooth => 0.5 / k.powi(3),
            Tail::Rough => 0.5 / k.sqrt(),
        };
    }
    x
}
