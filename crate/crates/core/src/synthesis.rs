//! Construction of nearly optimal piecewise-constant controls from the
//! inf-convolution of a supersolution, and the one-sided dynamic programming
//! inequalities.

use std::io::Write;

use rayon::prelude::*;

use crate::convolution::{inf_convolve, ConvolutionParams, EnvelopeStatus, SearchOptions};
use crate::dynamics::{cost, integrate_mild, running_cost_integral, PiecewiseControl, Trajectory};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_row};
use crate::hamiltonian::hamiltonian;
use crate::problem::ControlProblem;
use crate::sampling;
use crate::statespace::StateVec;
use crate::value::ScalarField;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisConfig {
    /// Length of the synthesis interval `[t, t + window]`.
    pub window: f64,
    /// Number of control pieces.
    pub n: usize,
    pub params: ConvolutionParams,
    /// Target: the gap must not fall below `-nu`.
    pub nu: f64,
    /// Margin kept away from `0` and `T`.
    pub delta: f64,
    /// Integrator step.
    pub dt: f64,
    pub search: SearchOptions,
}

impl SynthesisConfig {
    pub fn validate(&self, problem: &ControlProblem, t: f64) -> Result<()> {
        self.params.validate(problem)?;
        if !(self.window > 0.0) {
            return Err(Error::param("window", "must be positive"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(self.nu > 0.0) {
            return Err(Error::param("nu", "must be positive"));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::param("delta", "must be nonnegative"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(t + self.window < problem.horizon() - self.delta + 1e-12) {
            return Err(Error::param(
                "window",
                format!("t + window = {} must stay below T - delta = {}", t + self.window, problem.horizon() - self.delta),
            ));
        }
        Ok(())
    }

    /// Advisory upper bound `delta^2 / 16` on `beta`.
    pub fn beta_max(&self) -> f64 {
        self.delta * self.delta / 16.0
    }
}

/// Diagnostics recorded at each synthesis node.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: f64,
    pub a: f64,
    pub p: StateVec,
    pub u: Vec<f64>,
    /// `a + <A* p, x> + H(t, x, p)`; NaN if `p` exceeds the `D(A*)` budget.
    pub slack: f64,
    pub ambiguous: bool,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub control: PiecewiseControl,
    pub trajectory: Trajectory,
    /// `w(t,x) - int L - w(t + window, x(t + window))`
    pub gap: f64,
    pub per_step: Vec<StepRecord>,
    pub params: ConvolutionParams,
    pub beta_within_margin: bool,
}

impl SynthesisResult {
    pub fn per_step_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.per_step.first().map_or(0, |s| s.u.len());
        let mut header = vec!["t_i".to_string(), "a".to_string(), "p_norm".to_string()];
        header.extend((1..=d).map(|k| format!("u_{k}")));
        header.push("slack".to_string());
        header.push("ambiguous".to_string());
        write_row(&mut w, &header)?;
        for s in &self.per_step {
            let mut row = vec![fmt_f64(s.t), fmt_f64(s.a), fmt_f64(s.p.norm())];
            row.extend(s.u.iter().map(|c| fmt_f64(*c)));
            row.push(fmt_f64(s.slack));
            row.push(s.ambiguous.to_string());
            write_row(&mut w, &row)?;
        }
        Ok(())
    }
}

/// At each node `t_i = t + i window / n`, takes the envelope differential
/// `(a, p)` of the inf-convolution of `w` at `(t_i, x(t_i))`, chooses `u_i` as
/// the Hamiltonian argmin at `p`, and integrates one piece.
pub fn synthesize(
    problem: &ControlProblem,
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult> {
    cfg.validate(problem, t)?;
    let n = cfg.n;
    let t_end = t + cfg.window;
    let knots: Vec<f64> = (0..=n)
        .map(|i| if i == n { t_end } else { t + cfg.window * i as f64 / n as f64 })
        .collect();
    let mut xi = x.clone();
    let mut values = Vec::with_capacity(n);
    let mut per_step = Vec::with_capacity(n);
    for i in 0..n {
        let ti = knots[i];
        let env = inf_convolve(problem, w, &cfg.params, &cfg.search, ti, &xi).map_err(|e| Error::SynthesisNode {
            node: i,
            source: Box::new(e),
        })?;
        let ham = hamiltonian(problem, ti, &xi, &env.p);
        let slack = problem
            .generator()
            .pair_adjoint(&env.p, &xi)
            .map_or(f64::NAN, |pair| env.a + pair + ham.value);
        let piece = PiecewiseControl::constant(ti, knots[i + 1], ham.argmin_u.clone())?;
        xi = integrate_mild(problem, ti, &xi, &piece, cfg.dt)?.final_state().clone();
        per_step.push(StepRecord {
            t: ti,
            a: env.a,
            p: env.p,
            u: ham.argmin_u.clone(),
            slack,
            ambiguous: matches!(env.status, EnvelopeStatus::Ambiguous { .. }),
        });
        values.push(ham.argmin_u);
    }
    let control = PiecewiseControl::new(knots, values)?;
    let trajectory = integrate_mild(problem, t, x, &control, cfg.dt)?;
    let gap = w.eval(t, x) - running_cost_integral(problem, &trajectory) - w.eval(t_end, trajectory.final_state());
    Ok(SynthesisResult {
        control,
        trajectory,
        gap,
        per_step,
        params: cfg.params,
        beta_within_margin: cfg.params.beta <= cfg.beta_max(),
    })
}

/// A control on all of `[t, T]`: the synthesized part followed by a constant
/// tail equal to the Hamiltonian argmin at `p = 0`.
#[derive(Clone, Debug)]
pub struct FullSynthesis {
    pub window: SynthesisResult,
    pub control: PiecewiseControl,
    pub trajectory: Trajectory,
    pub cost: f64,
}

pub fn synthesize_full(
    problem: &ControlProblem,
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    cfg: &SynthesisConfig,
) -> Result<FullSynthesis> {
    let window = synthesize(problem, w, t, x, cfg)?;
    extend_to_horizon(problem, t, x, window, cfg.dt)
}

fn extend_to_horizon(problem: &ControlProblem, t: f64, x: &StateVec, window: SynthesisResult, dt: f64) -> Result<FullSynthesis> {
    let t1 = window.control.end();
    let control = if t1 < problem.horizon() {
        let x1 = window.trajectory.final_state();
        let tail_u = hamiltonian(problem, t1, x1, &StateVec::zeros(problem.dim())).argmin_u;
        window
            .control
            .concat(&PiecewiseControl::constant(t1, problem.horizon(), tail_u)?)?
    } else {
        window.control.clone()
    };
    let trajectory = integrate_mild(problem, t, x, &control, dt)?;
    Ok(FullSynthesis {
        cost: cost(problem, &trajectory),
        window,
        control,
        trajectory,
    })
}

#[derive(Clone, Debug)]
pub struct ScheduleAttempt {
    pub params: ConvolutionParams,
    pub n: usize,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct ScheduleReport {
    pub attempts: Vec<ScheduleAttempt>,
    pub result: FullSynthesis,
    pub met: bool,
}

/// Repeats the synthesis, shrinking `beta`, then `epsilon`, then `lambda`, then
/// doubling `n`, in rotation, until the gap reaches `-nu` or `max_rounds`
/// attempts are used.
pub fn run_schedule(
    problem: &ControlProblem,
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    cfg: &SynthesisConfig,
    max_rounds: usize,
) -> Result<ScheduleReport> {
    let mut cfg = cfg.clone();
    let mut attempts = Vec::new();
    let mut round = 0;
    loop {
        let res = synthesize_full(problem, w, t, x, &cfg)?;
        attempts.push(ScheduleAttempt {
            params: cfg.params,
            n: cfg.n,
            gap: res.window.gap,
        });
        round += 1;
        let met = res.window.gap >= -cfg.nu;
        if met || round >= max_rounds.max(1) {
            return Ok(ScheduleReport {
                attempts,
                result: res,
                met,
            });
        }
        match (round - 1) % 4 {
            0 => cfg.params.beta /= 4.0,
            1 => cfg.params.epsilon /= 4.0,
            2 => cfg.params.lambda /= 10.0,
            _ => cfg.n *= 2,
        }
    }
}

/// `w(t,x) - int_t^{t+window} L ds - w(t + window, x(t + window))` along `u`.
///
/// A window reaching the horizon ends on the terminal cost `h` instead of `w(T, .)`.
pub fn superoptimality_gap(
    problem: &ControlProblem,
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    window: f64,
    u: &PiecewiseControl,
    dt: f64,
) -> Result<f64> {
    if window <= 0.0 {
        return Ok(0.0);
    }
    let part = u.restrict(t, t + window)?;
    let traj = integrate_mild(problem, t, x, &part, dt)?;
    let end = traj.final_state();
    let continuation = if t + window >= problem.horizon() - 1e-12 {
        problem.terminal_cost(end)
    } else {
        w.eval(t + window, end)
    };
    Ok(w.eval(t, x) - running_cost_integral(problem, &traj) - continuation)
}

#[derive(Clone, Debug)]
pub struct SuboptimalityReport {
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuboptimalityReport {
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        write_row(&mut w, &["control", "gap", "pass"])?;
        for (i, g) in self.gaps.iter().enumerate() {
            write_row(&mut w, &[i.to_string(), fmt_f64(*g), (*g <= self.tolerance).to_string()])?;
        }
        Ok(())
    }
}

/// Every control must satisfy `gap <= tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn suboptimality_check(
    problem: &ControlProblem,
    w: &impl ScalarField,
    t: f64,
    x: &StateVec,
    window: f64,
    controls: &[PiecewiseControl],
    dt: f64,
    tolerance: f64,
) -> Result<SuboptimalityReport> {
    let gaps = controls
        .par_iter()
        .map(|u| superoptimality_gap(problem, w, t, x, window, u, dt))
        .collect::<Result<Vec<f64>>>()?;
    let max_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SuboptimalityReport {
        passed: max_gap <= tolerance,
        gaps,
        max_gap,
        tolerance,
    })
}

/// `count` controls with `pieces` equal pieces on `[t0, t1]` and values drawn
/// uniformly from the control box.
pub fn random_controls(problem: &ControlProblem, t0: f64, t1: f64, pieces: usize, count: usize, seed: u64) -> Result<Vec<PiecewiseControl>> {
    let mut rng = sampling::rng(seed);
    let u = problem.controls();
    (0..count)
        .map(|_| {
            let values = (0..pieces)
                .map(|_| (0..u.dim()).map(|k| sampling::uniform(&mut rng, u.lower()[k], u.upper()[k])).collect())
                .collect();
            PiecewiseControl::uniform(t0, t1, values)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::sample_and_hold;
    use crate::problem::{scalar_toy, vintage, VintageSpec};
    use crate::value::{vintage_feedback, AffineShift, BoundaryConvention, FnField, VintageValue};
    use approx::assert_abs_diff_eq;

    fn start(spec: &VintageSpec) -> StateVec {
        let mut x = StateVec::zeros(spec.dim());
        x[0] = -1.0;
        x[3] = 0.2;
        x
    }

    fn cfg(problem: &ControlProblem, window: f64, n: usize) -> SynthesisConfig {
        SynthesisConfig {
            window,
            n,
            params: ConvolutionParams::for_problem(problem, 1e-8, 1e-2, 1e-3).unwrap(),
            nu: 0.05,
            delta: 0.05,
            dt: 1e-3,
            search: SearchOptions::default(),
        }
    }

    #[test]
    fn vintage_synthesis_tracks_feedback() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let w = VintageValue::new(spec.clone());
        let res = synthesize(&p, &w, 0.0, &start(&spec), &cfg(&p, 0.5, 20)).unwrap();
        assert_eq!(res.control.pieces(), 20);
        assert!(res.gap >= -0.05 && res.gap <= 0.05, "gap {}", res.gap);
        for s in &res.per_step {
            assert!((s.u[0] + spec.g(s.t)).abs() < 0.02, "u {} at {}", s.u[0], s.t);
        }
        assert!(!res.beta_within_margin);
    }

    #[test]
    fn scalar_toy_synthesis_picks_minus_one() {
        let p = scalar_toy(1.0, 201).unwrap();
        let w = FnField::new(|t, x| x[0] - (1.0 - t) / 2.0)
            .with_derivatives(|_, _| (0.5, StateVec::new(vec![1.0]).unwrap()))
            .with_lipschitz(1.0);
        let res = synthesize(&p, &w, 0.0, &StateVec::zeros(1), &cfg(&p, 0.5, 10)).unwrap();
        for s in &res.per_step {
            assert_abs_diff_eq!(s.u[0], -1.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(res.gap, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn gap_of_empty_window_is_zero() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let u = PiecewiseControl::constant(0.0, 1.0, vec![0.0]).unwrap();
        let g = superoptimality_gap(&p, &VintageValue::new(spec.clone()), 0.0, &start(&spec), 0.0, &u, 1e-3).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn feedback_attains_the_value_and_bad_control_does_not() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let w = VintageValue::new(spec.clone());
        let x = start(&spec);
        let (u, _) = sample_and_hold(&p, 0.0, 1.0, &x, 50, 1e-3, |t, x| {
            vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
        })
        .unwrap();
        let g = superoptimality_gap(&p, &w, 0.0, &x, 1.0, &u, 1e-3).unwrap();
        assert!((-1e-2..=1e-6).contains(&g), "{g}");
        let bad = PiecewiseControl::constant(0.0, 1.0, vec![2.0]).unwrap();
        assert!(superoptimality_gap(&p, &w, 0.0, &x, 1.0, &bad, 1e-3).unwrap() <= -0.1);
    }

    #[test]
    fn suboptimality_check_shifts() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let w = VintageValue::new(spec.clone());
        let x = start(&spec);
        let mut controls = random_controls(&p, 0.0, 1.0, 8, 20, 3).unwrap();
        let (fb, _) = sample_and_hold(&p, 0.0, 1.0, &x, 50, 1e-3, |t, x| {
            vec![vintage_feedback(&spec, t, x, BoundaryConvention::Closed)]
        })
        .unwrap();
        controls.push(fb);
        let rep = suboptimality_check(&p, &w, 0.0, &x, 1.0, &controls, 1e-3, 1e-3).unwrap();
        assert!(rep.passed);
        let below = AffineShift {
            inner: w.clone(),
            offset: -1.0,
            rate: 0.0,
            horizon: 1.0,
        };
        let rep = suboptimality_check(&p, &below, 0.0, &x, 1.0, &controls, 1e-3, 1e-3).unwrap();
        assert!(rep.max_gap <= -1.0 + 1e-3);
        let above = AffineShift {
            inner: w.clone(),
            offset: 1.0,
            rate: 0.0,
            horizon: 1.0,
        };
        let rep = suboptimality_check(&p, &above, 0.0, &x, 1.0, &controls, 1e-3, 1e-3).unwrap();
        assert!(!rep.passed);
        assert!(rep.max_gap > 0.99);
    }

    #[test]
    fn schedule_stops_when_target_met() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let w = VintageValue::new(spec.clone());
        let rep = run_schedule(&p, &w, 0.0, &start(&spec), &cfg(&p, 0.5, 10), 4).unwrap();
        assert!(rep.met);
        assert_eq!(rep.attempts.len(), 1);
        assert!(rep.result.cost <= w.eval(0.0, &start(&spec)) + 0.05);
        assert_abs_diff_eq!(rep.result.control.end(), 1.0);
    }

    #[test]
    fn rejects_window_past_margin() {
        let spec = VintageSpec::nondegenerate();
        let p = vintage(&spec).unwrap();
        let w = VintageValue::new(spec.clone());
        assert!(synthesize(&p, &w, 0.0, &start(&spec), &cfg(&p, 0.97, 10)).is_err());
    }
}
