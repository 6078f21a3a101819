//! Command dispatch, CSV artifacts and the run manifest.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::cli::config::{Command, ExperimentConfig, ProbeCheck, ProbeConfig, VerifyCheck};
use crate::convolution::{
    lipschitz_minus2_probe, perturbed_hjb_residual, semiconvexity_probe, ConvolutionParams, ProbeDomain, Regularized,
    SearchOptions, Sense, Side,
};
use crate::dynamics::{chain_rule_residual, convergence_study, cost, integrate_mild, sample_and_hold, PiecewiseControl};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_row};
use crate::problem::{ControlProblem, SmoothScalar, Test1Fn, VintageSpec};
use crate::sampling;
use crate::statespace::StateVec;
use crate::synthesis::{random_controls, run_schedule, suboptimality_check, SynthesisConfig};
use crate::value::{brute_force_value, vintage_feedback, AffineShift, FnField, OracleCache, OracleKey, ScalarField, VintageValue};
use crate::verify::{check_certificate, check_superdiff_membership, CertificateSelectors};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const CHAIN_RULE_FLOOR: f64 = 1e-12;

type Feedback = Box<dyn Fn(f64, &StateVec) -> Vec<f64>>;

/// Result of one command: the overall verdict, key numbers for the manifest
/// and the files written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub pass: bool,
    pub values: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Exit status for a failed run: configuration and parameter problems map to 2.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        Error::SynthesisNode { source, .. } => error_exit_code(source),
        _ => EXIT_FAIL,
    }
}

/// Loads the config, applies the overrides and runs `command`. Messages go to stderr.
pub fn execute(command: Command, config: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    let result = ExperimentConfig::load(config).and_then(|mut cfg| {
        if let Some(c) = cfg.command {
            if c != command {
                return Err(Error::config("command", format!("config is for `{c}`, invoked as `{command}`")));
            }
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let out = out.map_or_else(|| PathBuf::from("out").join(command.as_str()), Path::to_path_buf);
        run(&cfg, command, &out)
    });
    match result {
        Ok(o) => {
            for (k, v) in &o.values {
                println!("{k} = {v}");
            }
            println!("{}: {}", o.command, if o.pass { "PASS" } else { "FAIL" });
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

/// Runs `command` with `config`, writing CSV files and `manifest.txt` into `out`.
pub fn run(config: &ExperimentConfig, command: Command, out: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let problem = config.build_problem()?;
    let x = config.initial_state(&problem)?;
    fs::create_dir_all(out)?;
    let mut ctx = Ctx {
        config,
        problem: &problem,
        t: config.state.t,
        x,
        out,
        values: Vec::new(),
        files: Vec::new(),
    };
    let pass = match command {
        Command::Simulate => ctx.simulate()?,
        Command::Synthesize => ctx.synthesize()?,
        Command::Verify => ctx.verify()?,
        Command::ConvolveProbe => ctx.convolve_probe()?,
        Command::DpCheck => ctx.dp_check()?,
        Command::Oracle => ctx.oracle()?,
    };
    let outcome = Outcome {
        command,
        pass,
        values: ctx.values,
        files: ctx.files,
    };
    write_manifest(config, &problem, &outcome, start.elapsed().as_secs_f64(), out)?;
    Ok(outcome)
}

fn write_manifest(config: &ExperimentConfig, problem: &ControlProblem, o: &Outcome, wall: f64, out: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(out.join("manifest.txt"))?);
    writeln!(f, "evoctrl {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "command = {}", o.command)?;
    writeln!(f, "seed = {}", config.seed)?;
    writeln!(f, "problem = {}", problem.name())?;
    writeln!(f, "fingerprint = {}", problem.fingerprint())?;
    writeln!(f, "status = {}", if o.pass { "pass" } else { "fail" })?;
    writeln!(f, "wall_time_s = {wall:.3}")?;
    for (k, v) in &o.values {
        writeln!(f, "{k} = {v}")?;
    }
    for p in &o.files {
        writeln!(f, "output = {}", p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))?;
    }
    writeln!(f, "\n# config")?;
    write!(f, "{}", config.to_toml())?;
    f.flush()?;
    Ok(())
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    problem: &'a ControlProblem,
    t: f64,
    x: StateVec,
    out: &'a Path,
    values: Vec<(String, String)>,
    files: Vec<PathBuf>,
}

type Field = Arc<dyn ScalarField>;

impl Ctx<'_> {
    fn record(&mut self, key: &str, v: impl ToString) {
        self.values.push((key.to_string(), v.to_string()));
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.out.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn spec(&self) -> Result<VintageSpec> {
        match (self.config.vintage_spec()?, self.problem.vintage()) {
            (Some(s), Some(_)) => Ok(s),
            _ => Err(Error::config("problem.name", "this command needs a vintage problem with its closed form")),
        }
    }

    /// Closed-form value function of the configured problem.
    fn value_field(&self) -> Result<Field> {
        if self.problem.vintage().is_some() {
            return Ok(Arc::new(VintageValue::new(self.spec()?)));
        }
        if self.config.problem.name == "scalar-toy" {
            let horizon = self.problem.horizon();
            return Ok(Arc::new(
                FnField::new(move |t, x| x[0] - (horizon - t) / 2.0)
                    .with_derivatives(|_, _| (0.5, StateVec::from_vec(vec![1.0])))
                    .with_lipschitz(1.0),
            ));
        }
        Err(Error::config("problem", "no closed-form value for custom operators"))
    }

    fn feedback(&self) -> Result<Feedback> {
        if self.config.problem.name == "scalar-toy" {
            return Ok(Box::new(|_, _| vec![-1.0]));
        }
        let spec = self.spec()?;
        let conv = self.config.simulate.convention.into();
        Ok(Box::new(move |t, x| vec![vintage_feedback(&spec, t, x, conv)]))
    }

    fn simulate(&mut self) -> Result<bool> {
        let c = &self.config.simulate;
        let v = self.value_field()?.eval(self.t, &self.x);
        let fb = self.feedback()?;
        let (u, traj) = sample_and_hold(self.problem, self.t, self.problem.horizon(), &self.x, c.pieces, c.dt, fb)?;
        let j = cost(self.problem, &traj);
        self.record("value", v);
        self.record("cost", j);
        self.record("error", (j - v).abs());
        self.csv("control.csv", |w| u.to_csv(w))?;
        self.csv("trajectory.csv", |w| traj.to_csv(w))?;
        let mut pass = (j - v).abs() <= c.tolerance;
        if !c.convergence_dts.is_empty() {
            pass &= self.order_study(&u)?;
        }
        Ok(pass)
    }

    /// Step-halving study of the integrator along `u`, plus the chain-rule
    /// residual of `phi(t, x) = cos(pi t) <e_0, x> + |x|^2 / 2`.
    ///
    /// Residuals below `CHAIN_RULE_FLOOR` count as exact.
    fn order_study(&mut self, u: &PiecewiseControl) -> Result<bool> {
        let c = self.config.simulate.clone();
        let rep = convergence_study(self.problem, self.t, &self.x, u, &c.convergence_dts)?;
        let n = self.problem.dim();
        let phi = Test1Fn::linear(
            StateVec::unit(n, 0),
            SmoothScalar::custom(|t| (PI * t).cos(), |t| -PI * (PI * t).sin()),
            SmoothScalar::constant(0.0),
            self.problem.generator(),
        )?
        .with_quadratic(vec![1.0; n], StateVec::zeros(n))?;
        let residuals = rep
            .trajectories
            .iter()
            .map(|tr| chain_rule_residual(self.problem, &phi, tr))
            .collect::<Result<Vec<f64>>>()?;
        let orders: Vec<f64> = residuals
            .windows(2)
            .zip(rep.dts.windows(2))
            .map(|(r, d)| (r[0] / r[1]).ln() / (d[0] / d[1]).ln())
            .collect();
        let [lo, hi] = c.ratio_band;
        let ratios_ok = rep.ratios.iter().all(|r| *r >= lo && *r <= hi);
        let orders_ok = orders
            .iter()
            .zip(residuals.windows(2))
            .all(|(o, r)| *o >= c.chain_rule_order || r[0].max(r[1]) <= CHAIN_RULE_FLOOR);
        let fmt_list = |v: &[f64]| v.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ");
        self.record("integrator_ratios", fmt_list(&rep.ratios));
        self.record("chain_rule_orders", fmt_list(&orders));
        self.csv("convergence.csv", |f| {
            write_row(f, &["dt", "difference", "ratio", "chain_rule_residual"])?;
            for (k, dt) in rep.dts.iter().enumerate() {
                let d = rep.differences.get(k).map_or(String::new(), |v| fmt_f64(*v));
                let r = k.checked_sub(1).and_then(|i| rep.ratios.get(i)).map_or(String::new(), |v| fmt_f64(*v));
                write_row(f, &[fmt_f64(*dt), d, r, fmt_f64(residuals[k])])?;
            }
            Ok(())
        })?;
        Ok(ratios_ok && orders_ok)
    }

    fn synthesize(&mut self) -> Result<bool> {
        let c = self.config.synthesize.clone();
        let w = self.value_field()?;
        let cfg = SynthesisConfig {
            window: c.window,
            n: c.n,
            params: c.regularization.params(self.problem)?,
            nu: c.nu,
            delta: c.delta,
            dt: c.dt,
            search: SearchOptions::default(),
        };
        let v = w.eval(self.t, &self.x);
        let rep = run_schedule(self.problem, &w, self.t, &self.x, &cfg, c.max_rounds)?;
        let res = &rep.result;
        self.record("value", v);
        self.record("gap", res.window.gap);
        self.record("cost", res.cost);
        self.record("attempts", rep.attempts.len());
        self.record("beta_within_margin", res.window.beta_within_margin);
        self.record("ambiguous_nodes", res.window.per_step.iter().filter(|s| s.ambiguous).count());
        self.csv("per_step.csv", |f| res.window.per_step_csv(f))?;
        self.csv("control.csv", |f| res.control.to_csv(f))?;
        self.csv("trajectory.csv", |f| res.trajectory.to_csv(f))?;
        self.csv("attempts.csv", |f| {
            write_row(f, &["round", "lambda", "epsilon", "beta", "n", "gap"])?;
            for (i, a) in rep.attempts.iter().enumerate() {
                let p = &a.params;
                write_row(
                    f,
                    &[i.to_string(), fmt_f64(p.lambda), fmt_f64(p.epsilon), fmt_f64(p.beta), a.n.to_string(), fmt_f64(a.gap)],
                )?;
            }
            Ok(())
        })?;
        Ok(rep.met && res.cost <= v + c.nu)
    }

    fn verify(&mut self) -> Result<bool> {
        let c = self.config.verify.clone();
        let mut pass = true;
        if c.checks.contains(&VerifyCheck::Certificate) {
            pass &= self.verify_certificate()?;
        }
        if c.checks.contains(&VerifyCheck::Membership) {
            pass &= self.verify_membership()?;
        }
        Ok(pass)
    }

    fn verify_certificate(&mut self) -> Result<bool> {
        let c = self.config.verify.clone();
        let spec = self.spec()?;
        let horizon = self.problem.horizon();
        let fb = self.feedback()?;
        let (_, traj) = sample_and_hold(self.problem, self.t, horizon, &self.x, c.pieces, c.dt, fb)?;
        let good = check_certificate(self.problem, &traj, &CertificateSelectors::vintage(&spec, &traj), Some(c.tolerance))?;
        let bad_u = PiecewiseControl::constant(self.t, horizon, vec![c.bad_control])?;
        let bad_traj = integrate_mild(self.problem, self.t, &self.x, &bad_u, c.dt)?;
        let bad = check_certificate(self.problem, &bad_traj, &CertificateSelectors::vintage(&spec, &bad_traj), Some(c.tolerance))?;
        self.record("certificate_lhs", good.lhs);
        self.record("certificate_rhs", good.rhs);
        self.record("certificate_equality", good.equality);
        self.record("bad_excess", bad.lhs - bad.rhs);
        self.csv("certificate.csv", |f| good.to_csv(f))?;
        self.csv("certificate_bad.csv", |f| bad.to_csv(f))?;
        Ok(good.equality && bad.lhs - bad.rhs >= c.bad_margin)
    }

    fn verify_membership(&mut self) -> Result<bool> {
        let c = self.config.verify.clone();
        let spec = self.spec()?;
        let v = VintageValue::new(spec.clone());
        let tm = c.membership_t;
        let mut xk = self.x.clone();
        xk[0] = 0.0;
        let (q, _) = v.branch_derivatives(tm, &xk);
        let mut rows = Vec::new();
        let mut membership_ok = true;
        for (gamma, expect) in c.pass_gammas.iter().map(|g| (*g, true)).chain(c.fail_gammas.iter().map(|g| (*g, false))) {
            let p = spec.alpha().scaled(gamma * spec.g(tm));
            let rep = check_superdiff_membership(&v, tm, &xk, q, &p, c.radius, c.directions, self.config.seed)?;
            membership_ok &= rep.pass == expect;
            rows.push((gamma, rep.kappa, rep.pass, expect));
        }
        self.record("membership_ok", membership_ok);
        self.csv("membership.csv", |f| {
            write_row(f, &["gamma", "kappa", "pass", "expected"])?;
            for (g, k, p, e) in &rows {
                write_row(f, &[fmt_f64(*g), fmt_f64(*k), p.to_string(), e.to_string()])?;
            }
            Ok(())
        })?;
        Ok(membership_ok)
    }

    fn convolve_probe(&mut self) -> Result<bool> {
        let c = self.config.convolve_probe.clone();
        if !(c.t_min >= 0.0 && c.t_min <= c.t_max && c.t_max <= self.problem.horizon()) {
            return Err(Error::config("convolve_probe.t_min", "need 0 <= t_min <= t_max <= T"));
        }
        let params = c.regularization.params(self.problem)?;
        let w = self.value_field()?;
        let opts = SearchOptions::default();
        let domain = ProbeDomain {
            t_min: c.t_min,
            t_max: c.t_max,
            radius: c.radius,
        };
        let seed = self.config.seed;
        let mut pass = true;
        for check in &c.checks {
            pass &= match check {
                ProbeCheck::Semiconvexity => {
                    let rep = semiconvexity_probe(self.problem, &w, &params, &opts, &domain, c.triples, seed)?;
                    self.record("semiconvexity_max_violation", rep.max_violation);
                    self.csv("semiconvexity.csv", |f| {
                        write_row(f, &["triple", "violation"])?;
                        for (i, v) in rep.violations.iter().enumerate() {
                            write_row(f, &[i.to_string(), fmt_f64(*v)])?;
                        }
                        Ok(())
                    })?;
                    rep.max_violation <= c.semiconvexity_tolerance
                }
                ProbeCheck::Lipschitz => {
                    let reg = Regularized::new(self.problem, w.clone(), params, Sense::Inf);
                    let f = |t: f64, x: &StateVec| reg.eval(t, x);
                    let rep = lipschitz_minus2_probe(&f, self.problem.smoothing(), &domain, c.lipschitz_samples, seed)?;
                    self.record("lipschitz_m_n", rep.m_n);
                    self.record("lipschitz_m_2n", rep.m_2n);
                    self.record("lipschitz_doubling_ratio", rep.doubling_ratio);
                    self.csv("lipschitz.csv", |f| {
                        write_row(f, &["mode", "ratio"])?;
                        for (k, r) in rep.mode_ratios.iter().enumerate() {
                            write_row(f, &[k.to_string(), fmt_f64(*r)])?;
                        }
                        Ok(())
                    })?;
                    rep.doubling_ratio.is_finite() && rep.doubling_ratio <= c.doubling_tolerance
                }
                ProbeCheck::Gradient => {
                    let reg = Regularized::new(self.problem, w.clone(), params, Sense::Inf);
                    let pts = self.sample_points(&c, c.gradient_points, seed.wrapping_add(1));
                    let mism = pts
                        .iter()
                        .map(|(t, x)| reg.gradient_mismatch(*t, x, c.gradient_step))
                        .collect::<Result<Vec<f64>>>()?;
                    let worst = mism.iter().cloned().fold(0.0, f64::max);
                    self.record("gradient_max_mismatch", worst);
                    self.csv("gradient.csv", |f| {
                        write_row(f, &["t", "alpha", "mismatch"])?;
                        for ((t, x), m) in pts.iter().zip(&mism) {
                            write_row(f, &[fmt_f64(*t), fmt_f64(x[0]), fmt_f64(*m)])?;
                        }
                        Ok(())
                    })?;
                    worst <= c.gradient_tolerance
                }
                ProbeCheck::Residual => self.residual_check(&c, &w, &params, &opts)?,
            };
        }
        Ok(pass)
    }

    fn residual_check(&mut self, c: &ProbeConfig, w: &Field, params: &ConvolutionParams, opts: &SearchOptions) -> Result<bool> {
        let shifted = AffineShift {
            inner: w.clone(),
            offset: 0.0,
            rate: -c.shift_rate,
            horizon: self.problem.horizon(),
        };
        let pts = self.sample_points(c, c.residual_points, self.config.seed.wrapping_add(2));
        let mut rows = Vec::with_capacity(pts.len());
        for (t, x) in &pts {
            let r = perturbed_hjb_residual(self.problem, w, params, opts, *t, x, Side::Super)?.residual;
            let rs = perturbed_hjb_residual(self.problem, &shifted, params, opts, *t, x, Side::Super)?.residual;
            rows.push((*t, x[0], r, rs));
        }
        let min_r = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let worst_shift = rows.iter().map(|r| (r.3 - r.2 - c.shift_rate).abs()).fold(0.0, f64::max);
        self.record("residual_min", min_r);
        self.record("shift_max_deviation", worst_shift);
        self.csv("residual.csv", |f| {
            write_row(f, &["t", "alpha", "residual", "shifted", "difference"])?;
            for (t, a, r, rs) in &rows {
                write_row(f, &[fmt_f64(*t), fmt_f64(*a), fmt_f64(*r), fmt_f64(*rs), fmt_f64(rs - r)])?;
            }
            Ok(())
        })?;
        Ok(min_r >= -c.residual_tolerance && worst_shift <= c.shift_tolerance)
    }

    /// Seeded points in the probe domain with `|<alpha, x>| >= kink_margin`.
    fn sample_points(&self, c: &ProbeConfig, count: usize, seed: u64) -> Vec<(f64, StateVec)> {
        let mut rng = sampling::rng(seed);
        let n = self.problem.dim();
        let margin = c.kink_margin.min(0.9 * c.radius);
        let mut pts = Vec::with_capacity(count);
        while pts.len() < count {
            let t = sampling::uniform(&mut rng, c.t_min, c.t_max);
            let x = sampling::in_ball(&mut rng, n, c.radius);
            if x[0].abs() >= margin {
                pts.push((t, x));
            }
        }
        pts
    }

    fn dp_check(&mut self) -> Result<bool> {
        let c = self.config.dp_check.clone();
        let w = self.value_field()?;
        let window = c.window.unwrap_or(self.problem.horizon() - self.t);
        if !(window > 0.0 && self.t + window <= self.problem.horizon() + 1e-12) {
            return Err(Error::config("dp_check.window", "must be positive and end by the horizon"));
        }
        let controls = random_controls(self.problem, self.t, self.t + window, c.pieces, c.controls, self.config.seed)?;
        let rep = suboptimality_check(self.problem, &w, self.t, &self.x, window, &controls, c.dt, c.tolerance)?;
        self.record("controls", rep.gaps.len());
        self.record("max_gap", rep.max_gap);
        self.csv("suboptimality.csv", |f| rep.to_csv(f))?;
        Ok(rep.passed)
    }

    fn oracle(&mut self) -> Result<bool> {
        let c = self.config.oracle.clone();
        let grid_problem = self.problem.with_control_points(c.grid_points)?;
        let grid = grid_problem.controls().grid().to_vec();
        let key = OracleKey::new(self.problem, self.t, &self.x, c.n_steps, &grid);
        let cache = c.cache.as_ref().map(OracleCache::new);
        let cached = match &cache {
            Some(cache) => cache.lookup(&key)?,
            None => None,
        };
        let (value, control) = match cached {
            Some(v) => (v, None),
            None => {
                let (v, u) = brute_force_value(self.problem, self.t, &self.x, c.n_steps, &grid, c.dt)?;
                if let Some(cache) = &cache {
                    cache.store(&key, v)?;
                }
                (v, Some(u))
            }
        };
        let analytic = self.value_field()?.eval(self.t, &self.x);
        self.record("value", value);
        self.record("closed_form", analytic);
        self.record("error", (value - analytic).abs());
        self.record("cached", control.is_none());
        if let Some(u) = control {
            self.csv("control.csv", |f| u.to_csv(f))?;
        }
        Ok((value - analytic).abs() <= c.tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn scalar_toy_oracle_writes_value() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("[problem]\nname = \"scalar-toy\"\n[state]\nalpha = 0.0\n");
        let o = run(&c, Command::Oracle, dir.path()).unwrap();
        assert!(o.pass);
        assert_eq!(o.value("value"), Some("-0.5"));
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("value = -0.5\n"));
        assert!(manifest.contains("name = \"scalar-toy\""));
    }

    #[test]
    fn oracle_cache_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("cache.csv");
        let text = format!(
            "[problem]\nname = \"scalar-toy\"\n[state]\nalpha = 0.0\n[oracle]\ncache = {:?}\n",
            cache.to_str().unwrap()
        );
        let c = cfg(&text);
        assert_eq!(run(&c, Command::Oracle, dir.path()).unwrap().value("cached"), Some("false"));
        let o = run(&c, Command::Oracle, dir.path()).unwrap();
        assert_eq!(o.value("cached"), Some("true"));
        assert!(o.pass);
    }

    #[test]
    fn simulate_scalar_toy() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("[problem]\nname = \"scalar-toy\"\n[simulate]\npieces = 4\n");
        let o = run(&c, Command::Simulate, dir.path()).unwrap();
        assert!(o.pass, "{o:?}");
        assert!(dir.path().join("trajectory.csv").exists());
    }

    #[test]
    fn verify_needs_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let err = run(&cfg("[problem]\nname = \"scalar-toy\"\n"), Command::Verify, dir.path()).unwrap_err();
        assert_eq!(error_exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn negative_epsilon_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("[problem]\nname = \"vintage-nondegenerate\"\n[synthesize.regularization]\nlambda = 1e-8\nepsilon = -1.0\nbeta = 1e-3\n");
        let err = run(&c, Command::Synthesize, dir.path()).unwrap_err();
        assert!(err.to_string().contains("epsilon"));
        assert_eq!(error_exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn error_codes() {
        assert_eq!(error_exit_code(&Error::config("x", "y")), EXIT_CONFIG);
        let wrapped = Error::SynthesisNode {
            node: 3,
            source: Box::new(Error::NonConvergent {
                t: 0.0,
                detail: String::new(),
            }),
        };
        assert_eq!(error_exit_code(&wrapped), EXIT_FAIL);
    }
}
