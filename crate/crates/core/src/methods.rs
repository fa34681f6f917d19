//! Method drivers: plain penalty, rounded weighted l1 penalty, cone
//! augmented Lagrangian, and the kernel multiplier method. Each driver
//! alternates an inner epsilon-optimal solve of `min_Q F(., mu_n)` with a
//! dual parameter update, and appends one `IterateRecord` per solve.
//!
//! Runs carry no stopping test; the iteration count is an experiment
//! parameter and convergence detection is the monitor's job.

use crate::cones::Cone;
use crate::merit::{
    self, MeritEvaluator, MeritParam, OmegaFunction, PFunction, eta, gamma_smooth,
};
use crate::problems::ProblemSpec;
use crate::solver::{self, SolveRequest, SolveResult, SolverSettings};
use crate::{Error, Result};

/// Inner tolerance schedule. `Geometric` and `Zero` are asymptotically
/// exact; `Constant` models a solver that never improves.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonSchedule {
    Constant(f64),
    Geometric { initial: f64, ratio: f64 },
    Zero,
}

impl EpsilonSchedule {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            EpsilonSchedule::Constant(e) => *e,
            EpsilonSchedule::Geometric { initial, ratio } => initial * ratio.powi(n as i32),
            EpsilonSchedule::Zero => 0.0,
        }
    }

    pub fn asymptotically_exact(&self) -> bool {
        match self {
            EpsilonSchedule::Constant(e) => *e == 0.0,
            EpsilonSchedule::Geometric { .. } => true,
            EpsilonSchedule::Zero => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EpsilonSchedule::Constant(e) if *e >= 0.0 && e.is_finite() => Ok(()),
            EpsilonSchedule::Geometric { initial, ratio }
                if *initial >= 0.0 && initial.is_finite() && *ratio > 0.0 && *ratio < 1.0 =>
            {
                Ok(())
            }
            EpsilonSchedule::Zero => Ok(()),
            other => Err(Error::Config(format!("bad epsilon schedule {other:?}"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EpsilonSchedule::Constant(e) => format!("constant:{e}"),
            EpsilonSchedule::Geometric { initial, ratio } => {
                format!("geometric:{initial}:{ratio}")
            }
            EpsilonSchedule::Zero => "zero".into(),
        }
    }
}

/// Step length as a function of the supergradient norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `s_n = s` with `s > 0`, bounded away from zero.
    Constant(f64),
    /// `s_n = omega_step(||p_n||)` for a nondecreasing gain positive on
    /// `(0, inf)`.
    NormDriven(NormStepFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormStepFn {
    Square,
    Identity,
    Sqrt,
}

impl NormStepFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            NormStepFn::Square => t * t,
            NormStepFn::Identity => t,
            NormStepFn::Sqrt => t.sqrt(),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            NormStepFn::Square => "square",
            NormStepFn::Identity => "linear",
            NormStepFn::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correction {
    Zero,
    Constant(f64),
}

/// Penalty-parameter step rule: step length plus a nonnegative correction
/// added to the supergradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub size: StepSize,
    pub correction: Correction,
}

impl StepRule {
    pub fn constant(s: f64) -> StepRule {
        StepRule { size: StepSize::Constant(s), correction: Correction::Zero }
    }

    pub fn step(&self, p_norm: f64) -> f64 {
        match self.size {
            StepSize::Constant(s) => s,
            StepSize::NormDriven(f) => f.eval(p_norm),
        }
    }

    pub fn delta(&self) -> f64 {
        match self.correction {
            Correction::Zero => 0.0,
            Correction::Constant(d) => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepSize::Constant(s) = self.size {
            if !(s > 0.0) {
                return Err(Error::Config(format!("constant step must be > 0, got {s}")));
            }
        }
        if let Correction::Constant(d) = self.correction {
            if !(d >= 0.0) {
                return Err(Error::Config(format!("correction must be >= 0, got {d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierUpdate {
    /// `lambda_{n+1} = proj_{K*}(lambda_n + c_n G(x_n))`.
    Plain,
    /// The plain update projected back into the origin-centered ball of
    /// the given radius, keeping multipliers bounded.
    Safeguarded { radius: f64 },
}

/// Multiplier and penalty updates for the augmented Lagrangian driver.
/// The penalty grows by `growth` whenever `sigma_n > tau * sigma_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmUpdateRule {
    pub multiplier: MultiplierUpdate,
    pub tau: f64,
    pub growth: f64,
}

impl Default for AlmUpdateRule {
    fn default() -> Self {
        AlmUpdateRule { multiplier: MultiplierUpdate::Plain, tau: 0.25, growth: 10.0 }
    }
}

impl AlmUpdateRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0,1), got {}", self.tau)));
        }
        if !(self.growth > 1.0) {
            return Err(Error::Config(format!("growth must be > 1, got {}", self.growth)));
        }
        if let MultiplierUpdate::Safeguarded { radius } = self.multiplier {
            if !(radius > 0.0) {
                return Err(Error::Config(format!("safeguard radius must be > 0, got {radius}")));
            }
        }
        Ok(())
    }
}

/// Standard penalty update: keep `c` while `sigma_n <= tau sigma_{n-1}`,
/// otherwise multiply by `growth`. `sigma_prev = +inf` on the first step.
pub fn sigma_rule(c: f64, sigma: f64, sigma_prev: f64, tau: f64, growth: f64) -> f64 {
    if sigma <= tau * sigma_prev {
        c
    } else {
        growth * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Penalty,
    Weighted,
    Alm,
    Palm,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Penalty => "penalty",
            MethodKind::Weighted => "weighted",
            MethodKind::Alm => "alm",
            MethodKind::Palm => "palm",
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-method internals recorded alongside each iterate.
#[derive(Debug, Clone)]
pub enum MethodInternals {
    Penalty { c: f64, p: f64, s: f64, delta: f64 },
    Weighted { u: Vec<f64>, v: Vec<f64>, w: f64, p: Vec<f64>, s: f64, delta: f64 },
    Alm { lambda: Vec<f64>, c: f64, sigma: f64 },
    Palm { lambda: Vec<f64>, c: f64 },
}

/// Snapshot of one outer iteration.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub n: usize,
    pub x: Vec<f64>,
    pub mu: MeritParam,
    pub epsilon: f64,
    pub f_val: f64,
    pub phi_val: f64,
    pub merit_val: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub infeasibility: f64,
    pub internals: MethodInternals,
}

impl IterateRecord {
    /// Width of the dual bracket: `max(epsilon_n, certified gap)`.
    /// Infinite for uncertified solves.
    pub fn bracket_allowance(&self) -> f64 {
        self.merit_val - self.theta_lo
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleInfo {
    pub description: String,
    pub asymptotically_exact: bool,
}

/// Append-only run record handed to the monitor and the CSV writer.
#[derive(Debug, Clone)]
pub struct Trace {
    pub problem_id: String,
    pub method: MethodKind,
    pub schedule: ScheduleInfo,
    pub records: Vec<IterateRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn tail(&self, window: usize) -> &[IterateRecord] {
        let start = self.records.len().saturating_sub(window);
        &self.records[start..]
    }
}

/// A finished or aborted run. `aborted` carries the failure description
/// when the inner solver gave up mid-run; the trace holds every iterate
/// completed before that.
#[derive(Debug)]
pub struct Run {
    pub trace: Trace,
    pub aborted: Option<String>,
}

impl Run {
    pub fn completed(&self) -> Result<&Trace> {
        match &self.aborted {
            None => Ok(&self.trace),
            Some(msg) => Err(Error::Input(format!("run aborted: {msg}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub iterations: usize,
    pub epsilon: EpsilonSchedule,
    pub seed: u64,
    pub solver: SolverSettings,
}

impl RunOptions {
    pub fn new(iterations: usize, epsilon: EpsilonSchedule, seed: u64) -> Self {
        RunOptions { iterations, epsilon, seed, solver: SolverSettings::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyConfig {
    pub omega: OmegaFunction,
    pub c0: f64,
    pub steps: StepRule,
}

#[derive(Debug, Clone)]
pub struct WeightedConfig {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub w0: f64,
    pub w_decay: f64,
    pub steps: StepRule,
}

#[derive(Debug, Clone)]
pub struct AlmConfig {
    pub lambda0: Vec<f64>,
    pub c0: f64,
    pub rule: AlmUpdateRule,
}

#[derive(Debug, Clone)]
pub struct PalmConfig {
    pub lambda0: Vec<f64>,
    pub c0: f64,
    pub p: PFunction,
    /// Multiplicative floor on penalty growth; 1 keeps the literal
    /// iteration-count floor only.
    pub growth: f64,
    /// Raw initialization point; defaults to the box center. The first
    /// subproblem is solved only after the first parameter update.
    pub x0: Option<Vec<f64>>,
}

struct Stepper<'a> {
    problem: &'a ProblemSpec,
    opts: &'a RunOptions,
}

enum StepOutcome {
    Solved(SolveResult, f64, f64), // result, theta_lo, theta_hi
    Aborted(String),
}

impl<'a> Stepper<'a> {
    fn solve(&self, mu: &MeritParam, n: usize, warm: &Option<Vec<f64>>) -> Result<StepOutcome> {
        let req = SolveRequest {
            problem: self.problem,
            mu,
            epsilon: self.opts.epsilon.value(n),
            seed: self.opts.seed.wrapping_add(n as u64),
            warm_starts: warm.iter().cloned().collect(),
            settings: self.opts.solver.clone(),
        };
        match solver::solve_subproblem(&req) {
            Ok(result) => {
                let (lo, hi) = solver::dual_bracket(&req, &result);
                Ok(StepOutcome::Solved(result, lo, hi))
            }
            Err(e @ Error::BudgetExhausted { .. }) => Ok(StepOutcome::Aborted(e.to_string())),
            Err(other) => Err(other),
        }
    }
}

fn make_record(
    problem: &ProblemSpec,
    mu: MeritParam,
    n: usize,
    epsilon: f64,
    x: Vec<f64>,
    theta_lo: f64,
    theta_hi: f64,
    infeas: f64,
    internals: MethodInternals,
) -> IterateRecord {
    let ev = MeritEvaluator::new(problem, &mu).expect("mu validated by the driver");
    let f_val = problem.objective.eval(&x);
    let phi_val = ev.phi(&x);
    IterateRecord {
        n,
        x,
        mu,
        epsilon,
        f_val,
        phi_val,
        merit_val: f_val + phi_val,
        theta_lo,
        theta_hi,
        infeasibility: infeas,
        internals,
    }
}

/// Penalty driver: `c_{n+1} = c_n + s_n [omega(dist(0, Phi(x_n))) + delta_n]`,
/// where `omega(dist)` is an epsilon-supergradient of the concave dual.
pub fn run_penalty(
    problem: &ProblemSpec,
    cfg: &PenaltyConfig,
    opts: &RunOptions,
) -> Result<Run> {
    opts.validate()?;
    cfg.steps.validate()?;
    MeritParam::PenaltyC { c: cfg.c0, omega: cfg.omega }.validate(problem)?;
    if !problem.constraints.has_hg() && problem.constraints.cone_map.is_none() {
        return Err(Error::Config("penalty driver needs constraints".into()));
    }

    let stepper = Stepper { problem, opts };
    let mut records = Vec::with_capacity(opts.iterations);
    let mut c = cfg.c0;
    let mut warm: Option<Vec<f64>> = None;
    let mut aborted = None;

    for n in 0..opts.iterations {
        let mu = MeritParam::PenaltyC { c, omega: cfg.omega };
        match stepper.solve(&mu, n, &warm)? {
            StepOutcome::Aborted(msg) => {
                aborted = Some(msg);
                break;
            }
            StepOutcome::Solved(result, lo, hi) => {
                let infeas = problem.infeasibility(&result.x);
                let p = cfg.omega.eval(infeas);
                if !p.is_finite() {
                    return Err(Error::Input(
                        "supergradient is infinite: the inner solve returned a point past the barrier".into(),
                    ));
                }
                let s = cfg.steps.step(p.abs());
                let delta = cfg.steps.delta();
                warm = Some(result.x.clone());
                records.push(make_record(
                    problem,
                    mu,
                    n,
                    opts.epsilon.value(n),
                    result.x,
                    lo,
                    hi,
                    infeas,
                    MethodInternals::Penalty { c, p, s, delta },
                ));
                c += s * (p + delta);
            }
        }
    }

    Ok(Run {
        trace: Trace {
            problem_id: problem.id.clone(),
            method: MethodKind::Penalty,
            schedule: ScheduleInfo {
                description: opts.epsilon.describe(),
                asymptotically_exact: opts.epsilon.asymptotically_exact(),
            },
            records,
        },
        aborted,
    })
}

/// Rounded weighted l1 driver: the supergradient is the vector of smoothed
/// violations, weights only grow, and the smoothing width only shrinks.
pub fn run_rounded_weighted(
    problem: &ProblemSpec,
    cfg: &WeightedConfig,
    opts: &RunOptions,
) -> Result<Run> {
    opts.validate()?;
    cfg.steps.validate()?;
    if !(cfg.w0 > 0.0) {
        return Err(Error::Config(format!("w0 must be > 0, got {}", cfg.w0)));
    }
    if !(cfg.w_decay > 0.0 && cfg.w_decay <= 1.0) {
        return Err(Error::Config(format!("w_decay must lie in (0,1], got {}", cfg.w_decay)));
    }
    MeritParam::Weighted { u: cfg.u0.clone(), v: cfg.v0.clone(), w: cfg.w0 }.validate(problem)?;

    let stepper = Stepper { problem, opts };
    let mut records = Vec::with_capacity(opts.iterations);
    let (mut u, mut v, mut w) = (cfg.u0.clone(), cfg.v0.clone(), cfg.w0);
    let mut warm: Option<Vec<f64>> = None;
    let mut aborted = None;

    for n in 0..opts.iterations {
        let mu = MeritParam::Weighted { u: u.clone(), v: v.clone(), w };
        match stepper.solve(&mu, n, &warm)? {
            StepOutcome::Aborted(msg) => {
                aborted = Some(msg);
                break;
            }
            StepOutcome::Solved(result, lo, hi) => {
                let x = result.x;
                let mut p = Vec::with_capacity(u.len() + v.len());
                for h in &problem.constraints.equalities {
                    p.push(eta(h.eval(&x), w));
                }
                for g in &problem.constraints.inequalities {
                    p.push(gamma_smooth(g.eval(&x), w));
                }
                let p_norm = p.iter().map(|t| t * t).sum::<f64>().sqrt();
                let s = cfg.steps.step(p_norm);
                let delta = cfg.steps.delta();
                let infeas = problem.infeasibility_l1_unchecked(&x);
                warm = Some(x.clone());
                records.push(make_record(
                    problem,
                    mu,
                    n,
                    opts.epsilon.value(n),
                    x,
                    lo,
                    hi,
                    infeas,
                    MethodInternals::Weighted {
                        u: u.clone(),
                        v: v.clone(),
                        w,
                        p: p.clone(),
                        s,
                        delta,
                    },
                ));
                for (ui, pi) in u.iter_mut().zip(&p) {
                    *ui += s * (pi + delta);
                }
                for (vj, pj) in v.iter_mut().zip(p.iter().skip(u.len())) {
                    *vj += s * (pj + delta);
                }
                w *= cfg.w_decay;
            }
        }
    }

    Ok(Run {
        trace: Trace {
            problem_id: problem.id.clone(),
            method: MethodKind::Weighted,
            schedule: ScheduleInfo {
                description: opts.epsilon.describe(),
                asymptotically_exact: opts.epsilon.asymptotically_exact(),
            },
            records,
        },
        aborted,
    })
}

/// Augmented Lagrangian driver with plain or safeguarded multiplier
/// updates and the sigma-driven penalty rule.
pub fn run_augmented_lagrangian(
    problem: &ProblemSpec,
    cfg: &AlmConfig,
    opts: &RunOptions,
) -> Result<Run> {
    opts.validate()?;
    cfg.rule.validate()?;
    MeritParam::MultiplierPen { lambda: cfg.lambda0.clone(), c: cfg.c0 }.validate(problem)?;
    let cone = problem.constraints.cone_map.as_ref().unwrap().cone.clone();
    let polar = cone.polar();

    let stepper = Stepper { problem, opts };
    let mut records = Vec::with_capacity(opts.iterations);
    let mut lambda = cfg.lambda0.clone();
    let mut c = cfg.c0;
    let mut sigma_prev = f64::INFINITY;
    let mut warm: Option<Vec<f64>> = None;
    let mut aborted = None;

    for n in 0..opts.iterations {
        let mu = MeritParam::MultiplierPen { lambda: lambda.clone(), c };
        match stepper.solve(&mu, n, &warm)? {
            StepOutcome::Aborted(msg) => {
                aborted = Some(msg);
                break;
            }
            StepOutcome::Solved(result, lo, hi) => {
                let x = result.x;
                let gval = problem.constraints.cone_map.as_ref().unwrap().eval(&x);
                let shifted: Vec<f64> =
                    lambda.iter().zip(&gval).map(|(l, g)| l + c * g).collect();
                let projected = polar.project(&shifted)?;
                let sigma = projected
                    .iter()
                    .zip(&lambda)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    / c;
                let infeas = cone.distance(&gval)?;
                warm = Some(x.clone());
                records.push(make_record(
                    problem,
                    mu,
                    n,
                    opts.epsilon.value(n),
                    x,
                    lo,
                    hi,
                    infeas,
                    MethodInternals::Alm { lambda: lambda.clone(), c, sigma },
                ));
                lambda = match cfg.rule.multiplier {
                    MultiplierUpdate::Plain => projected,
                    MultiplierUpdate::Safeguarded { radius } => {
                        // the safeguard set is a centered ball, so projecting
                        // onto (ball intersect K*) is a radial shrink of the
                        // cone projection
                        let norm: f64 =
                            projected.iter().map(|t| t * t).sum::<f64>().sqrt();
                        if norm > radius {
                            projected.iter().map(|t| t * radius / norm).collect()
                        } else {
                            projected
                        }
                    }
                };
                c = sigma_rule(c, sigma, sigma_prev, cfg.rule.tau, cfg.rule.growth);
                sigma_prev = sigma;
            }
        }
    }

    Ok(Run {
        trace: Trace {
            problem_id: problem.id.clone(),
            method: MethodKind::Alm,
            schedule: ScheduleInfo {
                description: opts.epsilon.describe(),
                asymptotically_exact: opts.epsilon.asymptotically_exact(),
            },
            records,
        },
        aborted,
    })
}

/// Kernel multiplier driver. Parameters are updated from the current
/// iterate BEFORE each solve; record 0 holds the raw initialization point,
/// so a run with `iterations` solves has `iterations + 1` records.
pub fn run_palm(problem: &ProblemSpec, cfg: &PalmConfig, opts: &RunOptions) -> Result<Run> {
    opts.validate()?;
    if !(cfg.growth >= 1.0) {
        return Err(Error::Config(format!("palm growth must be >= 1, got {}", cfg.growth)));
    }
    MeritParam::Palm { lambda: cfg.lambda0.clone(), c: cfg.c0, p: cfg.p }.validate(problem)?;

    let stepper = Stepper { problem, opts };
    let mut lambda = cfg.lambda0.clone();
    let mut c = cfg.c0;
    let x0 = match &cfg.x0 {
        Some(x) => {
            if x.len() != problem.dimension {
                return Err(Error::Input("x0 has the wrong dimension".into()));
            }
            problem.ground.project(x)
        }
        None => problem.ground.center(),
    };

    let mut records = Vec::with_capacity(opts.iterations + 1);
    let mu0 = MeritParam::Palm { lambda: lambda.clone(), c, p: cfg.p };
    let ev0 = MeritEvaluator::new(problem, &mu0)?;
    let infeas0 = problem.infeasibility_l1_unchecked(&x0);
    // no solve behind record 0: the merit value still upper-bounds the
    // dual value, but no epsilon-optimality certificate exists
    let theta_hi0 = ev0.eval(&x0);
    records.push(make_record(
        problem,
        mu0,
        0,
        opts.epsilon.value(0),
        x0.clone(),
        f64::NEG_INFINITY,
        theta_hi0,
        infeas0,
        MethodInternals::Palm { lambda: lambda.clone(), c },
    ));

    let mut x = x0;
    let mut aborted = None;
    for n in 0..opts.iterations {
        // Step 1: update multipliers and penalty from the current iterate.
        let mut next_lambda = Vec::with_capacity(lambda.len());
        for (li, g) in lambda.iter().zip(&problem.constraints.inequalities) {
            next_lambda.push(merit::p_derivative(cfg.p, c * g.eval(&x), *li)?);
        }
        let r_sum: f64 = next_lambda.iter().map(|l| cfg.p.r(*l).abs()).sum();
        let floor = (n + 1) as f64 * r_sum.max(1.0);
        let next_c = floor.max(cfg.growth * c);
        lambda = next_lambda;
        c = next_c;

        // Step 2: solve with the just-updated parameters.
        let mu = MeritParam::Palm { lambda: lambda.clone(), c, p: cfg.p };
        match stepper.solve(&mu, n + 1, &Some(x.clone()))? {
            StepOutcome::Aborted(msg) => {
                aborted = Some(msg);
                break;
            }
            StepOutcome::Solved(result, lo, hi) => {
                x = result.x;
                let infeas = problem.infeasibility_l1_unchecked(&x);
                records.push(make_record(
                    problem,
                    mu,
                    n + 1,
                    opts.epsilon.value(n + 1),
                    x.clone(),
                    lo,
                    hi,
                    infeas,
                    MethodInternals::Palm { lambda: lambda.clone(), c },
                ));
            }
        }
    }

    Ok(Run {
        trace: Trace {
            problem_id: problem.id.clone(),
            method: MethodKind::Palm,
            schedule: ScheduleInfo {
                description: opts.epsilon.describe(),
                asymptotically_exact: opts.epsilon.asymptotically_exact(),
            },
            records,
        },
        aborted,
    })
}

/// Cone of the problem's cone map; handy for multiplier checks in tests
/// and the monitor.
pub fn problem_cone(problem: &ProblemSpec) -> Option<&Cone> {
    problem.constraints.cone_map.as_ref().map(|cm| &cm.cone)
}
