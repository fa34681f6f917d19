//! The merit-function family `F(x, mu) = f(x) + phi(x, mu)`.
//!
//! Four parameterizations are provided: a scalar penalty `c * omega(infeas)`,
//! a rounded weighted l1 penalty with smoothing width `w`, the
//! Hestenes-Powell-Rockafellar augmented Lagrangian extended to cone
//! constraints via projections, and kernel-based (P-type) augmented
//! Lagrangians for inequality constraints. Extended-real convention: +inf
//! propagates through sums and compares above every finite value.

use crate::cones::Cone;
use crate::problems::{ConeVec, ProblemSpec};
use crate::{Error, Result};

/// Scaling function for the plain penalty term. `Identity` and `Power`
/// have an infinite barrier threshold; `BarrierLog(tau)` blows up at
/// `t = tau` and is `+inf` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaFunction {
    Identity,
    /// `t^p` with `p >= 1`.
    Power(f64),
    /// `-log(1 - t/tau)` on `[0, tau)`.
    BarrierLog(f64),
}

impl OmegaFunction {
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0 || t.is_nan());
        match self {
            OmegaFunction::Identity => t,
            OmegaFunction::Power(p) => t.powf(*p),
            OmegaFunction::BarrierLog(tau) => {
                if t < *tau {
                    -(1.0 - t / tau).ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Barrier threshold: the infimum of `t` with `omega(t) = +inf`.
    pub fn tau(&self) -> f64 {
        match self {
            OmegaFunction::BarrierLog(tau) => *tau,
            _ => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OmegaFunction::Identity => Ok(()),
            OmegaFunction::Power(p) if *p >= 1.0 => Ok(()),
            OmegaFunction::Power(p) => {
                Err(Error::Config(format!("power omega needs p >= 1, got {p}")))
            }
            OmegaFunction::BarrierLog(tau) if *tau > 0.0 => Ok(()),
            OmegaFunction::BarrierLog(tau) => {
                Err(Error::Config(format!("barrierlog omega needs tau > 0, got {tau}")))
            }
        }
    }

    /// Upper bound on the derivative over `[0, t_hi]`; `None` when the
    /// derivative is unbounded there (at or past the barrier).
    fn derivative_sup(&self, t_hi: f64) -> Option<f64> {
        match self {
            OmegaFunction::Identity => Some(1.0),
            OmegaFunction::Power(p) => Some(p * t_hi.max(0.0).powf(p - 1.0)),
            OmegaFunction::BarrierLog(tau) => {
                if t_hi < *tau {
                    Some(1.0 / (tau - t_hi))
                } else {
                    None
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            OmegaFunction::Identity => "identity".into(),
            OmegaFunction::Power(p) => format!("power:{p}"),
            OmegaFunction::BarrierLog(tau) => format!("barrierlog:{tau}"),
        }
    }
}

/// Rounded absolute value: quadratic of width `w` around 0, `|t| - w/2`
/// outside; `eta(t, 0) = |t|`.
#[inline]
pub fn eta(t: f64, w: f64) -> f64 {
    debug_assert!(w >= 0.0);
    if w == 0.0 {
        t.abs()
    } else if t.abs() < w {
        t * t / (2.0 * w)
    } else {
        t.abs() - 0.5 * w
    }
}

/// Rounded positive part: 0 for `t <= 0`, quadratic on `(0, w)`, `t - w/2`
/// beyond; `gamma_smooth(t, 0) = max(0, t)`.
#[inline]
pub fn gamma_smooth(t: f64, w: f64) -> f64 {
    debug_assert!(w >= 0.0);
    if t <= 0.0 {
        0.0
    } else if w == 0.0 {
        t
    } else if t < w {
        t * t / (2.0 * w)
    } else {
        t - 0.5 * w
    }
}

/// Scalar kernel for P-type augmented Lagrangians: continuous in `(s, t)`,
/// differentiable and nondecreasing in `s`, `P(0, t) = 0`, and bounded
/// below by `r(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PFunction {
    /// `t s + s^2/2` for `s >= -t`, else `-t^2/2`.
    Hpr,
    /// `t (e^s - 1)`. The superlinear-growth condition fails at `t = 0`,
    /// so runs require strictly positive initial multipliers.
    Exponential,
}

impl PFunction {
    /// Domain threshold `a`: `P(s, t)` is defined for `s < a`.
    pub fn a(&self) -> f64 {
        f64::INFINITY
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            PFunction::Hpr => {
                if s >= -t {
                    t * s + 0.5 * s * s
                } else {
                    -0.5 * t * t
                }
            }
            PFunction::Exponential => t * (s.exp() - 1.0),
        }
    }

    /// Derivative in `s`; always nonnegative, so multiplier updates stay
    /// in the nonnegative orthant.
    pub fn derivative(&self, s: f64, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            PFunction::Hpr => (t + s).max(0.0),
            PFunction::Exponential => t * s.exp(),
        }
    }

    /// Lower bound `r(t) <= P(s, t)` for all admissible `s`.
    pub fn r(&self, t: f64) -> f64 {
        match self {
            PFunction::Hpr => -0.5 * t * t,
            PFunction::Exponential => -t,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            PFunction::Hpr => "hpr",
            PFunction::Exponential => "exp",
        }
    }
}

/// Derivative of `s -> P(s, t)` with the domain check.
pub fn p_derivative(p: PFunction, s: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Input(format!("kernel derivative needs t >= 0, got {t}")));
    }
    if s >= p.a() {
        return Err(Error::Input(format!(
            "kernel argument {s} is outside the domain (a = {})",
            p.a()
        )));
    }
    Ok(p.derivative(s, t))
}

/// The merit-function parameter `mu`.
#[derive(Debug, Clone)]
pub enum MeritParam {
    PenaltyC { c: f64, omega: OmegaFunction },
    Weighted { u: Vec<f64>, v: Vec<f64>, w: f64 },
    MultiplierPen { lambda: Vec<f64>, c: f64 },
    Palm { lambda: Vec<f64>, c: f64, p: PFunction },
}

impl MeritParam {
    pub fn kind(&self) -> &'static str {
        match self {
            MeritParam::PenaltyC { .. } => "penalty",
            MeritParam::Weighted { .. } => "weighted",
            MeritParam::MultiplierPen { .. } => "hpr",
            MeritParam::Palm { .. } => "palm",
        }
    }

    /// Checks nonnegativity/membership invariants and compatibility with
    /// the problem's constraint form.
    pub fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        match self {
            MeritParam::PenaltyC { c, omega } => {
                if *c < 0.0 {
                    return Err(Error::Config(format!("penalty parameter must be >= 0, got {c}")));
                }
                omega.validate()?;
                Ok(())
            }
            MeritParam::Weighted { u, v, w } => {
                if !problem.constraints.has_hg() {
                    return Err(Error::Config(format!(
                        "weighted merit needs an equality/inequality block on {}",
                        problem.id
                    )));
                }
                let (m, l) = problem.hg_len();
                if u.len() != m || v.len() != l {
                    return Err(Error::Config(format!(
                        "weighted merit expects {m} equality and {l} inequality weights"
                    )));
                }
                if u.iter().chain(v.iter()).any(|x| *x < 0.0) || *w < 0.0 {
                    return Err(Error::Config("weights and smoothing width must be >= 0".into()));
                }
                Ok(())
            }
            MeritParam::MultiplierPen { lambda, c } => {
                let cm = problem.constraints.cone_map.as_ref().ok_or_else(|| {
                    Error::Config(format!("multiplier merit needs a cone map on {}", problem.id))
                })?;
                if lambda.len() != cm.cone.total_dim() {
                    return Err(Error::Config(format!(
                        "multiplier has dimension {}, cone expects {}",
                        lambda.len(),
                        cm.cone.total_dim()
                    )));
                }
                if *c <= 0.0 {
                    return Err(Error::Config(format!("penalty parameter must be > 0, got {c}")));
                }
                let polar = cm.cone.polar();
                let norm: f64 = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dist = polar.distance(lambda)?;
                if dist > 1e-9 * (1.0 + norm) {
                    return Err(Error::Input(format!(
                        "multiplier is outside the polar cone by {dist:e}"
                    )));
                }
                Ok(())
            }
            MeritParam::Palm { lambda, c, p } => {
                if problem.constraints.inequalities.is_empty()
                    || !problem.constraints.equalities.is_empty()
                {
                    return Err(Error::Config(format!(
                        "kernel merit needs an inequality-only block on {}",
                        problem.id
                    )));
                }
                if lambda.len() != problem.constraints.inequalities.len() {
                    return Err(Error::Config(format!(
                        "expected {} multipliers, got {}",
                        problem.constraints.inequalities.len(),
                        lambda.len()
                    )));
                }
                if lambda.iter().any(|x| *x < 0.0) {
                    return Err(Error::Input("kernel multipliers must be >= 0".into()));
                }
                if *p == PFunction::Exponential && lambda.iter().any(|x| *x <= 0.0) {
                    return Err(Error::Input(
                        "the exponential kernel requires strictly positive multipliers".into(),
                    ));
                }
                if *c <= 0.0 {
                    return Err(Error::Config(format!("penalty parameter must be > 0, got {c}")));
                }
                Ok(())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeritParam::PenaltyC { c, omega } => format!("penalty(c={c}, omega={})", omega.describe()),
            MeritParam::Weighted { u, v, w } => {
                format!("weighted(u={u:?}, v={v:?}, w={w})")
            }
            MeritParam::MultiplierPen { lambda, c } => format!("hpr(lambda={lambda:?}, c={c})"),
            MeritParam::Palm { lambda, c, p } => {
                format!("palm(lambda={lambda:?}, c={c}, p={})", p.describe())
            }
        }
    }
}

/// `c * omega(dist(0, Phi(x)))` with the problem's own infeasibility
/// measure; `+inf` past the barrier threshold.
pub fn phi_penalty(problem: &ProblemSpec, x: &[f64], c: f64, omega: OmegaFunction) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    c * omega.eval(problem.infeasibility(x))
}

/// `sum u_i eta(h_i(x), w) + sum v_j gamma(g_j(x), w)`.
pub fn phi_weighted(problem: &ProblemSpec, x: &[f64], u: &[f64], v: &[f64], w: f64) -> f64 {
    let mut acc = 0.0;
    for (ui, h) in u.iter().zip(&problem.constraints.equalities) {
        acc += ui * eta(h.eval(x), w);
    }
    for (vj, g) in v.iter().zip(&problem.constraints.inequalities) {
        acc += vj * gamma_smooth(g.eval(x), w);
    }
    acc
}

/// `(1/2c) [ dist(lambda + c G(x), K)^2 - ||lambda||^2 ]`. By the Moreau
/// decomposition the distance equals `||proj_{K*}(lambda + c G(x))||`, so
/// this is simultaneously both display lines of the augmented Lagrangian.
pub fn phi_hpr(problem: &ProblemSpec, x: &[f64], lambda: &[f64], c: f64) -> f64 {
    let cm = problem
        .constraints
        .cone_map
        .as_ref()
        .expect("multiplier merit requires a cone map");
    let mut buf = ConeVec::new();
    cm.eval_into(x, &mut buf);
    for (b, l) in buf.iter_mut().zip(lambda) {
        *b = l + c * *b;
    }
    let dist = cm.cone.distance_unchecked(&buf);
    let lambda_sq: f64 = lambda.iter().map(|v| v * v).sum();
    (dist * dist - lambda_sq) / (2.0 * c)
}

/// `(1/c) sum P(c g_i(x), lambda_i)`, `+inf` when any `c g_i(x) >= a`.
pub fn phi_palm(problem: &ProblemSpec, x: &[f64], lambda: &[f64], c: f64, p: PFunction) -> f64 {
    let a = p.a();
    let mut acc = 0.0;
    for (li, g) in lambda.iter().zip(&problem.constraints.inequalities) {
        let s = c * g.eval(x);
        if s >= a {
            return f64::INFINITY;
        }
        acc += p.eval(s, *li);
    }
    acc / c
}

/// `F(x, mu) = f(x) + phi(x, mu)` with parameter/problem validation.
pub fn merit_eval(problem: &ProblemSpec, x: &[f64], mu: &MeritParam) -> Result<f64> {
    mu.validate(problem)?;
    if x.len() != problem.dimension {
        return Err(Error::Input(format!(
            "point has dimension {}, problem expects {}",
            x.len(),
            problem.dimension
        )));
    }
    let ev = MeritEvaluator::new(problem, mu)?;
    Ok(ev.eval(x))
}

/// Validated, allocation-free merit evaluator for hot loops.
pub struct MeritEvaluator<'a> {
    problem: &'a ProblemSpec,
    mu: &'a MeritParam,
}

impl<'a> MeritEvaluator<'a> {
    pub fn new(problem: &'a ProblemSpec, mu: &'a MeritParam) -> Result<Self> {
        mu.validate(problem)?;
        Ok(MeritEvaluator { problem, mu })
    }

    #[inline]
    pub fn phi(&self, x: &[f64]) -> f64 {
        match self.mu {
            MeritParam::PenaltyC { c, omega } => phi_penalty(self.problem, x, *c, *omega),
            MeritParam::Weighted { u, v, w } => phi_weighted(self.problem, x, u, v, *w),
            MeritParam::MultiplierPen { lambda, c } => phi_hpr(self.problem, x, lambda, *c),
            MeritParam::Palm { lambda, c, p } => phi_palm(self.problem, x, lambda, *c, *p),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.problem.objective.eval(x) + self.phi(x)
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn mu(&self) -> &MeritParam {
        self.mu
    }
}

/// Whether Lipschitz data required to certify this merit family over the
/// box is present on the problem.
pub fn certifiable(problem: &ProblemSpec, mu: &MeritParam) -> bool {
    let Some(lip) = problem.lipschitz.as_ref() else {
        return false;
    };
    match mu {
        MeritParam::PenaltyC { .. } => {
            if problem.constraints.has_hg() {
                true
            } else {
                lip.cone_map.is_some()
            }
        }
        MeritParam::Weighted { .. } => true,
        MeritParam::MultiplierPen { .. } => lip.cone_map.is_some(),
        MeritParam::Palm { .. } => !lip.inequalities.is_empty(),
    }
}

/// Lower bound on the merit over a box cell of center-to-vertex radius
/// `rho`, plus a cell-local Lipschitz constant when finite.
#[derive(Debug, Clone, Copy)]
pub struct CellBound {
    pub lower: f64,
    pub lipschitz: Option<f64>,
}

/// Certification bound for one cell. `value` is the already-computed merit
/// at `center`. The Lipschitz constant is local: it bounds the gradient
/// norm over the cell only, which keeps bounds tight near minimizers where
/// multiplier and distance terms are small.
pub fn cell_bound(
    problem: &ProblemSpec,
    mu: &MeritParam,
    center: &[f64],
    value: f64,
    rho: f64,
) -> CellBound {
    let Some(lip) = problem.lipschitz.as_ref() else {
        return CellBound { lower: f64::NEG_INFINITY, lipschitz: None };
    };
    let l_f = match &lip.objective_local {
        Some(b) => lip.objective.min((b.grad_norm)(center) + b.curvature * rho),
        None => lip.objective,
    };
    match mu {
        MeritParam::PenaltyC { c, omega } => {
            let l_phi = if problem.constraints.has_hg() {
                lip.equalities.iter().sum::<f64>() + lip.inequalities.iter().sum::<f64>()
            } else {
                match lip.cone_map {
                    Some(l) => l,
                    None => return CellBound { lower: f64::NEG_INFINITY, lipschitz: None },
                }
            };
            let infeas_c = problem.infeasibility(center);
            let t_hi = infeas_c + l_phi * rho;
            let t_lo = (infeas_c - l_phi * rho).max(0.0);
            // monotone bound: omega increasing makes f(center) - L_f rho +
            // c omega(t_lo) a valid floor even across the barrier
            let f_c = problem.objective.eval(center);
            let monotone = f_c - l_f * rho + c * omega.eval(t_lo);
            match omega.derivative_sup(t_hi) {
                Some(ds) => {
                    let l = l_f + c * ds * l_phi;
                    CellBound {
                        lower: (value - l * rho).max(monotone),
                        lipschitz: Some(l),
                    }
                }
                None => CellBound { lower: monotone, lipschitz: None },
            }
        }
        MeritParam::Weighted { u, v, w } => {
            let mut l_phi = 0.0;
            for ((ui, lh), h) in u
                .iter()
                .zip(&lip.equalities)
                .zip(&problem.constraints.equalities)
            {
                let t_hi = h.eval(center).abs() + lh * rho;
                let slope = if *w > 0.0 { (t_hi / w).min(1.0) } else { 1.0 };
                l_phi += ui * lh * slope;
            }
            for ((vj, lg), g) in v
                .iter()
                .zip(&lip.inequalities)
                .zip(&problem.constraints.inequalities)
            {
                let t_hi = g.eval(center) + lg * rho;
                let slope = if t_hi <= 0.0 {
                    0.0
                } else if *w > 0.0 {
                    (t_hi / w).min(1.0)
                } else {
                    1.0
                };
                l_phi += vj * lg * slope;
            }
            let l = l_f + l_phi;
            CellBound { lower: value - l * rho, lipschitz: Some(l) }
        }
        MeritParam::MultiplierPen { lambda, c } => {
            let Some(l_g) = lip.cone_map else {
                return CellBound { lower: f64::NEG_INFINITY, lipschitz: None };
            };
            let cm = problem.constraints.cone_map.as_ref().unwrap();
            let mut buf = ConeVec::new();
            cm.eval_into(center, &mut buf);
            for (b, l) in buf.iter_mut().zip(lambda) {
                *b = l + c * *b;
            }
            let dist_c = cm.cone.distance_unchecked(&buf);
            let l = l_f + l_g * (dist_c + c * l_g * rho);
            CellBound { lower: value - l * rho, lipschitz: Some(l) }
        }
        MeritParam::Palm { lambda, c, p } => {
            if lip.inequalities.is_empty() {
                return CellBound { lower: f64::NEG_INFINITY, lipschitz: None };
            }
            let mut l_phi = 0.0;
            for ((li, lg), g) in lambda
                .iter()
                .zip(&lip.inequalities)
                .zip(&problem.constraints.inequalities)
            {
                let s_hi = c * (g.eval(center) + lg * rho);
                if s_hi > 700.0 {
                    // exponential bound overflows; give up on this cell
                    return CellBound { lower: f64::NEG_INFINITY, lipschitz: None };
                }
                l_phi += p.derivative(s_hi, *li) * lg;
            }
            let l = l_f + l_phi;
            CellBound { lower: value - l * rho, lipschitz: Some(l) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::by_id;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eta_examples() {
        assert_eq!(eta(1.0, 1.0), 0.5);
        assert_eq!(eta(0.5, 2.0), 0.0625);
        assert_eq!(eta(-3.0, 0.0), 3.0);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_smooth(-1.0, 0.5), 0.0);
        assert_eq!(gamma_smooth(3.0, 2.0), 2.0);
        assert_eq!(gamma_smooth(1.0, 2.0), 0.25);
        assert_eq!(gamma_smooth(-2.0, 0.0), 0.0);
    }

    #[test]
    fn smoothing_uniform_bounds_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let t = rng.gen_range(-4.0..4.0);
            let w1 = rng.gen_range(0.0..2.0);
            let w2 = rng.gen_range(0.0..2.0);
            let (lo, hi) = if w1 < w2 { (w1, w2) } else { (w2, w1) };
            assert!((eta(t, hi) - t.abs()).abs() <= hi / 2.0 + 1e-15);
            assert!((gamma_smooth(t, hi) - t.max(0.0)).abs() <= hi / 2.0 + 1e-15);
            assert!(eta(t, lo) >= eta(t, hi) - 1e-15);
            assert!(gamma_smooth(t, lo) >= gamma_smooth(t, hi) - 1e-15);
            assert!(eta(t, hi) >= 0.0 && gamma_smooth(t, hi) >= 0.0);
        }
    }

    #[test]
    fn phi_penalty_examples() {
        let p1 = by_id("P1").unwrap();
        assert_eq!(phi_penalty(&p1, &[1.0], 3.0, OmegaFunction::Identity), 0.0);
        // infeasibility 0.2 at x = 1.2
        let v = phi_penalty(&p1, &[1.2], 3.0, OmegaFunction::Identity);
        assert!((v - 0.6).abs() < 1e-12);
        let v = phi_penalty(&p1, &[1.5], 1.0, OmegaFunction::BarrierLog(0.5));
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn phi_weighted_examples() {
        let p5 = by_id("P5").unwrap();
        // feasible point
        assert_eq!(
            phi_weighted(&p5, &[0.5, 0.5], &[2.0], &[4.0], 1.0),
            0.0
        );
        // h = -0.5, g = 0.3 at x = (0.4, 0.1)
        let x = [0.4, 0.1];
        let v = phi_weighted(&p5, &x, &[2.0], &[4.0], 0.0);
        assert!((v - 2.2).abs() < 1e-12);
        let v = phi_weighted(&p5, &x, &[2.0], &[4.0], 1.0);
        assert!((v - 0.43).abs() < 1e-12);
    }

    #[test]
    fn phi_hpr_examples() {
        // K = {0}: reduces to lambda G + (c/2) G^2
        let p1 = by_id("P1").unwrap();
        let v = phi_hpr(&p1, &[0.5], &[0.0], 2.0);
        assert!((v - 0.25).abs() < 1e-14);
        let lambda = [-1.0];
        let g = -0.5;
        let expect = lambda[0] * g + 1.0 * g * g;
        assert!((phi_hpr(&p1, &[0.5], &lambda, 2.0) - expect).abs() < 1e-14);

        // K = R_-: lambda = 1, c = 1, G = -2 gives -lambda^2 / (2c)
        let p3 = by_id("P3").unwrap();
        let v = phi_hpr(&p3, &[-1.0], &[1.0], 1.0);
        assert!((v - (-0.5)).abs() < 1e-14);

        // feasible point with lambda = 0
        assert_eq!(phi_hpr(&p1, &[1.0], &[0.0], 5.0), 0.0);
    }

    #[test]
    fn phi_hpr_projection_and_distance_routes_agree() {
        let p5 = by_id("P5").unwrap();
        let cm = p5.constraints.cone_map.as_ref().unwrap();
        let polar = cm.cone.polar();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let lambda_raw = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let lambda = polar.project(&lambda_raw).unwrap();
            let c = rng.gen_range(0.1..10.0);
            let gval = cm.eval(&x);
            let y: Vec<f64> = lambda.iter().zip(&gval).map(|(l, g)| l + c * g).collect();
            let via_dist = cm.cone.distance(&y).unwrap();
            let proj_polar = polar.project(&y).unwrap();
            let via_proj: f64 = proj_polar.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((via_dist - via_proj).abs() <= 1e-10);

            let lambda_sq: f64 = lambda.iter().map(|v| v * v).sum();
            let phi = phi_hpr(&p5, &x, &lambda, c);
            let phi_proj = (via_proj * via_proj - lambda_sq) / (2.0 * c);
            assert!((phi - phi_proj).abs() <= 1e-10);
            // lower bound from the dual norm
            assert!(phi >= -lambda_sq / (2.0 * c) - 1e-12);
        }
    }

    #[test]
    fn phi_palm_examples() {
        let p5i = by_id("P5i").unwrap();
        // single-constraint checks are easier against a 1-constraint problem
        let p3 = by_id("P3").unwrap();
        // lambda = 0, c = 2, g = -0.5 at x = 0.5: P(-1, 0) = 0
        assert_eq!(phi_palm(&p3, &[0.5], &[0.0], 2.0, PFunction::Hpr), 0.0);
        // lambda = 2, c = 1, g = 1 at x = 2: P(1, 2) = 2.5
        let v = phi_palm(&p3, &[2.0], &[2.0], 1.0, PFunction::Hpr);
        assert!((v - 2.5).abs() < 1e-14);
        // lambda = 2, c = 1, g = -5 at x = -4 (outside box but fine for phi)
        let v = phi_palm(&p3, &[-4.0], &[2.0], 1.0, PFunction::Hpr);
        assert!((v - (-2.0)).abs() < 1e-14);
        // feasible point of P5i with zero multipliers
        assert_eq!(
            phi_palm(&p5i, &[0.5, 0.5], &[0.0, 0.0], 1.0, PFunction::Hpr),
            0.0
        );
    }

    #[test]
    fn p_derivative_examples() {
        assert_eq!(p_derivative(PFunction::Hpr, 1.0, 2.0).unwrap(), 3.0);
        assert_eq!(p_derivative(PFunction::Hpr, -5.0, 2.0).unwrap(), 0.0);
        assert_eq!(p_derivative(PFunction::Exponential, 0.0, 3.0).unwrap(), 3.0);
        assert!(p_derivative(PFunction::Hpr, 1.0, -1.0).is_err());
    }

    #[test]
    fn kernel_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in [PFunction::Hpr, PFunction::Exponential] {
            for _ in 0..400 {
                let t = rng.gen_range(0.0..4.0);
                let s1 = rng.gen_range(-5.0..5.0);
                let s2 = rng.gen_range(-5.0..5.0);
                let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
                assert_eq!(p.eval(0.0, t), 0.0);
                assert!(p.eval(hi, t) >= p.eval(lo, t) - 1e-12);
                assert!(p.eval(s1, t) >= p.r(t) - 1e-12);
                assert!(p.derivative(s1, t) >= 0.0);
                // numerical derivative check away from the kink
                if (s1 + t).abs() > 1e-3 {
                    let h = 1e-6;
                    let num = (p.eval(s1 + h, t) - p.eval(s1 - h, t)) / (2.0 * h);
                    assert!(
                        (num - p.derivative(s1, t)).abs() <= 1e-6 * (1.0 + num.abs()),
                        "{p:?} at ({s1}, {t}): {num} vs {}",
                        p.derivative(s1, t)
                    );
                }
            }
        }
    }

    #[test]
    fn merit_eval_examples() {
        let p1 = by_id("P1").unwrap();
        let mu = MeritParam::MultiplierPen { lambda: vec![0.0], c: 2.0 };
        let v = merit_eval(&p1, &[0.5], &mu).unwrap();
        assert!((v - 0.5).abs() < 1e-14);

        let p5 = by_id("P5").unwrap();
        let mu = MeritParam::Weighted { u: vec![3.0], v: vec![7.0], w: 0.5 };
        let v = merit_eval(&p5, &[0.5, 0.5], &mu).unwrap();
        assert!((v - 0.5).abs() < 1e-14); // phi = 0 at feasible points

        let p6 = by_id("P6").unwrap();
        let mu = MeritParam::PenaltyC { c: 2.0, omega: OmegaFunction::Identity };
        let v = merit_eval(&p6, &[-0.25], &mu).unwrap();
        assert!((v - (-0.125)).abs() < 1e-14);
    }

    #[test]
    fn merit_eval_rejects_mismatched_parameters() {
        let p4 = by_id("P4").unwrap();
        let mu = MeritParam::Weighted { u: vec![], v: vec![1.0], w: 0.1 };
        assert!(merit_eval(&p4, &[0.0, 0.0], &mu).is_err());

        // multiplier outside the polar cone
        let p3 = by_id("P3").unwrap();
        let mu = MeritParam::MultiplierPen { lambda: vec![-1.0], c: 1.0 };
        assert!(matches!(merit_eval(&p3, &[0.0], &mu), Err(Error::Input(_))));

        let p5i = by_id("P5i").unwrap();
        let mu = MeritParam::Palm {
            lambda: vec![0.0, 0.0],
            c: 1.0,
            p: PFunction::Exponential,
        };
        assert!(merit_eval(&p5i, &[0.0, 0.0], &mu).is_err());
    }

    #[test]
    fn cell_bounds_are_sound_on_random_cells() {
        let p5 = by_id("P5").unwrap();
        let mus = [
            MeritParam::PenaltyC { c: 3.0, omega: OmegaFunction::Identity },
            MeritParam::Weighted { u: vec![1.5], v: vec![2.0], w: 0.25 },
            MeritParam::MultiplierPen { lambda: vec![0.7, 0.0], c: 4.0 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for mu in &mus {
            let ev = MeritEvaluator::new(&p5, mu).unwrap();
            for _ in 0..300 {
                let center = [rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
                let rho = rng.gen_range(0.01..0.5);
                let value = ev.eval(&center);
                let bound = cell_bound(&p5, mu, &center, value, rho);
                // sample points inside the ball of radius rho around center
                for _ in 0..20 {
                    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let rad: f64 = rng.gen_range(0.0..rho);
                    let y = [center[0] + rad * ang.cos(), center[1] + rad * ang.sin()];
                    let vy = ev.eval(&y);
                    assert!(
                        vy >= bound.lower - 1e-9,
                        "{}: value {vy} below bound {}",
                        mu.describe(),
                        bound.lower
                    );
                    if let Some(l) = bound.lipschitz {
                        assert!((vy - value).abs() <= l * rad + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn barrier_cells_fall_back_to_the_monotone_bound() {
        let p6 = by_id("P6").unwrap();
        let mu = MeritParam::PenaltyC { c: 2.0, omega: OmegaFunction::BarrierLog(0.3) };
        // infeasibility at 0.8 is 0.64, past the 0.3 barrier
        let v = merit_eval(&p6, &[0.8], &mu).unwrap();
        assert_eq!(v, f64::INFINITY);
        let bound = cell_bound(&p6, &mu, &[0.8], v, 0.05);
        assert!(bound.lipschitz.is_none());
        assert!(bound.lower > 1.0); // the whole cell is past the barrier
    }
}
