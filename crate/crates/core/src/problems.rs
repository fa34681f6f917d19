//! Constrained problems over compact boxes: constraint evaluation,
//! infeasibility measures, a built-in library with certified optima, and
//! brute-force grid oracles for optimal values and the perturbation
//! function.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::cones::Cone;
use crate::expr::Expr;
use crate::{Error, Result};

/// Stack buffer for small constraint vectors (dimensions stay desk-scale).
pub(crate) type ConeVec = SmallVec<[f64; 8]>;

/// A scalar function of the decision vector, either built-in native code or
/// a parsed expression.
#[derive(Clone)]
pub struct ScalarFn {
    display: String,
    repr: ScalarRepr,
}

#[derive(Clone)]
enum ScalarRepr {
    Native(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    Parsed(Arc<Expr>),
}

impl ScalarFn {
    pub fn native(
        display: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            display: display.into(),
            repr: ScalarRepr::Native(Arc::new(f)),
        }
    }

    /// Parses `src` with the expression grammar over `x1 ... x<dim>`.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let expr = Expr::parse(src, dim)?;
        Ok(ScalarFn {
            display: src.trim().to_string(),
            repr: ScalarRepr::Parsed(Arc::new(expr)),
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            ScalarRepr::Native(f) => f(x),
            ScalarRepr::Parsed(e) => e.eval(x),
        }
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.display)
    }
}

/// Compact box ground set with componentwise bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl GroundSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Input("box bounds must be nonempty and equal length".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l <= u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::Input(format!("bad box bounds [{l}, {u}]")));
            }
        }
        Ok(GroundSet { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Componentwise clamp onto the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }
}

/// Constraint map `G` into a closed convex cone `K`; feasibility is
/// `G(x) in K`.
#[derive(Debug, Clone)]
pub struct ConeMap {
    pub components: Vec<ScalarFn>,
    pub cone: Cone,
}

impl ConeMap {
    pub fn new(components: Vec<ScalarFn>, cone: Cone) -> Result<Self> {
        if components.len() != cone.total_dim() {
            return Err(Error::Config(format!(
                "cone map has {} components but cone dimension is {}",
                components.len(),
                cone.total_dim()
            )));
        }
        Ok(ConeMap { components, cone })
    }

    #[inline]
    pub(crate) fn eval_into(&self, x: &[f64], out: &mut ConeVec) {
        out.clear();
        for c in &self.components {
            out.push(c.eval(x));
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

/// Equality/inequality block plus an optional cone view of the same
/// feasible set.
#[derive(Debug, Clone, Default)]
pub struct ConstraintBlock {
    pub equalities: Vec<ScalarFn>,
    pub inequalities: Vec<ScalarFn>,
    pub cone_map: Option<ConeMap>,
}

impl ConstraintBlock {
    pub fn has_hg(&self) -> bool {
        !self.equalities.is_empty() || !self.inequalities.is_empty()
    }
}

/// Certified optimum used by the monitor and the acceptance oracles.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub tolerance: f64,
    pub provenance: String,
}

/// Local bound on the objective gradient norm: `||grad f|| <= grad_norm(x)`
/// pointwise, with `grad_norm` varying at most `curvature` per unit step.
#[derive(Clone)]
pub struct LocalObjectiveBound {
    pub grad_norm: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub curvature: f64,
}

impl fmt::Debug for LocalObjectiveBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalObjectiveBound(curvature={})", self.curvature)
    }
}

/// Lipschitz constants on the box, used for grid certification. All are
/// Euclidean-norm bounds; `cone_map` bounds `G` as a vector map.
#[derive(Debug, Clone, Default)]
pub struct LipschitzInfo {
    pub objective: f64,
    pub objective_local: Option<LocalObjectiveBound>,
    pub equalities: Vec<f64>,
    pub inequalities: Vec<f64>,
    pub cone_map: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub id: String,
    pub dimension: usize,
    pub objective: ScalarFn,
    pub constraints: ConstraintBlock,
    pub ground: GroundSet,
    pub certified: Option<Certificate>,
    pub lipschitz: Option<LipschitzInfo>,
    /// Present when the zero-duality-gap property is known to hold; the
    /// monitor requires it before asserting value convergence to `f_star`.
    pub strong_duality: Option<String>,
}

/// Raw constraint values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValues {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub cone: Option<Vec<f64>>,
}

impl ProblemSpec {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::Input(format!(
                "point has dimension {}, problem {} expects {}",
                x.len(),
                self.id,
                self.dimension
            )));
        }
        Ok(())
    }

    /// Evaluates every constraint function at `x`.
    pub fn evaluate_constraints(&self, x: &[f64]) -> Result<ConstraintValues> {
        self.check_dim(x)?;
        Ok(ConstraintValues {
            h: self.constraints.equalities.iter().map(|f| f.eval(x)).collect(),
            g: self.constraints.inequalities.iter().map(|f| f.eval(x)).collect(),
            cone: self.constraints.cone_map.as_ref().map(|cm| cm.eval(x)),
        })
    }

    /// `sum |h_i(x)| + sum max(0, g_j(x))`, the l1 infeasibility of the
    /// equality/inequality view.
    pub fn infeasibility_l1(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if !self.constraints.has_hg() {
            return Err(Error::Config(format!(
                "problem {} has no equality/inequality block",
                self.id
            )));
        }
        Ok(self.infeasibility_l1_unchecked(x))
    }

    #[inline]
    pub(crate) fn infeasibility_l1_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for h in &self.constraints.equalities {
            acc += h.eval(x).abs();
        }
        for g in &self.constraints.inequalities {
            acc += g.eval(x).max(0.0);
        }
        acc
    }

    /// `dist(G(x), K)` for the cone view.
    pub fn infeasibility_cone(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let cm = self.constraints.cone_map.as_ref().ok_or_else(|| {
            Error::Config(format!("problem {} has no cone map", self.id))
        })?;
        let mut buf = ConeVec::new();
        cm.eval_into(x, &mut buf);
        Ok(cm.cone.distance_unchecked(&buf))
    }

    /// The problem's natural infeasibility measure: the l1 form when an
    /// equality/inequality block is present, else the cone distance.
    #[inline]
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        if self.constraints.has_hg() {
            self.infeasibility_l1_unchecked(x)
        } else if let Some(cm) = self.constraints.cone_map.as_ref() {
            let mut buf = ConeVec::new();
            cm.eval_into(x, &mut buf);
            cm.cone.distance_unchecked(&buf)
        } else {
            0.0
        }
    }

    /// Number of equality plus inequality constraints.
    pub fn hg_len(&self) -> (usize, usize) {
        (
            self.constraints.equalities.len(),
            self.constraints.inequalities.len(),
        )
    }

    /// Validates structural invariants and the certificate, if present.
    pub fn validate(&self) -> Result<()> {
        if self.ground.dim() != self.dimension {
            return Err(Error::Config(format!(
                "problem {}: box dimension {} != {}",
                self.id,
                self.ground.dim(),
                self.dimension
            )));
        }
        if !self.constraints.has_hg() && self.constraints.cone_map.is_none() {
            return Err(Error::Config(format!("problem {} has no constraints", self.id)));
        }
        if let Some(lip) = &self.lipschitz {
            if lip.equalities.len() != self.constraints.equalities.len()
                || lip.inequalities.len() != self.constraints.inequalities.len()
            {
                return Err(Error::Config(format!(
                    "problem {}: Lipschitz constants do not match the constraint lists",
                    self.id
                )));
            }
        }
        if let Some(cert) = &self.certified {
            if cert.x_star.len() != self.dimension {
                return Err(Error::Config(format!(
                    "problem {}: certificate point has wrong dimension",
                    self.id
                )));
            }
            if !self.ground.contains(&cert.x_star) {
                return Err(Error::Config(format!(
                    "problem {}: certificate point outside the box",
                    self.id
                )));
            }
            let infeas = self.infeasibility(&cert.x_star);
            if infeas > cert.tolerance {
                return Err(Error::Config(format!(
                    "problem {}: certificate point infeasible by {infeas:e}",
                    self.id
                )));
            }
            let fv = self.objective.eval(&cert.x_star);
            if (fv - cert.f_star).abs() > cert.tolerance {
                return Err(Error::Config(format!(
                    "problem {}: certificate value off by {:e}",
                    self.id,
                    (fv - cert.f_star).abs()
                )));
            }
        }
        Ok(())
    }
}

/// Right-hand-side perturbation for the optimal value function: equalities
/// become `h_i(x) = y_i`, inequalities `g_j(x) <= y_{m+j}`, or the cone
/// form `G(x) - y in K`.
#[derive(Debug, Clone)]
pub struct PerturbationQuery {
    pub y: Vec<f64>,
    pub resolution: f64,
}

#[derive(Debug, Clone)]
pub struct OracleOptimum {
    pub f_upper: f64,
    /// Certified lower limit; `None` when no Lipschitz bound is available.
    pub f_lower: Option<f64>,
    pub x_best: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PerturbationEstimate {
    pub value: f64,
    pub lower: Option<f64>,
    pub x_best: Vec<f64>,
}

/// Exhaustive grid minimization of `f` over slack-feasible box points.
pub fn brute_force_optimum(
    problem: &ProblemSpec,
    resolution: f64,
    feasibility_slack: f64,
) -> Result<OracleOptimum> {
    let (f_upper, x_best) = grid_scan(problem, resolution, feasibility_slack, None)?;
    let f_lower = problem.lipschitz.as_ref().map(|lip| {
        let d = problem.dimension as f64;
        // slack term: relaxed feasibility can admit values below f_star at
        // a rate proportional to the objective Lipschitz constant
        f_upper - lip.objective * (resolution * d.sqrt() + feasibility_slack)
    });
    Ok(OracleOptimum {
        f_upper,
        f_lower,
        x_best,
    })
}

/// Brute-force estimate of the optimal value function `beta(y)`.
pub fn perturbation_estimate(
    problem: &ProblemSpec,
    query: &PerturbationQuery,
    feasibility_slack: f64,
) -> Result<PerturbationEstimate> {
    if query.resolution <= 0.0 {
        return Err(Error::Input("perturbation resolution must be positive".into()));
    }
    let expected = if problem.constraints.has_hg() {
        let (m, l) = problem.hg_len();
        m + l
    } else {
        problem
            .constraints
            .cone_map
            .as_ref()
            .map(|cm| cm.cone.total_dim())
            .unwrap_or(0)
    };
    if query.y.len() != expected {
        return Err(Error::Input(format!(
            "perturbation has dimension {}, constraint layout expects {expected}",
            query.y.len()
        )));
    }
    let (value, x_best) = grid_scan(problem, query.resolution, feasibility_slack, Some(&query.y))?;
    let lower = problem.lipschitz.as_ref().map(|lip| {
        let d = problem.dimension as f64;
        value - lip.objective * (query.resolution * d.sqrt() + feasibility_slack)
    });
    Ok(PerturbationEstimate {
        value,
        lower,
        x_best,
    })
}

/// Shifted infeasibility used by the oracles; `shift = None` means `y = 0`
/// and reproduces the problem's own measure exactly.
fn shifted_infeasibility(problem: &ProblemSpec, x: &[f64], shift: Option<&[f64]>) -> f64 {
    match shift {
        None => problem.infeasibility(x),
        Some(y) => {
            if problem.constraints.has_hg() {
                let m = problem.constraints.equalities.len();
                let mut acc = 0.0;
                for (i, h) in problem.constraints.equalities.iter().enumerate() {
                    acc += (h.eval(x) - y[i]).abs();
                }
                for (j, g) in problem.constraints.inequalities.iter().enumerate() {
                    acc += (g.eval(x) - y[m + j]).max(0.0);
                }
                acc
            } else if let Some(cm) = problem.constraints.cone_map.as_ref() {
                let mut buf = ConeVec::new();
                cm.eval_into(x, &mut buf);
                for (v, yy) in buf.iter_mut().zip(y) {
                    *v -= yy;
                }
                cm.cone.distance_unchecked(&buf)
            } else {
                0.0
            }
        }
    }
}

struct BoxGrid {
    lower: Vec<f64>,
    step: Vec<f64>,
    npts: Vec<usize>,
    total: usize,
}

impl BoxGrid {
    fn new(ground: &GroundSet, resolution: f64) -> Result<BoxGrid> {
        if resolution <= 0.0 {
            return Err(Error::Input("resolution must be positive".into()));
        }
        let mut npts = Vec::with_capacity(ground.dim());
        let mut step = Vec::with_capacity(ground.dim());
        let mut total: usize = 1;
        for (l, u) in ground.lower().iter().zip(ground.upper()) {
            let width = u - l;
            let n = if width == 0.0 {
                1
            } else {
                ((width / resolution).ceil() as usize).max(1) + 1
            };
            total = total
                .checked_mul(n)
                .filter(|t| *t <= 1 << 40)
                .ok_or_else(|| Error::Input("grid too fine for an exhaustive scan".into()))?;
            npts.push(n);
            step.push(if n > 1 { width / (n - 1) as f64 } else { 0.0 });
        }
        Ok(BoxGrid {
            lower: ground.lower().to_vec(),
            step,
            npts,
            total,
        })
    }

    #[inline]
    fn point(&self, mut idx: usize, out: &mut [f64]) {
        for k in 0..self.npts.len() {
            let i = idx % self.npts[k];
            idx /= self.npts[k];
            out[k] = self.lower[k] + self.step[k] * i as f64;
        }
    }
}

/// Lexicographic tie-break keeps grid reductions deterministic under
/// parallel scheduling.
fn better(v_new: f64, x_new: &[f64], v_old: f64, x_old: &[f64]) -> bool {
    match v_new.total_cmp(&v_old) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (a, b) in x_new.iter().zip(x_old) {
                match a.total_cmp(b) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Equal => {}
                }
            }
            false
        }
    }
}

fn grid_scan(
    problem: &ProblemSpec,
    resolution: f64,
    slack: f64,
    shift: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let grid = BoxGrid::new(&problem.ground, resolution)?;
    let dim = problem.dimension;
    let (v, x) = (0..grid.total)
        .into_par_iter()
        .fold(
            || (f64::INFINITY, Vec::new(), vec![0.0; dim]),
            |mut acc, idx| {
                grid.point(idx, &mut acc.2);
                if shifted_infeasibility(problem, &acc.2, shift) <= slack {
                    let v = problem.objective.eval(&acc.2);
                    if acc.1.is_empty() || better(v, &acc.2, acc.0, &acc.1) {
                        acc.0 = v;
                        acc.1.clear();
                        acc.1.extend_from_slice(&acc.2);
                    }
                }
                acc
            },
        )
        .map(|(v, x, _)| (v, x))
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| {
                if b.1.is_empty() {
                    a
                } else if a.1.is_empty() || better(b.0, &b.1, a.0, &a.1) {
                    b
                } else {
                    a
                }
            },
        );
    if x.is_empty() {
        return Err(Error::InfeasibleAtResolution { resolution, slack });
    }
    Ok((v, x))
}

/// Built-in problem library. Every entry carries an analytically certified
/// optimum and Lipschitz data for grid certification.
pub fn library() -> Vec<ProblemSpec> {
    vec![p1(), p2(), p3(), p4(), p5(), p5i(), p6()]
}

pub fn by_id(id: &str) -> Result<ProblemSpec> {
    library()
        .into_iter()
        .find(|p| p.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::Config(format!("unknown problem `{id}`")))
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

fn p1() -> ProblemSpec {
    ProblemSpec {
        id: "P1".into(),
        dimension: 1,
        objective: ScalarFn::native("x1^2", |x| x[0] * x[0]),
        constraints: ConstraintBlock {
            equalities: vec![ScalarFn::native("x1 - 1", |x| x[0] - 1.0)],
            inequalities: vec![],
            cone_map: Some(
                ConeMap::new(
                    vec![ScalarFn::native("x1 - 1", |x| x[0] - 1.0)],
                    Cone::Zero(1),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-2.0], vec![2.0]).unwrap(),
        certified: Some(Certificate {
            f_star: 1.0,
            x_star: vec![1.0],
            tolerance: 1e-12,
            provenance: "unique feasible point of the affine equality".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 4.0,
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|x| 2.0 * x[0].abs()),
                curvature: 2.0,
            }),
            equalities: vec![1.0],
            inequalities: vec![],
            cone_map: Some(1.0),
        }),
        strong_duality: Some(
            "affine equality; the perturbed optimum (1+y)^2 is continuous at y=0".into(),
        ),
    }
}

fn p2() -> ProblemSpec {
    ProblemSpec {
        id: "P2".into(),
        dimension: 2,
        objective: ScalarFn::native("(x1-1)^2 + (x2-2)^2", |x| {
            (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2)
        }),
        constraints: ConstraintBlock {
            equalities: vec![],
            inequalities: vec![ScalarFn::native("x1 + x2 - 1", |x| x[0] + x[1] - 1.0)],
            cone_map: Some(
                ConeMap::new(
                    vec![ScalarFn::native("x1 + x2 - 1", |x| x[0] + x[1] - 1.0)],
                    Cone::NonpositiveOrthant(1),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap(),
        certified: Some(Certificate {
            f_star: 2.0,
            x_star: vec![0.0, 1.0],
            tolerance: 1e-12,
            provenance: "projection of (1,2) onto the halfspace x1+x2<=1".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 2.0 * 85.0_f64.sqrt(),
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|x| {
                    2.0 * ((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2)).sqrt()
                }),
                curvature: 2.0,
            }),
            equalities: vec![],
            inequalities: vec![sqrt2()],
            cone_map: Some(sqrt2()),
        }),
        strong_duality: Some("convex program with a strictly feasible point".into()),
    }
}

fn p3() -> ProblemSpec {
    ProblemSpec {
        id: "P3".into(),
        dimension: 1,
        objective: ScalarFn::native("-x1^2", |x| -x[0] * x[0]),
        constraints: ConstraintBlock {
            equalities: vec![],
            inequalities: vec![ScalarFn::native("x1 - 1", |x| x[0] - 1.0)],
            cone_map: Some(
                ConeMap::new(
                    vec![ScalarFn::native("x1 - 1", |x| x[0] - 1.0)],
                    Cone::NonpositiveOrthant(1),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-0.5], vec![2.0]).unwrap(),
        certified: Some(Certificate {
            f_star: -1.0,
            x_star: vec![1.0],
            tolerance: 1e-12,
            provenance: "nonconvex objective maximized in |x| on the feasible interval".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 4.0,
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|x| 2.0 * x[0].abs()),
                curvature: 2.0,
            }),
            equalities: vec![],
            inequalities: vec![1.0],
            cone_map: Some(1.0),
        }),
        strong_duality: Some(
            "perturbed optimum -(1+y)^2 is continuous at y=0 despite the nonconvex objective"
                .into(),
        ),
    }
}

fn p4() -> ProblemSpec {
    ProblemSpec {
        id: "P4".into(),
        dimension: 2,
        objective: ScalarFn::native("x1 + x2", |x| x[0] + x[1]),
        constraints: ConstraintBlock {
            equalities: vec![],
            inequalities: vec![],
            cone_map: Some(
                ConeMap::new(
                    vec![
                        ScalarFn::native("x1", |x| x[0]),
                        ScalarFn::native("x2", |x| x[1]),
                        ScalarFn::native("1", |_| 1.0),
                    ],
                    Cone::SecondOrderCone(3),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
        certified: Some(Certificate {
            f_star: -sqrt2(),
            x_star: vec![-sqrt2() / 2.0, -sqrt2() / 2.0],
            tolerance: 1e-12,
            provenance: "linear objective on the unit disc, minimized along (-1,-1)".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: sqrt2(),
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|_| sqrt2()),
                curvature: 0.0,
            }),
            equalities: vec![],
            inequalities: vec![],
            cone_map: Some(1.0),
        }),
        strong_duality: Some("second-order cone program with a strictly feasible point".into()),
    }
}

fn p5() -> ProblemSpec {
    ProblemSpec {
        id: "P5".into(),
        dimension: 2,
        objective: ScalarFn::native("x1^2 + x2^2", |x| x[0] * x[0] + x[1] * x[1]),
        constraints: ConstraintBlock {
            equalities: vec![ScalarFn::native("x1 + x2 - 1", |x| x[0] + x[1] - 1.0)],
            inequalities: vec![ScalarFn::native("x1 - x2", |x| x[0] - x[1])],
            cone_map: Some(
                ConeMap::new(
                    vec![
                        ScalarFn::native("x1 + x2 - 1", |x| x[0] + x[1] - 1.0),
                        ScalarFn::native("x1 - x2", |x| x[0] - x[1]),
                    ],
                    Cone::Product(vec![Cone::Zero(1), Cone::NonpositiveOrthant(1)]),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap(),
        certified: Some(Certificate {
            f_star: 0.5,
            x_star: vec![0.5, 0.5],
            tolerance: 1e-12,
            provenance: "least-norm point of the line x1+x2=1, which also satisfies x1<=x2".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 6.0 * sqrt2(),
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|x| 2.0 * (x[0] * x[0] + x[1] * x[1]).sqrt()),
                curvature: 2.0,
            }),
            equalities: vec![sqrt2()],
            inequalities: vec![sqrt2()],
            cone_map: Some(sqrt2()),
        }),
        strong_duality: Some("convex quadratic program with affine constraints".into()),
    }
}

/// Inequality-only restatement of P5: the equality is replaced by the pair
/// `x1 - x2 <= 0`, `-x1 - x2 + 1 <= 0`; the optimum is unchanged.
fn p5i() -> ProblemSpec {
    ProblemSpec {
        id: "P5i".into(),
        dimension: 2,
        objective: ScalarFn::native("x1^2 + x2^2", |x| x[0] * x[0] + x[1] * x[1]),
        constraints: ConstraintBlock {
            equalities: vec![],
            inequalities: vec![
                ScalarFn::native("x1 - x2", |x| x[0] - x[1]),
                ScalarFn::native("-x1 - x2 + 1", |x| -x[0] - x[1] + 1.0),
            ],
            cone_map: Some(
                ConeMap::new(
                    vec![
                        ScalarFn::native("x1 - x2", |x| x[0] - x[1]),
                        ScalarFn::native("-x1 - x2 + 1", |x| -x[0] - x[1] + 1.0),
                    ],
                    Cone::NonpositiveOrthant(2),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap(),
        certified: Some(Certificate {
            f_star: 0.5,
            x_star: vec![0.5, 0.5],
            tolerance: 1e-12,
            provenance: "same optimum as P5; the binding halfplane is x1+x2>=1".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 6.0 * sqrt2(),
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|x| 2.0 * (x[0] * x[0] + x[1] * x[1]).sqrt()),
                curvature: 2.0,
            }),
            equalities: vec![],
            inequalities: vec![sqrt2(), sqrt2()],
            cone_map: Some(sqrt2()),
        }),
        strong_duality: Some("convex quadratic program with a strictly feasible point".into()),
    }
}

/// Calibration problem for the exactness detector: the feasible set is the
/// single point 0, no finite l1 penalty parameter is exact, yet the
/// perturbed optimum -sqrt(y) is still lower semicontinuous at the origin.
fn p6() -> ProblemSpec {
    ProblemSpec {
        id: "P6".into(),
        dimension: 1,
        objective: ScalarFn::native("x1", |x| x[0]),
        constraints: ConstraintBlock {
            equalities: vec![],
            inequalities: vec![ScalarFn::native("x1^2", |x| x[0] * x[0])],
            cone_map: Some(
                ConeMap::new(
                    vec![ScalarFn::native("x1^2", |x| x[0] * x[0])],
                    Cone::NonpositiveOrthant(1),
                )
                .unwrap(),
            ),
        },
        ground: GroundSet::new(vec![-1.0], vec![1.0]).unwrap(),
        certified: Some(Certificate {
            f_star: 0.0,
            x_star: vec![0.0],
            tolerance: 1e-12,
            provenance: "x^2 <= 0 forces x = 0".into(),
        }),
        lipschitz: Some(LipschitzInfo {
            objective: 1.0,
            objective_local: Some(LocalObjectiveBound {
                grad_norm: Arc::new(|_| 1.0),
                curvature: 0.0,
            }),
            equalities: vec![],
            inequalities: vec![2.0],
            cone_map: Some(2.0),
        }),
        strong_duality: Some("perturbed optimum -sqrt(max(y,0)) tends to 0 = f_star".into()),
    }
}
