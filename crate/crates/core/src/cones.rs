//! Closed convex cones in Euclidean space: projections, polar cones,
//! distances, and the Moreau decomposition `y = proj_K(y) + proj_K*(y)`
//! with orthogonal parts.
//!
//! The `Free` variant (the whole space) is not a pointed cone but is needed
//! so that `polar(Zero)` is representable; its projection is the identity.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cone {
    /// `{0}^d`
    Zero(usize),
    /// The whole space `R^d`.
    Free(usize),
    /// `{ y : y <= 0 componentwise }`
    NonpositiveOrthant(usize),
    /// `{ y : y >= 0 componentwise }`
    NonnegativeOrthant(usize),
    /// `{ (z, t) : ||z|| <= t }` with `t` in the last coordinate, dim >= 2.
    SecondOrderCone(usize),
    /// `-SOC(d) = { (z, t) : ||z|| <= -t }`, the polar of the SOC.
    NegSecondOrderCone(usize),
    Product(Vec<Cone>),
}

impl Cone {
    pub fn total_dim(&self) -> usize {
        match self {
            Cone::Zero(d)
            | Cone::Free(d)
            | Cone::NonpositiveOrthant(d)
            | Cone::NonnegativeOrthant(d)
            | Cone::SecondOrderCone(d)
            | Cone::NegSecondOrderCone(d) => *d,
            Cone::Product(parts) => parts.iter().map(Cone::total_dim).sum(),
        }
    }

    /// The polar cone `K* = { y* : <y*, y> <= 0 for all y in K }`.
    pub fn polar(&self) -> Cone {
        match self {
            Cone::Zero(d) => Cone::Free(*d),
            Cone::Free(d) => Cone::Zero(*d),
            Cone::NonpositiveOrthant(d) => Cone::NonnegativeOrthant(*d),
            Cone::NonnegativeOrthant(d) => Cone::NonpositiveOrthant(*d),
            Cone::SecondOrderCone(d) => Cone::NegSecondOrderCone(*d),
            Cone::NegSecondOrderCone(d) => Cone::SecondOrderCone(*d),
            Cone::Product(parts) => Cone::Product(parts.iter().map(Cone::polar).collect()),
        }
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.total_dim() {
            return Err(Error::Input(format!(
                "vector has dimension {}, cone expects {}",
                y.len(),
                self.total_dim()
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let mut out = y.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, y: &mut [f64]) {
        match self {
            Cone::Zero(_) => y.fill(0.0),
            Cone::Free(_) => {}
            Cone::NonpositiveOrthant(_) => {
                for v in y.iter_mut() {
                    *v = v.min(0.0);
                }
            }
            Cone::NonnegativeOrthant(_) => {
                for v in y.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            Cone::SecondOrderCone(d) => soc_project_in_place(y, *d, 1.0),
            Cone::NegSecondOrderCone(d) => soc_project_in_place(y, *d, -1.0),
            Cone::Product(parts) => {
                let mut off = 0;
                for part in parts {
                    let d = part.total_dim();
                    part.project_in_place(&mut y[off..off + d]);
                    off += d;
                }
            }
        }
    }

    /// The Moreau residual `y - proj_K(y)`, which equals `proj_K*(y)`.
    pub fn project_polar(&self, y: &[f64]) -> Result<Vec<f64>> {
        let p = self.project(y)?;
        Ok(y.iter().zip(&p).map(|(a, b)| a - b).collect())
    }

    /// Euclidean distance from `y` to the cone, `||y - proj_K(y)||`.
    pub fn distance(&self, y: &[f64]) -> Result<f64> {
        self.check_dim(y)?;
        Ok(self.distance_unchecked(y))
    }

    /// Distance without the dimension check; callers validate up front.
    pub(crate) fn distance_unchecked(&self, y: &[f64]) -> f64 {
        self.distance_sq(y).sqrt()
    }

    fn distance_sq(&self, y: &[f64]) -> f64 {
        match self {
            Cone::Zero(_) => y.iter().map(|v| v * v).sum(),
            Cone::Free(_) => 0.0,
            Cone::NonpositiveOrthant(_) => {
                y.iter().map(|v| v.max(0.0)).map(|v| v * v).sum()
            }
            Cone::NonnegativeOrthant(_) => {
                y.iter().map(|v| v.min(0.0)).map(|v| v * v).sum()
            }
            Cone::SecondOrderCone(d) => soc_distance_sq(y, *d, 1.0),
            Cone::NegSecondOrderCone(d) => soc_distance_sq(y, *d, -1.0),
            Cone::Product(parts) => {
                let mut off = 0;
                let mut acc = 0.0;
                for part in parts {
                    let d = part.total_dim();
                    acc += part.distance_sq(&y[off..off + d]);
                    off += d;
                }
                acc
            }
        }
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(y)? <= tol)
    }

    /// Parses a product expression such as `"zero:1 x orthant-:2"`.
    ///
    /// Factors: `zero:d`, `free:d`, `orthant-:d`, `orthant+:d`, `soc:d`,
    /// `soc-:d`.
    pub fn parse(src: &str) -> Result<Cone> {
        let mut parts = Vec::new();
        for piece in src.split('x') {
            let piece = piece.trim();
            if piece.is_empty() {
                return Err(Error::Parse(format!("empty cone factor in `{src}`")));
            }
            let (name, dim) = piece
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("cone factor `{piece}` needs `name:dim`")))?;
            let d: usize = dim
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad cone dimension `{dim}`")))?;
            if d == 0 {
                return Err(Error::Parse("cone dimension must be positive".into()));
            }
            let cone = match name.trim() {
                "zero" => Cone::Zero(d),
                "free" => Cone::Free(d),
                "orthant-" => Cone::NonpositiveOrthant(d),
                "orthant+" => Cone::NonnegativeOrthant(d),
                "soc" => {
                    if d < 2 {
                        return Err(Error::Parse("soc dimension must be >= 2".into()));
                    }
                    Cone::SecondOrderCone(d)
                }
                "soc-" => {
                    if d < 2 {
                        return Err(Error::Parse("soc- dimension must be >= 2".into()));
                    }
                    Cone::NegSecondOrderCone(d)
                }
                other => return Err(Error::Parse(format!("unknown cone `{other}`"))),
            };
            parts.push(cone);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Cone::Product(parts)
        })
    }

    pub fn describe(&self) -> String {
        match self {
            Cone::Zero(d) => format!("zero:{d}"),
            Cone::Free(d) => format!("free:{d}"),
            Cone::NonpositiveOrthant(d) => format!("orthant-:{d}"),
            Cone::NonnegativeOrthant(d) => format!("orthant+:{d}"),
            Cone::SecondOrderCone(d) => format!("soc:{d}"),
            Cone::NegSecondOrderCone(d) => format!("soc-:{d}"),
            Cone::Product(parts) => parts
                .iter()
                .map(Cone::describe)
                .collect::<Vec<_>>()
                .join(" x "),
        }
    }
}

/// Three-branch SOC projection. `sign = -1` projects onto `-SOC` via
/// `proj_{-K}(y) = -proj_K(-y)`, folded into the branch tests. With
/// `||z|| = 0` the branch order resolves the tie: `t >= 0` keeps `y`,
/// `t < 0` maps to the origin.
fn soc_project_in_place(y: &mut [f64], dim: usize, sign: f64) {
    let t = sign * y[dim - 1];
    let norm_z: f64 = y[..dim - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_z <= t {
        return;
    }
    if norm_z <= -t {
        y.fill(0.0);
        return;
    }
    let alpha = 0.5 * (norm_z + t);
    let scale = alpha / norm_z;
    for v in y[..dim - 1].iter_mut() {
        *v *= scale;
    }
    y[dim - 1] = sign * alpha;
}

fn soc_distance_sq(y: &[f64], dim: usize, sign: f64) -> f64 {
    let t = sign * y[dim - 1];
    let norm_z_sq: f64 = y[..dim - 1].iter().map(|v| v * v).sum::<f64>();
    let norm_z = norm_z_sq.sqrt();
    if norm_z <= t {
        0.0
    } else if norm_z <= -t {
        norm_z_sq + t * t
    } else {
        let r = (norm_z - t) / std::f64::consts::SQRT_2;
        r * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    #[test]
    fn polar_examples() {
        assert_eq!(
            Cone::NonpositiveOrthant(2).polar(),
            Cone::NonnegativeOrthant(2)
        );
        assert_eq!(Cone::Zero(3).polar(), Cone::Free(3));
        let soc = Cone::SecondOrderCone(3);
        assert_eq!(soc.polar().polar(), soc);
        let prod = Cone::Product(vec![Cone::Zero(1), Cone::NonpositiveOrthant(2)]);
        assert_eq!(
            prod.polar(),
            Cone::Product(vec![Cone::Free(1), Cone::NonnegativeOrthant(2)])
        );
    }

    #[test]
    fn projection_examples() {
        let p = Cone::NonpositiveOrthant(2).project(&[3.0, -1.0]).unwrap();
        assert_eq!(p, vec![0.0, -1.0]);

        let p = Cone::Zero(2).project(&[5.0, -7.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);

        // closed-form SOC projection of (3, 4, 0)
        let p = Cone::SecondOrderCone(3).project(&[3.0, 4.0, 0.0]).unwrap();
        for (got, want) in p.iter().zip([1.5, 2.0, 2.5]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_polar_examples() {
        let r = Cone::NonpositiveOrthant(2)
            .project_polar(&[3.0, -1.0])
            .unwrap();
        assert_eq!(r, vec![3.0, 0.0]);

        let soc = Cone::SecondOrderCone(3);
        let r = soc.project_polar(&[3.0, 4.0, 0.0]).unwrap();
        for (got, want) in r.iter().zip([1.5, 2.0, -2.5]) {
            assert!((got - want).abs() < 1e-14);
        }
        // residual lies in the polar cone
        assert!(soc.polar().contains(&r, 1e-12).unwrap());
        // and equals the direct projection onto the polar cone
        let direct = soc.polar().project(&[3.0, 4.0, 0.0]).unwrap();
        for (a, b) in r.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_examples() {
        assert!((Cone::Zero(1).distance(&[-0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            Cone::SecondOrderCone(3).distance(&[0.3, 0.4, 2.0]).unwrap(),
            0.0
        );
        let d = Cone::SecondOrderCone(3).distance(&[3.0, 4.0, 0.0]).unwrap();
        assert!((d - 2.5 * std::f64::consts::SQRT_2).abs() < 1e-12);
        let d = Cone::NonpositiveOrthant(1).distance(&[2.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_orthant_polar_projection_formula() {
        // K = {0}^m x R^l_-  =>  proj_K*(y) = (y_1..y_m, max(0, y_{m+1})..)
        let k = Cone::Product(vec![Cone::Zero(2), Cone::NonpositiveOrthant(2)]);
        let y = [1.5, -2.0, 3.0, -4.0];
        let r = k.project_polar(&y).unwrap();
        assert_eq!(r, vec![1.5, -2.0, 3.0, 0.0]);
    }

    #[test]
    fn moreau_identity_on_random_points() {
        let cones = [
            Cone::Zero(3),
            Cone::Free(2),
            Cone::NonpositiveOrthant(4),
            Cone::SecondOrderCone(3),
            Cone::SecondOrderCone(5),
            Cone::Product(vec![
                Cone::Zero(1),
                Cone::NonpositiveOrthant(2),
                Cone::SecondOrderCone(3),
            ]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cone in &cones {
            let polar = cone.polar();
            let d = cone.total_dim();
            for _ in 0..200 {
                let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let pk = cone.project(&y).unwrap();
                let pks = polar.project(&y).unwrap();
                let recon: f64 = (0..d)
                    .map(|i| (y[i] - pk[i] - pks[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(recon <= 1e-10, "{}: recon {recon}", cone.describe());
                assert!(dot(&pk, &pks).abs() <= 1e-10);
                // norm split
                let dk = cone.distance(&y).unwrap();
                let dks = polar.distance(&y).unwrap();
                assert!((dk * dk + dks * dks - dot(&y, &y)).abs() <= 1e-9);
                // idempotent
                let pp = cone.project(&pk).unwrap();
                assert!(norm(&pp.iter().zip(&pk).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-12);
            }
        }
    }

    #[test]
    fn projection_nonexpansive() {
        let cone = Cone::Product(vec![Cone::SecondOrderCone(3), Cone::NonpositiveOrthant(2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let z: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let py = cone.project(&y).unwrap();
            let pz = cone.project(&z).unwrap();
            let dp = norm(&py.iter().zip(&pz).map(|(a, b)| a - b).collect::<Vec<_>>());
            let dyz = norm(&y.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(dp <= dyz + 1e-12);
        }
    }

    #[test]
    fn parse_round_trip() {
        let c = Cone::parse("zero:1 x orthant-:2 x soc:3").unwrap();
        assert_eq!(c.total_dim(), 6);
        assert_eq!(c.describe(), "zero:1 x orthant-:2 x soc:3");
        assert_eq!(Cone::parse("soc:3").unwrap(), Cone::SecondOrderCone(3));
        assert!(Cone::parse("psd:3").is_err());
        assert!(Cone::parse("soc:1").is_err());
        assert!(Cone::parse("zero:").is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(Cone::Zero(2).project(&[1.0]).is_err());
        assert!(Cone::SecondOrderCone(3).distance(&[1.0, 2.0]).is_err());
    }
}
