//! Approximate fixed points of self-maps of `[0,1]^N` through a cubical
//! Sperner labelling built from coordinatewise signs of `f(x) − x`.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{q, Q};
use crate::labelings::{ColourId, Colouring, LabelingError};
use crate::lattice::{CoordSet, Grid, Index, LatticeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixedPointError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error("no cube with a sign change on every axis up to scale {0}")]
    NotFound(u32),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("map `{name}` needs dimension {expected}, got {got}")]
    WrongDimension {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("bad map parameter: {0}")]
    BadParameter(String),
}

/// A self-map of `[0,1]^N` evaluated exactly on rational points.
pub trait GridMap: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Q]) -> Vec<Q>;
    fn lipschitz(&self) -> Option<Q> {
        None
    }
    fn name(&self) -> String;
}

fn clip(x: Q) -> Q {
    x.max(Q::zero()).min(Q::one())
}

#[derive(Debug, Clone)]
pub struct Identity {
    pub dim: usize,
}

impl GridMap for Identity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[Q]) -> Vec<Q> {
        x.to_vec()
    }
    fn lipschitz(&self) -> Option<Q> {
        Some(Q::one())
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

#[derive(Debug, Clone)]
pub struct Constant {
    pub value: Vec<Q>,
}

impl GridMap for Constant {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn eval(&self, _x: &[Q]) -> Vec<Q> {
        self.value.clone()
    }
    fn lipschitz(&self) -> Option<Q> {
        Some(Q::zero())
    }
    fn name(&self) -> String {
        "const".into()
    }
}

/// `x ↦ (x_i²)_i`.
#[derive(Debug, Clone)]
pub struct Square {
    pub dim: usize,
}

impl GridMap for Square {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[Q]) -> Vec<Q> {
        x.iter().map(|v| v * v).collect()
    }
    fn lipschitz(&self) -> Option<Q> {
        Some(Q::from_integer(2))
    }
    fn name(&self) -> String {
        "square".into()
    }
}

/// Rotation of the plane about `(1/2, 1/2)` by the angle with cosine
/// `99/101` and sine `20/101`, clipped back to the square.
#[derive(Debug, Clone, Default)]
pub struct Rotate;

impl GridMap for Rotate {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[Q]) -> Vec<Q> {
        let (c, s, h) = (q(99, 101), q(20, 101), q(1, 2));
        let (dx, dy) = (x[0] - h, x[1] - h);
        vec![clip(h + c * dx - s * dy), clip(h + s * dx + c * dy)]
    }
    fn lipschitz(&self) -> Option<Q> {
        Some(Q::one())
    }
    fn name(&self) -> String {
        "rotate".into()
    }
}

/// `x ↦ (p_i(x_i))_i` with rational coefficients, lowest degree first,
/// clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<Vec<Q>>,
}

impl Polynomial {
    /// Parses `c0,c1,...;c0,c1,...`, one polynomial per axis.
    pub fn parse(text: &str) -> Result<Self, FixedPointError> {
        let coeffs = text
            .split(';')
            .map(|axis| {
                axis.split(',')
                    .map(|c| parse_rational(c.trim()))
                    .collect::<Result<Vec<Q>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coeffs.iter().any(Vec::is_empty) {
            return Err(FixedPointError::BadParameter(text.into()));
        }
        Ok(Polynomial { coeffs })
    }
}

impl GridMap for Polynomial {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn eval(&self, x: &[Q]) -> Vec<Q> {
        self.coeffs
            .iter()
            .zip(x)
            .map(|(p, v)| clip(p.iter().rev().fold(Q::zero(), |acc, c| acc * v + c)))
            .collect()
    }
    fn name(&self) -> String {
        "poly".into()
    }
}

/// Adds `delta` to one coordinate, clipped at 1.
#[derive(Debug, Clone)]
pub struct Shift {
    pub dim: usize,
    pub axis: usize,
    pub delta: Q,
}

impl GridMap for Shift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[Q]) -> Vec<Q> {
        let mut y = x.to_vec();
        y[self.axis] = clip(y[self.axis] + self.delta);
        y
    }
    fn lipschitz(&self) -> Option<Q> {
        Some(Q::one())
    }
    fn name(&self) -> String {
        "shift".into()
    }
}

/// Parses `p/q` or an integer.
pub fn parse_rational(text: &str) -> Result<Q, FixedPointError> {
    let bad = || FixedPointError::BadParameter(text.into());
    match text.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(q(a, b))
        }
        None => Ok(Q::from_integer(text.trim().parse().map_err(|_| bad())?)),
    }
}

/// Built-in maps by name: `identity`, `const` (argument `c0,c1,...`),
/// `square`, `rotate` (plane only), `poly` (argument as in
/// [`Polynomial::parse`]) and `shift` (argument `axis,delta`).
pub fn builtin_map(name: &str, dim: usize, arg: Option<&str>) -> Result<Box<dyn GridMap>, FixedPointError> {
    let need = |expected: usize| {
        if dim == expected {
            Ok(())
        } else {
            Err(FixedPointError::WrongDimension {
                name: name.into(),
                expected,
                got: dim,
            })
        }
    };
    let map: Box<dyn GridMap> = match name {
        "identity" => Box::new(Identity { dim }),
        "square" => Box::new(Square { dim }),
        "rotate" => {
            need(2)?;
            Box::new(Rotate)
        }
        "const" => {
            let value = match arg {
                Some(a) => a.split(',').map(|c| parse_rational(c.trim())).collect::<Result<Vec<_>, _>>()?,
                None => vec![q(1, 3); dim],
            };
            need(value.len())?;
            if value.iter().any(|v| *v < Q::zero() || *v > Q::one()) {
                return Err(FixedPointError::BadParameter("constant outside [0, 1]".into()));
            }
            Box::new(Constant { value })
        }
        "poly" => {
            let p = Polynomial::parse(arg.ok_or_else(|| FixedPointError::BadParameter("poly needs coefficients".into()))?)?;
            need(p.dim())?;
            Box::new(p)
        }
        "shift" => {
            let a = arg.unwrap_or("0,1/4");
            let (axis, delta) = a
                .split_once(',')
                .ok_or_else(|| FixedPointError::BadParameter(a.into()))?;
            let axis: usize = axis.trim().parse().map_err(|_| FixedPointError::BadParameter(a.into()))?;
            if axis >= dim {
                return Err(FixedPointError::BadParameter(format!("axis {axis} out of range")));
            }
            Box::new(Shift {
                dim,
                axis,
                delta: parse_rational(delta.trim())?,
            })
        }
        other => return Err(FixedPointError::UnknownMap(other.into())),
    };
    Ok(map)
}

fn grid_point(sigma: &Index) -> Vec<Q> {
    let m = sigma.bound() as i64;
    sigma.coords().iter().map(|&c| q(c as i64, m)).collect()
}

/// Vertex `σ/m` gets bit `i` set iff `f(σ/m)_i ≥ σ_i/m`, except that the bit
/// is forced to 1 where `σ_i = 0` and to 0 where `σ_i = m`.
pub fn sign_labeling(f: &dyn GridMap, m: u32) -> Result<Colouring, FixedPointError> {
    let grid = Grid::new(f.dim(), m)?;
    let colours: Vec<ColourId> = (0..grid.len())
        .into_par_iter()
        .map(|rank| {
            let sigma = grid.unrank(rank);
            let x = grid_point(&sigma);
            let y = f.eval(&x);
            let bits: Vec<bool> = sigma
                .coords()
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    if c == 0 {
                        true
                    } else if c == m {
                        false
                    } else {
                        y[i] >= x[i]
                    }
                })
                .collect();
            ColourId::from_bits(&bits)
        })
        .collect();
    Ok(Colouring::from_vec(grid, colours)?)
}

/// Whether the colours of a cube show both bit values on every axis.
fn changes_sign_everywhere(palette: &[ColourId], dim: usize) -> bool {
    (0..dim).all(|i| palette.iter().any(|c| c.bit(i)) && palette.iter().any(|c| !c.bit(i)))
}

/// Base indices of full cubes (all coordinates below `m`) whose colours
/// change sign on every axis, in lexicographic order.
pub fn sign_change_cubes(phi: &Colouring) -> Vec<Index> {
    let grid = phi.grid();
    let m = grid.bound();
    let dim = grid.dim();
    let hits: Vec<Option<Index>> = (0..grid.len())
        .into_par_iter()
        .map(|rank| {
            let sigma = grid.unrank(rank);
            if sigma.coords().contains(&m) {
                return None;
            }
            changes_sign_everywhere(&phi.cube_palette_at(rank), dim).then_some(sigma)
        })
        .collect();
    hits.into_iter().flatten().collect()
}

fn cube_centre(sigma: &Index) -> Vec<Q> {
    let m = sigma.bound() as i64;
    sigma.coords().iter().map(|&c| q(2 * c as i64 + 1, 2 * m)).collect()
}

fn residuals(f: &dyn GridMap, x: &[Q]) -> Vec<Q> {
    f.eval(x).iter().zip(x).map(|(y, v)| (y - v).abs()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrouwerResult {
    pub point: Vec<Q>,
    /// `max_i |f(x)_i − x_i|`, evaluated afresh at `point`.
    pub residual: Q,
    pub cube: Index,
    /// Scale actually used.
    pub m: u32,
    pub escalations: u32,
    /// `(1 + Λ)/m` when the map advertises a Lipschitz constant `Λ`.
    pub lipschitz_bound: Option<Q>,
}

/// Centre of the first cube (lexicographically) with a sign change on every
/// axis. When none exists at scale `m`, the scale doubles up to `max_m`.
pub fn brouwer_approx(f: &dyn GridMap, m: u32, max_m: u32) -> Result<BrouwerResult, FixedPointError> {
    let mut scale = m.max(1);
    let mut escalations = 0;
    loop {
        let phi = sign_labeling(f, scale)?;
        if let Some(cube) = sign_change_cubes(&phi).into_iter().next() {
            let point = cube_centre(&cube);
            let residual = residuals(f, &point).into_iter().max().unwrap_or_else(Q::zero);
            return Ok(BrouwerResult {
                point,
                residual,
                cube,
                m: scale,
                escalations,
                lipschitz_bound: f.lipschitz().map(|l| (Q::one() + l) / Q::from_integer(scale as i64)),
            });
        }
        if scale.saturating_mul(2) > max_m {
            return Err(FixedPointError::NotFound(scale));
        }
        scale *= 2;
        escalations += 1;
    }
}

/// Residuals across doublings improve: at most one step goes up, and the
/// last one is strictly below all earlier ones unless every residual is 0.
pub fn improvement_trend(residuals: &[Q]) -> bool {
    if residuals.iter().all(Q::is_zero) {
        return true;
    }
    let rises = residuals.windows(2).filter(|w| w[1] > w[0]).count();
    let Some((last, earlier)) = residuals.split_last() else {
        return true;
    };
    rises <= 1 && earlier.iter().all(|r| last < r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateReport {
    pub point: Vec<Q>,
    /// Coordinates with `|f(x)_i − x_i| < ε`.
    pub axes: CoordSet,
    pub residuals: Vec<Q>,
    pub cubes_examined: usize,
}

/// Over the centres of all sign-change cubes at scale `m`, the point where
/// the most coordinates are within `ε` of being fixed (first such point in
/// lexicographic cube order).
pub fn coordinate_fixed_experiment(f: &dyn GridMap, eps: Q, m: u32) -> Result<CoordinateReport, FixedPointError> {
    let phi = sign_labeling(f, m)?;
    let cubes = sign_change_cubes(&phi);
    let mut best: Option<CoordinateReport> = None;
    for cube in &cubes {
        let point = cube_centre(cube);
        let res = residuals(f, &point);
        let axes = CoordSet::from_axes(f.dim(), (0..f.dim()).filter(|&i| res[i] < eps))?;
        if best.as_ref().is_none_or(|b| axes.len() > b.axes.len()) {
            best = Some(CoordinateReport {
                point,
                axes,
                residuals: res,
                cubes_examined: 0,
            });
        }
    }
    let mut report = best.ok_or(FixedPointError::NotFound(m))?;
    report.cubes_examined = cubes.len();
    Ok(report)
}

/// A map with its known fixed points (empty when every point is fixed).
pub type KnownMap = (Box<dyn GridMap>, Vec<Vec<Q>>);

/// The built-in maps with known fixed points used for convergence checks.
pub fn test_suite() -> Vec<KnownMap> {
    vec![
        (Box::new(Identity { dim: 2 }), Vec::new()),
        (Box::new(Constant { value: vec![q(1, 3), q(2, 3)] }), vec![vec![q(1, 3), q(2, 3)]]),
        (Box::new(Square { dim: 1 }), vec![vec![q(0, 1)], vec![q(1, 1)]]),
        (Box::new(Rotate), vec![vec![q(1, 2), q(1, 2)]]),
        (
            Box::new(Polynomial {
                coeffs: vec![vec![q(1, 4), q(1, 2)], vec![q(0, 1), q(1, 2), q(1, 2)]],
            }),
            vec![
                vec![q(1, 2), q(0, 1)],
                vec![q(1, 2), q(1, 1)],
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelings::check_cubical_sperner;

    fn sup_dist(a: &[Q], b: &[Q]) -> Q {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap()
    }

    #[test]
    fn identity_labels() {
        let phi = sign_labeling(&Identity { dim: 2 }, 4).unwrap();
        assert!(check_cubical_sperner(&phi).is_valid());
        let g = phi.grid();
        let interior = Index::new(4, vec![2, 1]).unwrap();
        assert_eq!(phi.colour(&interior).unwrap(), ColourId::from_bits(&[true, true]));
        assert_eq!(
            phi.colour(&Index::new(4, vec![4, 2]).unwrap()).unwrap(),
            ColourId::from_bits(&[false, true])
        );
        assert_eq!(g.len(), 25);
    }

    #[test]
    fn constant_labels_flip_at_value() {
        let f = Constant {
            value: vec![q(1, 2)],
        };
        let phi = sign_labeling(&f, 4).unwrap();
        let bits: Vec<bool> = phi.colours().iter().map(|c| c.bit(0)).collect();
        assert_eq!(bits, vec![true, true, true, false, false]);
    }

    #[test]
    fn every_labelling_is_sperner() {
        for (f, _) in test_suite() {
            for m in [1, 2, 5, 8] {
                assert!(check_cubical_sperner(&sign_labeling(f.as_ref(), m).unwrap()).is_valid());
            }
        }
    }

    #[test]
    fn identity_residual_zero() {
        let r = brouwer_approx(&Identity { dim: 3 }, 4, 64).unwrap();
        assert!(r.residual.is_zero());
    }

    #[test]
    fn square_approximant_near_ends() {
        for m in [4u32, 8, 16] {
            let r = brouwer_approx(&Square { dim: 1 }, m, m).unwrap();
            assert!(r.residual <= q(3, m as i64));
            let near = [q(0, 1), q(1, 1)]
                .iter()
                .any(|p| (r.point[0] - p).abs() <= q(1, m as i64));
            assert!(near, "{:?}", r.point);
        }
    }

    #[test]
    fn rotation_converges_to_centre() {
        let mut res = Vec::new();
        for m in [8u32, 16, 32, 64] {
            let r = brouwer_approx(&Rotate, m, 1024).unwrap();
            assert!(sup_dist(&r.point, &[q(1, 2), q(1, 2)]) <= q(2, r.m as i64));
            res.push(r.residual);
        }
        assert!(improvement_trend(&res), "{res:?}");
    }

    #[test]
    fn trend_rule() {
        assert!(improvement_trend(&[q(4, 1), q(2, 1), q(3, 1), q(1, 1)]));
        assert!(!improvement_trend(&[q(4, 1), q(2, 1), q(2, 1)]));
        assert!(!improvement_trend(&[q(1, 1), q(2, 1), q(1, 2), q(1, 1), q(1, 4)]));
        assert!(improvement_trend(&[Q::zero(), Q::zero()]));
    }

    #[test]
    fn coordinate_experiment_identity_and_shift() {
        let r = coordinate_fixed_experiment(&Identity { dim: 3 }, q(1, 100), 4).unwrap();
        assert!(r.axes.is_full());
        let m = 8;
        let shift = Shift {
            dim: 3,
            axis: 1,
            delta: q(1, 4),
        };
        let r = coordinate_fixed_experiment(&shift, q(1, 2 * m as i64), m).unwrap();
        assert_eq!(r.axes.len(), 2);
        assert!(!r.axes.contains(1));
    }

    #[test]
    fn coordinate_sets_grow_with_eps() {
        let f = Rotate;
        let phi_eps = [q(1, 64), q(1, 16), q(1, 4), q(1, 1)];
        let base = coordinate_fixed_experiment(&f, phi_eps[0], 16).unwrap();
        let mut last = 0;
        for e in phi_eps {
            let r = residuals(&f, &base.point);
            let count = r.iter().filter(|v| **v < e).count();
            assert!(count >= last);
            last = count;
        }
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin_map("rotate", 3, None).is_err());
        assert!(builtin_map("nope", 2, None).is_err());
        let p = builtin_map("poly", 2, Some("1/4,1/2;0,1/2,1/2")).unwrap();
        assert_eq!(p.eval(&[q(1, 2), q(1, 1)]), vec![q(1, 2), q(1, 1)]);
        let c = builtin_map("const", 2, Some("1/3,2/3")).unwrap();
        assert_eq!(c.eval(&[q(0, 1), q(0, 1)]), vec![q(1, 3), q(2, 3)]);
        assert_eq!(parse_rational("-3/6").unwrap(), q(-1, 2));
        assert!(parse_rational("1/0").is_err());
    }
}
