//! Axis-aligned boxes with exact rational endpoints and per-endpoint
//! openness, and finite unions of them.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::CoverError;

/// Exact rational coordinate.
pub type Q = Ratio<i64>;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(num, den)
}

/// An interval of the real line with independently open or closed ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Q,
    pub lo_open: bool,
    pub hi: Q,
    pub hi_open: bool,
}

impl Interval {
    pub fn new(lo: Q, lo_open: bool, hi: Q, hi_open: bool) -> Self {
        Interval {
            lo,
            lo_open,
            hi,
            hi_open,
        }
    }

    pub fn closed(lo: Q, hi: Q) -> Self {
        Interval::new(lo, false, hi, false)
    }

    pub fn open(lo: Q, hi: Q) -> Self {
        Interval::new(lo, true, hi, true)
    }

    pub fn unit() -> Self {
        Interval::closed(Q::zero(), Q::one())
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    pub fn contains(&self, x: &Q) -> bool {
        let above = if self.lo_open { *x > self.lo } else { *x >= self.lo };
        let below = if self.hi_open { *x < self.hi } else { *x <= self.hi };
        above && below
    }

    /// Whether the closed interval `[a, b]` lies inside `self`.
    pub fn contains_closed(&self, a: &Q, b: &Q) -> bool {
        a > b || (self.contains(a) && self.contains(b))
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_open) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo, self.lo_open),
            std::cmp::Ordering::Less => (other.lo, other.lo_open),
            std::cmp::Ordering::Equal => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_open),
            std::cmp::Ordering::Greater => (other.hi, other.hi_open),
            std::cmp::Ordering::Equal => (self.hi, self.hi_open || other.hi_open),
        };
        Interval::new(lo, lo_open, hi, hi_open)
    }

    pub fn length(&self) -> Q {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { "(" } else { "[" },
            self.lo,
            self.hi,
            if self.hi_open { ")" } else { "]" }
        )
    }
}

/// A product of intervals, one per axis, all inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalBox {
    axes: Vec<Interval>,
}

impl RationalBox {
    pub fn new(axes: Vec<Interval>) -> Result<Self, CoverError> {
        if axes.is_empty() {
            return Err(CoverError::ZeroDimension);
        }
        for (axis, iv) in axes.iter().enumerate() {
            if iv.lo < Q::zero() || iv.hi > Q::one() || iv.lo > iv.hi {
                return Err(CoverError::BadInterval {
                    axis,
                    interval: iv.to_string(),
                });
            }
        }
        Ok(RationalBox { axes })
    }

    pub fn unit(dim: usize) -> Self {
        RationalBox {
            axes: vec![Interval::unit(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn is_empty(&self) -> bool {
        self.axes.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, point: &[Q]) -> bool {
        self.axes.iter().zip(point).all(|(iv, x)| iv.contains(x))
    }

    /// Whether the closed box `∏ [lo_i, hi_i]` lies inside `self`.
    pub fn contains_closed_box(&self, lo: &[Q], hi: &[Q]) -> bool {
        self.axes
            .iter()
            .zip(lo.iter().zip(hi))
            .all(|(iv, (a, b))| iv.contains_closed(a, b))
    }

    pub fn intersect(&self, other: &RationalBox) -> RationalBox {
        RationalBox {
            axes: self
                .axes
                .iter()
                .zip(&other.axes)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        }
    }
}

/// Sup-metric diameter of a finite union of boxes: the largest span of the
/// union's projection onto one axis. Openness does not shrink a supremum.
pub fn box_diameter(region: &[RationalBox]) -> Result<Q, CoverError> {
    let live: Vec<&RationalBox> = region.iter().filter(|b| !b.is_empty()).collect();
    let first = live.first().ok_or(CoverError::EmptyRegion)?;
    let dim = first.dim();
    let mut best = Q::zero();
    for axis in 0..dim {
        let lo = live.iter().map(|b| b.axes[axis].lo).min().expect("nonempty");
        let hi = live.iter().map(|b| b.axes[axis].hi).max().expect("nonempty");
        best = best.max(hi - lo);
    }
    Ok(best)
}

/// Whether two finite unions of boxes share a point.
pub fn regions_meet(a: &[RationalBox], b: &[RationalBox]) -> bool {
    a.iter()
        .any(|x| b.iter().any(|y| !x.intersect(y).is_empty()))
}

/// Sorted distinct candidate coordinates on one axis: every endpoint (plus
/// `0` and `1`) and the midpoint of each pair of consecutive endpoints.
/// Membership in any of the boxes is constant between consecutive
/// candidates, so these meet every cell of the arrangement.
pub fn axis_candidates<'a>(boxes: impl IntoIterator<Item = &'a RationalBox>, axis: usize) -> Vec<Q> {
    let mut ends = vec![Q::zero(), Q::one()];
    for b in boxes {
        if b.is_empty() {
            continue;
        }
        ends.push(b.axes[axis].lo);
        ends.push(b.axes[axis].hi);
    }
    ends.sort();
    ends.dedup();
    let mut out = Vec::with_capacity(2 * ends.len());
    for w in ends.windows(2) {
        out.push(w[0]);
        out.push((w[0] + w[1]) / Q::from_integer(2));
    }
    out.push(*ends.last().expect("0 and 1 present"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_membership_respects_openness() {
        let iv = Interval::new(q(1, 3), true, q(2, 3), false);
        assert!(!iv.contains(&q(1, 3)));
        assert!(iv.contains(&q(2, 3)));
        assert!(iv.contains(&q(1, 2)));
        assert!(Interval::new(q(1, 2), true, q(1, 2), false).is_empty());
        assert!(!Interval::closed(q(1, 2), q(1, 2)).is_empty());
    }

    #[test]
    fn intersection_keeps_strictest_end() {
        let a = Interval::new(q(0, 1), false, q(1, 2), true);
        let b = Interval::new(q(1, 4), true, q(1, 2), false);
        let c = a.intersect(&b);
        assert_eq!(c, Interval::new(q(1, 4), true, q(1, 2), true));
        let touching = Interval::closed(q(0, 1), q(1, 2)).intersect(&Interval::new(q(1, 2), true, q(1, 1), false));
        assert!(touching.is_empty());
    }

    #[test]
    fn diameters() {
        let third = RationalBox::new(vec![Interval::closed(q(0, 1), q(1, 3)); 3]).unwrap();
        assert_eq!(box_diameter(&[third]).unwrap(), q(1, 3));
        let split = vec![
            RationalBox::new(vec![Interval::closed(q(0, 1), q(1, 4))]).unwrap(),
            RationalBox::new(vec![Interval::closed(q(3, 4), q(1, 1))]).unwrap(),
        ];
        assert_eq!(box_diameter(&split).unwrap(), q(1, 1));
        let empty = RationalBox::new(vec![Interval::open(q(1, 2), q(1, 2))]).unwrap();
        assert!(matches!(box_diameter(&[empty]), Err(CoverError::EmptyRegion)));
    }

    #[test]
    fn rejects_out_of_range_endpoints() {
        assert!(RationalBox::new(vec![Interval::closed(q(-1, 3), q(1, 3))]).is_err());
        assert!(RationalBox::new(vec![Interval::closed(q(2, 3), q(1, 3))]).is_err());
    }

    #[test]
    fn candidates_include_midpoints() {
        let b = RationalBox::new(vec![Interval::closed(q(1, 4), q(1, 2))]).unwrap();
        assert_eq!(
            axis_candidates([&b], 0),
            vec![q(0, 1), q(1, 8), q(1, 4), q(3, 8), q(1, 2), q(3, 4), q(1, 1)]
        );
    }
}
