//! Brute-force reference implementations, written without the library's
//! algorithms so they can serve as oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_rational::Ratio;
use sperner::covers::BoxCover;
use sperner::labelings::{Colouring, SimplicialColouring};

pub type Q = Ratio<i64>;

/// All points of `{0..=n}^dim` in lexicographic order.
pub fn points(dim: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=n).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

fn rank(p: &[u32], n: u32) -> usize {
    p.iter().fold(0, |acc, &c| acc * (n as usize + 1) + c as usize)
}

/// Colours as plain integers, read through the public accessor.
pub fn raw_colours(phi: &Colouring) -> Vec<u64> {
    phi.colours().iter().map(|c| c.0).collect()
}

/// Cubical condition straight from the definition: two points whose
/// coordinates hit `0` and `n` on a common axis must differ in colour.
pub fn sperner_valid(dim: usize, n: u32, colours: &[u64]) -> bool {
    let pts = points(dim, n);
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate().skip(i + 1) {
            let opposite = (0..dim).any(|k| (a[k] == 0 && b[k] == n) || (a[k] == n && b[k] == 0));
            if opposite && colours[i] == colours[j] {
                return false;
            }
        }
    }
    true
}

/// Largest number of colours on one positive cube, over all anchors.
pub fn max_cube_colours(dim: usize, n: u32, colours: &[u64]) -> usize {
    points(dim, n)
        .iter()
        .map(|sigma| {
            (0..1usize << dim)
                .map(|bits| {
                    let v: Vec<u32> = (0..dim).map(|k| (sigma[k] + ((bits >> k) & 1) as u32).min(n)).collect();
                    colours[rank(&v, n)]
                })
                .collect::<BTreeSet<_>>()
                .len()
        })
        .max()
        .unwrap_or(0)
}

/// Colour set of the positive cube anchored at `sigma`.
pub fn cube_colours(n: u32, colours: &[u64], sigma: &[u32]) -> BTreeSet<u64> {
    let dim = sigma.len();
    (0..1usize << dim)
        .map(|bits| {
            let v: Vec<u32> = (0..dim).map(|k| (sigma[k] + ((bits >> k) & 1) as u32).min(n)).collect();
            colours[rank(&v, n)]
        })
        .collect()
}

/// Membership count at every point of a fine rational grid built from all
/// box endpoints and their midpoints; returns the maximum.
pub fn brute_max_multiplicity(cover: &BoxCover) -> usize {
    let dim = cover.dim();
    let axes: Vec<Vec<Q>> = (0..dim)
        .map(|k| {
            let mut ends: Vec<Q> = vec![Q::from_integer(0), Q::from_integer(1)];
            for m in cover.members() {
                for b in &m.region {
                    ends.push(b.axes()[k].lo);
                    ends.push(b.axes()[k].hi);
                }
            }
            ends.retain(|e| *e >= Q::from_integer(0) && *e <= Q::from_integer(1));
            ends.sort();
            ends.dedup();
            let mut all = ends.clone();
            for w in ends.windows(2) {
                all.push((w[0] + w[1]) / 2);
            }
            all.sort();
            all
        })
        .collect();
    let mut best = 0;
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<Q> = (0..dim).map(|k| axes[k][idx[k]]).collect();
        let count = cover
            .members()
            .iter()
            .filter(|m| {
                m.region.iter().any(|b| {
                    b.axes().iter().zip(&p).all(|(iv, x)| {
                        let above = if iv.lo_open { *x > iv.lo } else { *x >= iv.lo };
                        let below = if iv.hi_open { *x < iv.hi } else { *x <= iv.hi };
                        above && below
                    })
                })
            })
            .count();
        best = best.max(count);
        let mut k = dim;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Number of members containing `p`.
pub fn multiplicity_at(cover: &BoxCover, p: &[Q]) -> usize {
    cover.members().iter().filter(|m| m.contains(p)).count()
}

/// Freudenthal triangulation of `m·Δ^d`, cells as sorted lists of
/// barycentric vectors. A point `x` with `m ≥ x_1 ≥ … ≥ x_d ≥ 0` has
/// barycentric form `(m − x_1, x_1 − x_2, …, x_d)`.
pub fn freudenthal_cells(d: usize, m: u32) -> Vec<Vec<Vec<u32>>> {
    let to_bary = |x: &[i64]| -> Vec<u32> {
        let mut b = Vec::with_capacity(d + 1);
        b.push((m as i64 - x[0]) as u32);
        for i in 0..d - 1 {
            b.push((x[i] - x[i + 1]) as u32);
        }
        b.push(x[d - 1] as u32);
        b
    };
    let inside = |x: &[i64]| {
        x[0] <= m as i64 && x[d - 1] >= 0 && x.windows(2).all(|w| w[0] >= w[1])
    };
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                (0..d).filter(|i| !p.contains(i)).map(|i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                }).collect::<Vec<_>>()
            })
            .collect();
    }
    let mut cells = Vec::new();
    for base in points(d, m) {
        let base: Vec<i64> = base.iter().map(|&c| c as i64).collect();
        for perm in &perms {
            let mut v = base.clone();
            let mut verts = vec![v.clone()];
            for &axis in perm {
                v[axis] += 1;
                verts.push(v.clone());
            }
            if verts.iter().all(|x| inside(x)) {
                let mut cell: Vec<Vec<u32>> = verts.iter().map(|x| to_bary(x)).collect();
                cell.sort();
                cells.push(cell);
            }
        }
    }
    cells.sort();
    cells
}

/// Fully-labeled cells of the oracle triangulation.
pub fn count_fully_labeled(phi: &SimplicialColouring) -> usize {
    let c = phi.complex();
    freudenthal_cells(c.dim(), c.scale())
        .iter()
        .filter(|cell| {
            cell.iter()
                .map(|b| phi.labels()[c.vertex_index(b).expect("oracle vertex exists")])
                .collect::<BTreeSet<_>>()
                .len()
                == c.dim() + 1
        })
        .count()
}

/// Simplicial Sperner condition from the definition: label `l` at a vertex
/// requires the corner labelled `l` to lie in the vertex's carrier face.
pub fn simplicial_valid(phi: &SimplicialColouring) -> bool {
    let c = phi.complex();
    let d = c.dim();
    let corner_label: Vec<u32> = (0..=d)
        .map(|j| {
            let mut e = vec![0; d + 1];
            e[j] = c.scale();
            phi.labels()[c.vertex_index(&e).expect("corner exists")]
        })
        .collect();
    if corner_label.iter().collect::<BTreeSet<_>>().len() != d + 1 {
        return false;
    }
    c.vertices().iter().zip(phi.labels()).all(|(b, &l)| {
        corner_label
            .iter()
            .position(|&x| x == l)
            .is_some_and(|j| b[j] > 0)
    })
}
