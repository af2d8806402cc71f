//! Axis-aligned boxes and finite unions of them.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::{Error, Result};

/// A product of closed intervals. Degenerate dimensions (`lo == hi`) are
/// allowed and describe faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperbox {
    pub intervals: Vec<Interval>,
}

impl Hyperbox {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Hyperbox { intervals }
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        Hyperbox {
            intervals: bounds.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect(),
        }
    }

    pub fn point(x: &[f64]) -> Self {
        Hyperbox {
            intervals: x.iter().map(|&v| Interval::point(v)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.intervals[i].lo
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.intervals[i].hi
    }

    pub fn is_valid(&self) -> bool {
        self.intervals
            .iter()
            .all(|i| i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|i| i.lo + (i.hi - i.lo) * 0.5)
            .collect()
    }

    /// Widest dimension, ties broken by the lowest index.
    pub fn widest_dim(&self) -> usize {
        let mut best = 0;
        let mut width = f64::NEG_INFINITY;
        for (i, iv) in self.intervals.iter().enumerate() {
            if iv.width() > width {
                width = iv.width();
                best = i;
            }
        }
        best
    }

    pub fn max_width(&self) -> f64 {
        self.intervals.iter().fold(0.0, |a, i| a.max(i.width()))
    }

    /// Bisect the widest dimension. Returns `None` when the box cannot be
    /// split further in floating point.
    pub fn bisect(&self) -> Option<(Hyperbox, Hyperbox)> {
        let d = self.widest_dim();
        let iv = self.intervals[d];
        let mid = iv.lo + (iv.hi - iv.lo) * 0.5;
        if !(iv.lo < mid && mid < iv.hi) {
            return None;
        }
        let mut left = self.clone();
        let mut right = self.clone();
        left.intervals[d].hi = mid;
        right.intervals[d].lo = mid;
        Some((left, right))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.intervals.iter().zip(x).all(|(i, v)| i.contains(*v))
    }

    /// Point inside or within `tol` of the box in every coordinate.
    pub fn contains_point_tol(&self, x: &[f64], tol: f64) -> bool {
        self.intervals
            .iter()
            .zip(x)
            .all(|(i, v)| i.lo - tol <= *v && *v <= i.hi + tol)
    }

    pub fn contains_box(&self, other: &Hyperbox) -> bool {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .all(|(a, b)| a.lo <= b.lo && b.hi <= a.hi)
    }

    /// Closed intersection, if non-empty.
    pub fn intersect(&self, other: &Hyperbox) -> Option<Hyperbox> {
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.intervals.iter().zip(&other.intervals) {
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if lo > hi {
                return None;
            }
            out.push(Interval::new(lo, hi));
        }
        Some(Hyperbox { intervals: out })
    }

    /// Whether `other` removes a set of positive measure relative to `self`:
    /// in dimensions where `self` has width, the overlap must have width; in
    /// degenerate dimensions, `other` must contain the coordinate.
    fn overlaps_relatively(&self, other: &Hyperbox) -> bool {
        self.intervals.iter().zip(&other.intervals).all(|(a, b)| {
            if a.lo == a.hi {
                b.lo <= a.lo && a.lo <= b.hi
            } else {
                a.lo.max(b.lo) < a.hi.min(b.hi)
            }
        })
    }

    /// Closed box cover of `closure(self \ other)` with disjoint interiors.
    pub fn difference(&self, other: &Hyperbox) -> Vec<Hyperbox> {
        if !self.overlaps_relatively(other) {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for i in 0..self.dim() {
            let r = rest.intervals[i];
            let o = other.intervals[i];
            if r.lo < o.lo {
                let mut slab = rest.clone();
                slab.intervals[i].hi = o.lo;
                out.push(slab);
                rest.intervals[i].lo = o.lo;
            }
            if o.hi < r.hi {
                let mut slab = rest.clone();
                slab.intervals[i].lo = o.hi;
                out.push(slab);
                rest.intervals[i].hi = o.hi;
            }
        }
        out
    }

    /// Vertices (at most `2^dim`; degenerate dimensions contribute one value).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for iv in &self.intervals {
            let mut next = Vec::with_capacity(out.len() * 2);
            for p in &out {
                let mut a = p.clone();
                a.push(iv.lo);
                next.push(a);
                if iv.hi != iv.lo {
                    let mut b = p.clone();
                    b.push(iv.hi);
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }
}

/// A finite union of boxes in state space. Pieces may overlap.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub arity: usize,
    pub pieces: Vec<Hyperbox>,
}

impl RegionSpec {
    pub fn empty(arity: usize) -> Self {
        RegionSpec {
            arity,
            pieces: Vec::new(),
        }
    }

    pub fn from_box(b: Hyperbox) -> Self {
        RegionSpec {
            arity: b.dim(),
            pieces: vec![b],
        }
    }

    pub fn new(arity: usize, pieces: Vec<Hyperbox>) -> Result<Self> {
        for p in &pieces {
            if p.dim() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: p.dim(),
                });
            }
        }
        Ok(RegionSpec { arity, pieces })
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.pieces.iter().any(|b| b.contains_point(x))
    }

    pub fn contains_point_tol(&self, x: &[f64], tol: f64) -> bool {
        self.pieces.iter().any(|b| b.contains_point_tol(x, tol))
    }

    /// Smallest box containing every piece.
    pub fn bounding_box(&self) -> Option<Hyperbox> {
        let mut it = self.pieces.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| Hyperbox {
            intervals: acc
                .intervals
                .iter()
                .zip(&b.intervals)
                .map(|(a, c)| a.hull(c))
                .collect(),
        }))
    }

    /// Whether the box lies inside the union, decided by exact box algebra.
    pub fn covers_box(&self, b: &Hyperbox) -> bool {
        let single = RegionSpec::from_box(b.clone());
        region_difference(&single, self).is_empty()
    }

    /// Cover inclusion: every piece of `other` lies in this union.
    pub fn covers(&self, other: &RegionSpec) -> bool {
        region_difference(other, self).is_empty()
    }

    /// Whether the box meets the union (closed sets).
    pub fn intersects_box(&self, b: &Hyperbox) -> bool {
        self.pieces.iter().any(|p| p.intersect(b).is_some())
    }
}

/// Closed box cover of `closure(a \ b)`; pieces of the result have disjoint
/// relative interiors within each piece of `a`.
pub fn region_difference(a: &RegionSpec, b: &RegionSpec) -> RegionSpec {
    let mut out = Vec::new();
    for piece in &a.pieces {
        let mut parts = vec![piece.clone()];
        for sub in &b.pieces {
            parts = parts.iter().flat_map(|p| p.difference(sub)).collect();
            if parts.is_empty() {
                break;
            }
        }
        out.extend(parts);
    }
    RegionSpec {
        arity: a.arity,
        pieces: out,
    }
}

/// Facets of the single box `outer` with the facets it shares with pieces of
/// `inner` removed. The result is a closed superset of the boundary of
/// `outer` minus the boundary of `inner`.
pub fn boundary_faces(outer: &RegionSpec, inner: &RegionSpec) -> Result<RegionSpec> {
    if outer.pieces.len() != 1 {
        return Err(Error::NotSingleBox(outer.pieces.len()));
    }
    let o = &outer.pieces[0];
    let mut out = Vec::new();
    for i in 0..o.dim() {
        let sides: &[f64] = if o.lo(i) == o.hi(i) {
            &[o.intervals[i].lo]
        } else {
            &[o.intervals[i].lo, o.intervals[i].hi]
        };
        for &at in sides {
            let mut facet = o.clone();
            facet.intervals[i] = Interval::point(at);
            let shared: Vec<Hyperbox> = inner
                .pieces
                .iter()
                .filter(|p| p.lo(i) == at || p.hi(i) == at)
                .map(|p| {
                    let mut g = p.clone();
                    g.intervals[i] = Interval::point(at);
                    g
                })
                .collect();
            let rest = region_difference(
                &RegionSpec::from_box(facet),
                &RegionSpec {
                    arity: o.dim(),
                    pieces: shared,
                },
            );
            out.extend(rest.pieces);
        }
    }
    Ok(RegionSpec {
        arity: o.dim(),
        pieces: out,
    })
}
