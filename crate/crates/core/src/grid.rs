//! Uniform node-centred grids over one-freedom phase space (or chord space).
//!
//! Values are stored row-major with the `p` (or `ξ_p`) axis slowest:
//! `index = i_p * n_q + i_q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` equally spaced nodes from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("axis needs at least 2 nodes, got {n}")));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::Invalid(format!("axis extents [{min}, {max}] are not increasing")));
        }
        Ok(Self { min, max, n })
    }

    /// Odd node count with a node on the origin: `(k − (n−1)/2)·spacing`.
    pub fn centred(n: usize, spacing: f64) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::Invalid(format!("centred axis needs an odd node count, got {n}")));
        }
        let half = (n - 1) as f64 / 2.0 * spacing;
        Self::new(-half, half, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    /// Cell index and fractional position inside it.
    pub fn locate(&self, v: f64) -> Option<(usize, f64)> {
        if !self.contains(v) {
            return None;
        }
        let s = (v - self.min) / self.spacing();
        let i = (s.floor() as usize).min(self.n - 2);
        Some((i, s - i as f64))
    }

    pub fn nearest(&self, v: f64) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        Some((((v - self.min) / self.spacing()).round() as usize).min(self.n - 1))
    }

    /// Index of the node sitting on zero, if any.
    pub fn origin(&self) -> Option<usize> {
        let i = self.nearest(0.0)?;
        (self.node(i).abs() < 1e-12 * self.spacing()).then_some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2 {
    pub p: Axis,
    pub q: Axis,
}

impl Grid2 {
    pub fn new(p: Axis, q: Axis) -> Self {
        Self { p, q }
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        let a = Axis::new(-half_width, half_width, n)?;
        Ok(Self { p: a, q: a })
    }

    pub fn len(&self) -> usize {
        self.p.n * self.q.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.p.n, self.q.n]
    }

    pub fn index(&self, ip: usize, iq: usize) -> usize {
        ip * self.q.n + iq
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.q.n, k % self.q.n)
    }

    /// Coordinates `(p, q)` of node `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        let (ip, iq) = self.split(k);
        [self.p.node(ip), self.q.node(iq)]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.p.spacing() * self.q.spacing()
    }

    /// Node sitting on the origin, if any.
    pub fn origin(&self) -> Option<usize> {
        Some(self.index(self.p.origin()?, self.q.origin()?))
    }

    pub fn nearest(&self, v: [f64; 2]) -> Option<usize> {
        Some(self.index(self.p.nearest(v[0])?, self.q.nearest(v[1])?))
    }

    /// Nodes at least `margin` nodes away from every edge.
    pub fn is_interior(&self, k: usize, margin: usize) -> bool {
        let (ip, iq) = self.split(k);
        ip >= margin && iq >= margin && ip + margin < self.p.n && iq + margin < self.q.n
    }

    pub fn same_as(&self, other: &Grid2) -> Result<()> {
        let close = |a: &Axis, b: &Axis| {
            a.n == b.n
                && (a.min - b.min).abs() <= 1e-12 * a.spacing()
                && (a.max - b.max).abs() <= 1e-12 * a.spacing()
        };
        if close(&self.p, &other.p) && close(&self.q, &other.q) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_axis_has_origin_node() {
        let a = Axis::centred(257, 16.0 / 256.0).unwrap();
        assert_eq!(a.origin(), Some(128));
        assert!((a.min + 8.0).abs() < 1e-14 && (a.max - 8.0).abs() < 1e-14);
        assert!(Axis::centred(256, 0.1).is_err());
    }

    #[test]
    fn locate_and_index_round_trip() {
        let g = Grid2::square(2.0, 5).unwrap();
        let k = g.index(3, 1);
        assert_eq!(g.split(k), (3, 1));
        assert_eq!(g.point(k), [1.0, -1.0]);
        let (i, f) = g.p.locate(1.5).unwrap();
        assert_eq!(i, 3);
        assert!((f - 0.5).abs() < 1e-14);
        assert_eq!(g.p.locate(2.0).unwrap().0, 3);
        assert!(g.p.locate(2.1).is_none());
        assert_eq!(g.origin(), Some(g.index(2, 2)));
    }
}
