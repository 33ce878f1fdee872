//! Mutable cell list used to test hard-sphere moves in O(1) per proposal.

use std::collections::HashMap;

use crate::domain::{dist2, neighbor_offsets, CellIndex, Dim, Point};

/// Buckets point indices by cells of side `side` (at least the exclusion
/// distance, so conflicts only occur between neighboring cells).
#[derive(Debug, Clone)]
pub struct CellList {
    d: usize,
    side: f64,
    cells: HashMap<CellIndex, Vec<usize>>,
    offsets: Vec<CellIndex>,
}

impl CellList {
    pub fn new(dim: Dim, side: f64) -> Self {
        CellList {
            d: dim.get(),
            side,
            cells: HashMap::new(),
            offsets: neighbor_offsets(dim.get()),
        }
    }

    pub fn build(dim: Dim, side: f64, points: &[Point]) -> Self {
        let mut list = CellList::new(dim, side);
        for (i, p) in points.iter().enumerate() {
            list.insert(i, p);
        }
        list
    }

    #[inline]
    fn key(&self, p: &Point) -> CellIndex {
        let mut c = [0i64; 3];
        for a in 0..self.d {
            c[a] = (p[a] / self.side).floor() as i64;
        }
        c
    }

    pub fn insert(&mut self, i: usize, p: &Point) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(i);
    }

    pub fn remove(&mut self, i: usize, p: &Point) {
        let k = self.key(p);
        if let Some(v) = self.cells.get_mut(&k) {
            if let Some(pos) = v.iter().position(|&j| j == i) {
                v.swap_remove(pos);
            }
            if v.is_empty() {
                self.cells.remove(&k);
            }
        }
    }

    pub fn relocate(&mut self, i: usize, from: &Point, to: &Point) {
        if self.key(from) != self.key(to) {
            self.remove(i, from);
            self.insert(i, to);
        }
    }

    /// Whether some point other than `skip` lies strictly closer than
    /// `min_dist` (with the hard-sphere relative slack) to `p`.
    pub fn conflicts(&self, points: &[Point], p: &Point, skip: Option<usize>, min_dist: f64) -> bool {
        let t = min_dist * (1.0 - crate::domain::HARD_SPHERE_SLACK);
        let t2 = t * t;
        let c = self.key(p);
        for off in &self.offsets {
            let k = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
            if let Some(v) = self.cells.get(&k) {
                for &j in v {
                    if Some(j) != skip && dist2(&points[j], p) < t2 {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_conflicts_after_moves() {
        let mut pts = vec![[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        let mut cl = CellList::build(Dim::TWO, 2.0, &pts);
        assert!(!cl.conflicts(&pts, &[1.0, 1.8, 0.0], None, 2.0));
        assert!(cl.conflicts(&pts, &[1.5, 0.0, 0.0], None, 2.0));
        let to = [5.5, 0.0, 0.0];
        cl.relocate(1, &pts[1], &to);
        pts[1] = to;
        assert!(!cl.conflicts(&pts, &[2.0, 0.0, 0.0], None, 2.0));
        assert!(cl.conflicts(&pts, &[4.0, 0.0, 0.0], Some(0), 2.0));
    }
}
