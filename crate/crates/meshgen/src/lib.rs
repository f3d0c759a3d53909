//! Generators for polygon meshes in the `fpmmesh 1` text format.
//!
//! The solver ingests meshes produced elsewhere; this crate makes the
//! validation geometries reproducible: rectangles (structured or jittered
//! and split into triangles), a quarter plate with a circular hole, the
//! simplified double-edge U-notched tension specimen, and a U-notched disc.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod shapes;

pub type Point = [f64; 2];

/// Nodes, polygon cells and named sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Vertex loops, counter-clockwise.
    pub cells: Vec<Vec<usize>>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// (cell, local edge) pairs.
    pub edge_sets: BTreeMap<String, Vec<(usize, usize)>>,
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

impl Mesh {
    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn area(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| signed_area(&self.cell_points(c)))
            .sum()
    }

    /// Makes every cell counter-clockwise.
    pub fn orient(&mut self) {
        for c in 0..self.cells.len() {
            if signed_area(&self.cell_points(c)) < 0.0 {
                self.cells[c].reverse();
            }
        }
    }

    /// Number of cells sharing each undirected edge.
    pub(crate) fn edge_use(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for cell in &self.cells {
            for k in 0..cell.len() {
                let (a, b) = (cell[k], cell[(k + 1) % cell.len()]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn node_set_where(&mut self, name: &str, pred: impl Fn(Point) -> bool) {
        let ids: Vec<usize> = (0..self.nodes.len()).filter(|&i| pred(self.nodes[i])).collect();
        self.node_sets.insert(name.to_string(), ids);
    }

    /// Edge set of the edges whose endpoints satisfy `pred`; each edge is
    /// listed once. `interior` selects shared or boundary edges.
    pub fn edge_set_where(&mut self, name: &str, interior: bool, pred: impl Fn(Point, Point) -> bool) {
        let uses = self.edge_use();
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for k in 0..cell.len() {
                let (a, b) = (cell[k], cell[(k + 1) % cell.len()]);
                let key = (a.min(b), a.max(b));
                if (uses[&key] == 2) != interior || !seen.insert(key) {
                    continue;
                }
                if pred(self.nodes[a], self.nodes[b]) {
                    out.push((c, k));
                }
            }
        }
        self.edge_sets.insert(name.to_string(), out);
    }

    /// Appends the mirror image about `y = 0`, merging nodes on the axis.
    pub fn mirror_y(&mut self, tol: f64) {
        let n = self.nodes.len();
        let mut map = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.nodes[i];
            if p[1].abs() <= tol {
                map.push(i);
            } else {
                map.push(self.nodes.len());
                self.nodes.push([p[0], -p[1]]);
            }
        }
        let m = self.cells.len();
        for c in 0..m {
            let mut cell: Vec<usize> = self.cells[c].iter().map(|&i| map[i]).collect();
            cell.reverse();
            self.cells.push(cell);
        }
        self.node_sets.clear();
        self.edge_sets.clear();
    }

    /// Moves every node not on the boundary by up to `fraction` of its
    /// shortest incident edge, using a seeded generator.
    pub fn jitter(&mut self, fraction: f64, seed: u64) {
        let uses = self.edge_use();
        let mut boundary = vec![false; self.nodes.len()];
        let mut shortest = vec![f64::INFINITY; self.nodes.len()];
        for (&(a, b), &u) in &uses {
            if u == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
            let (p, q) = (self.nodes[a], self.nodes[b]);
            let l = (p[0] - q[0]).hypot(p[1] - q[1]);
            shortest[a] = shortest[a].min(l);
            shortest[b] = shortest[b].min(l);
        }
        let mut cells_of = vec![Vec::new(); self.nodes.len()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &n in cell {
                cells_of[n].push(c);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..self.nodes.len() {
            let (dx, dy): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if boundary[i] {
                continue;
            }
            let old = self.nodes[i];
            let before: Vec<f64> = cells_of[i].iter().map(|&c| signed_area(&self.cell_points(c))).collect();
            self.nodes[i] = [old[0] + fraction * shortest[i] * dx, old[1] + fraction * shortest[i] * dy];
            // Keep the move only if no incident cell changes orientation.
            let flipped = cells_of[i]
                .iter()
                .zip(&before)
                .any(|(&c, a0)| signed_area(&self.cell_points(c)) * a0.signum() <= 0.0);
            if flipped {
                self.nodes[i] = old;
            }
        }
    }

    /// Splits quadrilaterals into two triangles along a random diagonal,
    /// keeping each quad whole with probability `keep`. Quads with two or
    /// more boundary edges stay whole so that no triangle ends up with a
    /// single neighbour. Sets are cleared.
    pub fn split_quads(&mut self, keep: f64, seed: u64) {
        let uses = self.edge_use();
        let boundary_edges = |cell: &[usize]| {
            (0..cell.len())
                .filter(|&k| {
                    let (a, b) = (cell[k], cell[(k + 1) % cell.len()]);
                    uses[&(a.min(b), a.max(b))] == 1
                })
                .count()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells = Vec::with_capacity(2 * self.cells.len());
        for cell in &self.cells {
            let (k, diag): (f64, bool) = (rng.random(), rng.random());
            let splits = [([0, 1, 2], [0, 2, 3]), ([0, 1, 3], [1, 2, 3])];
            let order = if diag { [0, 1] } else { [1, 0] };
            // Only diagonals that leave both triangles positively oriented.
            let chosen = order
                .iter()
                .map(|&o| splits[o])
                .find(|&(a, b)| self.split_ok(cell, a, b));
            match chosen {
                Some((a, b)) if k >= keep && boundary_edges(cell) < 2 => {
                    cells.push(a.iter().map(|&v| cell[v]).collect());
                    cells.push(b.iter().map(|&v| cell[v]).collect());
                }
                _ => cells.push(cell.clone()),
            }
        }
        self.cells = cells;
        self.node_sets.clear();
        self.edge_sets.clear();
    }

    fn split_ok(&self, cell: &[usize], a: [usize; 3], b: [usize; 3]) -> bool {
        if cell.len() != 4 {
            return false;
        }
        let area = |t: [usize; 3]| signed_area(&t.map(|k| self.nodes[cell[k]]));
        let whole = signed_area(&self.cell_points_of(cell));
        area(a) * whole > 0.0 && area(b) * whole > 0.0
    }

    fn cell_points_of(&self, cell: &[usize]) -> Vec<Point> {
        cell.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn to_fpmmesh(&self, comment: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fpmmesh 1");
        for line in comment.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "{} {}", self.nodes.len(), self.cells.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.17e} {:.17e}", p[0], p[1]);
        }
        for (c, cell) in self.cells.iter().enumerate() {
            let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{c} {} {}", cell.len(), ids.join(" "));
        }
        for (name, ids) in &self.node_sets {
            let _ = writeln!(s, "nodeset {name} {}", ids.len());
            for chunk in ids.chunks(16) {
                let v: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", v.join(" "));
            }
        }
        for (name, edges) in &self.edge_sets {
            let _ = writeln!(s, "edgeset {name} {}", edges.len());
            for chunk in edges.chunks(8) {
                let v: Vec<String> = chunk.iter().map(|(c, k)| format!("{c} {k}")).collect();
                let _ = writeln!(s, "{}", v.join(" "));
            }
        }
        s
    }
}

/// Segment lengths of a geometric progression of `n` segments that starts
/// at `first` and sums to `length`. Falls back to uniform spacing when
/// `first` is not smaller than the mean segment.
pub fn geometric_segments(n: usize, length: f64, first: f64) -> Vec<f64> {
    assert!(n > 0);
    let mean = length / n as f64;
    if first >= mean {
        return vec![mean; n];
    }
    let sum = |r: f64| (0..n).map(|i| first * r.powi(i as i32)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 2.0);
    while sum(hi) < length {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut seg: Vec<f64> = (0..n).map(|i| first * r.powi(i as i32)).collect();
    let s: f64 = seg.iter().sum();
    seg.iter_mut().for_each(|v| *v *= length / s);
    seg
}

/// Cumulative positions `0 ..= length` from segment lengths.
pub fn cumulative(seg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(seg.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for s in seg {
        acc += s;
        out.push(acc);
    }
    out
}
