//! Specimen geometries.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{cumulative, geometric_segments, Mesh, Point};

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Quads of a logically rectangular grid of `(ni + 1) x (nj + 1)` points
/// stored row by row (`j * (ni + 1) + i`).
fn grid_cells(ni: usize, nj: usize) -> Vec<Vec<usize>> {
    let id = |i: usize, j: usize| j * (ni + 1) + i;
    let mut cells = Vec::with_capacity(ni * nj);
    for j in 0..nj {
        for i in 0..ni {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    cells
}

/// Node sets `left`, `right`, `bottom`, `top` of an axis-aligned box.
pub fn box_sets(m: &mut Mesh, lo: Point, hi: Point) {
    let tol = 1e-9 * dist(lo, hi);
    m.node_set_where("left", |p| (p[0] - lo[0]).abs() <= tol);
    m.node_set_where("right", |p| (p[0] - hi[0]).abs() <= tol);
    m.node_set_where("bottom", |p| (p[1] - lo[1]).abs() <= tol);
    m.node_set_where("top", |p| (p[1] - hi[1]).abs() <= tol);
}

/// Structured `nx x ny` quadrilateral grid of a `width x height` box.
pub fn rectangle(origin: Point, width: f64, height: f64, nx: usize, ny: usize) -> Mesh {
    let mut m = Mesh::default();
    for j in 0..=ny {
        for i in 0..=nx {
            m.nodes.push([
                origin[0] + width * i as f64 / nx as f64,
                origin[1] + height * j as f64 / ny as f64,
            ]);
        }
    }
    m.cells = grid_cells(nx, ny);
    box_sets(&mut m, origin, [origin[0] + width, origin[1] + height]);
    m
}

/// Jittered grid whose quads are partly split into triangles.
pub fn unstructured_rectangle(
    origin: Point,
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    seed: u64,
) -> Mesh {
    let mut m = rectangle(origin, width, height, nx, ny);
    m.jitter(0.25, seed);
    m.split_quads(0.35, seed.wrapping_add(1));
    m.orient();
    box_sets(&mut m, origin, [origin[0] + width, origin[1] + height]);
    m
}

/// Jittered brick layout of hexagons, with quads closing alternate rows.
pub fn polygon_rectangle(origin: Point, width: f64, height: f64, n: usize, seed: u64) -> Mesh {
    // Hexagons from a brick layout: cells of row j are shifted by half a
    // column on odd rows and share six nodes with their neighbours.
    let (nx, ny) = (2 * n, n);
    let mut m = rectangle(origin, width, height, nx, ny);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::new();
    for j in 0..ny {
        let shift = j % 2;
        let mut i = 0;
        if shift == 1 {
            cells.push(vec![id(0, j), id(1, j), id(1, j + 1), id(0, j + 1)]);
            i = 1;
        }
        while i + 2 <= nx {
            cells.push(vec![
                id(i, j),
                id(i + 1, j),
                id(i + 2, j),
                id(i + 2, j + 1),
                id(i + 1, j + 1),
                id(i, j + 1),
            ]);
            i += 2;
        }
        if i < nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    m.cells = cells;
    m.jitter(0.2, seed);
    m.orient();
    box_sets(&mut m, origin, [origin[0] + width, origin[1] + height]);
    m
}

/// Quarter of a square plate (`half_size`) with a central circular hole of
/// `radius`, meshed as an O-grid. `n_theta` must be even so that a ray
/// ends at the outer corner. Sets: `left`, `bottom`, `right`, `top`, `hole`.
pub fn plate_with_hole(
    radius: f64,
    half_size: f64,
    n_theta: usize,
    n_r: usize,
    first_layer: f64,
) -> Mesh {
    assert!(n_theta % 2 == 0 && half_size > radius);
    let mut m = Mesh::default();
    let seg = |len: f64| cumulative(&geometric_segments(n_r, len, first_layer));
    for k in 0..=n_theta {
        let th = FRAC_PI_2 * k as f64 / n_theta as f64;
        let inner = [radius * th.cos(), radius * th.sin()];
        let outer = if 2 * k <= n_theta {
            [half_size, half_size * th.tan()]
        } else {
            [half_size * (FRAC_PI_2 - th).tan(), half_size]
        };
        let outer = if k == n_theta { [0.0, half_size] } else { outer };
        let len = dist(inner, outer);
        for s in seg(len) {
            m.nodes.push(lerp(inner, outer, s / len));
        }
    }
    // Node (k, r) is at k * (n_r + 1) + r; cells run along r then k.
    let id = |k: usize, r: usize| k * (n_r + 1) + r;
    for k in 0..n_theta {
        for r in 0..n_r {
            m.cells.push(vec![id(k, r), id(k, r + 1), id(k + 1, r + 1), id(k + 1, r)]);
        }
    }
    m.orient();
    let tol = 1e-9 * half_size;
    box_sets(&mut m, [0.0, 0.0], [half_size, half_size]);
    m.node_set_where("hole", |p| (p[0].hypot(p[1]) - radius).abs() <= tol);
    m
}

/// Geometry of the double-edge U-notched tension half model: `x` across
/// the width from the notched edge (`x = 0`) to the symmetry line
/// (`x = half_width`), `y` along the load.
///
/// The upper half is meshed in two conforming blocks: rays from the centre
/// of the root circle (the ray at angle 0 is the ligament), and a
/// structured block above the straight flank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UNotchPlate {
    pub half_width: f64,
    pub half_height: f64,
    pub depth: f64,
    pub radius: f64,
    /// Face length at the notch root, both along the ligament and along
    /// the root arc.
    pub root_size: f64,
    /// Columns above the flank.
    pub n_flank: usize,
    /// Angular segments of the quarter root arc.
    pub n_arc: usize,
    /// Segments along each ray, and so along the ligament.
    pub n_radial: usize,
    /// Half width of the damageable band around the ligament.
    pub band: f64,
}

impl Default for UNotchPlate {
    fn default() -> Self {
        Self {
            half_width: 0.01,
            half_height: 0.02,
            depth: 0.005,
            radius: 0.002,
            root_size: 5e-5,
            n_flank: 8,
            n_arc: 32,
            n_radial: 40,
            band: 1e-3,
        }
    }
}

impl UNotchPlate {
    /// The default specimen with every length scaled to root radius `radius`.
    pub fn with_radius(radius: f64) -> Self {
        let d = Self::default();
        let k = radius / d.radius;
        Self {
            half_width: k * d.half_width,
            half_height: k * d.half_height,
            depth: k * d.depth,
            radius,
            root_size: k * d.root_size,
            band: k * d.band,
            ..d
        }
    }

    /// Mesh of the upper half (`y >= 0`).
    pub fn upper_half(&self) -> Mesh {
        let (w, h, r) = (self.half_width, self.half_height, self.radius);
        let xc = self.depth - r;
        let (na, nr) = (self.n_arc, self.n_radial);
        let mut phi = cumulative(&geometric_segments(na, FRAC_PI_2, self.root_size / r));
        // one ray through the outer corner
        let corner = h.atan2(w - xc);
        let k = (1..na)
            .min_by(|&a, &b| (phi[a] - corner).abs().total_cmp(&(phi[b] - corner).abs()))
            .expect("at least two arc segments");
        phi[k] = corner;
        phi[na] = FRAC_PI_2;

        let mut m = Mesh::default();
        let id = |k: usize, j: usize| k * (nr + 1) + j;
        for k in 0..=na {
            let (c, s) = (phi[k].cos(), phi[k].sin());
            let inner = [xc + r * c, r * s];
            let outer = if k == na {
                [xc, h]
            } else if k == 0 {
                [w, 0.0]
            } else if phi[k] <= corner {
                [w, (w - xc) * phi[k].tan()]
            } else {
                [xc + h / phi[k].tan(), h]
            };
            let ds = r * match k {
                0 => phi[1],
                _ if k == na => phi[na] - phi[na - 1],
                _ => 0.5 * (phi[k + 1] - phi[k - 1]),
            };
            let len = dist(inner, outer);
            let eta = cumulative(&geometric_segments(nr, len, ds.min(len / nr as f64)));
            for e in &eta[..nr] {
                m.nodes.push(lerp(inner, outer, e / len));
            }
            m.nodes.push(outer);
        }
        for k in 0..na {
            for j in 0..nr {
                m.cells.push(vec![id(k, j), id(k + 1, j), id(k + 1, j + 1), id(k, j + 1)]);
            }
        }
        // block above the flank, sharing the vertical ray at x = xc
        let ys: Vec<f64> = (0..=nr).map(|j| m.nodes[id(na, j)][1]).collect();
        let base = m.nodes.len();
        let nf = self.n_flank;
        let lid = |i: usize, j: usize| if i == nf { id(na, j) } else { base + i * (nr + 1) + j };
        for i in 0..nf {
            for &y in &ys {
                m.nodes.push([xc * i as f64 / nf as f64, y]);
            }
        }
        for i in 0..nf {
            for j in 0..nr {
                m.cells.push(vec![lid(i, j), lid(i + 1, j), lid(i + 1, j + 1), lid(i, j + 1)]);
            }
        }
        m.orient();
        m
    }

    fn finish(&self, mut m: Mesh) -> Mesh {
        m.mirror_y(1e-12 * self.half_width);
        m.orient();
        let (w, h) = (self.half_width, self.half_height);
        let tol = 1e-9 * w;
        m.node_set_where("top", |p| (p[1] - h).abs() <= tol);
        m.node_set_where("bottom", |p| (p[1] + h).abs() <= tol);
        m.node_set_where("sym", |p| (p[0] - w).abs() <= tol);
        m.node_set_where("left", |p| p[0].abs() <= tol);
        let (depth, band) = (self.depth, self.band);
        m.edge_set_where("ligament", true, |a, b| {
            a[1].abs() <= tol && b[1].abs() <= tol && a[0].min(b[0]) >= depth - tol
        });
        m.edge_set_where("damageable", true, |a, b| {
            let mid = lerp(a, b, 0.5);
            mid[1].abs() < band && mid[0] >= depth - 0.5 * band
        });
        m
    }

    /// Full-height structured mesh.
    pub fn structured(&self) -> Mesh {
        self.finish(self.upper_half())
    }

    /// Jittered, partly triangulated variant (mirror symmetric).
    pub fn unstructured(&self, seed: u64) -> Mesh {
        let mut m = self.upper_half();
        m.jitter(0.15, seed);
        m.split_quads(0.4, seed.wrapping_add(1));
        m.orient();
        self.finish(m)
    }
}

/// Disc with a central stadium-shaped slot, loaded by platens at the top
/// and bottom of the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchedDisc {
    pub disc_radius: f64,
    /// Distance from the centre to each slot tip.
    pub slot_half_length: f64,
    pub slot_radius: f64,
    /// Slot axis angle from the load (y) axis, in degrees.
    pub beta_deg: f64,
    pub n_end: usize,
    pub n_flank: usize,
    pub n_radial: usize,
    /// Platen half angle, in degrees.
    pub platen_deg: f64,
    /// Damageable faces have `|y| < band_fraction * disc_radius`.
    pub band_fraction: f64,
}

impl Default for NotchedDisc {
    fn default() -> Self {
        Self {
            disc_radius: 0.02,
            slot_half_length: 0.005,
            slot_radius: 0.001,
            beta_deg: 0.0,
            n_end: 24,
            n_flank: 32,
            n_radial: 30,
            platen_deg: 7.5,
            band_fraction: 0.7,
        }
    }
}

impl NotchedDisc {
    /// Slot outline in its own frame (axis along +x), counter-clockwise
    /// starting at the +x tip.
    fn slot_outline(&self) -> Vec<Point> {
        let (c, r) = (self.slot_half_length - self.slot_radius, self.slot_radius);
        let end_step = PI * r / self.n_end as f64;
        let flank = {
            let half = geometric_segments(self.n_flank / 2, c, end_step);
            let mut full = half.clone();
            full.extend(half.iter().rev());
            cumulative(&full)
        };
        let mut pts = Vec::new();
        // Half of the +x end, upper flank, -x end, lower flank, other half.
        let half_end = self.n_end / 2;
        for k in 0..half_end {
            let a = -FRAC_PI_2 + PI * (k + half_end) as f64 / self.n_end as f64;
            pts.push([c + r * a.cos(), r * a.sin()]);
        }
        for x in &flank[..flank.len() - 1] {
            pts.push([c - x, r]);
        }
        for k in 0..self.n_end {
            let a = FRAC_PI_2 + PI * k as f64 / self.n_end as f64;
            pts.push([-c + r * a.cos(), r * a.sin()]);
        }
        for x in &flank[..flank.len() - 1] {
            pts.push([-c + x, -r]);
        }
        for k in 0..self.n_end - half_end {
            let a = -FRAC_PI_2 + PI * k as f64 / self.n_end as f64;
            pts.push([c + r * a.cos(), r * a.sin()]);
        }
        pts
    }

    pub fn mesh(&self) -> Mesh {
        let beta = self.beta_deg.to_radians();
        // Slot axis at angle beta from +y, measured towards +x.
        let (ax, ay) = (beta.sin(), beta.cos());
        let rot = |p: Point| [p[0] * ax - p[1] * ay, p[0] * ay + p[1] * ax];
        let inner: Vec<Point> = self.slot_outline().into_iter().map(rot).collect();
        let n = inner.len();
        let rd = self.disc_radius;
        let nj = self.n_radial;
        let mut m = Mesh::default();
        m.nodes = vec![[0.0; 2]; n * (nj + 1)];
        for i in 0..n {
            let p = inner[i];
            let th = p[1].atan2(p[0]);
            let q = [rd * th.cos(), rd * th.sin()];
            let ds = 0.5 * (dist(p, inner[(i + 1) % n]) + dist(p, inner[(i + n - 1) % n]));
            let len = dist(p, q);
            let eta = cumulative(&geometric_segments(nj, len, ds.min(len / nj as f64)));
            for (j, e) in eta.iter().enumerate() {
                m.nodes[j * n + i] = lerp(p, q, e / len);
            }
            m.nodes[nj * n + i] = q;
        }
        let id = |i: usize, j: usize| j * n + i % n;
        for j in 0..nj {
            for i in 0..n {
                m.cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        m.orient();
        let tol = 1e-9 * rd;
        let cos_p = self.platen_deg.to_radians().cos();
        let on_rim = move |p: Point| (p[0].hypot(p[1]) - rd).abs() <= tol;
        m.node_set_where("top", |p| on_rim(p) && p[1] >= rd * cos_p - tol);
        m.node_set_where("bottom", |p| on_rim(p) && -p[1] >= rd * cos_p - tol);
        m.node_set_where("rim", on_rim);
        let band = self.band_fraction * rd;
        m.edge_set_where("damageable", true, |a, b| lerp(a, b, 0.5)[1].abs() < band);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_cell_area(m: &Mesh) -> f64 {
        (0..m.cells.len())
            .map(|c| crate::signed_area(&m.cell_points(c)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every cell shares edges with at least two others.
    fn well_supported(m: &Mesh) -> bool {
        let uses = m.edge_use();
        m.cells.iter().all(|c| {
            (0..c.len())
                .filter(|&k| {
                    let (a, b) = (c[k], c[(k + 1) % c.len()]);
                    uses[&(a.min(b), a.max(b))] == 2
                })
                .count()
                >= 2
        })
    }

    #[test]
    fn rectangle_sets_and_area() {
        let m = rectangle([0.0, 0.0], 1.0, 2.0, 2, 4);
        assert_eq!(m.cells.len(), 8);
        assert_eq!(m.node_sets["bottom"], vec![0, 1, 2]);
        assert_eq!(m.node_sets["top"].len(), 3);
        assert!((m.area() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unstructured_rectangle_is_valid() {
        let m = unstructured_rectangle([0.0, 0.0], 1.0, 1.0, 8, 8, 7);
        assert!(m.cells.len() > 90);
        assert!(m.cells.iter().any(|c| c.len() == 3));
        assert!(well_supported(&m));
        assert!(min_cell_area(&m) > 0.0);
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert_eq!(m, unstructured_rectangle([0.0, 0.0], 1.0, 1.0, 8, 8, 7));
    }

    #[test]
    fn hexagon_rectangle_is_valid() {
        let m = polygon_rectangle([0.0, 0.0], 1.0, 1.0, 5, 3);
        assert!(m.cells.iter().any(|c| c.len() == 6));
        assert!(min_cell_area(&m) > 0.0);
        assert!((m.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plate_with_hole_area() {
        let m = plate_with_hole(1.0, 10.0, 32, 20, 0.05);
        assert!(min_cell_area(&m) > 0.0);
        // Polygonal hole: area of the square minus the inscribed polygon.
        let n = 4.0 * 32.0;
        let hole = 0.5 * n * (2.0 * PI / n).sin() / 4.0;
        assert!((m.area() - (100.0 - hole)).abs() < 1e-9);
        assert_eq!(m.node_sets["hole"].len(), 33);
    }

    #[test]
    fn u_notch_plate() {
        let g = UNotchPlate::default();
        let m = g.structured();
        assert!(min_cell_area(&m) > 0.0);
        assert!((2500..4500).contains(&m.cells.len()));
        assert_eq!(m.edge_sets["ligament"].len(), g.n_radial);
        let top = &m.node_sets["top"];
        assert!(top.iter().any(|&i| m.nodes[i][0] == 0.0));
        assert!(top.iter().any(|&i| (m.nodes[i][0] - g.half_width).abs() < 1e-12));
        let u = g.unstructured(3);
        assert!(min_cell_area(&u) > 0.0);
        assert!(well_supported(&m) && well_supported(&u));
        assert!((u.area() - m.area()).abs() < 1e-12 * m.area().max(1.0));
        assert_eq!(u.edge_sets["ligament"].len(), g.n_radial);
    }

    #[test]
    fn u_notch_scales_with_radius() {
        let a = UNotchPlate::default().structured();
        let b = UNotchPlate::with_radius(0.5e-3).structured();
        assert_eq!(a.cells, b.cells);
        for (p, q) in a.nodes.iter().zip(&b.nodes) {
            assert!((0.25 * p[0] - q[0]).abs() < 1e-15 && (0.25 * p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn notched_disc() {
        for beta in [0.0, 10.0] {
            let d = NotchedDisc { beta_deg: beta, ..NotchedDisc::default() };
            let m = d.mesh();
            assert!(min_cell_area(&m) > 0.0, "beta {beta}");
            assert!(well_supported(&m));
            assert!(!m.node_sets["top"].is_empty());
            assert_eq!(m.node_sets["top"].len(), m.node_sets["bottom"].len());
        }
    }
}
