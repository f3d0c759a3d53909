//! Planar polygon helpers.

pub type Point = [f64; 2];

/// Signed shoelace area; positive for counter-clockwise loops.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// Area centroid of a simple polygon with non-zero area.
pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    // shift to the first vertex to limit cancellation on far-away meshes
    let o = poly[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let q = [poly[(i + 1) % n][0] - o[0], poly[(i + 1) % n][1] - o[1]];
        let c = p[0] * q[1] - q[0] * p[1];
        a += c;
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

/// Strict interior test by winding number; points on an edge count as outside.
pub fn contains_strictly(poly: &[Point], x: Point) -> bool {
    let n = poly.len();
    let scale = poly
        .iter()
        .map(|p| (p[0] - x[0]).abs().max((p[1] - x[1]).abs()))
        .fold(0.0, f64::max);
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut winding = 0i32;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if cross.abs() <= eps * len {
            let t = (x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1]);
            if t >= 0.0 && t <= len * len {
                return false;
            }
        }
        if a[1] <= x[1] {
            if b[1] > x[1] && cross > 0.0 {
                winding += 1;
            }
        } else if b[1] <= x[1] && cross < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True when no two non-adjacent edges of the loop intersect.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Outward unit normal of the edge a->b of a counter-clockwise loop.
pub fn edge_normal(a: Point, b: Point) -> Point {
    let l = distance(a, b);
    [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
}

/// Two-point Gauss rule on the segment a->b: (point, weight) with weights
/// summing to the segment length.
pub fn gauss2(a: Point, b: Point) -> [(Point, f64); 2] {
    let g = 0.5 / 3f64.sqrt();
    let l = distance(a, b);
    let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    [(at(0.5 - g), 0.5 * l), (at(0.5 + g), 0.5 * l)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(centroid(&sq), [0.5, 0.5]);
        assert!(contains_strictly(&sq, [0.5, 0.5]));
        assert!(!contains_strictly(&sq, [1.0, 0.5]));
        assert!(!contains_strictly(&sq, [1.5, 0.5]));
        assert!(is_simple(&sq));
    }

    #[test]
    fn clockwise_triangle_has_negative_area() {
        let tri = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert_eq!(signed_area(&tri), -0.5);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bow));
    }

    #[test]
    fn gauss_weights_sum_to_length() {
        let q = gauss2([0.0, 0.0], [3.0, 4.0]);
        assert!((q[0].1 + q[1].1 - 5.0).abs() < 1e-15);
        // exact for quadratics: integral of s^2 over [0,1] is 1/3
        let q = gauss2([0.0, 0.0], [1.0, 0.0]);
        let s: f64 = q.iter().map(|(p, w)| p[0] * p[0] * w).sum();
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn concave_polygon_centroid_outside() {
        // thin L shape: centroid falls outside
        let l = [
            [0.0, 0.0],
            [10.0, 0.0],
            [10.0, 0.1],
            [0.1, 0.1],
            [0.1, 10.0],
            [0.0, 10.0],
        ];
        let c = centroid(&l);
        assert!(!contains_strictly(&l, c));
    }
}
