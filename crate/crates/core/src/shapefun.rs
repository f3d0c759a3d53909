//! Point-based linear trial functions.
//!
//! In subdomain `E0` with Fragile Point `x0` the trial displacement is
//! `u(x) = u0 + [h 0; 0 h] a`, `h = x - x0`, where the displacement gradient
//! `a` is fitted by unweighted least squares to the displacements of the
//! support points (the points of subdomains sharing an unsevered face with
//! `E0`). Writing the gradient of either component as `sum_j g_j u_j` over
//! the support (with `g_0 = -sum_k g_k`) gives the shape and strain matrices
//! in terms of a handful of scalar coefficients.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::model::{Partition, Point};

/// Relative singular-value cut-off below which a support is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// The support of a point spans fewer than two independent directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsolatedPoint;

impl std::fmt::Display for IsolatedPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("support is rank deficient (isolated point)")
    }
}

impl std::error::Error for IsolatedPoint {}

/// Least-squares gradient weights for one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOperator {
    /// `weights[j]` multiplies the displacement of support point `j`
    /// (index 0 is the point itself) in the gradient of each component.
    pub weights: Vec<[f64; 2]>,
}

impl GradientOperator {
    /// The 4 x 2(m+1) matrix mapping stacked support displacements
    /// `[u1^0, u2^0, u1^1, u2^1, ...]` to `[du1/dx1, du1/dx2, du2/dx1, du2/dx2]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.weights.len();
        let mut c = DMatrix::zeros(4, 2 * n);
        for (j, g) in self.weights.iter().enumerate() {
            c[(0, 2 * j)] = g[0];
            c[(1, 2 * j)] = g[1];
            c[(2, 2 * j + 1)] = g[0];
            c[(3, 2 * j + 1)] = g[1];
        }
        c
    }
}

/// Fits the displacement gradient at `p0` from the neighbouring `support`
/// points. Exact for fields that are linear in `x`.
pub fn gradient_operator(p0: Point, support: &[Point]) -> Result<GradientOperator, IsolatedPoint> {
    if support.len() < 2 {
        return Err(IsolatedPoint);
    }
    let dx: Vec<[f64; 2]> = support
        .iter()
        .map(|p| [p[0] - p0[0], p[1] - p0[1]])
        .collect();
    let mut m = Matrix2::<f64>::zeros();
    for d in &dx {
        m[(0, 0)] += d[0] * d[0];
        m[(0, 1)] += d[0] * d[1];
        m[(1, 1)] += d[1] * d[1];
    }
    m[(1, 0)] = m[(0, 1)];
    // eigenvalues of the normal matrix are the squared singular values of
    // the difference matrix
    let eig = m.symmetric_eigen();
    let ev: [f64; 2] = [eig.eigenvalues[0], eig.eigenvalues[1]];
    let (lmin, lmax) = (ev[0].min(ev[1]).max(0.0), ev[0].max(ev[1]).max(0.0));
    if lmax <= 0.0 || (lmin / lmax).sqrt() <= RANK_TOLERANCE {
        return Err(IsolatedPoint);
    }
    let inv = eig.recompose_with_inverse_eigenvalues();
    let mut weights = Vec::with_capacity(support.len() + 1);
    let mut g0 = [0.0, 0.0];
    weights.push(g0);
    for d in &dx {
        let g = [
            inv[(0, 0)] * d[0] + inv[(0, 1)] * d[1],
            inv[(1, 0)] * d[0] + inv[(1, 1)] * d[1],
        ];
        g0[0] -= g[0];
        g0[1] -= g[1];
        weights.push(g);
    }
    weights[0] = g0;
    Ok(GradientOperator { weights })
}

trait RecomposeInverse {
    fn recompose_with_inverse_eigenvalues(&self) -> Matrix2<f64>;
}

impl RecomposeInverse for nalgebra::SymmetricEigen<f64, nalgebra::U2> {
    fn recompose_with_inverse_eigenvalues(&self) -> Matrix2<f64> {
        let v = &self.eigenvectors;
        let l = &self.eigenvalues;
        let d = Matrix2::new(1.0 / l[0], 0.0, 0.0, 1.0 / l[1]);
        v * d * v.transpose()
    }
}

/// Neighbour relation between points through unsevered interior faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGraph {
    /// Sorted neighbour point ids for every point.
    pub neighbors: Vec<Vec<usize>>,
    /// Per interior face.
    pub severed: Vec<bool>,
}

impl SupportGraph {
    pub fn new(part: &Partition) -> Self {
        let severed = vec![false; part.interior_faces.len()];
        let mut g = SupportGraph {
            neighbors: vec![Vec::new(); part.n_points()],
            severed,
        };
        for p in 0..part.n_points() {
            g.refresh(part, p);
        }
        g
    }

    pub fn with_severed(part: &Partition, severed: Vec<bool>) -> Self {
        assert_eq!(severed.len(), part.interior_faces.len());
        let mut g = SupportGraph {
            neighbors: vec![Vec::new(); part.n_points()],
            severed,
        };
        for p in 0..part.n_points() {
            g.refresh(part, p);
        }
        g
    }

    fn refresh(&mut self, part: &Partition, p: usize) {
        let mut nb: Vec<usize> = part.faces_of[p]
            .iter()
            .filter(|&&f| !self.severed[f])
            .map(|&f| part.interior_faces[f].other(p))
            .collect();
        nb.sort_unstable();
        nb.dedup();
        self.neighbors[p] = nb;
    }

    /// Removes the owners of `face` from each other's support. Returns the
    /// subdomains whose tables must be rebuilt (empty when already severed).
    pub fn sever(&mut self, part: &Partition, face: usize) -> Vec<usize> {
        if self.severed[face] {
            return Vec::new();
        }
        self.severed[face] = true;
        let (a, b) = part.interior_faces[face].owners;
        self.refresh(part, a);
        self.refresh(part, b);
        vec![a, b]
    }

    pub fn is_symmetric(&self) -> bool {
        self.neighbors
            .iter()
            .enumerate()
            .all(|(p, nb)| nb.iter().all(|&q| self.neighbors[q].binary_search(&p).is_ok()))
    }
}

/// Shape data of one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainShape {
    /// Support point ids; entry 0 is the subdomain's own point.
    pub support: Vec<usize>,
    /// Gradient weights per support entry; all zero for an isolated point.
    pub weights: Vec<[f64; 2]>,
    pub x0: Point,
    pub isolated: bool,
}

impl SubdomainShape {
    /// Scalar shape coefficients `phi_j(x)`; `N(x) = phi ⊗ I2`.
    pub fn phi(&self, x: Point) -> Vec<f64> {
        let h = [x[0] - self.x0[0], x[1] - self.x0[1]];
        let mut phi: Vec<f64> = self
            .weights
            .iter()
            .map(|g| h[0] * g[0] + h[1] * g[1])
            .collect();
        phi[0] += 1.0;
        phi
    }

    /// Shape matrix N(x), 2 x 2(m+1).
    pub fn n_matrix(&self, x: Point) -> DMatrix<f64> {
        let phi = self.phi(x);
        let mut n = DMatrix::zeros(2, 2 * phi.len());
        for (j, v) in phi.iter().enumerate() {
            n[(0, 2 * j)] = *v;
            n[(1, 2 * j + 1)] = *v;
        }
        n
    }

    /// Strain matrix B, 3 x 2(m+1), Voigt order (11, 22, 12) with
    /// engineering shear.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(3, 2 * self.weights.len());
        for (j, g) in self.weights.iter().enumerate() {
            b[(0, 2 * j)] = g[0];
            b[(1, 2 * j + 1)] = g[1];
            b[(2, 2 * j)] = g[1];
            b[(2, 2 * j + 1)] = g[0];
        }
        b
    }

    pub fn strain(&self, u: &[f64]) -> [f64; 3] {
        let mut e = [0.0; 3];
        for (g, &p) in self.weights.iter().zip(&self.support) {
            let (u1, u2) = (u[2 * p], u[2 * p + 1]);
            e[0] += g[0] * u1;
            e[1] += g[1] * u2;
            e[2] += g[1] * u1 + g[0] * u2;
        }
        e
    }

    pub fn displacement_at(&self, u: &[f64], x: Point) -> [f64; 2] {
        let phi = self.phi(x);
        let mut out = [0.0; 2];
        for (v, &p) in phi.iter().zip(&self.support) {
            out[0] += v * u[2 * p];
            out[1] += v * u[2 * p + 1];
        }
        out
    }
}

/// Builds the trial function of subdomain `e` for the current support.
pub fn shape_and_strain(part: &Partition, graph: &SupportGraph, e: usize) -> SubdomainShape {
    let x0 = part.subdomains[e].point;
    let nb = &graph.neighbors[e];
    let coords: Vec<Point> = nb.iter().map(|&q| part.subdomains[q].point).collect();
    let mut support = Vec::with_capacity(nb.len() + 1);
    support.push(e);
    support.extend_from_slice(nb);
    match gradient_operator(x0, &coords) {
        Ok(op) => SubdomainShape {
            support,
            weights: op.weights,
            x0,
            isolated: false,
        },
        Err(IsolatedPoint) => SubdomainShape {
            // constant trial function: drop the neighbours entirely
            support: vec![e],
            weights: vec![[0.0, 0.0]],
            x0,
            isolated: true,
        },
    }
}

/// Shape data for every subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTables {
    pub shapes: Vec<SubdomainShape>,
}

impl ShapeTables {
    pub fn build(part: &Partition, graph: &SupportGraph) -> Self {
        use rayon::prelude::*;
        let shapes = (0..part.n_points())
            .into_par_iter()
            .map(|e| shape_and_strain(part, graph, e))
            .collect::<Vec<_>>();
        let isolated = shapes.iter().filter(|s| s.isolated).count();
        if isolated > 0 {
            log::warn!(
                "{isolated} subdomain(s) have a rank-deficient support and get a constant \
                 trial function; linear fields are not reproduced there"
            );
        }
        ShapeTables { shapes }
    }

    /// Rebuilds the listed subdomains after their supports changed.
    pub fn refresh(&mut self, part: &Partition, graph: &SupportGraph, stale: &[usize]) {
        for &e in stale {
            self.shapes[e] = shape_and_strain(part, graph, e);
        }
    }

    pub fn get(&self, e: usize) -> &SubdomainShape {
        &self.shapes[e]
    }
}
