//! Global system assembly.
//!
//! The weak form per unit thickness is
//!
//! ```text
//! Σ_E ∫ ε(v)·σ dΩ − Σ_faces ∫ [v]·t*d dΓ − ∫_Γu v·P(σn − α_b(u − ū)) dΓ
//!     = ∫ v·f dΩ + ∫_Γt v·t̄ dΓ
//! ```
//!
//! where `P` selects the displacement-constrained components of a boundary
//! face. Everything is computed in 2 x 2 blocks per pair of support points.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2};
use rayon::prelude::*;

use crate::interface::{
    damaged_flux, traction, update_damage, FaceState, InterfaceState,
};
use crate::model::{geometry, Partition};
use crate::problem::{FaceBc, Problem};
use crate::shapefun::{ShapeTables, SupportGraph};
use crate::sparse::CscMatrix;

/// Fixed sparsity pattern from the undamaged support graph. Severing only
/// shrinks supports, so the pattern covers every later state.
pub fn sparsity_pattern(part: &Partition) -> CscMatrix {
    let graph = SupportGraph::new(part);
    let support = |e: usize| {
        let mut s = vec![e];
        s.extend_from_slice(&graph.neighbors[e]);
        s
    };
    let n = part.n_points();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in 0..n {
        let s = support(e);
        for &p in &s {
            cols[p].extend_from_slice(&s);
        }
    }
    for f in &part.interior_faces {
        let mut s = support(f.owners.0);
        s.extend(support(f.owners.1));
        s.sort_unstable();
        s.dedup();
        for &p in &s {
            cols[p].extend_from_slice(&s);
        }
    }
    let mut dof_cols = vec![Vec::new(); 2 * n];
    for (p, c) in cols.iter_mut().enumerate() {
        c.sort_unstable();
        c.dedup();
        let rows: Vec<usize> = c.iter().flat_map(|&q| [2 * q, 2 * q + 1]).collect();
        dof_cols[2 * p] = rows.clone();
        dof_cols[2 * p + 1] = rows;
    }
    CscMatrix::from_columns(2 * n, dof_cols)
}

/// Per-subdomain strain and stress of a displacement vector.
pub fn strains_and_stresses(
    problem: &Problem,
    tables: &ShapeTables,
    u: &[f64],
) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let d = &problem.d;
    tables
        .shapes
        .iter()
        .map(|s| {
            let e = s.strain(u);
            let sig = d * nalgebra::Vector3::from(e);
            (e, [sig[0], sig[1], sig[2]])
        })
        .unzip()
}

/// Outcome of evaluating the discrete equations at a displacement.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub f_int: Vec<f64>,
    pub f_ext: Vec<f64>,
    /// Trial damage states; equal to the committed ones on faces that are
    /// not allowed to damage.
    pub trial: Vec<FaceState>,
    /// Interior faces whose damage grew in this evaluation.
    pub loading: Vec<bool>,
    pub strain: Vec<[f64; 3]>,
    pub stress: Vec<[f64; 3]>,
}

impl Evaluation {
    pub fn residual(&self) -> Vec<f64> {
        self.f_ext
            .iter()
            .zip(&self.f_int)
            .map(|(a, b)| a - b)
            .collect()
    }
}

fn n_e(n: [f64; 2]) -> Matrix2x3<f64> {
    Matrix2x3::new(n[0], 0.0, n[1], 0.0, n[1], n[0])
}

fn b_block(g: [f64; 2]) -> Matrix3x2<f64> {
    Matrix3x2::new(g[0], 0.0, 0.0, g[1], g[1], g[0])
}

struct Local {
    points: Vec<usize>,
    f: Vec<f64>,
    k: Vec<f64>,
}

impl Local {
    fn new(points: Vec<usize>, with_k: bool) -> Self {
        let m = 2 * points.len();
        Local {
            f: vec![0.0; m],
            k: if with_k { vec![0.0; m * m] } else { Vec::new() },
            points,
        }
    }

    fn add_f(&mut self, p: usize, v: [f64; 2]) {
        self.f[2 * p] += v[0];
        self.f[2 * p + 1] += v[1];
    }

    fn add_k(&mut self, p: usize, q: usize, b: &Matrix2<f64>) {
        let m = 2 * self.points.len();
        for i in 0..2 {
            for j in 0..2 {
                self.k[(2 * p + i) * m + 2 * q + j] += b[(i, j)];
            }
        }
    }

    fn dofs(&self) -> Vec<usize> {
        self.points
            .iter()
            .flat_map(|&p| [2 * p, 2 * p + 1])
            .collect()
    }
}

fn merge_support(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = a.iter().chain(b).copied().collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn bulk_local(problem: &Problem, tables: &ShapeTables, e: usize, sigma: [f64; 3], with_k: bool) -> Local {
    let s = tables.get(e);
    let area = problem.partition.subdomains[e].area;
    let mut loc = Local::new(s.support.clone(), with_k);
    let sig = nalgebra::Vector3::from(sigma);
    let bs: Vec<Matrix3x2<f64>> = s.weights.iter().map(|&g| b_block(g)).collect();
    for (p, b) in bs.iter().enumerate() {
        let f = b.transpose() * sig * area;
        loc.add_f(p, [f[0], f[1]]);
    }
    if with_k {
        let d: &Matrix3<f64> = &problem.d;
        for (p, bp) in bs.iter().enumerate() {
            let bt_d = bp.transpose() * d * area;
            for (q, bq) in bs.iter().enumerate() {
                loc.add_k(p, q, &(bt_d * bq));
            }
        }
    }
    loc
}

struct FaceLocal {
    local: Local,
    state: FaceState,
    loading: bool,
}

#[allow(clippy::too_many_arguments)]
fn face_local(
    problem: &Problem,
    tables: &ShapeTables,
    f: usize,
    u: &[f64],
    stress: &[[f64; 3]],
    committed: &FaceState,
    with_k: bool,
) -> FaceLocal {
    let face = &problem.partition.interior_faces[f];
    let consts = &problem.face_consts[f];
    let alpha = consts.alpha;
    let (e1, e2) = face.owners;
    let (s1, s2) = (tables.get(e1), tables.get(e2));
    let points = merge_support(&s1.support, &s2.support);
    let idx = |p: usize| points.binary_search(&p).expect("point in merged support");
    let i1: Vec<usize> = s1.support.iter().map(|&p| idx(p)).collect();
    let i2: Vec<usize> = s2.support.iter().map(|&p| idx(p)).collect();
    let m = points.len();
    let mut loc = Local::new(points, with_k);

    let ne = n_e(face.normal);
    let d = &problem.d;
    // averaged traction operator, constant over the face
    let mut t_ops = vec![Matrix2::zeros(); m];
    if with_k {
        for (k, &g) in s1.weights.iter().enumerate() {
            t_ops[i1[k]] += 0.5 * ne * d * b_block(g);
        }
        for (k, &g) in s2.weights.iter().enumerate() {
            t_ops[i2[k]] += 0.5 * ne * d * b_block(g);
        }
    }
    let tr1 = traction(stress[e1], face.normal);
    let tr2 = traction(stress[e2], face.normal);
    let avg = [0.5 * (tr1[0] + tr2[0]), 0.5 * (tr1[1] + tr2[1])];

    let mut state = *committed;
    let mut loading = false;
    let mut c_jump = vec![0.0; m];
    for (q, (x, w)) in geometry::gauss2(face.endpoints[0], face.endpoints[1])
        .into_iter()
        .enumerate()
    {
        let ua = s1.displacement_at(u, x);
        let ub = s2.displacement_at(u, x);
        let t_star = [
            avg[0] - alpha * (ua[0] - ub[0]),
            avg[1] - alpha * (ua[1] - ub[1]),
        ];
        let (qp_state, tangent) = if problem.damageable[f] {
            let delta = [t_star[0] / alpha, t_star[1] / alpha];
            let up = update_damage(delta, &committed.qp[q], consts);
            loading |= up.loading;
            (up.state, up.tangent)
        } else {
            (committed.qp[q], Matrix2::identity() * alpha)
        };
        state.qp[q] = qp_state;
        if qp_state.cracked {
            continue;
        }
        let td = damaged_flux(t_star, qp_state.d);
        c_jump.iter_mut().for_each(|c| *c = 0.0);
        for (k, v) in s1.phi(x).into_iter().enumerate() {
            c_jump[i1[k]] += v;
        }
        for (k, v) in s2.phi(x).into_iter().enumerate() {
            c_jump[i2[k]] -= v;
        }
        for p in 0..m {
            loc.add_f(p, [-w * c_jump[p] * td[0], -w * c_jump[p] * td[1]]);
        }
        if with_k {
            let right: Vec<Matrix2<f64>> = (0..m)
                .map(|p| Matrix2::identity() * c_jump[p] - t_ops[p] / alpha)
                .collect();
            for p in 0..m {
                if c_jump[p] == 0.0 {
                    continue;
                }
                let left = tangent * (w * c_jump[p]);
                for (qq, r) in right.iter().enumerate() {
                    loc.add_k(p, qq, &(left * r));
                }
            }
        }
    }
    FaceLocal {
        local: loc,
        state,
        loading,
    }
}

fn constrained_mask(bc: &[FaceBc; 2]) -> [bool; 2] {
    [
        matches!(bc[0], FaceBc::Displacement(_)),
        matches!(bc[1], FaceBc::Displacement(_)),
    ]
}

/// Boundary-face contributions: `(local internal/tangent, external force)`.
fn boundary_local(
    problem: &Problem,
    tables: &ShapeTables,
    bf: usize,
    u: &[f64],
    stress: &[[f64; 3]],
    load_factor: f64,
    with_k: bool,
) -> (Local, Vec<f64>) {
    let face = &problem.partition.boundary_faces[bf];
    let s = tables.get(face.owner);
    let bc = &problem.face_bc[bf];
    let mask = constrained_mask(bc);
    let alpha_b = problem.boundary_alpha[bf];
    let m = s.support.len();
    let mut loc = Local::new(s.support.clone(), with_k && (mask[0] || mask[1]));
    let mut f_ext = vec![0.0; 2 * m];
    let tr = traction(stress[face.owner], face.normal);
    let ne = n_e(face.normal);
    let t_ops: Vec<Matrix2<f64>> = if with_k {
        s.weights.iter().map(|&g| ne * problem.d * b_block(g)).collect()
    } else {
        Vec::new()
    };
    let mut p_mat = Matrix2::zeros();
    for c in 0..2 {
        if mask[c] {
            p_mat[(c, c)] = 1.0;
        }
    }
    for (x, w) in geometry::gauss2(face.endpoints[0], face.endpoints[1]) {
        let phi = s.phi(x);
        let uh = s.displacement_at(u, x);
        for c in 0..2 {
            let v = match bc[c] {
                FaceBc::Free => continue,
                FaceBc::Traction(t) => load_factor * t,
                FaceBc::Displacement(ub) => {
                    let flux = tr[c] - alpha_b * uh[c];
                    for (p, ph) in phi.iter().enumerate() {
                        loc.f[2 * p + c] -= w * ph * flux;
                    }
                    alpha_b * load_factor * ub
                }
            };
            for (p, ph) in phi.iter().enumerate() {
                f_ext[2 * p + c] += w * ph * v;
            }
        }
        if with_k && (mask[0] || mask[1]) {
            for (p, php) in phi.iter().enumerate() {
                if *php == 0.0 {
                    continue;
                }
                let left = p_mat * (w * php);
                for (q, phq) in phi.iter().enumerate() {
                    let r = Matrix2::identity() * (alpha_b * phq) - t_ops[q];
                    loc.add_k(p, q, &(left * r));
                }
            }
        }
    }
    (loc, f_ext)
}

/// Evaluates internal and external forces at `u`, updating damage trial
/// states against `committed`. When `tangent` is given it is overwritten
/// with the consistent tangent matrix.
pub fn evaluate(
    problem: &Problem,
    tables: &ShapeTables,
    u: &[f64],
    committed: &[FaceState],
    load_factor: f64,
    tangent: Option<&mut CscMatrix>,
) -> Evaluation {
    let part = &problem.partition;
    let n = part.n_dofs();
    let with_k = tangent.is_some();
    let (strain, stress) = strains_and_stresses(problem, tables, u);

    let bulk: Vec<Local> = (0..part.n_points())
        .into_par_iter()
        .map(|e| bulk_local(problem, tables, e, stress[e], with_k))
        .collect();
    let faces: Vec<FaceLocal> = (0..part.interior_faces.len())
        .into_par_iter()
        .map(|f| face_local(problem, tables, f, u, &stress, &committed[f], with_k))
        .collect();
    let bnd: Vec<(Local, Vec<f64>)> = (0..part.boundary_faces.len())
        .into_par_iter()
        .map(|b| boundary_local(problem, tables, b, u, &stress, load_factor, with_k))
        .collect();

    // sequential scatter in a fixed order keeps results reproducible
    let mut f_int = vec![0.0; n];
    let mut f_ext = vec![0.0; n];
    let mut k = tangent;
    if let Some(k) = k.as_deref_mut() {
        k.clear();
    }
    let mut scatter = |loc: &Local, k: &mut Option<&mut CscMatrix>| {
        let dofs = loc.dofs();
        for (a, &i) in dofs.iter().enumerate() {
            f_int[i] += loc.f[a];
        }
        if let (Some(k), false) = (k.as_deref_mut(), loc.k.is_empty()) {
            k.add_block(&dofs, &loc.k);
        }
    };
    for loc in &bulk {
        scatter(loc, &mut k);
    }
    let mut trial = Vec::with_capacity(faces.len());
    let mut loading = Vec::with_capacity(faces.len());
    for fl in &faces {
        scatter(&fl.local, &mut k);
        trial.push(fl.state);
        loading.push(fl.loading);
    }
    for (loc, fe) in &bnd {
        scatter(loc, &mut k);
        for (a, &p) in loc.points.iter().enumerate() {
            f_ext[2 * p] += fe[2 * a];
            f_ext[2 * p + 1] += fe[2 * a + 1];
        }
    }
    let bf = problem.material.body_force;
    if bf != [0.0, 0.0] {
        // the trial function at the Fragile Point reduces to its own value
        for s in &part.subdomains {
            f_ext[2 * s.id] += load_factor * s.area * bf[0];
            f_ext[2 * s.id + 1] += load_factor * s.area * bf[1];
        }
    }

    Evaluation {
        f_int,
        f_ext,
        trial,
        loading,
        strain,
        stress,
    }
}

/// Force per unit thickness transmitted through the displacement-constrained
/// components of the boundary faces in `faces`, i.e. the reaction that the
/// supports exert on the body.
pub fn reaction(
    problem: &Problem,
    tables: &ShapeTables,
    u: &[f64],
    stress: &[[f64; 3]],
    load_factor: f64,
    faces: &[usize],
) -> [f64; 2] {
    let mut r = [0.0; 2];
    for &bf in faces {
        let face = &problem.partition.boundary_faces[bf];
        let s = tables.get(face.owner);
        let tr = traction(stress[face.owner], face.normal);
        let alpha_b = problem.boundary_alpha[bf];
        for (x, w) in geometry::gauss2(face.endpoints[0], face.endpoints[1]) {
            let uh = s.displacement_at(u, x);
            for c in 0..2 {
                if let FaceBc::Displacement(ub) = problem.face_bc[bf][c] {
                    r[c] += w * (tr[c] - alpha_b * (uh[c] - load_factor * ub));
                }
            }
        }
    }
    r
}

/// Strain energy of the bulk per unit thickness.
pub fn bulk_energy(problem: &Problem, strain: &[[f64; 3]], stress: &[[f64; 3]]) -> f64 {
    problem
        .partition
        .subdomains
        .iter()
        .map(|s| {
            let (e, t) = (strain[s.id], stress[s.id]);
            0.5 * s.area * (e[0] * t[0] + e[1] * t[1] + e[2] * t[2])
        })
        .sum()
}

/// Secant energy of the weakly imposed supports per unit thickness: the
/// boundary analogue of [`interface_energy`], with the prescribed value in
/// place of the neighbour's trace.
pub fn boundary_energy(
    problem: &Problem,
    tables: &ShapeTables,
    u: &[f64],
    stress: &[[f64; 3]],
    load_factor: f64,
) -> f64 {
    let mut total = 0.0;
    for (bf, face) in problem.partition.boundary_faces.iter().enumerate() {
        let s = tables.get(face.owner);
        let tr = traction(stress[face.owner], face.normal);
        let alpha_b = problem.boundary_alpha[bf];
        for (x, w) in geometry::gauss2(face.endpoints[0], face.endpoints[1]) {
            let uh = s.displacement_at(u, x);
            for c in 0..2 {
                if let FaceBc::Displacement(ub) = problem.face_bc[bf][c] {
                    let gap = uh[c] - load_factor * ub;
                    total -= 0.5 * w * gap * (tr[c] - alpha_b * gap);
                }
            }
        }
    }
    total
}

/// `∫ t̄ · u` over the traction-loaded boundary at unit load factor.
pub fn traction_conjugate(problem: &Problem, tables: &ShapeTables, u: &[f64]) -> f64 {
    let mut total = 0.0;
    for (bf, face) in problem.partition.boundary_faces.iter().enumerate() {
        let s = tables.get(face.owner);
        for (x, w) in geometry::gauss2(face.endpoints[0], face.endpoints[1]) {
            let uh = s.displacement_at(u, x);
            for c in 0..2 {
                if let FaceBc::Traction(t) = problem.face_bc[bf][c] {
                    total += w * t * uh[c];
                }
            }
        }
    }
    total
}

/// Secant energy of the interior-face terms per unit thickness: half the
/// work of the damaged flux on the displacement jump, `-(1 - d) [u]·t* / 2`
/// integrated over each face. With the bulk energy this is `u·F_int / 2`,
/// which is what the prescribed boundary values have stored on a
/// proportional path.
pub fn interface_energy(
    problem: &Problem,
    tables: &ShapeTables,
    u: &[f64],
    stress: &[[f64; 3]],
    states: &[FaceState],
) -> f64 {
    let mut total = 0.0;
    for (f, face) in problem.partition.interior_faces.iter().enumerate() {
        let alpha = problem.face_consts[f].alpha;
        let (e1, e2) = face.owners;
        let tr1 = traction(stress[e1], face.normal);
        let tr2 = traction(stress[e2], face.normal);
        for (q, (x, w)) in geometry::gauss2(face.endpoints[0], face.endpoints[1])
            .into_iter()
            .enumerate()
        {
            let st: &InterfaceState = &states[f].qp[q];
            if st.cracked {
                continue;
            }
            let ua = tables.get(e1).displacement_at(u, x);
            let ub = tables.get(e2).displacement_at(u, x);
            let jump = [ua[0] - ub[0], ua[1] - ub[1]];
            let t = [
                0.5 * (tr1[0] + tr2[0]) - alpha * jump[0],
                0.5 * (tr1[1] + tr2[1]) - alpha * jump[1],
            ];
            total -= 0.5 * w * (1.0 - st.d) * (jump[0] * t[0] + jump[1] * t[1]);
        }
    }
    total
}
