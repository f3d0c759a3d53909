//! Geometric and material data model.
//!
//! A [`Partition`] is the discretized domain: polygonal subdomains, one
//! Fragile Point per subdomain (placed at the polygon centroid), and the
//! faces between them. Interior faces carry a fixed owner ordering
//! `E1 < E2` that defines the sign of the jump operator; their unit normal
//! points from `E1` into `E2`.

pub mod geometry;
mod mesh;

use std::collections::{BTreeMap, HashMap};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use geometry::Point;

#[derive(Debug, Clone)]
pub struct Subdomain {
    /// Dense index, also the index of the subdomain's Fragile Point.
    pub id: usize,
    /// Cell id as written in the mesh file.
    pub label: i64,
    /// Vertex node indices, counter-clockwise.
    pub nodes: Vec<usize>,
    pub vertices: Vec<Point>,
    /// Fragile Point P0.
    pub point: Point,
    pub area: f64,
    /// Characteristic length used by the penalty tensor.
    pub h_s: f64,
}

#[derive(Debug, Clone)]
pub struct InteriorFace {
    pub id: usize,
    pub nodes: [usize; 2],
    /// Endpoints in the counter-clockwise order of `owners.0`.
    pub endpoints: [Point; 2],
    /// `(E1, E2)` with `E1 < E2`.
    pub owners: (usize, usize),
    /// Unit normal pointing from E1 into E2.
    pub normal: Point,
    pub length: f64,
}

impl InteriorFace {
    pub fn midpoint(&self) -> Point {
        geometry::midpoint(self.endpoints[0], self.endpoints[1])
    }

    pub fn other(&self, e: usize) -> usize {
        if self.owners.0 == e {
            self.owners.1
        } else {
            self.owners.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub id: usize,
    pub nodes: [usize; 2],
    pub endpoints: [Point; 2],
    pub owner: usize,
    /// Outward unit normal.
    pub normal: Point,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceRef {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub nodes: Vec<Point>,
    pub node_labels: Vec<i64>,
    pub subdomains: Vec<Subdomain>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Node sets by name, as dense node indices.
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// Edge sets by name, resolved to faces.
    pub edge_sets: BTreeMap<String, Vec<FaceRef>>,
    /// Interior faces incident to each subdomain, ascending.
    pub faces_of: Vec<Vec<usize>>,
    /// Boundary faces incident to each subdomain, ascending.
    pub boundary_faces_of: Vec<Vec<usize>>,
}

/// Raw cell description handed to [`Partition::build`].
#[derive(Debug, Clone)]
pub struct RawCell {
    pub label: i64,
    pub nodes: Vec<usize>,
}

/// Raw edge-set entry: a cell index and a local edge index in the order the
/// cell's vertices were listed.
pub type RawEdge = (usize, usize);

impl Partition {
    /// Reads a mesh file in the `fpmmesh 1` text format.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        mesh::parse(text)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.subdomains.iter().map(|s| s.point)
    }

    pub fn n_points(&self) -> usize {
        self.subdomains.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.subdomains.len()
    }

    pub fn total_area(&self) -> f64 {
        self.subdomains.iter().map(|s| s.area).sum()
    }

    /// Area enclosed by the boundary faces (outer loop minus holes).
    pub fn boundary_enclosed_area(&self) -> f64 {
        self.boundary_faces
            .iter()
            .map(|f| {
                let [a, b] = f.endpoints;
                0.5 * (a[0] * b[1] - b[0] * a[1])
            })
            .sum()
    }

    /// Boundary faces addressed by a named edge set or node set. A node set
    /// selects every boundary face whose two endpoints both belong to it.
    pub fn boundary_faces_in_set(&self, name: &str) -> Result<Vec<usize>> {
        if let Some(faces) = self.edge_sets.get(name) {
            return faces
                .iter()
                .map(|f| match f {
                    FaceRef::Boundary(i) => Ok(*i),
                    FaceRef::Interior(i) => Err(Error::BoundaryCondition(format!(
                        "edge set '{name}' contains interior face {i}"
                    ))),
                })
                .collect();
        }
        if let Some(nodes) = self.node_sets.get(name) {
            let mut member = vec![false; self.nodes.len()];
            for &n in nodes {
                member[n] = true;
            }
            return Ok(self
                .boundary_faces
                .iter()
                .filter(|f| member[f.nodes[0]] && member[f.nodes[1]])
                .map(|f| f.id)
                .collect());
        }
        Err(Error::BoundaryCondition(format!("unknown set '{name}'")))
    }

    /// Interior faces addressed by a named edge set.
    pub fn interior_faces_in_set(&self, name: &str) -> Result<Vec<usize>> {
        let faces = self
            .edge_sets
            .get(name)
            .ok_or_else(|| Error::BoundaryCondition(format!("unknown edge set '{name}'")))?;
        Ok(faces
            .iter()
            .filter_map(|f| match f {
                FaceRef::Interior(i) => Some(*i),
                FaceRef::Boundary(_) => None,
            })
            .collect())
    }

    pub fn has_set(&self, name: &str) -> bool {
        self.edge_sets.contains_key(name) || self.node_sets.contains_key(name)
    }

    /// Builds and validates a partition from raw nodes and cells.
    pub fn build(
        nodes: Vec<Point>,
        node_labels: Vec<i64>,
        cells: Vec<RawCell>,
        node_sets: BTreeMap<String, Vec<usize>>,
        raw_edge_sets: BTreeMap<String, Vec<RawEdge>>,
    ) -> Result<Self> {
        let mut subdomains = Vec::with_capacity(cells.len());
        for (id, cell) in cells.iter().enumerate() {
            if cell.nodes.len() < 3 {
                return Err(Error::DegeneratePolygon {
                    cell: cell.label,
                    reason: format!("{} vertices", cell.nodes.len()),
                });
            }
            let mut ids = cell.nodes.clone();
            let mut verts: Vec<Point> = ids.iter().map(|&n| nodes[n]).collect();
            let a = geometry::signed_area(&verts);
            let scale = verts
                .iter()
                .flat_map(|p| [p[0].abs(), p[1].abs()])
                .fold(0.0, f64::max)
                .max(1.0);
            if !(a.abs() > 1e-14 * scale * scale) {
                return Err(Error::DegeneratePolygon {
                    cell: cell.label,
                    reason: "zero area".into(),
                });
            }
            if a < 0.0 {
                ids.reverse();
                verts.reverse();
            }
            if !geometry::is_simple(&verts) {
                return Err(Error::DegeneratePolygon {
                    cell: cell.label,
                    reason: "self-intersecting vertex loop".into(),
                });
            }
            for k in 0..ids.len() {
                if ids[k] == ids[(k + 1) % ids.len()] {
                    return Err(Error::DegeneratePolygon {
                        cell: cell.label,
                        reason: "repeated consecutive vertex".into(),
                    });
                }
            }
            let point = geometry::centroid(&verts);
            if !geometry::contains_strictly(&verts, point) {
                return Err(Error::DegeneratePolygon {
                    cell: cell.label,
                    reason: "centroid lies outside the polygon".into(),
                });
            }
            let area = a.abs();
            subdomains.push(Subdomain {
                id,
                label: cell.label,
                nodes: ids,
                vertices: verts,
                point,
                area,
                h_s: characteristic_length_of_area(area),
            });
        }

        // Face discovery in cell order, then local edge order.
        let mut order: Vec<(usize, usize)> = Vec::new();
        let mut uses: HashMap<(usize, usize), Vec<(usize, usize, usize)>> = HashMap::new();
        for s in &subdomains {
            let n = s.nodes.len();
            for k in 0..n {
                let (p, q) = (s.nodes[k], s.nodes[(k + 1) % n]);
                let key = (p.min(q), p.max(q));
                let entry = uses.entry(key).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push((s.id, p, q));
            }
        }

        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        let mut face_of_edge: HashMap<(usize, usize), FaceRef> = HashMap::new();
        let mut faces_of = vec![Vec::new(); subdomains.len()];
        let mut boundary_faces_of = vec![Vec::new(); subdomains.len()];
        for key in order {
            let u = &uses[&key];
            match u.len() {
                1 => {
                    let (owner, p, q) = u[0];
                    let (a, b) = (nodes[p], nodes[q]);
                    let id = boundary_faces.len();
                    boundary_faces.push(BoundaryFace {
                        id,
                        nodes: [p, q],
                        endpoints: [a, b],
                        owner,
                        normal: geometry::edge_normal(a, b),
                        length: geometry::distance(a, b),
                    });
                    boundary_faces_of[owner].push(id);
                    face_of_edge.insert(key, FaceRef::Boundary(id));
                }
                2 => {
                    let (c1, p1, q1) = u[0];
                    let (c2, p2, _) = u[1];
                    if c1 == c2 {
                        return Err(Error::InvalidMesh(format!(
                            "cell {} uses edge ({}, {}) twice",
                            subdomains[c1].label, node_labels[key.0], node_labels[key.1]
                        )));
                    }
                    if p1 == p2 {
                        return Err(Error::InvalidMesh(format!(
                            "cells {} and {} traverse their shared edge in the same direction (overlap)",
                            subdomains[c1].label, subdomains[c2].label
                        )));
                    }
                    let (e1, e2) = (c1.min(c2), c1.max(c2));
                    let (p, q) = if e1 == c1 { (p1, q1) } else { (q1, p1) };
                    let (a, b) = (nodes[p], nodes[q]);
                    let id = interior_faces.len();
                    interior_faces.push(InteriorFace {
                        id,
                        nodes: [p, q],
                        endpoints: [a, b],
                        owners: (e1, e2),
                        normal: geometry::edge_normal(a, b),
                        length: geometry::distance(a, b),
                    });
                    faces_of[e1].push(id);
                    faces_of[e2].push(id);
                    face_of_edge.insert(key, FaceRef::Interior(id));
                }
                _ => {
                    return Err(Error::NonManifoldFace(
                        node_labels[key.0],
                        node_labels[key.1],
                    ))
                }
            }
        }

        let mut edge_sets = BTreeMap::new();
        for (name, entries) in raw_edge_sets {
            let mut faces = Vec::with_capacity(entries.len());
            for (cell, k) in entries {
                let c = cells.get(cell).ok_or_else(|| {
                    Error::InvalidMesh(format!("edge set '{name}': unknown cell index {cell}"))
                })?;
                let n = c.nodes.len();
                if k >= n {
                    return Err(Error::InvalidMesh(format!(
                        "edge set '{name}': cell {} has no local edge {k}",
                        c.label
                    )));
                }
                let (p, q) = (c.nodes[k], c.nodes[(k + 1) % n]);
                faces.push(face_of_edge[&(p.min(q), p.max(q))]);
            }
            faces.sort();
            faces.dedup();
            edge_sets.insert(name, faces);
        }

        let part = Partition {
            nodes,
            node_labels,
            subdomains,
            interior_faces,
            boundary_faces,
            node_sets,
            edge_sets,
            faces_of,
            boundary_faces_of,
        };

        let total = part.total_area();
        let enclosed = part.boundary_enclosed_area();
        if (total - enclosed).abs() > 1e-10 * total {
            return Err(Error::InvalidMesh(format!(
                "subdomains do not tile the domain: cell area {total:.12e} vs boundary area {enclosed:.12e}"
            )));
        }
        Ok(part)
    }
}

/// Plane analysis assumption for the 3x3 constitutive matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisMode {
    #[default]
    PlaneStrain,
    PlaneStress,
}

/// Linear isotropic bulk material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Young's modulus.
    pub young: f64,
    pub poisson: f64,
    #[serde(default)]
    pub mode: AnalysisMode,
    /// Body force per unit volume.
    #[serde(default)]
    pub body_force: [f64; 2],
}

impl Material {
    pub fn new(young: f64, poisson: f64, mode: AnalysisMode) -> Result<Self> {
        let m = Material {
            young,
            poisson,
            mode,
            body_force: [0.0, 0.0],
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young > 0.0) || !self.young.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "Young's modulus must be positive, got {}",
                self.young
            )));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson's ratio must lie in [0, 0.5), got {}",
                self.poisson
            )));
        }
        Ok(())
    }

    /// Modulus `E / (1 - nu^2)` used for energy release rates in plane strain.
    pub fn plane_strain_modulus(&self) -> f64 {
        self.young / (1.0 - self.poisson * self.poisson)
    }
}

/// Constitutive matrix in Voigt order (11, 22, 12) with engineering shear.
pub fn elasticity_matrix(mat: &Material) -> Result<Matrix3<f64>> {
    mat.validate()?;
    let (e, nu) = (mat.young, mat.poisson);
    Ok(match mat.mode {
        AnalysisMode::PlaneStrain => {
            let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
            Matrix3::new(
                c * (1.0 - nu),
                c * nu,
                0.0,
                c * nu,
                c * (1.0 - nu),
                0.0,
                0.0,
                0.0,
                c * (1.0 - 2.0 * nu) / 2.0,
            )
        }
        AnalysisMode::PlaneStress => {
            let c = e / (1.0 - nu * nu);
            Matrix3::new(
                c,
                c * nu,
                0.0,
                c * nu,
                c,
                0.0,
                0.0,
                0.0,
                c * (1.0 - nu) / 2.0,
            )
        }
    })
}

/// Interface strength, fracture energy and penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceMaterial {
    /// Interface tensile strength t_c.
    pub strength: f64,
    /// Fracture energy G_c.
    pub fracture_energy: f64,
    /// Dimensionless penalty parameter lambda.
    pub lambda: f64,
}

impl InterfaceMaterial {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "interface strength must be positive, got {}",
                self.strength
            )));
        }
        if !(self.fracture_energy > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "fracture energy must be positive, got {}",
                self.fracture_energy
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "penalty parameter must be positive, got {}",
                self.lambda
            )));
        }
        if !(1e-2..=1e2).contains(&self.lambda) {
            log::warn!(
                "penalty parameter lambda = {} lies outside the usual range [1e-2, 1e2]",
                self.lambda
            );
        }
        Ok(())
    }
}

fn characteristic_length_of_area(area: f64) -> f64 {
    area.sqrt()
}

/// Characteristic length `h_s = sqrt(area)` of a subdomain.
pub fn characteristic_length(s: &Subdomain) -> f64 {
    characteristic_length_of_area(s.area)
}
