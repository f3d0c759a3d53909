//! A boundary-value problem: partition, materials, boundary conditions and
//! the per-face constants derived from them.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{penalty_tensor, softening_constants, SofteningConstants};
use crate::model::{elasticity_matrix, InterfaceMaterial, Material, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Displacement,
    Traction,
}

/// Prescribed value on one component over a named node or edge set. The
/// value is the reference magnitude; it is scaled by the load factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryCondition {
    pub set: String,
    pub kind: BcKind,
    pub component: Component,
    pub value: f64,
}

/// Resolved condition on one component of one boundary face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceBc {
    Free,
    Displacement(f64),
    Traction(f64),
}

/// Optional problem settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    /// Dirichlet penalty multiplier; defaults to ten times the interior one.
    pub boundary_lambda: Option<f64>,
    pub thickness: Option<f64>,
    /// Edge set of the only interior faces allowed to damage.
    pub damageable_set: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub partition: Partition,
    pub material: Material,
    pub interface: InterfaceMaterial,
    /// Constitutive matrix of the bulk.
    pub d: Matrix3<f64>,
    pub bcs: Vec<BoundaryCondition>,
    /// Multiplier of the interior penalty used on Dirichlet faces.
    pub boundary_lambda: f64,
    /// Out-of-plane thickness used for reported forces.
    pub thickness: f64,
    pub face_bc: Vec<[FaceBc; 2]>,
    /// Penalty per boundary face.
    pub boundary_alpha: Vec<f64>,
    /// Softening constants per interior face.
    pub face_consts: Vec<SofteningConstants>,
    /// Interior faces allowed to damage.
    pub damageable: Vec<bool>,
}

impl Problem {
    pub fn new(
        partition: Partition,
        material: Material,
        interface: InterfaceMaterial,
        bcs: Vec<BoundaryCondition>,
    ) -> Result<Self> {
        Self::with_options(partition, material, interface, bcs, ProblemOptions::default())
    }

    pub fn with_options(
        partition: Partition,
        material: Material,
        interface: InterfaceMaterial,
        bcs: Vec<BoundaryCondition>,
        opts: ProblemOptions,
    ) -> Result<Self> {
        let d = elasticity_matrix(&material)?;
        interface.validate()?;
        let n_int = partition.interior_faces.len();
        let mut p = Problem {
            face_bc: vec![[FaceBc::Free; 2]; partition.boundary_faces.len()],
            boundary_alpha: Vec::new(),
            face_consts: Vec::with_capacity(n_int),
            damageable: vec![true; n_int],
            partition,
            material,
            interface,
            d,
            bcs: Vec::new(),
            boundary_lambda: opts.boundary_lambda.unwrap_or(10.0 * interface.lambda),
            thickness: 1.0,
        };
        p.set_thickness(opts.thickness.unwrap_or(1.0))?;
        if let Some(set) = &opts.damageable_set {
            p.mark_damageable(set)?;
        }
        p.derive_face_constants()?;
        p.set_boundary_lambda(p.boundary_lambda)?;
        p.set_bcs(bcs)?;
        Ok(p)
    }

    /// Softening constants for every interior face. Only faces that may
    /// damage must satisfy the brittleness bound.
    fn derive_face_constants(&mut self) -> Result<()> {
        let part = &self.partition;
        let mut consts = Vec::with_capacity(part.interior_faces.len());
        for f in &part.interior_faces {
            let (a, b) = f.owners;
            let h = 0.5 * (part.subdomains[a].h_s + part.subdomains[b].h_s);
            let alpha = penalty_tensor(self.interface.lambda, self.material.young, h)?.alpha;
            let (t_c, g_c) = (self.interface.strength, self.interface.fracture_energy);
            let c = match softening_constants(t_c, g_c, alpha) {
                Ok(c) => c,
                Err(Error::Brittleness { h: hh, .. }) if !self.damageable[f.id] => {
                    SofteningConstants {
                        alpha,
                        strength: t_c,
                        fracture_energy: g_c,
                        tau_c: t_c / alpha.sqrt(),
                        h: hh,
                        delta_c: t_c / alpha,
                        delta_f: 2.0 * g_c / t_c,
                    }
                }
                Err(e) => {
                    log::error!("interior face {} (size {h:.3e}) fails the softening law", f.id);
                    return Err(e);
                }
            };
            consts.push(c);
        }
        self.face_consts = consts;
        Ok(())
    }

    pub fn set_boundary_lambda(&mut self, lambda_b: f64) -> Result<()> {
        let part = &self.partition;
        self.boundary_alpha = part
            .boundary_faces
            .iter()
            .map(|f| {
                penalty_tensor(lambda_b, self.material.young, part.subdomains[f.owner].h_s)
                    .map(|p| p.alpha)
            })
            .collect::<Result<_>>()?;
        self.boundary_lambda = lambda_b;
        Ok(())
    }

    pub fn set_bcs(&mut self, bcs: Vec<BoundaryCondition>) -> Result<()> {
        let mut face_bc = vec![[FaceBc::Free; 2]; self.partition.boundary_faces.len()];
        for bc in &bcs {
            if !bc.value.is_finite() {
                return Err(Error::BoundaryCondition(format!(
                    "non-finite value on set '{}'",
                    bc.set
                )));
            }
            let faces = self.partition.boundary_faces_in_set(&bc.set)?;
            if faces.is_empty() {
                return Err(Error::BoundaryCondition(format!(
                    "set '{}' selects no boundary faces",
                    bc.set
                )));
            }
            let new = match bc.kind {
                BcKind::Displacement => FaceBc::Displacement(bc.value),
                BcKind::Traction => FaceBc::Traction(bc.value),
            };
            let c = bc.component.index();
            for f in faces {
                let slot = &mut face_bc[f][c];
                match (*slot, new) {
                    (FaceBc::Free, _) => *slot = new,
                    (a, b) if a == b => {}
                    (a, b) => {
                        return Err(Error::BoundaryCondition(format!(
                            "conflicting conditions {a:?} and {b:?} on component {:?} of boundary face {f} (set '{}')",
                            bc.component, bc.set
                        )))
                    }
                }
            }
        }
        self.face_bc = face_bc;
        self.bcs = bcs;
        Ok(())
    }

    pub fn set_thickness(&mut self, t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "thickness must be positive, got {t}"
            )));
        }
        self.thickness = t;
        Ok(())
    }

    fn mark_damageable(&mut self, set: &str) -> Result<()> {
        let faces = self.partition.interior_faces_in_set(set)?;
        if faces.is_empty() {
            return Err(Error::BoundaryCondition(format!(
                "damageable set '{set}' contains no interior faces"
            )));
        }
        self.damageable = vec![false; self.partition.interior_faces.len()];
        for f in faces {
            self.damageable[f] = true;
        }
        Ok(())
    }

    pub fn n_dofs(&self) -> usize {
        self.partition.n_dofs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AnalysisMode;

    fn plate() -> Partition {
        let text = "fpmmesh 1\n6 2\n0 0 0\n1 1 0\n2 2 0\n3 0 1\n4 1 1\n5 2 1\n\
                    0 4 0 1 4 3\n1 4 1 2 5 4\n\
                    nodeset left 2 0 3\nnodeset right 2 2 5\nnodeset bottom 3 0 1 2\n";
        Partition::parse(text).unwrap()
    }

    fn mats() -> (Material, InterfaceMaterial) {
        (
            Material::new(10.0, 0.0, AnalysisMode::PlaneStrain).unwrap(),
            InterfaceMaterial {
                strength: 1.0,
                fracture_energy: 0.2,
                lambda: 1.0,
            },
        )
    }

    fn bc(set: &str, kind: BcKind, component: Component, value: f64) -> BoundaryCondition {
        BoundaryCondition {
            set: set.into(),
            kind,
            component,
            value,
        }
    }

    #[test]
    fn face_constants_use_mean_owner_size() {
        let (m, i) = mats();
        let p = Problem::new(plate(), m, i, vec![]).unwrap();
        assert_eq!(p.face_consts.len(), 1);
        assert_eq!(p.face_consts[0].alpha, 10.0);
        assert_eq!(p.boundary_alpha[0], 100.0);
    }

    #[test]
    fn conflicting_conditions_rejected() {
        let (m, i) = mats();
        let bcs = vec![
            bc("left", BcKind::Displacement, Component::X, 0.0),
            bc("left", BcKind::Traction, Component::X, 1.0),
        ];
        assert!(matches!(
            Problem::new(plate(), m, i, bcs),
            Err(Error::BoundaryCondition(_))
        ));
        let ok = vec![
            bc("left", BcKind::Displacement, Component::X, 0.0),
            bc("bottom", BcKind::Displacement, Component::Y, 0.0),
            bc("right", BcKind::Traction, Component::X, 1.0),
        ];
        assert!(Problem::new(plate(), m, i, ok).is_ok());
        let unknown = vec![bc("top", BcKind::Traction, Component::X, 1.0)];
        assert!(Problem::new(plate(), m, i, unknown).is_err());
    }

    #[test]
    fn brittle_interface_rejected() {
        let (m, mut i) = mats();
        i.fracture_energy = 0.01;
        assert!(matches!(
            Problem::new(plate(), m, i, vec![]),
            Err(Error::Brittleness { .. })
        ));
    }
}
