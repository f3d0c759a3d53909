//! Shared fixtures for the benchmarks: an opening rig on a structured
//! rectangle and the shipped DEUNT half model.

use std::path::Path;

use fpm_core::{
    AnalysisMode, BcKind, BoundaryCondition, Component, InterfaceMaterial, LoadMonitor, Material,
    Partition, Problem, ProblemOptions,
};
use fpm_meshgen::shapes;

fn disp(set: &str, component: Component, value: f64) -> BoundaryCondition {
    BoundaryCondition {
        set: set.into(),
        kind: BcKind::Displacement,
        component,
        value,
    }
}

/// `nx` by `ny` cells on a 1 x 2 plate pulled apart at the top.
pub fn rectangle(nx: usize, ny: usize) -> (Problem, LoadMonitor) {
    let mesh = shapes::rectangle([0.0, 0.0], 1.0, 2.0, nx, ny);
    let part = Partition::parse(&mesh.to_fpmmesh("")).expect("generated mesh parses");
    let p = Problem::new(
        part,
        Material::new(10.0, 0.3, AnalysisMode::PlaneStrain).expect("valid material"),
        InterfaceMaterial {
            strength: 1.0,
            fracture_energy: 0.2,
            lambda: 1.0,
        },
        vec![
            disp("bottom", Component::X, 0.0),
            disp("bottom", Component::Y, 0.0),
            disp("top", Component::Y, 0.01),
        ],
    )
    .expect("valid problem");
    let monitor = LoadMonitor {
        set: "top".into(),
        component: Component::Y,
        multiplier: 1.0,
    };
    (p, monitor)
}

/// The PMMA DEUNT half model on the structured root-radius 2 mm mesh.
pub fn deunt() -> (Problem, LoadMonitor) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/meshes/deunt-r2.fpmmesh");
    let text = std::fs::read_to_string(&path).expect("shipped DEUNT mesh");
    let part = Partition::parse(&text).expect("DEUNT mesh parses");
    let p = Problem::with_options(
        part,
        Material::new(5.05e9, 0.4, AnalysisMode::PlaneStrain).expect("valid material"),
        InterfaceMaterial {
            strength: 128e6,
            fracture_energy: 480.7,
            lambda: 10.0,
        },
        vec![
            disp("sym", Component::X, 0.0),
            disp("bottom", Component::Y, 0.0),
            disp("top", Component::Y, 1e-3),
        ],
        ProblemOptions {
            thickness: Some(0.01),
            damageable_set: Some("damageable".into()),
            ..Default::default()
        },
    )
    .expect("valid problem");
    let monitor = LoadMonitor {
        set: "top".into(),
        component: Component::Y,
        multiplier: 2.0,
    };
    (p, monitor)
}
