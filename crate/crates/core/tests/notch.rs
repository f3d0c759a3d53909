//! Stress concentration on elastic solves.

use fpm_core::post::stress_concentration_factor;
use fpm_core::problem::ProblemOptions;
use fpm_core::solver::{LoadMonitor, Solver};
use fpm_core::{
    AnalysisMode, BcKind, BoundaryCondition, Component, InterfaceMaterial, Material, NotchSpec,
    Partition, Problem, SolverConfig,
};
use fpm_meshgen::{shapes, Mesh};

fn bc(set: &str, kind: BcKind, component: Component, value: f64) -> BoundaryCondition {
    BoundaryCondition {
        set: set.into(),
        kind,
        component,
        value,
    }
}

/// Stresses of one elastic solve with the right edge pulled by a unit
/// traction and symmetry on the left and bottom edges.
fn pulled(mesh: &Mesh) -> (Problem, Vec<[f64; 3]>) {
    let p = Problem::with_options(
        Partition::parse(&mesh.to_fpmmesh("")).unwrap(),
        Material::new(1e3, 0.3, AnalysisMode::PlaneStress).unwrap(),
        InterfaceMaterial {
            strength: 1e3,
            fracture_energy: 1e6,
            lambda: 1.0,
        },
        vec![
            bc("left", BcKind::Displacement, Component::X, 0.0),
            bc("bottom", BcKind::Displacement, Component::Y, 0.0),
            bc("right", BcKind::Traction, Component::X, 1.0),
        ],
        ProblemOptions::default(),
    )
    .unwrap();
    let cfg = SolverConfig {
        load_schedule: vec![1.0],
        ..Default::default()
    };
    let monitor = LoadMonitor {
        set: "left".into(),
        component: Component::X,
        multiplier: 1.0,
    };
    let stress = {
        let mut s = Solver::new(&p, cfg, monitor).unwrap();
        s.run_schedule(&mut |_, _| {}).unwrap();
        s.state().stress
    };
    (p, stress)
}

#[test]
fn uniform_bar_has_no_concentration() {
    let mesh = shapes::rectangle([0.0, 0.0], 4.0, 1.0, 8, 2);
    let (p, stress) = pulled(&mesh);
    let spec = NotchSpec {
        root: [2.0, 0.5],
        radius: 0.5,
        net_width: 1.0,
        region_factor: 2.0,
    };
    let kt = stress_concentration_factor(&p.partition, &stress, &spec, 1.0).unwrap();
    assert!((kt - 1.0).abs() < 1e-8, "K_t {kt}");
}

#[test]
fn circular_hole_approaches_kirsch() {
    // hole radius 1 in a 20 x 20 plate; remote stress 1
    let mesh = shapes::plate_with_hole(1.0, 10.0, 48, 30, 0.03);
    let (p, stress) = pulled(&mesh);
    let spec = NotchSpec {
        root: [0.0, 1.0],
        radius: 1.0,
        net_width: 9.0,
        region_factor: 2.0,
    };
    let kt = stress_concentration_factor(&p.partition, &stress, &spec, 1.0).unwrap();
    assert!((kt - 3.0).abs() <= 0.15 * 3.0, "K_t {kt}");
}
