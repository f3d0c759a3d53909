//! Analysis pipelines and their outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fpm_core::post::{
    face_samples, fracture_energy_from_toughness, notch_toughness, stress_concentration_factor,
    write_crack_path, write_events, write_load_displacement, write_traction_separation, write_vtk,
    FaceSample,
};
use fpm_core::{
    BoundaryCondition, Checkpoint, FaceState, InterfaceMaterial, Material, Partition, Problem,
    Solver, StepRecord,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AnalysisKind, LoadedConfig, SweepCase, SweepMaterial};
use crate::CliError;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub check_only: bool,
    pub resume: Option<PathBuf>,
    pub threads: usize,
}

/// Per-run record of the irreversibility and dissipation checks made on
/// every converged step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub steps_checked: usize,
    /// No quadrature point lost damage between consecutive steps.
    pub damage_monotone: bool,
    /// No damage threshold decreased between consecutive steps.
    pub threshold_monotone: bool,
    /// Every step dissipated a non-negative amount of energy.
    pub dissipation_nonnegative: bool,
    pub min_dissipation_increment: f64,
    /// Smallest `(W - U - D) / W` over the steps with positive work `W`,
    /// where `U` is the stored secant energy and `D` the energy dissipated
    /// since the start of the load path.
    #[serde(default)]
    pub min_energy_margin: Option<f64>,
}

impl Default for Invariants {
    fn default() -> Self {
        Invariants {
            steps_checked: 0,
            damage_monotone: true,
            threshold_monotone: true,
            dissipation_nonnegative: true,
            min_dissipation_increment: 0.0,
            min_energy_margin: None,
        }
    }
}

impl Invariants {
    pub fn hold(&self) -> bool {
        self.damage_monotone && self.threshold_monotone && self.dissipation_nonnegative
    }

    fn merge(&mut self, o: &Invariants) {
        self.steps_checked += o.steps_checked;
        self.damage_monotone &= o.damage_monotone;
        self.threshold_monotone &= o.threshold_monotone;
        self.dissipation_nonnegative &= o.dissipation_nonnegative;
        self.min_dissipation_increment = self.min_dissipation_increment.min(o.min_dissipation_increment);
        self.min_energy_margin = match (self.min_energy_margin, o.min_energy_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }

    /// Energy balance over load paths; a path that opens with an unloaded
    /// record counts dissipation from there.
    fn energy(&mut self, paths: &[Vec<StepRecord>]) {
        for path in paths {
            let Some(first) = path.first() else { continue };
            let base = if first.external_work == 0.0 { first.dissipated } else { 0.0 };
            for r in path.iter().filter(|r| r.external_work > 0.0) {
                let m = (r.external_work - r.stored_energy - (r.dissipated - base)) / r.external_work;
                self.min_energy_margin = Some(self.min_energy_margin.map_or(m, |v| v.min(m)));
            }
        }
    }
}

#[derive(Default)]
struct Tracker {
    prev: Option<(Vec<FaceState>, f64)>,
    inv: Invariants,
}

impl Tracker {
    fn observe(&mut self, s: &Solver, rec: &StepRecord) {
        let faces = s.faces();
        if let Some((prev, dissipated)) = &self.prev {
            for (a, b) in faces.iter().zip(prev) {
                for (p, q) in a.qp.iter().zip(&b.qp) {
                    self.inv.damage_monotone &= p.d >= q.d;
                    self.inv.threshold_monotone &= p.r >= q.r;
                }
            }
            let inc = rec.dissipated - dissipated;
            // round-off of a sum over all faces
            let tol = 1e-12 * rec.dissipated.abs().max(dissipated.abs());
            self.inv.dissipation_nonnegative &= inc >= -tol;
            self.inv.min_dissipation_increment = self.inv.min_dissipation_increment.min(inc);
        }
        self.inv.steps_checked += 1;
        self.prev = Some((faces.to_vec(), rec.dissipated));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: String,
    pub config_sha256: String,
    pub analysis: String,
    pub check_only: bool,
    pub threads: usize,
    pub wall_time_s: f64,
    /// Newton iterations of every converged step, per solver run.
    pub step_iterations: Vec<Vec<usize>>,
    /// Emitted files, relative to the output directory.
    pub files: Vec<String>,
    pub invariants: Invariants,
    #[serde(default)]
    pub stop_reason: Option<String>,
    /// Cracked faces in insertion order.
    #[serde(default)]
    pub cracked_faces: Vec<usize>,
}

/// Crack-growth progress tied to the config that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResumeFile {
    pub config_sha256: String,
    pub checkpoint: Checkpoint,
}

pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("FPM_GIT_DESCRIBE"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Outputs<'_> {
    fn path(&mut self, rel: &str) -> PathBuf {
        self.files.push(rel.to_string());
        self.dir.join(rel)
    }

    fn text(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(d) = p.parent() {
            std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }
}

fn load_mesh(cfg: &LoadedConfig, rel: &Path) -> Result<(Partition, PathBuf), CliError> {
    let path = cfg.resolve(rel);
    let part = Partition::load(&path).map_err(|e| match e {
        fpm_core::Error::Io { .. } => CliError::Mesh(e.to_string()),
        e => CliError::Core(e),
    })?;
    Ok((part, path))
}

fn build_problem(
    cfg: &LoadedConfig,
    part: Partition,
    material: Material,
    interface: InterfaceMaterial,
    bcs: Vec<BoundaryCondition>,
) -> Result<Problem, CliError> {
    Problem::with_options(part, material, interface, bcs, cfg.config.problem.clone()).map_err(CliError::Core)
}

/// Runs the configured analysis, writing outputs and the manifest into
/// `out`.
pub fn run(cfg: &LoadedConfig, out: &Path, opts: &RunOptions) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let c = &cfg.config;
    let mut o = Outputs { dir: out, files: Vec::new() };
    let mut manifest = Manifest {
        version: version(),
        config: cfg.path.display().to_string(),
        config_sha256: sha256_hex(cfg.text.as_bytes()),
        analysis: format!("{:?}", c.analysis.kind),
        check_only: opts.check_only,
        threads: opts.threads,
        wall_time_s: 0.0,
        step_iterations: Vec::new(),
        files: Vec::new(),
        invariants: Invariants::default(),
        stop_reason: None,
        cracked_faces: Vec::new(),
    };
    if opts.resume.is_some() && c.analysis.kind != AnalysisKind::CrackGrowth {
        return Err(CliError::Config("--resume only applies to crack-growth runs".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match c.analysis.kind {
        AnalysisKind::ToughnessSweep => sweep(cfg, &mut o, &mut manifest, opts)?,
        kind => {
            let mesh = &c.mesh.as_ref().expect("validated").path;
            let (part, mesh_path) = load_mesh(cfg, mesh)?;
            cfg.check_sets(&part, &mesh_path)?;
            let lambdas = if c.analysis.penalty_sweep.is_empty() {
                vec![c.interface.expect("validated").lambda]
            } else {
                c.analysis.penalty_sweep.clone()
            };
            for &lambda in &lambdas {
                let iface = InterfaceMaterial { lambda, ..c.interface.expect("validated") };
                let material = c.material.expect("validated");
                let problem = build_problem(cfg, part.clone(), material, iface, c.bc.clone())?;
                if opts.check_only {
                    continue;
                }
                let prefix = if c.analysis.penalty_sweep.is_empty() {
                    String::new()
                } else {
                    format!("lambda-{lambda}/")
                };
                match kind {
                    AnalysisKind::Elastic => elastic(cfg, &problem, &mut o, &mut manifest)?,
                    AnalysisKind::Damage => damage(cfg, &problem, &prefix, &mut o, &mut manifest)?,
                    AnalysisKind::CrackGrowth => crack_growth(cfg, &problem, &mut o, &mut manifest, opts)?,
                    AnalysisKind::ToughnessSweep => unreachable!(),
                }
            }
        }
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.files = o.files.clone();
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let p = out.join(MANIFEST_FILE);
    std::fs::write(&p, json).map_err(|e| CliError::io(&p, e))?;
    Ok(manifest)
}

fn new_solver<'a>(cfg: &LoadedConfig, p: &'a Problem) -> Result<Solver<'a>, CliError> {
    Solver::new(p, cfg.config.solver.clone(), cfg.config.monitor.clone()).map_err(CliError::Core)
}

fn elastic(cfg: &LoadedConfig, p: &Problem, o: &mut Outputs, m: &mut Manifest) -> Result<(), CliError> {
    let lf = *cfg.config.solver.load_schedule.last().expect("validated schedule");
    let config = fpm_core::SolverConfig {
        load_schedule: vec![lf],
        ..cfg.config.solver.clone()
    };
    let mut s = Solver::new(p, config, cfg.config.monitor.clone()).map_err(CliError::Core)?;
    let mut tracker = Tracker::default();
    let path = s.run_schedule(&mut |s, rec| tracker.observe(s, rec)).map_err(CliError::Core)?;
    let load = s.load();
    tracker.inv.energy(std::slice::from_ref(&path));
    write_load_displacement(&o.path("load_displacement.csv"), &[path]).map_err(CliError::Core)?;
    let state = s.state();
    if let Some(n) = &cfg.config.notch {
        let nominal = load / (n.net_width * p.thickness);
        let kt = stress_concentration_factor(&p.partition, &state.stress, n, nominal).map_err(CliError::Core)?;
        o.text(
            "notch.csv",
            &format!("load,nominal_stress,kt\n{},{},{}\n", num(load), num(nominal), num(kt)),
        )?;
    }
    if cfg.config.output.vtk {
        write_vtk(&o.path("fields.vtk"), &p.partition, &state).map_err(CliError::Core)?;
    }
    m.step_iterations.push(s.iteration_log.clone());
    m.invariants.merge(&tracker.inv);
    Ok(())
}

fn damage(
    cfg: &LoadedConfig,
    p: &Problem,
    prefix: &str,
    o: &mut Outputs,
    m: &mut Manifest,
) -> Result<(), CliError> {
    let mut s = new_solver(cfg, p)?;
    let faces = match &cfg.config.analysis.samples {
        Some(set) => p.partition.interior_faces_in_set(set).map_err(CliError::Core)?,
        None => Vec::new(),
    };
    let mut rows: Vec<(usize, FaceSample)> = Vec::new();
    let mut tracker = Tracker::default();
    let path = s
        .run_schedule(&mut |s, rec| {
            tracker.observe(s, rec);
            if !faces.is_empty() {
                let st = s.state();
                for fs in face_samples(s.problem(), s.tables(), &st, &faces) {
                    rows.push((rec.step, fs));
                }
            }
        })
        .map_err(CliError::Core)?;
    tracker.inv.energy(std::slice::from_ref(&path));
    write_load_displacement(&o.path(&format!("{prefix}load_displacement.csv")), &[path]).map_err(CliError::Core)?;
    if !faces.is_empty() {
        write_traction_separation(&o.path(&format!("{prefix}traction_separation.csv")), &rows)
            .map_err(CliError::Core)?;
    }
    if cfg.config.output.vtk {
        write_vtk(&o.path(&format!("{prefix}fields.vtk")), &p.partition, &s.state()).map_err(CliError::Core)?;
    }
    m.step_iterations.push(s.iteration_log.clone());
    m.invariants.merge(&tracker.inv);
    Ok(())
}

fn crack_growth(
    cfg: &LoadedConfig,
    p: &Problem,
    o: &mut Outputs,
    m: &mut Manifest,
    opts: &RunOptions,
) -> Result<(), CliError> {
    let mut s = new_solver(cfg, p)?;
    let resume = match &opts.resume {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let r: ResumeFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if r.config_sha256 != m.config_sha256 {
                return Err(CliError::Config(format!(
                    "{} was written for a different config (sha256 {})",
                    path.display(),
                    r.config_sha256
                )));
            }
            Some(r.checkpoint)
        }
        None => None,
    };
    let checkpoint_path = o.dir.join(CHECKPOINT_FILE);
    let sha = m.config_sha256.clone();
    let mut tracker = Tracker::default();
    let report = s
        .crack_growth(
            resume,
            &mut |s, rec| tracker.observe(s, rec),
            &mut |cp| {
                let json = serde_json::to_string(&ResumeFile {
                    config_sha256: sha.clone(),
                    checkpoint: cp.clone(),
                })
                .expect("checkpoint serializes");
                std::fs::write(&checkpoint_path, json).map_err(|e| fpm_core::Error::Io {
                    path: checkpoint_path.clone(),
                    source: e,
                })
            },
        )
        .map_err(CliError::Core)?;
    tracker.inv.energy(&report.paths);
    if checkpoint_path.exists() {
        o.files.push(CHECKPOINT_FILE.into());
    }
    write_load_displacement(&o.path("load_displacement.csv"), &report.paths).map_err(CliError::Core)?;
    write_events(&o.path("events.csv"), &report.events).map_err(CliError::Core)?;
    write_crack_path(&o.path("crack_path.csv"), &report.events).map_err(CliError::Core)?;
    if cfg.config.output.vtk {
        write_vtk(&o.path("fields.vtk"), &p.partition, &s.state()).map_err(CliError::Core)?;
    }
    m.step_iterations.push(s.iteration_log.clone());
    m.invariants.merge(&tracker.inv);
    m.stop_reason = Some(report.stop_reason.clone());
    m.cracked_faces = report.cracked_faces();
    Ok(())
}

/// One toughness row: elastic solve for K_t, then the intact peak load.
fn sweep_case(
    cfg: &LoadedConfig,
    case: &SweepCase,
    part: &Partition,
    mat: &SweepMaterial,
    check_only: bool,
    m: &mut Manifest,
) -> Result<Option<String>, CliError> {
    let c = &cfg.config;
    let g_c = fracture_energy_from_toughness(mat.toughness, mat.young, mat.poisson);
    let sw = c.sweep.as_ref().expect("validated");
    let material = Material::new(mat.young, mat.poisson, sw.mode).map_err(CliError::Core)?;
    let iface = InterfaceMaterial {
        strength: mat.strength,
        fracture_energy: g_c,
        lambda: sw.lambda,
    };
    let bcs: Vec<BoundaryCondition> = c
        .bc
        .iter()
        .map(|b| BoundaryCondition { value: b.value * case.bc_scale, ..b.clone() })
        .collect();
    let p = build_problem(cfg, part.clone(), material, iface, bcs)
        .map_err(|e| e.context(format!("material {}, radius {}", mat.name, case.radius)))?;
    if check_only {
        return Ok(None);
    }
    let mut tracker = Tracker::default();

    // K_t well below onset; the problem is linear there.
    let mut s = new_solver(cfg, &p)?;
    let lf = 1e-3 * c.solver.load_schedule[0];
    s.nr_iterate(lf, false).map_err(CliError::Core)?;
    if s.faces().iter().any(|f| f.is_damaged()) {
        return Err(CliError::Config(format!(
            "material {}, radius {}: damage already at load factor {lf:e}; lower the boundary values",
            mat.name, case.radius
        )));
    }
    let nominal = s.load() / (case.notch.net_width * p.thickness);
    let kt = stress_concentration_factor(&p.partition, &s.state().stress, &case.notch, nominal)
        .map_err(CliError::Core)?;
    m.step_iterations.push(s.iteration_log.clone());

    let mut s = new_solver(cfg, &p)?;
    let peak = s
        .find_peak_load(&mut |s, rec| tracker.observe(s, rec))
        .map_err(CliError::Core)?;
    tracker.inv.energy(std::slice::from_ref(&peak.path));
    m.step_iterations.push(s.iteration_log.clone());
    m.invariants.merge(&tracker.inv);
    let sigma_nc = peak.load / (case.notch.net_width * p.thickness);
    let k_cu = notch_toughness(kt, sigma_nc, case.radius);
    Ok(Some(format!(
        "{},{},{},{},{},{},{},{},{}",
        mat.name,
        num(case.radius),
        num(g_c),
        num(kt),
        num(peak.load),
        num(sigma_nc),
        num(k_cu),
        num(mat.toughness),
        num(k_cu / mat.toughness)
    )))
}

fn sweep(cfg: &LoadedConfig, o: &mut Outputs, m: &mut Manifest, opts: &RunOptions) -> Result<(), CliError> {
    let sw = cfg.config.sweep.as_ref().expect("validated");
    let mut csv = String::from("material,radius,fracture_energy,kt,peak_load,sigma_nc,k_cu,k_ic,k_cu_over_k_ic\n");
    for case in &sw.cases {
        let (part, mesh_path) = load_mesh(cfg, &case.mesh)?;
        cfg.check_sets(&part, &mesh_path)?;
        for mat in &sw.materials {
            if let Some(row) = sweep_case(cfg, case, &part, mat, opts.check_only, m)? {
                csv.push_str(&row);
                csv.push('\n');
            }
        }
    }
    if !opts.check_only {
        o.text("toughness.csv", &csv)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(w: f64, u: f64, d: f64) -> StepRecord {
        StepRecord {
            step: 0,
            load_factor: 0.0,
            control: 0.0,
            load: 0.0,
            iterations: 1,
            external_work: w,
            stored_energy: u,
            dissipated: d,
        }
    }

    #[test]
    fn sha256_of_empty_and_abc() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn energy_margin_counts_dissipation_from_an_unloaded_start() {
        let mut inv = Invariants::default();
        // the unloaded record carries 0.5 dissipated by earlier paths
        inv.energy(&[vec![rec(0.0, 0.0, 0.5), rec(2.0, 1.0, 0.9)]]);
        assert!((inv.min_energy_margin.unwrap() - 0.3).abs() < 1e-15);
        // a path that starts loaded counts everything
        inv.energy(&[vec![rec(1.0, 0.5, 0.6)]]);
        assert!((inv.min_energy_margin.unwrap() + 0.1).abs() < 1e-15);
        let mut none = Invariants::default();
        none.energy(&[vec![rec(0.0, 0.0, 0.0)], vec![]]);
        assert_eq!(none.min_energy_margin, None);
    }

    #[test]
    fn merge_keeps_the_worst_case() {
        let mut a = Invariants {
            steps_checked: 3,
            min_dissipation_increment: -1e-20,
            min_energy_margin: None,
            ..Invariants::default()
        };
        let b = Invariants {
            steps_checked: 2,
            damage_monotone: false,
            min_dissipation_increment: 0.0,
            min_energy_margin: Some(1e-3),
            ..Invariants::default()
        };
        a.merge(&b);
        assert_eq!(a.steps_checked, 5);
        assert!(!a.damage_monotone && a.threshold_monotone);
        assert!(!a.hold());
        assert_eq!(a.min_dissipation_increment, -1e-20);
        assert_eq!(a.min_energy_margin, Some(1e-3));
    }
}
