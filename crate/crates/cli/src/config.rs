//! Run configuration: a TOML document. Unknown keys are rejected, and
//! relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use fpm_core::{
    AnalysisMode, BoundaryCondition, InterfaceMaterial, LoadMonitor, Material, NotchSpec, Partition,
    ProblemOptions, SolverConfig,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisKind {
    /// Single linear solve at the last load factor.
    Elastic,
    /// Load schedule with damage; optionally repeated over penalty values.
    Damage,
    /// Repeated peak search and crack insertion.
    CrackGrowth,
    /// Notch toughness over materials and root radii.
    ToughnessSweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub kind: AnalysisKind,
    /// Damage runs: interior edge set sampled for the traction-separation CSV.
    #[serde(default)]
    pub samples: Option<String>,
    /// Damage runs: repeat the run for each penalty parameter.
    #[serde(default)]
    pub penalty_sweep: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub path: PathBuf,
}

/// Uniform load schedule `to / steps, 2 to / steps, ..., to`. Replaces
/// `solver.load_schedule` when present.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub steps: usize,
    pub to: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Write the final field dump.
    #[serde(default = "yes")]
    pub vtk: bool,
}

fn yes() -> bool {
    true
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: None, vtk: true }
    }
}

/// Bulk and interface parameters of one sweep material. The fracture
/// energy follows from the toughness in plane strain.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMaterial {
    pub name: String,
    pub young: f64,
    pub poisson: f64,
    pub strength: f64,
    /// Fracture toughness K_IC.
    pub toughness: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCase {
    pub radius: f64,
    pub mesh: PathBuf,
    pub notch: NotchSpec,
    /// Multiplies every boundary value for this geometry.
    #[serde(default = "unit")]
    pub bc_scale: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lambda: f64,
    #[serde(default)]
    pub mode: AnalysisMode,
    pub materials: Vec<SweepMaterial>,
    pub cases: Vec<SweepCase>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub analysis: Analysis,
    /// Required except for toughness sweeps, whose cases carry meshes.
    #[serde(default)]
    pub mesh: Option<MeshSection>,
    /// Required except for toughness sweeps, which list their materials.
    #[serde(default)]
    pub material: Option<Material>,
    #[serde(default)]
    pub interface: Option<InterfaceMaterial>,
    #[serde(default)]
    pub problem: ProblemOptions,
    #[serde(default)]
    pub bc: Vec<BoundaryCondition>,
    pub monitor: LoadMonitor,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub notch: Option<NotchSpec>,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

/// A parsed config together with its source text and location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    pub path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = config.schedule {
            if s.steps == 0 || !(s.to > 0.0) {
                return Err(CliError::Config(format!(
                    "{}: schedule needs steps >= 1 and a positive end value",
                    path.display()
                )));
            }
            config.solver.load_schedule =
                (1..=s.steps).map(|i| s.to * i as f64 / s.steps as f64).collect();
        }
        let loaded = LoadedConfig {
            config,
            text,
            path: path.to_path_buf(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Path relative to the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.path.parent().unwrap_or(Path::new("")).join(p)
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let bad = |m: String| Err(CliError::Config(format!("{}: {m}", self.path.display())));
        c.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(m) = &c.material {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(i) = &c.interface {
            i.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(n) = &c.notch {
            n.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        match c.analysis.kind {
            AnalysisKind::ToughnessSweep => {
                let Some(s) = &c.sweep else {
                    return bad("toughness-sweep needs a [sweep] table".into());
                };
                if s.materials.is_empty() || s.cases.is_empty() {
                    return bad("[sweep] needs at least one material and one case".into());
                }
                if c.material.is_some() || c.interface.is_some() || c.mesh.is_some() {
                    return bad("toughness-sweep takes materials and meshes from [sweep] only".into());
                }
                for m in &s.materials {
                    if !(m.toughness > 0.0) {
                        return bad(format!("sweep material {}: toughness must be positive", m.name));
                    }
                }
            }
            _ => {
                if c.mesh.is_none() || c.material.is_none() || c.interface.is_none() {
                    return bad("[mesh], [material] and [interface] are required".into());
                }
                if c.sweep.is_some() {
                    return bad("[sweep] only applies to toughness-sweep".into());
                }
            }
        }
        if c.analysis.kind != AnalysisKind::Damage
            && (c.analysis.samples.is_some() || !c.analysis.penalty_sweep.is_empty())
        {
            return bad("analysis.samples and analysis.penalty_sweep only apply to damage runs".into());
        }
        if c.analysis.penalty_sweep.iter().any(|l| !(*l > 0.0)) {
            return bad("penalty_sweep values must be positive".into());
        }
        Ok(())
    }

    /// Checks that every set named by the config exists in `part`.
    pub fn check_sets(&self, part: &Partition, mesh: &Path) -> Result<(), CliError> {
        let c = &self.config;
        let mut names: Vec<&str> = c.bc.iter().map(|b| b.set.as_str()).collect();
        names.push(&c.monitor.set);
        names.extend(c.problem.damageable_set.as_deref());
        names.extend(c.analysis.samples.as_deref());
        for n in names {
            if !part.has_set(n) {
                return Err(CliError::Config(format!(
                    "{}: set \"{n}\" does not exist in {}",
                    self.path.display(),
                    mesh.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIG: &str = r#"
[analysis]
kind = "damage"
samples = "interface"

[mesh]
path = "meshes/rig.fpmmesh"

[material]
young = 10.0
poisson = 0.0

[interface]
strength = 1.0
fracture_energy = 0.2
lambda = 1.0

[[bc]]
set = "top"
kind = "displacement"
component = "y"
value = 1.0

[monitor]
set = "top"
component = "y"

[schedule]
steps = 4
to = 0.5
"#;

    fn load(text: &str) -> Result<LoadedConfig, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        LoadedConfig::load(&path)
    }

    #[test]
    fn schedule_replaces_load_schedule() {
        let c = load(RIG).unwrap();
        assert_eq!(c.config.solver.load_schedule, vec![0.125, 0.25, 0.375, 0.5]);
        assert_eq!(c.config.analysis.kind, AnalysisKind::Damage);
        assert!(c.config.output.vtk);
    }

    #[test]
    fn paths_resolve_against_the_config() {
        let c = load(RIG).unwrap();
        let mesh = c.resolve(&c.config.mesh.as_ref().unwrap().path);
        assert_eq!(mesh, c.path.parent().unwrap().join("meshes/rig.fpmmesh"));
        assert_eq!(c.resolve(Path::new("/abs/m.fpmmesh")), PathBuf::from("/abs/m.fpmmesh"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = RIG.replace("lambda = 1.0", "lambda = 1.0\npenalty = 3.0");
        let e = load(&bad).unwrap_err();
        assert_eq!(e.category(), "config");
        assert!(e.to_string().contains("penalty"), "{e}");
    }

    #[test]
    fn kind_specific_sections_are_checked() {
        let e = load(&RIG.replace("kind = \"damage\"", "kind = \"crack-growth\"")).unwrap_err();
        assert!(e.to_string().contains("samples"), "{e}");
        let no_iface = RIG.replace("[interface]", "[unused]");
        assert!(load(&no_iface).is_err());
        let zero_steps = RIG.replace("steps = 4", "steps = 0");
        assert!(load(&zero_steps).unwrap_err().to_string().contains("schedule"));
        let bad_sweep = RIG.replace("samples = \"interface\"", "penalty_sweep = [1.0, -2.0]");
        assert!(load(&bad_sweep).is_err());
    }

    #[test]
    fn toughness_sweep_needs_its_table() {
        let sweep = RIG.replace("kind = \"damage\"\nsamples = \"interface\"", "kind = \"toughness-sweep\"");
        let e = load(&sweep).unwrap_err();
        assert!(e.to_string().contains("[sweep]"), "{e}");
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let e = LoadedConfig::load(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert_eq!(e.category(), "config");
    }
}
