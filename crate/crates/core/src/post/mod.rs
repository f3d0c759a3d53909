//! Engineering quantities from converged solutions, and file exports.

mod export;

pub use export::{
    face_samples, read_vtk, write_crack_path, write_events, write_load_displacement,
    write_traction_separation, write_vtk, FaceSample, VtkData,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{geometry, Partition, Point};

/// Notch description for stress-concentration sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchSpec {
    /// Point at the notch root.
    pub root: Point,
    /// Root radius.
    pub radius: f64,
    /// Net-section width carrying the load.
    pub net_width: f64,
    /// Sampling radius in multiples of each subdomain's characteristic length.
    #[serde(default = "default_region")]
    pub region_factor: f64,
}

fn default_region() -> f64 {
    2.0
}

impl NotchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.net_width > 0.0 && self.region_factor > 0.0) {
            return Err(Error::InvalidMaterial(
                "notch radius, net width and region factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// In-plane principal stresses (largest first) of a Voigt stress.
pub fn principal_stresses(s: [f64; 3]) -> [f64; 2] {
    let c = 0.5 * (s[0] + s[1]);
    let r = (0.5 * (s[0] - s[1])).hypot(s[2]);
    [c + r, c - r]
}

/// Largest principal stress over the subdomains whose Fragile Point lies
/// within `region_factor * h_s` of the notch root, divided by the nominal
/// net-section stress.
pub fn stress_concentration_factor(
    part: &Partition,
    stress: &[[f64; 3]],
    spec: &NotchSpec,
    nominal_stress: f64,
) -> Result<f64> {
    spec.validate()?;
    let peak = part
        .subdomains
        .iter()
        .filter(|s| geometry::distance(s.point, spec.root) <= spec.region_factor * s.h_s)
        .map(|s| principal_stresses(stress[s.id])[0])
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    match peak {
        Some(p) => Ok(p / nominal_stress),
        None => Err(Error::InvalidMaterial(format!(
            "no subdomain lies within {} h_s of the notch root ({}, {})",
            spec.region_factor, spec.root[0], spec.root[1]
        ))),
    }
}

/// Critical generalized stress intensity factor of a U-notch,
/// `K_t σ_NC sqrt(π R / 4)`.
pub fn notch_toughness(kt: f64, sigma_nc: f64, radius: f64) -> f64 {
    kt * sigma_nc * (std::f64::consts::PI * radius / 4.0).sqrt()
}

/// Plane-strain fracture energy `K_IC² (1 − ν²) / E`.
pub fn fracture_energy_from_toughness(k_ic: f64, young: f64, poisson: f64) -> f64 {
    k_ic * k_ic / (young / (1.0 - poisson * poisson))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn toughness_examples() {
        assert_relative_eq!(notch_toughness(1.0, 1.0, 4.0 / std::f64::consts::PI), 1.0, epsilon = 1e-15);
        assert_relative_eq!(notch_toughness(2.0, 100e6, 2e-3), 7.926654595212023e6, max_relative = 1e-12);
    }

    #[test]
    fn table_one_fracture_energies() {
        let g = fracture_energy_from_toughness(1.7e6, 5.05e9, 0.4);
        assert_relative_eq!(g, 480.7128712871287, max_relative = 1e-12);
        let g = fracture_energy_from_toughness(3.8e6, 373e9, 0.2);
        assert_relative_eq!(g, 37.16461126005362, max_relative = 1e-12);
        let g = fracture_energy_from_toughness(5.9e6, 207e9, 0.2);
        assert_relative_eq!(g, 161.4376811594203, max_relative = 1e-12);
    }

    #[test]
    fn principal_values() {
        assert_eq!(principal_stresses([3.0, 1.0, 0.0]), [3.0, 1.0]);
        let p = principal_stresses([0.0, 0.0, 2.0]);
        assert_relative_eq!(p[0], 2.0);
        assert_relative_eq!(p[1], -2.0);
    }

    proptest::proptest! {
        #[test]
        fn toughness_scales_linearly(kt in 0.5f64..5.0, s in 1.0f64..1e9, r in 1e-4f64..1e-1, c in 0.1f64..10.0) {
            let a = notch_toughness(kt, s, r);
            let b = notch_toughness(kt, c * s, r);
            proptest::prop_assert!((b - c * a).abs() <= 1e-14 * b.abs());
        }
    }
}
