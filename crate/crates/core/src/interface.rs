//! Interior-face operators and the interface debonding law.
//!
//! The numerical flux across an interior face is `t* = {σ n} - α [u]`.
//! Damage scales it to `t*d = (1 - d) t*`. The damage variable is driven by
//! the energy norm `τ = sqrt(α) |δ|` of the conjugate `δ = t* / α` and
//! follows linear softening: the flux-opening curve rises to the strength
//! `t_c` and decays linearly to zero, enclosing the fracture energy `G_c`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Damage level at which a quadrature point counts as fully cracked.
pub const CRACK_THRESHOLD: f64 = 1.0 - 1e-9;

/// `([w], {w})` for the traces of `w` on the E1 and E2 sides.
pub fn jump_and_average(w_e1: f64, w_e2: f64) -> (f64, f64) {
    (w_e1 - w_e2, 0.5 * (w_e1 + w_e2))
}

/// Componentwise [`jump_and_average`] for 2-vectors.
pub fn jump_and_average_vec(w_e1: [f64; 2], w_e2: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let (j0, a0) = jump_and_average(w_e1[0], w_e2[0]);
    let (j1, a1) = jump_and_average(w_e1[1], w_e2[1]);
    ([j0, j1], [a0, a1])
}

/// Isotropic interfacial stiffness `α = λ E / h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTensor {
    pub alpha: f64,
}

pub fn penalty_tensor(lambda: f64, young: f64, h: f64) -> Result<PenaltyTensor> {
    if !(lambda > 0.0 && young > 0.0 && h > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "penalty needs positive lambda, E and h (got {lambda}, {young}, {h})"
        )));
    }
    Ok(PenaltyTensor {
        alpha: lambda * young / h,
    })
}

/// Traction `σ n` of a Voigt stress (11, 22, 12).
pub fn traction(sigma: [f64; 3], n: [f64; 2]) -> [f64; 2] {
    [
        sigma[0] * n[0] + sigma[2] * n[1],
        sigma[2] * n[0] + sigma[1] * n[1],
    ]
}

/// IIPG flux `{σ n} - α [u]` at a face point with normal `n` (E1 to E2).
pub fn undamaged_flux(
    n: [f64; 2],
    sigma_e1: [f64; 3],
    sigma_e2: [f64; 3],
    u_e1: [f64; 2],
    u_e2: [f64; 2],
    alpha: f64,
) -> [f64; 2] {
    let (_, avg) = jump_and_average_vec(traction(sigma_e1, n), traction(sigma_e2, n));
    let (jump, _) = jump_and_average_vec(u_e1, u_e2);
    [avg[0] - alpha * jump[0], avg[1] - alpha * jump[1]]
}

pub fn conjugate_delta(t_star: [f64; 2], alpha: f64) -> [f64; 2] {
    [t_star[0] / alpha, t_star[1] / alpha]
}

/// `τ = sqrt(δᵀ α δ)`.
pub fn energy_norm(delta: [f64; 2], alpha: f64) -> f64 {
    alpha.sqrt() * delta[0].hypot(delta[1])
}

pub fn damaged_flux(t_star: [f64; 2], d: f64) -> [f64; 2] {
    [(1.0 - d) * t_star[0], (1.0 - d) * t_star[1]]
}

/// Constants of the linear softening law for one penalty value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofteningConstants {
    pub alpha: f64,
    pub strength: f64,
    pub fracture_energy: f64,
    /// Energy norm at damage onset, also the initial threshold.
    pub tau_c: f64,
    /// Softening constant `1 - τ_c² / (2 G_c)`.
    pub h: f64,
    /// Conjugate magnitude at onset.
    pub delta_c: f64,
    /// Conjugate magnitude at full failure.
    pub delta_f: f64,
}

pub fn softening_constants(t_c: f64, g_c: f64, alpha: f64) -> Result<SofteningConstants> {
    if !(t_c > 0.0 && g_c > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "softening law needs positive t_c, G_c and alpha (got {t_c}, {g_c}, {alpha})"
        )));
    }
    let delta_c = t_c / alpha;
    let tau_c = t_c / alpha.sqrt();
    let delta_f = 2.0 * g_c / t_c;
    let h = 1.0 - t_c * t_c / (2.0 * alpha * g_c);
    // h = 0 up to rounding is still the degenerate vertical drop
    if h <= 1e-12 {
        return Err(Error::Brittleness {
            h,
            onset: tau_c * tau_c / 2.0,
            g_c,
        });
    }
    Ok(SofteningConstants {
        alpha,
        strength: t_c,
        fracture_energy: g_c,
        tau_c,
        h,
        delta_c,
        delta_f,
    })
}

impl SofteningConstants {
    /// Damage reached at energy norm `tau` on the loading envelope.
    pub fn envelope_damage(&self, tau: f64) -> f64 {
        if tau <= self.tau_c {
            0.0
        } else {
            ((1.0 - self.tau_c / tau) / self.h).min(1.0)
        }
    }

    /// Energy dissipated per unit face area while damage grows from
    /// `d_old` to `d_new`: the integral of `Ψ⁰ dd` along the envelope.
    /// Totals `G_c` at `d = 1`.
    pub fn dissipation(&self, d_old: f64, d_new: f64) -> f64 {
        if d_new <= d_old {
            return 0.0;
        }
        let f = |d: f64| 1.0 / (1.0 - self.h * d);
        self.tau_c * self.tau_c / (2.0 * self.h) * (f(d_new) - f(d_old))
    }
}

/// Damage history of one face quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceState {
    pub d: f64,
    /// Damage threshold: largest energy norm reached so far (at least τ_c).
    pub r: f64,
    /// Dissipated energy per unit face area.
    pub dissipated: f64,
    pub cracked: bool,
}

impl InterfaceState {
    pub fn pristine(consts: &SofteningConstants) -> Self {
        InterfaceState {
            d: 0.0,
            r: consts.tau_c,
            dissipated: 0.0,
            cracked: false,
        }
    }

    /// Fully cracked state with the whole fracture energy dissipated.
    pub fn crack(&mut self, consts: &SofteningConstants) {
        self.dissipated += consts.dissipation(self.d, 1.0);
        self.d = 1.0;
        self.cracked = true;
        self.r = self.r.max(consts.tau_c / (1.0 - consts.h));
    }
}

/// Result of the damage update at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageUpdate {
    pub state: InterfaceState,
    /// True when damage grew in this update.
    pub loading: bool,
    /// `∂t*d/∂δ`.
    pub tangent: Matrix2<f64>,
}

/// Explicit damage update for the trial conjugate `delta` against the last
/// committed `state`. The returned state is a trial value; it becomes
/// history only when the caller commits it.
pub fn update_damage(
    delta: [f64; 2],
    state: &InterfaceState,
    consts: &SofteningConstants,
) -> DamageUpdate {
    let alpha = consts.alpha;
    if state.cracked {
        return DamageUpdate {
            state: *state,
            loading: false,
            tangent: Matrix2::zeros(),
        };
    }
    let tau = energy_norm(delta, alpha);
    if tau <= state.r {
        return DamageUpdate {
            state: *state,
            loading: false,
            tangent: Matrix2::identity() * ((1.0 - state.d) * alpha),
        };
    }
    let d = consts.envelope_damage(tau).clamp(state.d, 1.0);
    let mut next = InterfaceState {
        d,
        r: tau,
        dissipated: state.dissipated + consts.dissipation(state.d, d),
        cracked: false,
    };
    if d >= CRACK_THRESHOLD {
        next.dissipated = state.dissipated + consts.dissipation(state.d, 1.0);
        next.d = 1.0;
        next.cracked = true;
        return DamageUpdate {
            state: next,
            loading: true,
            tangent: Matrix2::zeros(),
        };
    }
    let ad = Vector2::new(alpha * delta[0], alpha * delta[1]);
    let hd = (1.0 - consts.h * d).powi(2) / (consts.tau_c * consts.h);
    let tangent = Matrix2::identity() * ((1.0 - d) * alpha) - ad * ad.transpose() * (hd / tau);
    DamageUpdate {
        state: next,
        loading: d > state.d,
        tangent,
    }
}

/// Damage state of a face: one entry per face quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceState {
    pub qp: [InterfaceState; 2],
}

impl FaceState {
    pub fn pristine(consts: &SofteningConstants) -> Self {
        FaceState {
            qp: [InterfaceState::pristine(consts); 2],
        }
    }

    pub fn max_damage(&self) -> f64 {
        self.qp[0].d.max(self.qp[1].d)
    }

    /// Largest sub-unity damage over the quadrature points, if any.
    pub fn max_open_damage(&self) -> Option<f64> {
        self.qp
            .iter()
            .filter(|s| !s.cracked)
            .map(|s| s.d)
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }

    pub fn is_damaged(&self) -> bool {
        self.qp.iter().any(|s| s.d > 0.0)
    }

    pub fn is_cracked(&self) -> bool {
        self.qp.iter().all(|s| s.cracked)
    }

    /// Mean dissipated energy per unit area over the face.
    pub fn dissipated(&self) -> f64 {
        0.5 * (self.qp[0].dissipated + self.qp[1].dissipated)
    }

    pub fn crack(&mut self, consts: &SofteningConstants) {
        for s in &mut self.qp {
            if !s.cracked {
                s.crack(consts);
            }
        }
    }
}

/// Area under a sampled flux-opening curve by the trapezoid rule.
pub fn traction_separation_area(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[0].0 + w[1].0) * (w[1].1 - w[0].1))
        .sum()
}
