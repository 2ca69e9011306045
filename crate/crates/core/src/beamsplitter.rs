//! Lossless symmetric beam splitter acting on mode-coefficient vectors.
//!
//! The reflected beam picks up the `y`-inversion factor `(-1)^m` per mode, so
//! everything is exact in coefficient space; nothing is resampled.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_space::ModeVector;

/// Tolerance on `|rho|^2 + |tau|^2 = 1` and `conj(rho) tau + rho conj(tau) = 0`.
pub const SPLITTER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterCoefficients {
    rho: C64,
    tau: C64,
}

impl SplitterCoefficients {
    pub fn new(rho: C64, tau: C64) -> Result<Self> {
        let power = rho.norm_sqr() + tau.norm_sqr();
        if !power.is_finite() || (power - 1.0).abs() > SPLITTER_TOL {
            return Err(Error::InvalidSplitter(format!(
                "|rho|^2 + |tau|^2 = {power}, expected 1"
            )));
        }
        let cross = rho.conj() * tau + rho * tau.conj();
        if cross.norm() > SPLITTER_TOL {
            return Err(Error::InvalidSplitter(format!(
                "conj(rho) tau + rho conj(tau) = {cross}, expected 0"
            )));
        }
        Ok(Self { rho, tau })
    }

    /// `tau = 1/sqrt(2)`, `rho = i/sqrt(2)`.
    pub fn fifty_fifty() -> Self {
        Self {
            rho: C64::new(0.0, FRAC_1_SQRT_2),
            tau: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// `tau = |tau| e^{i phase}`, `rho = i sqrt(1 - |tau|^2) e^{i phase}`;
    /// valid by construction for `0 <= |tau| <= 1`.
    pub fn from_transmission(tau_abs: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau_abs) {
            return Err(Error::InvalidSplitter(format!(
                "|tau| = {tau_abs} outside [0, 1]"
            )));
        }
        let tau = C64::from_polar(tau_abs, phase);
        let rho = C64::new(0.0, 1.0) * C64::from_polar((1.0 - tau_abs * tau_abs).sqrt(), phase);
        Self::new(rho, tau)
    }

    pub fn identity() -> Self {
        Self {
            rho: C64::new(0.0, 0.0),
            tau: C64::new(1.0, 0.0),
        }
    }

    pub fn rho(&self) -> C64 {
        self.rho
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn is_fifty_fifty(&self) -> bool {
        (self.rho.norm_sqr() - 0.5).abs() <= SPLITTER_TOL
            && (self.tau.norm_sqr() - 0.5).abs() <= SPLITTER_TOL
    }

    /// Single-particle 2x2 block `[[tau, rho s], [rho s, tau]]` for parity `s`.
    pub fn block(&self, parity: f64) -> [[C64; 2]; 2] {
        let r = self.rho * parity;
        [[self.tau, r], [r, self.tau]]
    }
}

/// Mode-coefficient images of the two input (or output) ports.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortModeVectors {
    pub port1: ModeVector,
    pub port2: ModeVector,
}

impl TwoPortModeVectors {
    pub fn new(port1: ModeVector, port2: ModeVector) -> Result<Self> {
        if port1.basis() != port2.basis() {
            if port1.geometry() != port2.geometry() {
                return Err(Error::GeometryMismatch);
            }
            return Err(Error::BasisMismatch {
                left: port1.basis().n_max(),
                right: port2.basis().n_max(),
            });
        }
        Ok(Self { port1, port2 })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.port1.norm_sqr() + self.port2.norm_sqr()
    }
}

/// `v~_(n,m) = (-1)^m v_(n,m)`, i.e. the field mirrored in `y`.
pub fn reflect_mode_vector(v: &ModeVector) -> ModeVector {
    let mut out = v.clone();
    let basis = *v.basis();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= basis.mode_at(i).reflection_parity();
    }
    out
}

/// Output operators in terms of input ones:
/// `b1 = tau a1 + rho (-1)^m a2`, `b2 = rho (-1)^m a1 + tau a2`.
pub fn operator_transform(a: &TwoPortModeVectors, s: &SplitterCoefficients) -> TwoPortModeVectors {
    mix(a, s.tau, s.rho)
}

/// Inverse relations `a1 = tau* b1 + rho* (-1)^m b2`, `a2 = rho* (-1)^m b1 + tau* b2`.
pub fn inverse_transform(b: &TwoPortModeVectors, s: &SplitterCoefficients) -> TwoPortModeVectors {
    mix(b, s.tau.conj(), s.rho.conj())
}

fn mix(a: &TwoPortModeVectors, t: C64, r: C64) -> TwoPortModeVectors {
    let basis = *a.port1.basis();
    let mut p1 = a.port1.clone();
    let mut p2 = a.port2.clone();
    let (c1, c2) = (a.port1.coeffs(), a.port2.coeffs());
    for i in 0..basis.len() {
        let rs = r * basis.mode_at(i).reflection_parity();
        p1.coeffs_mut()[i] = t * c1[i] + rs * c2[i];
        p2.coeffs_mut()[i] = rs * c1[i] + t * c2[i];
    }
    TwoPortModeVectors {
        port1: p1,
        port2: p2,
    }
}

/// `tau |1[phi]>_1 |0>_2 + rho |0>_1 |1[phi~]>_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonOutput {
    pub amp1: C64,
    pub mode1: ModeVector,
    pub amp2: C64,
    pub mode2: ModeVector,
}

/// `|tau alpha, [phi]>_1 |rho alpha, [phi~]>_2`, a product state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentOutput {
    pub alpha1: C64,
    pub mode1: ModeVector,
    pub alpha2: C64,
    pub mode2: ModeVector,
}

pub fn single_photon_output(phi: &ModeVector, s: &SplitterCoefficients) -> Result<SinglePhotonOutput> {
    phi.ensure_normalized()?;
    Ok(SinglePhotonOutput {
        amp1: s.tau,
        mode1: phi.clone(),
        amp2: s.rho,
        mode2: reflect_mode_vector(phi),
    })
}

pub fn coherent_output(
    alpha: C64,
    phi: &ModeVector,
    s: &SplitterCoefficients,
) -> Result<CoherentOutput> {
    phi.ensure_normalized()?;
    Ok(CoherentOutput {
        alpha1: s.tau * alpha,
        mode1: phi.clone(),
        alpha2: s.rho * alpha,
        mode2: reflect_mode_vector(phi),
    })
}

fn port_json(amp: C64, mode: &ModeVector) -> serde_json::Value {
    serde_json::json!({ "amp": [amp.re, amp.im], "mode": mode.to_json() })
}

impl SinglePhotonOutput {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "port1": port_json(self.amp1, &self.mode1),
            "port2": port_json(self.amp2, &self.mode2),
        })
    }
}

impl CoherentOutput {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "port1": port_json(self.alpha1, &self.mode1),
            "port2": port_json(self.alpha2, &self.mode2),
        })
    }
}
