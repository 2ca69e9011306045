//! Overlaps of field eigenstates with vacuum, number and coherent states.
//!
//! Every amplitude is returned as a ratio to the vacuum amplitude
//! `<Psi, t|0>`, so the functional normalization never appears.
//!
//! Non-conjugating products `[f g]` of coefficient vectors are evaluated in
//! the waist plane `z = 0`, where the Hermite-Gauss modes are real.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::beamsplitter::{reflect_mode_vector, SplitterCoefficients};
use crate::error::{Error, Result};
use crate::geometry::{factorial, hermite_poly_complex};
use crate::mode_space::{synthesize, ModeVector};

/// Largest imaginary part tolerated in a field configuration.
pub const REAL_TOL: f64 = 1e-12;

/// Below this `|[phi^2]|` the number-state ratio switches to its limit form.
pub const DEGENERATE_PHI_SQ: f64 = 1e-12;

/// How the coefficients handed to [`FieldConfiguration::new`] are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `psi = sqrt(2 omega) Psi`, the form used in the supplement formulas.
    #[default]
    ReducedPsi,
    /// The field eigenvalue `Psi` itself.
    PhysicalPsi,
}

/// A real candidate field configuration for one port, stored as reduced `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    psi: ModeVector,
    convention: Convention,
    omega: f64,
}

impl FieldConfiguration {
    pub fn new(coeffs: ModeVector, convention: Convention, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidGeometry(format!("omega must be positive, got {omega}")));
        }
        let max_imag = coeffs.max_imag();
        if max_imag > REAL_TOL {
            return Err(Error::ComplexConfiguration { max_imag });
        }
        let mut psi = match convention {
            Convention::ReducedPsi => coeffs,
            Convention::PhysicalPsi => coeffs.scaled(C64::new((2.0 * omega).sqrt(), 0.0)),
        };
        for c in psi.coeffs_mut() {
            c.im = 0.0;
        }
        Ok(Self {
            psi,
            convention,
            omega,
        })
    }

    /// Reduced configuration with `omega` taken from the basis geometry.
    pub fn reduced(psi: ModeVector) -> Result<Self> {
        let omega = psi.geometry().omega();
        Self::new(psi, Convention::ReducedPsi, omega)
    }

    pub fn vacuum_like(basis: crate::mode_space::ModeBasis) -> Self {
        Self::reduced(ModeVector::zeros(basis)).expect("zero configuration is valid")
    }

    pub fn psi(&self) -> &ModeVector {
        &self.psi
    }

    /// `Psi = psi / sqrt(2 omega)`.
    pub fn physical(&self) -> ModeVector {
        self.psi.scaled(C64::new((2.0 * self.omega).sqrt().recip(), 0.0))
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// `Psi(r1, r2) = Psi_1(r1) + Psi_2(r2)`, one configuration per output port.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortFieldConfiguration {
    pub port1: FieldConfiguration,
    pub port2: FieldConfiguration,
}

impl TwoPortFieldConfiguration {
    pub fn new(port1: FieldConfiguration, port2: FieldConfiguration) -> Result<Self> {
        if port1.omega != port2.omega {
            return Err(Error::InvalidGeometry(format!(
                "ports disagree on omega: {} vs {}",
                port1.omega, port2.omega
            )));
        }
        if port1.psi.basis() != port2.psi.basis() {
            return Err(Error::BasisMismatch {
                left: port1.psi.basis().n_max(),
                right: port2.psi.basis().n_max(),
            });
        }
        Ok(Self { port1, port2 })
    }

    pub fn omega(&self) -> f64 {
        self.port1.omega
    }
}

fn phase(n: usize, omega: f64, t: f64) -> C64 {
    C64::from_polar(1.0, -(n as f64) * omega * t)
}

/// `|<Psi,t|0>|^2 / |<0,t|0>|^2 = exp(-(psi, psi))`.
pub fn vacuum_relative_weight(cfg: &FieldConfiguration) -> f64 {
    (-cfg.psi.norm_sqr()).exp()
}

/// `<Psi,t|N[phi]> / <Psi,t|0>`.
pub fn number_state_ratio(cfg: &FieldConfiguration, phi: &ModeVector, n: usize, t: f64) -> Result<C64> {
    phi.ensure_normalized()?;
    let psi_phi = cfg.psi.bracket(phi)?;
    let phi_sq = phi.bracket(phi)?;
    Ok(number_ratio_from_brackets(psi_phi, phi_sq, n) * phase(n, cfg.omega, t))
}

/// Time-independent part of the number-state ratio from `[psi phi]` and `[phi^2]`.
pub fn number_ratio_from_brackets(psi_phi: C64, phi_sq: C64, n: usize) -> C64 {
    let nf = factorial(n).sqrt();
    if phi_sq.norm() < DEGENERATE_PHI_SQ {
        return psi_phi.powu(n as u32) / nf;
    }
    let s = (2.0 * phi_sq).sqrt();
    hermite_poly_complex(n, psi_phi / s) * s.powu(n as u32) / (2f64.powi(n as i32) * nf)
}

/// `<Psi,t|alpha,[phi]> / <Psi,t|0>`.
pub fn coherent_state_ratio(
    cfg: &FieldConfiguration,
    phi: &ModeVector,
    alpha: C64,
    t: f64,
) -> Result<C64> {
    phi.ensure_normalized()?;
    let psi_phi = cfg.psi.bracket(phi)?;
    let phi_sq = phi.bracket(phi)?;
    Ok(coherent_ratio_from_brackets(psi_phi, phi_sq, alpha, cfg.omega, t))
}

fn coherent_ratio_from_brackets(psi_phi: C64, phi_sq: C64, alpha: C64, omega: f64, t: f64) -> C64 {
    let e1 = phase(1, omega, t);
    let e2 = phase(2, omega, t);
    let arg = alpha * e1 * psi_phi - 0.5 * alpha * alpha * e2 * phi_sq;
    (-0.5 * alpha.norm_sqr() + arg).exp()
}

/// `<Psi1,Psi2,t|1[phi]>out / <Psi1,Psi2,t|0>`.
pub fn two_port_single_photon_ratio(
    cfg2: &TwoPortFieldConfiguration,
    phi: &ModeVector,
    s: &SplitterCoefficients,
    t: f64,
) -> Result<C64> {
    phi.ensure_normalized()?;
    let phi_r = reflect_mode_vector(phi);
    let amp = s.tau() * cfg2.port1.psi.inner(phi)? + s.rho() * cfg2.port2.psi.inner(&phi_r)?;
    Ok(amp * phase(1, cfg2.omega(), t))
}

/// `<Psi1,Psi2,t|alpha,[phi]>out / <Psi1,Psi2,t|0>` for any valid splitter.
///
/// For a 50:50 splitter the result is cross-checked against
/// `exp(-|alpha|^2/2) exp(alpha * single_photon_ratio)`.
pub fn two_port_coherent_ratio(
    cfg2: &TwoPortFieldConfiguration,
    phi: &ModeVector,
    alpha: C64,
    s: &SplitterCoefficients,
    t: f64,
) -> Result<C64> {
    phi.ensure_normalized()?;
    let phi_r = reflect_mode_vector(phi);
    let omega = cfg2.omega();
    let (ta, ra) = (s.tau() * alpha, s.rho() * alpha);
    let phi_sq = phi.bracket(phi)?;
    let linear = ta * cfg2.port1.psi.bracket(phi)? + ra * cfg2.port2.psi.bracket(&phi_r)?;
    let quad = 0.5 * (ta * ta + ra * ra) * phi_sq;
    let value = (-0.5 * (ta.norm_sqr() + ra.norm_sqr()) + phase(1, omega, t) * linear
        - phase(2, omega, t) * quad)
        .exp();
    if s.is_fifty_fifty() {
        let single = two_port_single_photon_ratio(cfg2, phi, s, t)?;
        let expected = (-0.5 * alpha.norm_sqr() + alpha * single).exp();
        let err = (value - expected).norm();
        if err > 1e-12 * expected.norm().max(1.0) {
            return Err(Error::Numerical(format!(
                "50:50 coherent/single-photon identity violated by {err:e}"
            )));
        }
    }
    Ok(value)
}

/// `<0|Psi(r,t)|1[phi]> = phi(r) e^{-i omega t} / sqrt(2 omega)`.
pub fn single_photon_wavefunction(
    phi: &ModeVector,
    x: f64,
    y: f64,
    z: f64,
    t: f64,
    omega: f64,
) -> Result<C64> {
    phi.ensure_normalized()?;
    Ok(synthesize(phi, x, y, z) * phase(1, omega, t) / (2.0 * omega).sqrt())
}
