//! Physical predictions behind the beam splitter: the `R` functional and its
//! displaced-TEM10 surface, two-point field correlations and detection ratios.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{two_port_single_photon_ratio, FieldConfiguration, TwoPortFieldConfiguration};
use crate::beamsplitter::{reflect_mode_vector, SplitterCoefficients};
use crate::error::{Error, Result};
use crate::geometry::{factorial, hermite_poly, ModeIndex};
use crate::mode_space::{decompose, synthesize, DisplacedMode, ModeBasis, ModeVector};
use crate::quadrature::QuadratureRule;

/// Largest displacement accepted by [`displaced_tem10_config`].
pub const MAX_DISPLACEMENT: f64 = 3.0;
/// Smallest truncation accepted by [`displaced_tem10_config`].
pub const MIN_DISPLACED_N_MAX: usize = 12;

/// `R = |tau (psi1, phi) + rho (psi2, phi~)|^2`, i.e. the squared modulus of
/// the two-port single-photon ratio.
pub fn r_functional(
    cfg2: &TwoPortFieldConfiguration,
    phi: &ModeVector,
    s: &SplitterCoefficients,
) -> Result<f64> {
    Ok(two_port_single_photon_ratio(cfg2, phi, s, 0.0)?.norm_sqr())
}

/// The measured field `phi_1(x + x0 xi, 0) phi_0(y, 0)` projected on `basis`,
/// together with the norm lost to truncation, `1 - |v|^2`.
pub fn displaced_tem10_vector(
    xi: f64,
    basis: &ModeBasis,
    quad: &QuadratureRule,
) -> Result<(ModeVector, f64)> {
    if !xi.is_finite() || xi.abs() > MAX_DISPLACEMENT {
        return Err(Error::TruncationPolicy(format!(
            "|xi| = {} exceeds {MAX_DISPLACEMENT}",
            xi.abs()
        )));
    }
    if basis.n_max() < MIN_DISPLACED_N_MAX {
        return Err(Error::TruncationPolicy(format!(
            "n_max = {} below {MIN_DISPLACED_N_MAX} for displaced modes",
            basis.n_max()
        )));
    }
    let geom = *basis.geometry();
    let field = DisplacedMode {
        geom,
        mu: ModeIndex::new(1, 0),
        dx: geom.x_scale(0.0) * xi,
        dy: 0.0,
    };
    let mut v = decompose(&field, basis, 0.0, quad)?;
    // the field is real at z = 0; drop roundoff so it is a valid configuration
    for c in v.coeffs_mut() {
        c.im = 0.0;
    }
    let loss = 1.0 - v.norm_sqr();
    Ok((v, loss))
}

/// Reduced configuration `psi = sqrt(2 omega) Psi` for the displaced TEM10 detector mode.
pub fn displaced_tem10_config(
    xi: f64,
    basis: &ModeBasis,
    quad: &QuadratureRule,
) -> Result<FieldConfiguration> {
    FieldConfiguration::reduced(displaced_tem10_vector(xi, basis, quad)?.0)
}

/// `(1/2) (xi1^2 e^{-xi1^2/2} + xi2^2 e^{-xi2^2/2})`, the reference 50:50 closed form.
pub fn r_closed_form(xi1: f64, xi2: f64) -> f64 {
    let f = |x: f64| x * x * (-0.5 * x * x).exp();
    0.5 * (f(xi1) + f(xi2))
}

/// `R` on a grid of displacements; `values[i][j]` belongs to `(xi1[i], xi2[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSurface {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Larger of the two ports' truncation losses, per cell.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub truncation_loss: Vec<Vec<f64>>,
}

impl RSurface {
    /// Cells whose truncation loss exceeds `tol`.
    pub fn flagged(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.truncation_loss.iter().enumerate() {
            for (j, &l) in row.iter().enumerate() {
                if l > tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Header `xi1,xi2,R`, one row per cell, `xi2` varying fastest.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi1,xi2,R\n");
        for (i, x1) in self.xi1.iter().enumerate() {
            for (j, x2) in self.xi2.iter().enumerate() {
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x1, x2, self.values[i][j]));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "xi1": self.xi1, "xi2": self.xi2, "values": self.values })
    }
}

/// Fills an [`RSurface`] through the full pipeline: each distinct `xi` is
/// decomposed once, then every cell evaluates [`r_functional`] with a TEM00 photon.
pub fn r_surface(
    xi1: &[f64],
    xi2: &[f64],
    basis: &ModeBasis,
    quad: &QuadratureRule,
    s: &SplitterCoefficients,
) -> Result<RSurface> {
    let mut distinct: Vec<f64> = xi1.iter().chain(xi2).copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let configs: Vec<(FieldConfiguration, f64)> = distinct
        .par_iter()
        .map(|&xi| {
            let (v, loss) = displaced_tem10_vector(xi, basis, quad)?;
            Ok((FieldConfiguration::reduced(v)?, loss))
        })
        .collect::<Result<_>>()?;
    let cache: HashMap<u64, &(FieldConfiguration, f64)> = distinct
        .iter()
        .map(|x| x.to_bits())
        .zip(configs.iter())
        .collect();

    let phi = ModeVector::unit(*basis, ModeIndex::new(0, 0));
    let rows: Vec<(Vec<f64>, Vec<f64>)> = xi1
        .par_iter()
        .map(|a| {
            let (c1, l1) = cache[&a.to_bits()];
            let mut vals = Vec::with_capacity(xi2.len());
            let mut losses = Vec::with_capacity(xi2.len());
            for b in xi2 {
                let (c2, l2) = cache[&b.to_bits()];
                let cfg2 = TwoPortFieldConfiguration::new(c1.clone(), c2.clone())?;
                vals.push(r_functional(&cfg2, &phi, s)?);
                losses.push(l1.max(*l2));
            }
            Ok((vals, losses))
        })
        .collect::<Result<_>>()?;
    let (values, truncation_loss) = rows.into_iter().unzip();
    Ok(RSurface {
        xi1: xi1.to_vec(),
        xi2: xi2.to_vec(),
        values,
        truncation_loss,
    })
}

/// `n` evenly spaced points on `[lo, hi]`; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// A point `(x, y, z)` behind one output port.
pub type Point = [f64; 3];

/// `<1[phi]| Psi1_out(r1, t) Psi2_out(r2, t) |1[phi]>`
/// `= (1/2w) [tau rho* phi(r1) phi~*(r2) + c.c.]`.
pub fn two_point_correlation(
    phi: &ModeVector,
    r1: Point,
    r2: Point,
    s: &SplitterCoefficients,
    omega: f64,
) -> Result<f64> {
    phi.ensure_normalized()?;
    let phi_r = reflect_mode_vector(phi);
    let a = synthesize(phi, r1[0], r1[1], r1[2]);
    let b = synthesize(&phi_r, r2[0], r2[1], r2[2]);
    let term = s.tau() * s.rho().conj() * a * b.conj();
    let total: C64 = (term + term.conj()) / (2.0 * omega);
    Ok(total.re)
}

/// Detection probability relative to vacuum for `N1`, `N2` photons in the real
/// modes `phi1`, `phi2`:
/// `H_N1^2(sqrt(w)(Psi1, phi1)) H_N2^2(sqrt(w)(Psi2, phi2)) / (2^(N1+N2) N1! N2!)`.
pub fn detection_probability_ratio(
    n1: usize,
    n2: usize,
    cfg2: &TwoPortFieldConfiguration,
    phi1: &ModeVector,
    phi2: &ModeVector,
) -> Result<f64> {
    let omega = cfg2.omega();
    let mut out = 1.0;
    for (n, cfg, phi) in [(n1, &cfg2.port1, phi1), (n2, &cfg2.port2, phi2)] {
        let max_imag = phi.max_imag();
        if max_imag > crate::amplitudes::REAL_TOL {
            return Err(Error::ComplexConfiguration { max_imag });
        }
        phi.ensure_normalized()?;
        let arg = omega.sqrt() * cfg.physical().inner(phi)?.re;
        let h = hermite_poly(n, arg);
        out *= h * h / (2f64.powi(n as i32) * factorial(n));
    }
    Ok(out)
}

/// `<1[phi]| N1_out[phi1] N2_out[phi2] |1[phi]>` from the output state
/// `tau |1[phi]>_1 |0>_2 + rho |0>_1 |1[phi~]>_2`.
///
/// Each branch carries one photon in total, so one of the two number
/// operators always sees vacuum; cross terms differ in photon number per port.
pub fn photon_number_correlation(
    phi: &ModeVector,
    phi1: &ModeVector,
    phi2: &ModeVector,
    s: &SplitterCoefficients,
) -> Result<f64> {
    for v in [phi, phi1, phi2] {
        v.ensure_normalized()?;
    }
    let phi_r = reflect_mode_vector(phi);
    // <1[f]| N[g] |1[f]> = |(g, f)|^2, <0| N |0> = 0
    let n1_branch1 = phi1.inner(phi)?.norm_sqr();
    let n2_branch2 = phi2.inner(&phi_r)?.norm_sqr();
    let vacuum = 0.0;
    Ok(s.tau().norm_sqr() * n1_branch1 * vacuum + s.rho().norm_sqr() * vacuum * n2_branch2)
}
