//! Beam geometry and Hermite-Gauss mode functions.
//!
//! Units are natural (`hbar = c = 1`), so the angular frequency of the
//! monochromatic field equals its wavenumber unless a geometry is built with
//! an explicit frequency.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monochromatic paraxial beam parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    w0: f64,
    k: f64,
    omega: f64,
}

impl BeamGeometry {
    /// Natural units: `omega = k`.
    pub fn new(w0: f64, k: f64) -> Result<Self> {
        Self::with_omega(w0, k, k)
    }

    pub fn with_omega(w0: f64, k: f64, omega: f64) -> Result<Self> {
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::InvalidGeometry(format!("w0 must be > 0, got {w0}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidGeometry(format!("k must be > 0, got {k}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "omega must be > 0, got {omega}"
            )));
        }
        Ok(Self { w0, k, omega })
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_natural_units(&self) -> bool {
        self.omega == self.k
    }

    /// Rayleigh length `k w0^2 / 2`.
    pub fn z0(&self) -> f64 {
        0.5 * self.k * self.w0 * self.w0
    }

    /// Transverse length scale `w0 sqrt((1 + z^2/z0^2) / 2)`.
    pub fn x_scale(&self, z: f64) -> f64 {
        let r = z / self.z0();
        self.w0 * ((1.0 + r * r) / 2.0).sqrt()
    }
}

/// Ordered pair `(n, m)` labelling the `TEM_nm` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub m: usize,
}

impl ModeIndex {
    pub const fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    /// `(-1)^m`, the factor picked up under `y -> -y`.
    pub fn reflection_parity(&self) -> f64 {
        if self.m.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by upward recurrence.
///
/// Stable for the orders and arguments used here (`n <= ~40`, `|x| <= ~10`);
/// overflows to infinity for extreme inputs.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for j in 1..n {
        let next = 2.0 * x * cur - 2.0 * j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_n(z)` for complex argument, same recurrence.
pub fn hermite_poly_complex(n: usize, x: C64) -> C64 {
    let mut prev = C64::new(1.0, 0.0);
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for j in 1..n {
        let next = 2.0 * x * cur - 2.0 * j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_0(x) .. H_n(x)` in one pass.
pub fn hermite_table(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(2.0 * x);
    }
    for j in 1..n {
        let next = 2.0 * x * out[j] - 2.0 * j as f64 * out[j - 1];
        out.push(next);
    }
    out
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Normalization `pi^{-1/4} (2^n n!)^{-1/2}` of the n-th Hermite function.
fn hermite_norm(n: usize) -> f64 {
    PI.powf(-0.25) / (2f64.powi(n as i32) * factorial(n)).sqrt()
}

/// One-dimensional Hermite-Gauss mode `phi_n(x, z)` including the quadratic
/// chirp and Gouy phase.
pub fn mode_1d(n: usize, x: f64, z: f64, geom: &BeamGeometry) -> C64 {
    let x0 = geom.x_scale(z);
    let zr = z / geom.z0();
    let s = x / x0;
    let amp = hermite_norm(n) / x0.sqrt() * hermite_poly(n, s) * (-0.5 * s * s).exp();
    let phase = 0.5 * zr * s * s - (n as f64 + 0.5) * zr.atan();
    C64::from_polar(amp, phase)
}

/// `phi_0(x, z) .. phi_{n_max}(x, z)` sharing the Hermite recurrence.
pub fn mode_1d_table(n_max: usize, x: f64, z: f64, geom: &BeamGeometry) -> Vec<C64> {
    let x0 = geom.x_scale(z);
    let zr = z / geom.z0();
    let s = x / x0;
    let gauss = (-0.5 * s * s).exp() / x0.sqrt();
    let chirp = 0.5 * zr * s * s;
    let gouy = zr.atan();
    hermite_table(n_max, s)
        .into_iter()
        .enumerate()
        .map(|(n, h)| {
            C64::from_polar(
                hermite_norm(n) * h * gauss,
                chirp - (n as f64 + 0.5) * gouy,
            )
        })
        .collect()
}

/// Transverse envelope `phi_n(x, z) phi_m(y, z)` (no carrier `e^{ikz}`).
pub fn envelope_2d(mu: ModeIndex, x: f64, y: f64, z: f64, geom: &BeamGeometry) -> C64 {
    mode_1d(mu.n, x, z, geom) * mode_1d(mu.m, y, z, geom)
}

/// Full mode function `u_mu(x, y, z) = phi_n(x, z) phi_m(y, z) e^{ikz}`.
pub fn mode_2d(mu: ModeIndex, x: f64, y: f64, z: f64, geom: &BeamGeometry) -> C64 {
    envelope_2d(mu, x, y, z, geom) * C64::from_polar(1.0, geom.k() * z)
}

/// Finite-difference step lengths for [`paraxial_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub transverse: f64,
    pub axial: f64,
}

impl Steps {
    /// `frac * x_scale(z)` across, `frac * z0` along the axis.
    pub fn relative(frac: f64, geom: &BeamGeometry, z: f64) -> Self {
        Self {
            transverse: frac * geom.x_scale(z),
            axial: frac * geom.z0(),
        }
    }
}

/// Central-difference estimate of `(d_xx + d_yy + 2ik d_z) phi_mu` applied to
/// the chirped envelope. Vanishes as `O(h^2)` for a paraxial solution.
pub fn paraxial_residual(
    mu: ModeIndex,
    x: f64,
    y: f64,
    z: f64,
    geom: &BeamGeometry,
    h: Steps,
) -> Result<C64> {
    if !(h.transverse > 0.0 && h.axial > 0.0) || !h.transverse.is_finite() || !h.axial.is_finite()
    {
        return Err(Error::DegenerateStep);
    }
    let f = |x: f64, y: f64, z: f64| envelope_2d(mu, x, y, z, geom);
    let c = f(x, y, z);
    let ht = h.transverse;
    let d2x = (f(x + ht, y, z) - 2.0 * c + f(x - ht, y, z)) / (ht * ht);
    let d2y = (f(x, y + ht, z) - 2.0 * c + f(x, y - ht, z)) / (ht * ht);
    let dz = (f(x, y, z + h.axial) - f(x, y, z - h.axial)) / (2.0 * h.axial);
    Ok(d2x + d2y + C64::new(0.0, 2.0 * geom.k()) * dz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> BeamGeometry {
        BeamGeometry::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn hermite_small_orders() {
        assert_eq!(hermite_poly(0, 3.7), 1.0);
        assert_eq!(hermite_poly(1, 0.5), 1.0);
        assert_eq!(hermite_poly(3, 1.0), -4.0);
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        // exact at integer points (all values are small integers)
        let explicit: [fn(f64) -> f64; 7] = [
            |_| 1.0,
            |x| 2.0 * x,
            |x| 4.0 * x * x - 2.0,
            |x| 8.0 * x.powi(3) - 12.0 * x,
            |x| 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
            |x| 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x,
            |x| 64.0 * x.powi(6) - 480.0 * x.powi(4) + 720.0 * x * x - 120.0,
        ];
        for (n, p) in explicit.iter().enumerate() {
            for xi in -4..=4 {
                let x = xi as f64;
                assert_eq!(hermite_poly(n, x), p(x), "n={n} x={x}");
            }
            for &x in &[0.123, -0.77, 1.9, 2.5] {
                let e = p(x);
                assert!((hermite_poly(n, x) - e).abs() <= 1e-12 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn hermite_table_agrees_with_scalar() {
        let t = hermite_table(12, 0.83);
        for (n, v) in t.iter().enumerate() {
            assert_eq!(*v, hermite_poly(n, 0.83));
        }
    }

    #[test]
    fn rayleigh_length_and_scale() {
        let g = BeamGeometry::new(2.0, 3.0).unwrap();
        assert_eq!(g.z0(), 6.0);
        assert!((g.x_scale(0.0) - 2.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(g.x_scale(1e6) > 0.0);
        assert!(g.is_natural_units());
        assert_eq!(g.omega(), g.k());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(BeamGeometry::new(0.0, 1.0).is_err());
        assert!(BeamGeometry::new(1.0, -1.0).is_err());
        assert!(BeamGeometry::with_omega(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn ground_mode_on_axis() {
        let v = mode_1d(0, 0.0, 0.0, &geom());
        let expected = 2f64.powf(0.25) * PI.powf(-0.25);
        assert!((v.re - expected).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn odd_mode_vanishes_on_axis() {
        for &z in &[0.0, 0.4, -3.0] {
            assert_eq!(mode_1d(1, 0.0, z, &geom()).norm(), 0.0);
        }
    }

    #[test]
    fn table_matches_single_mode() {
        let g = BeamGeometry::new(1.3, 2.0).unwrap();
        let t = mode_1d_table(9, 0.4, 0.7, &g);
        for (n, v) in t.iter().enumerate() {
            assert!((v - mode_1d(n, 0.4, 0.7, &g)).norm() < 1e-15);
        }
    }

    #[test]
    fn mode_2d_on_axis_and_parity() {
        let g = geom();
        let v = mode_2d(ModeIndex::new(0, 0), 0.0, 0.0, 0.0, &g);
        assert!((v.re - 2f64.sqrt() / PI.sqrt()).abs() < 1e-15);
        let mu = ModeIndex::new(0, 1);
        let a = mode_2d(mu, 0.3, 0.5, 0.2, &g);
        let b = mode_2d(mu, 0.3, -0.5, 0.2, &g);
        assert!((a + b).norm() < 1e-15);
        let mu = ModeIndex::new(2, 0);
        let a = mode_2d(mu, 0.3, 0.5, 0.2, &g);
        let b = mode_2d(mu, 0.3, -0.5, 0.2, &g);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn modulus_independent_of_phases() {
        let g = BeamGeometry::new(0.8, 5.0).unwrap();
        for n in 0..6 {
            for &z in &[0.0, 0.3, 1.7] {
                let x0 = g.x_scale(z);
                let s = 0.6;
                let bare = hermite_norm(n) / x0.sqrt() * hermite_poly(n, s) * (-0.5 * s * s).exp();
                let v = mode_1d(n, s * x0, z, &g);
                assert!((v.norm() - bare.abs()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn residual_small_at_ground_mode() {
        let g = geom();
        let z = 0.0;
        let h = Steps::relative(1.0 / 200.0, &g, z);
        let r = paraxial_residual(ModeIndex::new(0, 0), 0.0, 0.0, z, &g, h).unwrap();
        let phi = envelope_2d(ModeIndex::new(0, 0), 0.0, 0.0, z, &g).norm();
        let xs = g.x_scale(z);
        assert!(r.norm() <= 1e-4 * phi / (xs * xs));
    }

    #[test]
    fn residual_second_order() {
        let g = BeamGeometry::new(1.2, 4.0).unwrap();
        let mu = ModeIndex::new(1, 1);
        let z = 0.2 * g.z0();
        let xs = g.x_scale(z);
        let (x, y) = (0.3 * xs, 0.4 * xs);
        let res: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&f| paraxial_residual(mu, x, y, z, &g, Steps::relative(f, &g, z)).unwrap().norm())
            .collect();
        for w in res.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn zero_step_rejected() {
        let h = Steps { transverse: 0.0, axial: 0.1 };
        assert_eq!(
            paraxial_residual(ModeIndex::new(0, 0), 0.0, 0.0, 0.0, &geom(), h),
            Err(Error::DegenerateStep)
        );
    }
}
