//! Fields as truncated Hermite-Gauss coefficient vectors.
//!
//! The basis is the square index set `{(n, m) : n, m <= n_max}` in row-major
//! `(n, m)` order; file formats depend on that order. Inner products between two
//! [`ModeVector`]s are exact coefficient contractions. Anything involving a
//! sampled field goes through tensor-product Gauss-Hermite quadrature at the
//! requested height `z`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mode_1d_table, mode_2d, BeamGeometry, ModeIndex};
use crate::quadrature::QuadratureRule;

/// `|norm^2 - 1|` allowed for a vector to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    geom: BeamGeometry,
    n_max: usize,
}

impl ModeBasis {
    pub fn new(geom: BeamGeometry, n_max: usize) -> Self {
        Self { geom, n_max }
    }

    pub fn geometry(&self) -> &BeamGeometry {
        &self.geom
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, mu: ModeIndex) -> Option<usize> {
        (mu.n <= self.n_max && mu.m <= self.n_max).then(|| mu.n * (self.n_max + 1) + mu.m)
    }

    pub fn mode_at(&self, i: usize) -> ModeIndex {
        ModeIndex::new(i / (self.n_max + 1), i % (self.n_max + 1))
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(|i| self.mode_at(i))
    }

    fn check_same(&self, other: &ModeBasis) -> Result<()> {
        if self.geom != other.geom {
            return Err(Error::GeometryMismatch);
        }
        if self.n_max != other.n_max {
            return Err(Error::BasisMismatch {
                left: self.n_max,
                right: other.n_max,
            });
        }
        Ok(())
    }
}

/// Coefficients `phi_mu` of a field over a [`ModeBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    basis: ModeBasis,
    coeffs: Vec<C64>,
}

impl ModeVector {
    pub fn new(basis: ModeBasis, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Parse(format!(
                "expected {} coefficients for n_max = {}, got {}",
                basis.len(),
                basis.n_max(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Parse("non-finite coefficient".into()));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: ModeBasis) -> Self {
        Self {
            basis,
            coeffs: vec![C64::new(0.0, 0.0); basis.len()],
        }
    }

    /// Unit vector at `mu`. Panics if `mu` lies outside the basis.
    pub fn unit(basis: ModeBasis, mu: ModeIndex) -> Self {
        let mut v = Self::zeros(basis);
        let i = basis
            .index_of(mu)
            .unwrap_or_else(|| panic!("mode {mu} outside basis n_max = {}", basis.n_max()));
        v.coeffs[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_fn(basis: ModeBasis, mut f: impl FnMut(ModeIndex) -> C64) -> Self {
        let coeffs = basis.modes().map(&mut f).collect();
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn geometry(&self) -> &BeamGeometry {
        self.basis.geometry()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, mu: ModeIndex) -> C64 {
        self.basis
            .index_of(mu)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.basis.mode_at(i), *c))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Largest `|Im|` among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// `(self, other) = sum_mu conj(self_mu) other_mu`.
    pub fn inner(&self, other: &ModeVector) -> Result<C64> {
        self.basis.check_same(&other.basis)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Non-conjugating product `sum_mu self_mu other_mu`.
    ///
    /// This equals `int f g d^2x` in the plane `z = 0`, where every mode
    /// function is real.
    pub fn bracket(&self, other: &ModeVector) -> Result<C64> {
        self.basis.check_same(&other.basis)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn add(&self, other: &ModeVector) -> Result<Self> {
        self.basis.check_same(&other.basis)?;
        Ok(Self {
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModeVectorFile::from(self)).expect("mode vector serializes")
    }

    pub fn from_json(geom: BeamGeometry, value: &serde_json::Value) -> Result<Self> {
        let file: ModeVectorFile =
            serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_vector(geom)
    }

    pub fn from_json_str(geom: BeamGeometry, s: &str) -> Result<Self> {
        let file: ModeVectorFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_vector(geom)
    }

    /// CSV with header `n,m,re,im`, row-major `(n, m)` order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,re,im\n");
        for (mu, c) in self.iter() {
            out.push_str(&format!("{},{},{:.16e},{:.16e}\n", mu.n, mu.m, c.re, c.im));
        }
        out
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv). Rows may come in
    /// any order; missing entries are zero. `#` lines are skipped.
    pub fn from_csv(geom: BeamGeometry, s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut n_max = 0;
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("n,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("expected 4 columns: {line}")));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
            let n: usize = f[0].parse().map_err(|e| Error::Parse(format!("{}: {e}", f[0])))?;
            let m: usize = f[1].parse().map_err(|e| Error::Parse(format!("{}: {e}", f[1])))?;
            n_max = n_max.max(n).max(m);
            rows.push((ModeIndex::new(n, m), C64::new(p(f[2])?, p(f[3])?)));
        }
        let basis = ModeBasis::new(geom, n_max);
        let mut v = Self::zeros(basis);
        for (mu, c) in rows {
            let i = basis.index_of(mu).expect("n_max covers all rows");
            v.coeffs[i] = c;
        }
        Ok(v)
    }
}

#[derive(Serialize, Deserialize)]
struct ModeVectorFile {
    n_max: usize,
    coeffs: Vec<[f64; 2]>,
}

impl From<&ModeVector> for ModeVectorFile {
    fn from(v: &ModeVector) -> Self {
        Self {
            n_max: v.basis.n_max(),
            coeffs: v.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl ModeVectorFile {
    fn into_vector(self, geom: BeamGeometry) -> Result<ModeVector> {
        let basis = ModeBasis::new(geom, self.n_max);
        ModeVector::new(basis, self.coeffs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Anything that can be evaluated as a complex scalar field `f(x, y, z)`.
pub trait Field: Sync {
    fn eval(&self, x: f64, y: f64, z: f64) -> C64;

    fn geometry(&self) -> &BeamGeometry;

    /// Exact coefficient representation, when there is one.
    fn as_mode_vector(&self) -> Option<&ModeVector> {
        None
    }
}

impl Field for ModeVector {
    fn eval(&self, x: f64, y: f64, z: f64) -> C64 {
        synthesize(self, x, y, z)
    }

    fn geometry(&self) -> &BeamGeometry {
        self.basis.geometry()
    }

    fn as_mode_vector(&self) -> Option<&ModeVector> {
        Some(self)
    }
}

type FieldFn = dyn Fn(f64, f64, f64) -> C64 + Send + Sync;

/// A closed-form field given as a closure.
#[derive(Clone)]
pub struct SampledField {
    geom: BeamGeometry,
    f: Arc<FieldFn>,
}

impl SampledField {
    pub fn new(geom: BeamGeometry, f: impl Fn(f64, f64, f64) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            geom,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for SampledField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledField").field("geom", &self.geom).finish()
    }
}

impl Field for SampledField {
    fn eval(&self, x: f64, y: f64, z: f64) -> C64 {
        (self.f)(x, y, z)
    }

    fn geometry(&self) -> &BeamGeometry {
        &self.geom
    }
}

/// `u_mu(x + dx, y + dy, z)`: a transversely displaced Hermite-Gauss mode.
///
/// Translation commutes with the paraxial propagator, so this is a paraxial
/// solution at every `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacedMode {
    pub geom: BeamGeometry,
    pub mu: ModeIndex,
    pub dx: f64,
    pub dy: f64,
}

impl Field for DisplacedMode {
    fn eval(&self, x: f64, y: f64, z: f64) -> C64 {
        mode_2d(self.mu, x + self.dx, y + self.dy, z, &self.geom)
    }

    fn geometry(&self) -> &BeamGeometry {
        &self.geom
    }
}

/// 2D tensor grid at height `z`.
struct Grid {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Grid {
    fn new(geom: &BeamGeometry, z: f64, quad: &QuadratureRule) -> Self {
        let (x, w) = quad.scaled(geom.x_scale(z));
        Self { x, w }
    }

    fn sum(&self, mut f: impl FnMut(f64, f64) -> C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (xi, wi) in self.x.iter().zip(&self.w) {
            for (yj, wj) in self.x.iter().zip(&self.w) {
                acc += wi * wj * f(*xi, *yj);
            }
        }
        acc
    }
}

fn same_geometry(f: &dyn Field, g: &dyn Field) -> Result<()> {
    if f.geometry() == g.geometry() {
        Ok(())
    } else {
        Err(Error::GeometryMismatch)
    }
}

/// `(f, g) = int conj(f) g d^2x` at height `z`.
pub fn inner_product(f: &dyn Field, g: &dyn Field, z: f64, quad: &QuadratureRule) -> Result<C64> {
    same_geometry(f, g)?;
    if let (Some(a), Some(b)) = (f.as_mode_vector(), g.as_mode_vector()) {
        return a.inner(b);
    }
    let grid = Grid::new(f.geometry(), z, quad);
    Ok(grid.sum(|x, y| f.eval(x, y, z).conj() * g.eval(x, y, z)))
}

/// `[f g] = int f g d^2x` at height `z`, no conjugation.
pub fn functional_product(
    f: &dyn Field,
    g: &dyn Field,
    z: f64,
    quad: &QuadratureRule,
) -> Result<C64> {
    same_geometry(f, g)?;
    if z == 0.0 {
        if let (Some(a), Some(b)) = (f.as_mode_vector(), g.as_mode_vector()) {
            return a.bracket(b);
        }
    }
    let grid = Grid::new(f.geometry(), z, quad);
    Ok(grid.sum(|x, y| f.eval(x, y, z) * g.eval(x, y, z)))
}

/// `int |f|^2 d^2x` by quadrature.
pub fn quadrature_norm_sqr(f: &dyn Field, z: f64, quad: &QuadratureRule) -> f64 {
    let grid = Grid::new(f.geometry(), z, quad);
    grid.sum(|x, y| C64::new(f.eval(x, y, z).norm_sqr(), 0.0)).re
}

/// Weighted 1D mode table `W_i conj(phi_n(x_i, z))`, shape `(n_max+1) x Q`.
fn projector_1d(basis: &ModeBasis, z: f64, grid: &Grid) -> DMatrix<C64> {
    let geom = basis.geometry();
    let q = grid.x.len();
    let mut m = DMatrix::<C64>::zeros(basis.n_max() + 1, q);
    for (i, (x, w)) in grid.x.iter().zip(&grid.w).enumerate() {
        for (n, v) in mode_1d_table(basis.n_max(), *x, z, geom).into_iter().enumerate() {
            m[(n, i)] = v.conj() * *w;
        }
    }
    m
}

/// Projects a field onto the basis at height `z`: `phi_mu = (u_mu, f)`.
pub fn decompose(
    field: &dyn Field,
    basis: &ModeBasis,
    z: f64,
    quad: &QuadratureRule,
) -> Result<ModeVector> {
    if field.geometry() != basis.geometry() {
        return Err(Error::GeometryMismatch);
    }
    let required = QuadratureRule::policy_order(basis.n_max());
    if quad.order() < required {
        return Err(Error::QuadratureBelowPolicy {
            order: quad.order(),
            required,
            n_max: basis.n_max(),
        });
    }
    let grid = Grid::new(basis.geometry(), z, quad);
    let q = grid.x.len();
    let mut samples = DMatrix::<C64>::zeros(q, q);
    for (i, x) in grid.x.iter().enumerate() {
        for (j, y) in grid.x.iter().enumerate() {
            let v = field.eval(*x, *y, z);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteSample { x: *x, y: *y, z });
            }
            samples[(i, j)] = v;
        }
    }
    let proj = projector_1d(basis, z, &grid);
    let c = &proj * samples * proj.transpose();
    let carrier = C64::from_polar(1.0, -basis.geometry().k() * z);
    let np1 = basis.n_max() + 1;
    let coeffs = (0..basis.len())
        .map(|i| c[(i / np1, i % np1)] * carrier)
        .collect();
    ModeVector::new(*basis, coeffs)
}

/// `sum_mu v_mu u_mu(x, y, z)`.
pub fn synthesize(v: &ModeVector, x: f64, y: f64, z: f64) -> C64 {
    let basis = v.basis();
    let geom = basis.geometry();
    let px = mode_1d_table(basis.n_max(), x, z, geom);
    let py = mode_1d_table(basis.n_max(), y, z, geom);
    let np1 = basis.n_max() + 1;
    let s: C64 = v
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * px[i / np1] * py[i % np1])
        .sum();
    s * C64::from_polar(1.0, geom.k() * z)
}

/// Gram matrix `(u_mu, u_nu)` by tensor quadrature.
pub fn gram_matrix(basis: &ModeBasis, z: f64, quad: &QuadratureRule) -> DMatrix<C64> {
    let grid = Grid::new(basis.geometry(), z, quad);
    let geom = basis.geometry();
    let q = grid.x.len();
    let np1 = basis.n_max() + 1;
    // rows: quadrature points, columns: basis modes, pre-multiplied by sqrt(W)
    let mut u = DMatrix::<C64>::zeros(q * q, basis.len());
    let tables: Vec<Vec<C64>> = grid
        .x
        .iter()
        .map(|x| mode_1d_table(basis.n_max(), *x, z, geom))
        .collect();
    let carrier = C64::from_polar(1.0, geom.k() * z);
    for i in 0..q {
        for j in 0..q {
            let sw = (grid.w[i] * grid.w[j]).sqrt();
            for mu in 0..basis.len() {
                u[(i * q + j, mu)] = tables[i][mu / np1] * tables[j][mu % np1] * carrier * sw;
            }
        }
    }
    u.adjoint() * u
}

/// Truncated completeness kernel `sum_mu u_mu(x, y, z) conj(u_mu(x', y', z))`.
pub fn completeness_kernel(basis: &ModeBasis, x: f64, y: f64, xp: f64, yp: f64, z: f64) -> C64 {
    basis
        .modes()
        .map(|mu| {
            let g = basis.geometry();
            mode_2d(mu, x, y, z, g) * mode_2d(mu, xp, yp, z, g).conj()
        })
        .sum()
}

/// Action of the truncated kernel on a field, evaluated at `(xp, yp)`:
/// `int K(x', x) f(x) d^2x = sum_mu u_mu(x') (u_mu, f)`.
pub fn kernel_action(
    basis: &ModeBasis,
    field: &dyn Field,
    xp: f64,
    yp: f64,
    z: f64,
    quad: &QuadratureRule,
) -> Result<C64> {
    let v = decompose(field, basis, z, quad)?;
    Ok(synthesize(&v, xp, yp, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::envelope_2d;

    fn basis(n_max: usize) -> ModeBasis {
        ModeBasis::new(BeamGeometry::new(1.0, 1.0).unwrap(), n_max)
    }

    #[test]
    fn index_order_is_row_major() {
        let b = basis(3);
        assert_eq!(b.len(), 16);
        assert_eq!(b.index_of(ModeIndex::new(1, 2)), Some(6));
        assert_eq!(b.mode_at(6), ModeIndex::new(1, 2));
        assert_eq!(b.index_of(ModeIndex::new(4, 0)), None);
        let v: Vec<_> = b.modes().take(5).collect();
        assert_eq!(v[4], ModeIndex::new(1, 0));
    }

    #[test]
    fn orthonormal_by_quadrature() {
        let b = basis(8);
        let q = QuadratureRule::gauss_hermite(40).unwrap();
        for &z in &[0.0, 0.25, 1.0] {
            let g = gram_matrix(&b, z, &q);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - e).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn displaced_ground_mode_overlap() {
        let g = BeamGeometry::new(1.4, 2.0).unwrap();
        let b = ModeBasis::new(g, 4);
        let q = QuadratureRule::gauss_hermite(40).unwrap();
        let u00 = ModeVector::unit(b, ModeIndex::new(0, 0));
        for &xi in &[0.0, 0.3, -1.1, 2.0] {
            let f = DisplacedMode {
                geom: g,
                mu: ModeIndex::new(0, 0),
                dx: xi * g.x_scale(0.0),
                dy: 0.0,
            };
            let v = inner_product(&u00, &f, 0.0, &q).unwrap();
            let exact = (-xi * xi / 4.0).exp();
            assert!((v - exact).norm() < 1e-12, "xi={xi} v={v}");
        }
    }

    #[test]
    fn functional_product_properties() {
        let b = basis(3);
        let q = QuadratureRule::gauss_hermite(24).unwrap();
        let u00 = ModeVector::unit(b, ModeIndex::new(0, 0));
        let u10 = ModeVector::unit(b, ModeIndex::new(1, 0));
        let sf = SampledField::new(*b.geometry(), |x, y, z| {
            let g = BeamGeometry::new(1.0, 1.0).unwrap();
            mode_2d(ModeIndex::new(1, 0), x, y, z, &g)
        });
        // exact route and quadrature route both vanish
        assert!(functional_product(&u00, &u10, 0.0, &q).unwrap().norm() < 1e-15);
        assert!(functional_product(&u00, &sf, 0.0, &q).unwrap().norm() < 1e-13);
        let phi = ModeVector::from_fn(b, |mu| C64::new(0.1 * mu.n as f64 + 0.2, -0.3 * mu.m as f64));
        let psi = ModeVector::from_fn(b, |mu| C64::new(0.5 - 0.1 * mu.m as f64, 0.0));
        let a = functional_product(&phi, &psi, 0.0, &q).unwrap();
        let c = functional_product(&psi, &phi, 0.0, &q).unwrap();
        assert!((a - c).norm() < 1e-15);
        // with psi real, [psi phi] = (psi, phi)
        let ip = inner_product(&psi, &phi, 0.0, &q).unwrap();
        assert!((a - ip).norm() < 1e-14);
    }

    #[test]
    fn functional_product_real_normalized() {
        let b = basis(2);
        let q = QuadratureRule::gauss_hermite(24).unwrap();
        let phi = ModeVector::from_fn(b, |mu| C64::new(1.0 + mu.n as f64 - 0.5 * mu.m as f64, 0.0))
            .normalized()
            .unwrap();
        let v = functional_product(&phi, &phi, 0.0, &q).unwrap();
        assert!((v - 1.0).norm() < 1e-14);
    }

    #[test]
    fn decompose_reproduces_basis_element() {
        let b = basis(5);
        let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(5)).unwrap();
        let g = *b.geometry();
        let mu = ModeIndex::new(2, 3);
        for &z in &[0.0, 0.3] {
            let f = SampledField::new(g, move |x, y, z| mode_2d(mu, x, y, z, &g));
            let v = decompose(&f, &b, z, &q).unwrap();
            for (nu, c) in v.iter() {
                let e = if nu == mu { 1.0 } else { 0.0 };
                assert!((c - e).norm() <= 1e-10, "{nu}: {c}");
            }
        }
    }

    #[test]
    fn decompose_policy_and_non_finite() {
        let b = basis(5);
        let low = QuadratureRule::gauss_hermite(10).unwrap();
        let u = ModeVector::unit(b, ModeIndex::new(0, 0));
        assert!(matches!(
            decompose(&u, &b, 0.0, &low),
            Err(Error::QuadratureBelowPolicy { .. })
        ));
        let q = QuadratureRule::gauss_hermite(26).unwrap();
        let bad = SampledField::new(*b.geometry(), |_, _, _| C64::new(f64::NAN, 0.0));
        assert!(matches!(
            decompose(&bad, &b, 0.0, &q),
            Err(Error::NonFiniteSample { .. })
        ));
    }

    #[test]
    fn displaced_ground_mode_coherent_series() {
        // u00 shifted by xi*x0 has 1D coefficients e^{-b^2/2} (-b)^n / sqrt(n!),
        // b = xi / sqrt(2)
        let g = BeamGeometry::new(1.0, 1.0).unwrap();
        let b = ModeBasis::new(g, 10);
        let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(10)).unwrap();
        let xi = 0.4;
        let f = DisplacedMode {
            geom: g,
            mu: ModeIndex::new(0, 0),
            dx: xi * g.x_scale(0.0),
            dy: 0.0,
        };
        let v = decompose(&f, &b, 0.0, &q).unwrap();
        let beta = xi / 2f64.sqrt();
        for (mu, c) in v.iter() {
            let e = if mu.m == 0 {
                (-beta * beta / 2.0).exp() * (-beta).powi(mu.n as i32)
                    / crate::geometry::factorial(mu.n).sqrt()
            } else {
                0.0
            };
            assert!((c - e).norm() <= 1e-8, "{mu}: {c} vs {e}");
        }
    }

    #[test]
    fn coefficients_independent_of_z() {
        let g = BeamGeometry::new(0.9, 3.0).unwrap();
        let b = ModeBasis::new(g, 8);
        let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(8)).unwrap();
        let f = DisplacedMode {
            geom: g,
            mu: ModeIndex::new(1, 0),
            dx: 0.2 * g.x_scale(0.0),
            dy: -0.1 * g.x_scale(0.0),
        };
        let a = decompose(&f, &b, 0.0, &q).unwrap();
        let c = decompose(&f, &b, 0.3 * g.z0(), &q).unwrap();
        for (x, y) in a.coeffs().iter().zip(c.coeffs()) {
            assert!((x - y).norm() <= 1e-8);
        }
    }

    #[test]
    fn synthesize_basics() {
        let b = basis(3);
        let g = *b.geometry();
        let mu = ModeIndex::new(1, 2);
        let v = ModeVector::unit(b, mu);
        for &(x, y, z) in &[(0.1, 0.2, 0.0), (-0.4, 0.7, 0.5)] {
            assert!((synthesize(&v, x, y, z) - mode_2d(mu, x, y, z, &g)).norm() < 1e-15);
            assert_eq!(synthesize(&ModeVector::zeros(b), x, y, z), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn round_trip_on_tem11() {
        let b = basis(6);
        let g = *b.geometry();
        let q = QuadratureRule::gauss_hermite(28).unwrap();
        let mu = ModeIndex::new(1, 1);
        let f = SampledField::new(g, move |x, y, z| mode_2d(mu, x, y, z, &g));
        let v = decompose(&f, &b, 0.0, &q).unwrap();
        for i in -4..=4 {
            for j in -4..=4 {
                let (x, y) = (0.3 * i as f64, 0.3 * j as f64);
                assert!((synthesize(&v, x, y, 0.0) - f.eval(x, y, 0.0)).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn kernel_reproduces_ground_mode_and_is_positive() {
        let g = BeamGeometry::new(1.0, 1.0).unwrap();
        for n_max in [0usize, 2, 5] {
            let b = ModeBasis::new(g, n_max);
            let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(n_max)).unwrap();
            let u00 = ModeVector::unit(b, ModeIndex::new(0, 0));
            let v = kernel_action(&b, &u00, 0.3, -0.2, 0.0, &q).unwrap();
            let e = mode_2d(ModeIndex::new(0, 0), 0.3, -0.2, 0.0, &g);
            assert!((v - e).norm() < 1e-13);
            let d = completeness_kernel(&b, 0.3, -0.2, 0.3, -0.2, 0.4);
            assert!(d.re > 0.0 && d.im.abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_converges_on_displaced_mode() {
        let g = BeamGeometry::new(1.0, 1.0).unwrap();
        let f = DisplacedMode {
            geom: g,
            mu: ModeIndex::new(0, 0),
            dx: 0.2 * g.x_scale(0.0),
            dy: 0.0,
        };
        let (xp, yp) = (0.35, -0.15);
        let exact = f.eval(xp, yp, 0.0);
        let mut last_l2 = f64::INFINITY;
        let mut last_err = 0.0;
        for n_max in 0..=12 {
            let b = ModeBasis::new(g, n_max);
            let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(n_max)).unwrap();
            let v = decompose(&f, &b, 0.0, &q).unwrap();
            let l2 = 1.0 - v.norm_sqr();
            assert!(l2 <= last_l2 + 1e-14);
            last_l2 = l2;
            last_err = (kernel_action(&b, &f, xp, yp, 0.0, &q).unwrap() - exact).norm();
        }
        assert!(last_err <= 1e-6, "{last_err}");
    }

    #[test]
    fn parseval_and_bessel() {
        let b = basis(4);
        let q = QuadratureRule::gauss_hermite(30).unwrap();
        let v = ModeVector::from_fn(b, |mu| C64::new(0.3 - 0.05 * mu.n as f64, 0.1 * mu.m as f64));
        for &z in &[0.0, 0.6] {
            let n = quadrature_norm_sqr(&v, z, &q);
            assert!((n - v.norm_sqr()).abs() < 1e-8);
        }
        let g = *b.geometry();
        let f = DisplacedMode { geom: g, mu: ModeIndex::new(1, 1), dx: 0.5, dy: 0.2 };
        let q = QuadratureRule::gauss_hermite(QuadratureRule::policy_order(4)).unwrap();
        let d = decompose(&f, &b, 0.0, &q).unwrap();
        assert!(quadrature_norm_sqr(&f, 0.0, &q) - d.norm_sqr() >= -1e-9);
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let a = ModeVector::unit(basis(2), ModeIndex::new(0, 0));
        let g2 = BeamGeometry::new(2.0, 1.0).unwrap();
        let c = ModeVector::unit(ModeBasis::new(g2, 2), ModeIndex::new(0, 0));
        let q = QuadratureRule::gauss_hermite(8).unwrap();
        assert_eq!(inner_product(&a, &c, 0.0, &q), Err(Error::GeometryMismatch));
        assert!(a.inner(&ModeVector::unit(basis(3), ModeIndex::new(0, 0))).is_err());
        let _ = envelope_2d(ModeIndex::new(0, 0), 0.0, 0.0, 0.0, &g2);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let b = basis(2);
        let g = *b.geometry();
        let v = ModeVector::from_fn(b, |mu| C64::new(mu.n as f64 * 0.1, -(mu.m as f64) / 3.0));
        let j = v.to_json();
        assert_eq!(j["n_max"], 2);
        assert_eq!(ModeVector::from_json(g, &j).unwrap(), v);
        assert_eq!(ModeVector::from_csv(g, &v.to_csv()).unwrap(), v);
        assert!(ModeVector::from_json_str(g, r#"{"n_max": 1, "coeffs": [[1, 0]]}"#).is_err());
    }
}
