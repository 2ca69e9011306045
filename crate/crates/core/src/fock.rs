//! Truncated multimode bosonic Fock space: the brute-force oracle.
//!
//! Basis states are occupation tuples `(n_0, ..., n_{M-1})` with every
//! `n_j <= C`, ordered lexicographically (mode 0 most significant), so the
//! index is `sum_j n_j (C+1)^(M-1-j)`.
//!
//! Ladder operators act on state vectors directly. Dense operator matrices
//! are built on request only, and only while `dim` stays under the space's cap.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::beamsplitter::SplitterCoefficients;
use crate::error::{Error, Result};
use crate::geometry::{mode_2d, BeamGeometry, ModeIndex};
use crate::mode_space::ModeVector;

pub type OperatorMatrix = DMatrix<C64>;
pub type FockStateVector = DVector<C64>;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Coefficients below this are treated as absent when projecting onto modes.
pub const SUPPORT_TOL: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub fn number(self) -> u8 {
        match self {
            Port::One => 1,
            Port::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockMode {
    pub port: Port,
    pub mu: ModeIndex,
}

impl FockMode {
    pub fn new(port: Port, mu: ModeIndex) -> Self {
        Self { port, mu }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    modes: Vec<FockMode>,
    cutoff: usize,
    dim: usize,
    strides: Vec<usize>,
    cap: usize,
}

impl FockSpace {
    pub fn new(modes: Vec<FockMode>, cutoff: usize) -> Result<Self> {
        Self::with_cap(modes, cutoff, DEFAULT_DIM_CAP)
    }

    /// `cap` bounds the dimension of dense matrices, not of state vectors.
    pub fn with_cap(modes: Vec<FockMode>, cutoff: usize, cap: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::TruncationPolicy("cutoff must be positive".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::Parse(format!(
                    "duplicate mode ({}, {})",
                    m.port.number(),
                    m.mu
                )));
            }
        }
        let radix = cutoff + 1;
        let mut dim: usize = 1;
        for _ in &modes {
            dim = dim
                .checked_mul(radix)
                .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
        }
        let m = modes.len();
        let strides = (0..m).map(|j| radix.pow((m - 1 - j) as u32)).collect();
        Ok(Self {
            modes,
            cutoff,
            dim,
            strides,
            cap,
        })
    }

    /// Modes `(1, mu)` for every `mu`, followed by `(2, mu)` for every `mu`.
    pub fn two_port(mus: &[ModeIndex], cutoff: usize) -> Result<Self> {
        let modes = [Port::One, Port::Two]
            .iter()
            .flat_map(|&p| mus.iter().map(move |&mu| FockMode::new(p, mu)))
            .collect();
        Self::new(modes, cutoff)
    }

    pub fn single_port(mus: &[ModeIndex], cutoff: usize) -> Result<Self> {
        Self::new(mus.iter().map(|&mu| FockMode::new(Port::One, mu)).collect(), cutoff)
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn modes(&self) -> &[FockMode] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_cap(&self) -> usize {
        self.cap
    }

    pub fn check_cap(&self) -> Result<()> {
        if self.dim > self.cap {
            Err(Error::DimensionCap {
                dim: self.dim,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn position(&self, port: Port, mu: ModeIndex) -> Option<usize> {
        self.modes.iter().position(|m| m.port == port && m.mu == mu)
    }

    /// Occupation of mode `j` in basis state `idx`.
    pub fn occupation(&self, idx: usize, j: usize) -> usize {
        (idx / self.strides[j]) % (self.cutoff + 1)
    }

    pub fn occupations(&self, idx: usize) -> Vec<usize> {
        (0..self.modes.len()).map(|j| self.occupation(idx, j)).collect()
    }

    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.modes.len() || occ.iter().any(|&n| n > self.cutoff) {
            return None;
        }
        Some(occ.iter().zip(&self.strides).map(|(n, s)| n * s).sum())
    }

    pub fn total_number(&self, idx: usize) -> usize {
        (0..self.modes.len()).map(|j| self.occupation(idx, j)).sum()
    }

    pub fn vacuum(&self) -> FockStateVector {
        let mut v = FockStateVector::zeros(self.dim);
        v[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn basis_state(&self, occ: &[usize]) -> Result<FockStateVector> {
        let idx = self
            .index_of(occ)
            .ok_or_else(|| Error::TruncationPolicy(format!("occupations {occ:?} outside the space")))?;
        let mut v = FockStateVector::zeros(self.dim);
        v[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn annihilate(&self, j: usize, v: &FockStateVector) -> FockStateVector {
        let s = self.strides[j];
        let mut out = FockStateVector::zeros(self.dim);
        for idx in 0..self.dim {
            let n = self.occupation(idx, j);
            if n > 0 && v[idx] != ZERO {
                out[idx - s] += v[idx] * (n as f64).sqrt();
            }
        }
        out
    }

    pub fn create(&self, j: usize, v: &FockStateVector) -> FockStateVector {
        let s = self.strides[j];
        let mut out = FockStateVector::zeros(self.dim);
        for idx in 0..self.dim {
            let n = self.occupation(idx, j);
            if n < self.cutoff && v[idx] != ZERO {
                out[idx + s] += v[idx] * ((n + 1) as f64).sqrt();
            }
        }
        out
    }

    /// `(position, coefficient)` pairs for the support of `phi` on `port`.
    fn support(&self, phi: &ModeVector, port: Port) -> Result<Vec<(usize, C64)>> {
        phi.iter()
            .filter(|(_, c)| c.norm() > SUPPORT_TOL)
            .map(|(mu, c)| {
                self.position(port, mu)
                    .map(|j| (j, c))
                    .ok_or_else(|| Error::MissingMode {
                        mode: format!("({}, {mu})", port.number()),
                    })
            })
            .collect()
    }

    /// `a[phi] v = sum_mu conj(phi_mu) a_{port,mu} v`.
    pub fn annihilate_projected(&self, phi: &ModeVector, port: Port, v: &FockStateVector) -> Result<FockStateVector> {
        let mut out = FockStateVector::zeros(self.dim);
        for (j, c) in self.support(phi, port)? {
            out += self.annihilate(j, v) * c.conj();
        }
        Ok(out)
    }

    /// `a^dag[phi] v = sum_mu phi_mu a^dag_{port,mu} v`.
    pub fn create_projected(&self, phi: &ModeVector, port: Port, v: &FockStateVector) -> Result<FockStateVector> {
        let mut out = FockStateVector::zeros(self.dim);
        for (j, c) in self.support(phi, port)? {
            out += self.create(j, v) * c;
        }
        Ok(out)
    }

    /// `N^dag[phi] = a^dag[phi] a[phi]` applied to `v`.
    pub fn number_projected(&self, phi: &ModeVector, port: Port, v: &FockStateVector) -> Result<FockStateVector> {
        let a = self.annihilate_projected(phi, port, v)?;
        self.create_projected(phi, port, &a)
    }

    pub fn total_number_apply(&self, v: &FockStateVector) -> FockStateVector {
        FockStateVector::from_fn(self.dim, |i, _| v[i] * self.total_number(i) as f64)
    }

    /// `e^{-|alpha|^2/2} sum_N alpha^N/N! (a^dag[phi])^N v`, summed to the cutoff.
    pub fn coherent_excitation(
        &self,
        v: &FockStateVector,
        phi: &ModeVector,
        port: Port,
        alpha: C64,
    ) -> Result<FockStateVector> {
        let mut term = v.clone();
        let mut out = v.clone();
        for n in 1..=self.cutoff {
            term = self.create_projected(phi, port, &term)? * (alpha / n as f64);
            out += &term;
        }
        Ok(out * C64::from((-0.5 * alpha.norm_sqr()).exp()))
    }

    /// `U(t) v = exp(-i omega N t) v`.
    pub fn evolve(&self, v: &FockStateVector, omega: f64, t: f64) -> FockStateVector {
        FockStateVector::from_fn(self.dim, |i, _| {
            v[i] * C64::from_polar(1.0, -omega * t * self.total_number(i) as f64)
        })
    }

    /// `A_port(r) v = sum_mu u_mu(r) a_{port,mu} v`, without the time phase.
    fn positive_part(&self, geom: &BeamGeometry, port: Port, r: [f64; 3], v: &FockStateVector) -> FockStateVector {
        let mut out = FockStateVector::zeros(self.dim);
        for (j, m) in self.modes.iter().enumerate() {
            if m.port == port {
                out += self.annihilate(j, v) * mode_2d(m.mu, r[0], r[1], r[2], geom);
            }
        }
        out
    }

    fn negative_part(&self, geom: &BeamGeometry, port: Port, r: [f64; 3], v: &FockStateVector) -> FockStateVector {
        let mut out = FockStateVector::zeros(self.dim);
        for (j, m) in self.modes.iter().enumerate() {
            if m.port == port {
                out += self.create(j, v) * mode_2d(m.mu, r[0], r[1], r[2], geom).conj();
            }
        }
        out
    }

    /// `Psi_port(r, t) v = (2 omega)^{-1/2} (A + A^dag) v`,
    /// `A = e^{-i omega t} sum_mu a_{port,mu} u_mu(r)`.
    pub fn apply_field(
        &self,
        geom: &BeamGeometry,
        port: Port,
        r: [f64; 3],
        t: f64,
        omega: f64,
        v: &FockStateVector,
    ) -> FockStateVector {
        let ph = C64::from_polar(1.0, -omega * t);
        (self.positive_part(geom, port, r, v) * ph + self.negative_part(geom, port, r, v) * ph.conj())
            * C64::from((2.0 * omega).sqrt().recip())
    }

    /// Dense matrix of a linear map given by its action on basis vectors.
    pub fn dense(&self, f: impl Fn(&FockStateVector) -> FockStateVector) -> Result<OperatorMatrix> {
        self.check_cap()?;
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        let mut e = FockStateVector::zeros(self.dim);
        for i in 0..self.dim {
            e[i] = C64::new(1.0, 0.0);
            m.set_column(i, &f(&e));
            e[i] = ZERO;
        }
        Ok(m)
    }

    /// Basis states in which every `(1, mu)`/`(2, mu)` pair holds at most
    /// `max_pair` photons; modes without a partner count alone.
    pub fn pair_totals_at_most(&self, idx: usize, max_pair: usize) -> bool {
        let occ = self.occupations(idx);
        let mut seen = vec![false; self.modes.len()];
        for j in 0..self.modes.len() {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            let mut total = occ[j];
            if let Some(k) = self.partner(j) {
                seen[k] = true;
                total += occ[k];
            }
            if total > max_pair {
                return false;
            }
        }
        true
    }

    fn partner(&self, j: usize) -> Option<usize> {
        let m = self.modes[j];
        let other = match m.port {
            Port::One => Port::Two,
            Port::Two => Port::One,
        };
        self.position(other, m.mu)
    }
}

/// Truncated `(a_j, a_j^dag)` for every mode, in mode order.
pub fn ladder_matrices(space: &FockSpace) -> Result<Vec<(OperatorMatrix, OperatorMatrix)>> {
    space.check_cap()?;
    (0..space.modes().len())
        .map(|j| {
            let a = space.dense(|v| space.annihilate(j, v))?;
            let ad = a.adjoint();
            Ok((a, ad))
        })
        .collect()
}

/// Dense `(a[phi], a^dag[phi])` on `port`.
pub fn projected_ladder(space: &FockSpace, phi: &ModeVector, port: Port) -> Result<(OperatorMatrix, OperatorMatrix)> {
    space.support(phi, port)?;
    let a = space.dense(|v| space.annihilate_projected(phi, port, v).expect("support checked"))?;
    let ad = a.adjoint();
    Ok((a, ad))
}

/// `|N[phi]> = (a^dag[phi])^N |0> / sqrt(N!)`; exact for `N <= C`.
pub fn number_state(space: &FockSpace, phi: &ModeVector, port: Port, n: usize) -> Result<FockStateVector> {
    if n > space.cutoff() {
        return Err(Error::TruncationPolicy(format!(
            "N = {n} exceeds the cutoff {}",
            space.cutoff()
        )));
    }
    let mut v = space.vacuum();
    for k in 1..=n {
        v = space.create_projected(phi, port, &v)? * C64::from((k as f64).sqrt().recip());
    }
    Ok(v)
}

/// Largest `|alpha|` accepted by [`coherent_state`].
pub const MAX_COHERENT_ALPHA: f64 = 0.5;
/// Smallest cutoff accepted by [`coherent_state`].
pub const MIN_COHERENT_CUTOFF: usize = 6;

/// `|alpha, [phi]>` truncated at the cutoff.
pub fn coherent_state(space: &FockSpace, phi: &ModeVector, port: Port, alpha: C64) -> Result<FockStateVector> {
    check_coherent_policy(space, alpha)?;
    space.coherent_excitation(&space.vacuum(), phi, port, alpha)
}

fn check_coherent_policy(space: &FockSpace, alpha: C64) -> Result<()> {
    if alpha.norm() > MAX_COHERENT_ALPHA || space.cutoff() < MIN_COHERENT_CUTOFF {
        return Err(Error::TruncationPolicy(format!(
            "coherent states need |alpha| <= {MAX_COHERENT_ALPHA} and C >= {MIN_COHERENT_CUTOFF} \
             (got |alpha| = {}, C = {})",
            alpha.norm(),
            space.cutoff()
        )));
    }
    Ok(())
}

/// Hermitian `K` with `exp(iK) = [[tau, r], [r, tau]]`, `r = rho * parity`,
/// taken on the principal branch.
///
/// The block is diagonal in `(1, +-1)/sqrt(2)` with eigenvalues `tau +- r`.
pub fn splitter_generator(s: &SplitterCoefficients, parity: f64) -> [[f64; 2]; 2] {
    let r = s.rho() * parity;
    let th_plus = (s.tau() + r).arg();
    let th_minus = (s.tau() - r).arg();
    let d = 0.5 * (th_plus + th_minus);
    let o = 0.5 * (th_plus - th_minus);
    [[d, o], [o, d]]
}

/// One `(1, mu)`/`(2, mu)` pair lifted to Fock space, block-diagonal in the
/// pair's photon number `n = n1 + n2`.
#[derive(Debug, Clone)]
struct PairLift {
    j1: usize,
    j2: usize,
    /// Sector `n` acts on `|n1, n - n1>` for `n1` in `lo(n)..=hi(n)`.
    sectors: Vec<DMatrix<C64>>,
}

/// `S = exp(i sum_mu sum_jk K_mu,jk a^dag_j a_k)` for a beam splitter.
#[derive(Debug, Clone)]
pub struct ScatteringOperator {
    space: FockSpace,
    pairs: Vec<PairLift>,
}

fn sector_range(n: usize, c: usize) -> (usize, usize) {
    (n.saturating_sub(c), n.min(c))
}

fn sector_generator(k: [[f64; 2]; 2], n: usize, c: usize) -> DMatrix<C64> {
    let (lo, hi) = sector_range(n, c);
    let size = hi - lo + 1;
    let mut g = DMatrix::<C64>::zeros(size, size);
    for n1 in lo..=hi {
        let n2 = n - n1;
        let i = n1 - lo;
        g[(i, i)] = C64::new(k[0][0] * n1 as f64 + k[1][1] * n2 as f64, 0.0);
        // a1^dag a2 |n1, n2> = sqrt((n1+1) n2) |n1+1, n2-1>
        if n1 < hi {
            g[(i + 1, i)] = C64::new(k[0][1] * ((n1 + 1) as f64 * n2 as f64).sqrt(), 0.0);
        }
        // a2^dag a1 |n1, n2> = sqrt(n1 (n2+1)) |n1-1, n2+1>
        if n1 > lo {
            g[(i - 1, i)] = C64::new(k[1][0] * (n1 as f64 * (n2 + 1) as f64).sqrt(), 0.0);
        }
    }
    g
}

/// Lifts the single-particle splitter blocks to the Fock space.
pub fn bs_unitary(space: &FockSpace, s: &SplitterCoefficients) -> Result<ScatteringOperator> {
    SplitterCoefficients::new(s.rho(), s.tau())?;
    let c = space.cutoff();
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (j1, m) in space.modes().iter().enumerate() {
        match (m.port, space.partner(j1)) {
            (Port::One, Some(j2)) => {
                let k = splitter_generator(s, m.mu.reflection_parity());
                let sectors = (0..=2 * c)
                    .map(|n| (sector_generator(k, n, c) * C64::new(0.0, 1.0)).exp())
                    .collect();
                pairs.push(PairLift { j1, j2, sectors });
            }
            (Port::Two, Some(_)) => {}
            (p, None) => unmatched.push(format!("({}, {})", p.number(), m.mu)),
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedModes(unmatched.join(", ")));
    }
    Ok(ScatteringOperator {
        space: space.clone(),
        pairs,
    })
}

impl ScatteringOperator {
    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn apply(&self, v: &FockStateVector) -> FockStateVector {
        self.apply_with(v, false)
    }

    pub fn apply_adjoint(&self, v: &FockStateVector) -> FockStateVector {
        self.apply_with(v, true)
    }

    fn apply_with(&self, v: &FockStateVector, adjoint: bool) -> FockStateVector {
        let sp = &self.space;
        let c = sp.cutoff();
        let mut cur = v.clone();
        for pair in &self.pairs {
            let (s1, s2) = (sp.strides[pair.j1], sp.strides[pair.j2]);
            let mut next = FockStateVector::zeros(sp.dim());
            for base in 0..sp.dim() {
                if sp.occupation(base, pair.j1) != 0 || sp.occupation(base, pair.j2) != 0 {
                    continue;
                }
                for (n, block) in pair.sectors.iter().enumerate() {
                    let (lo, hi) = sector_range(n, c);
                    let idx = |n1: usize| base + n1 * s1 + (n - n1) * s2;
                    let x = DVector::from_fn(hi - lo + 1, |i, _| cur[idx(lo + i)]);
                    if x.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    let y = if adjoint { block.ad_mul(&x) } else { block * x };
                    for (i, yi) in y.iter().enumerate() {
                        next[idx(lo + i)] = *yi;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Dense `S`, subject to the dimension cap.
    pub fn to_dense(&self) -> Result<OperatorMatrix> {
        self.space.dense(|v| self.apply(v))
    }
}

/// Deviations of the lifted splitter from its defining relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugationErrors {
    /// `max |S^dag S - I|` over all entries.
    pub unitarity: f64,
    /// `S^dag a S` against `[[tau, rho s], [rho s, tau]] a`, on states whose
    /// pair photon numbers are all `<= C`.
    pub conjugation: f64,
    /// `[b_j, b_k^dag] - delta_jk` on states with pair photon numbers `<= C - 1`.
    pub commutators: f64,
}

fn max_dev_on_columns(m: &OperatorMatrix, target: &OperatorMatrix, cols: &[usize]) -> f64 {
    let mut e: f64 = 0.0;
    for &j in cols {
        for i in 0..m.nrows() {
            e = e.max((m[(i, j)] - target[(i, j)]).norm());
        }
    }
    e
}

/// Dense check of `S^dag S = I`, `S^dag a S = U a` and the output commutators.
pub fn splitter_conjugation_errors(space: &FockSpace, s: &SplitterCoefficients) -> Result<ConjugationErrors> {
    space.check_cap()?;
    let op = bs_unitary(space, s)?;
    let sm = op.to_dense()?;
    let dim = space.dim();
    let id = OperatorMatrix::identity(dim, dim);
    let unitarity = (sm.adjoint() * &sm - &id).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let lad = ladder_matrices(space)?;
    let c = space.cutoff();
    let exact: Vec<usize> = (0..dim).filter(|&i| space.pair_totals_at_most(i, c)).collect();
    let inner: Vec<usize> = (0..dim).filter(|&i| space.pair_totals_at_most(i, c - 1)).collect();
    let mut conjugation: f64 = 0.0;
    let mut b_ops = Vec::new();
    for pair in &op.pairs {
        let r = s.rho() * space.modes[pair.j1].mu.reflection_parity();
        let (a1, a2) = (&lad[pair.j1].0, &lad[pair.j2].0);
        let want = [a1 * s.tau() + a2 * r, a1 * r + a2 * s.tau()];
        for (j, w) in [pair.j1, pair.j2].into_iter().zip(want) {
            let lifted = sm.adjoint() * &lad[j].0 * &sm;
            conjugation = conjugation.max(max_dev_on_columns(&lifted, &w, &exact));
            b_ops.push(lifted);
        }
    }
    let zero = OperatorMatrix::zeros(dim, dim);
    let mut commutators: f64 = 0.0;
    for (j, bj) in b_ops.iter().enumerate() {
        for (k, bk) in b_ops.iter().enumerate() {
            let bkd = bk.adjoint();
            let comm = bj * &bkd - &bkd * bj;
            let want = if j == k { &id } else { &zero };
            commutators = commutators.max(max_dev_on_columns(&comm, want, &inner));
        }
    }
    Ok(ConjugationErrors {
        unitarity,
        conjugation,
        commutators,
    })
}

/// `U(t) = diag(exp(-i omega N t))` as a dense matrix.
pub fn time_evolution(space: &FockSpace, omega: f64, t: f64) -> Result<OperatorMatrix> {
    space.check_cap()?;
    let d = FockStateVector::from_fn(space.dim(), |i, _| {
        C64::from_polar(1.0, -omega * t * space.total_number(i) as f64)
    });
    Ok(OperatorMatrix::from_diagonal(&d))
}

/// Dense `Psi_port(r, t)` on the modes of `port`.
pub fn field_operator_matrix(
    space: &FockSpace,
    geom: &BeamGeometry,
    port: Port,
    r: [f64; 3],
    t: f64,
    omega: f64,
) -> Result<OperatorMatrix> {
    space.dense(|v| space.apply_field(geom, port, r, t, omega, v))
}

/// `<u|v>`.
pub fn braket(u: &FockStateVector, v: &FockStateVector) -> C64 {
    u.dotc(v)
}

/// `|<u|v>|` for normalized states.
pub fn fidelity(u: &FockStateVector, v: &FockStateVector) -> f64 {
    braket(u, v).norm()
}

/// 50:50 shorthand used by oracle checks.
pub fn fifty_fifty_amplitudes() -> (C64, C64) {
    (C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamsplitter::reflect_mode_vector;
    use crate::mode_space::ModeBasis;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn geom() -> BeamGeometry {
        BeamGeometry::new(1.1, 1.3).unwrap()
    }

    fn basis() -> ModeBasis {
        ModeBasis::new(geom(), 1)
    }

    const M00: ModeIndex = ModeIndex::new(0, 0);
    const M01: ModeIndex = ModeIndex::new(0, 1);

    /// Columns whose state has every occupation below the cutoff.
    fn interior(space: &FockSpace) -> Vec<usize> {
        (0..space.dim())
            .filter(|&i| space.occupations(i).iter().all(|&n| n < space.cutoff()))
            .collect()
    }

    fn phi_a() -> ModeVector {
        ModeVector::new(
            basis(),
            vec![C64::new(0.6, 0.1), C64::new(0.2, -0.5), C64::default(), C64::default()],
        )
        .unwrap()
        .normalized()
        .unwrap()
    }

    fn phi_b() -> ModeVector {
        ModeVector::new(
            basis(),
            vec![C64::new(-0.3, 0.4), C64::new(0.7, 0.2), C64::default(), C64::default()],
        )
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn single_mode_ladder() {
        let sp = FockSpace::single_port(&[M00], 2).unwrap();
        let (a, ad) = ladder_matrices(&sp).unwrap().remove(0);
        let v1 = &ad * sp.vacuum();
        assert_eq!(v1, sp.basis_state(&[1]).unwrap());
        let v2 = &ad * v1;
        assert!((v2[2] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(&a * sp.vacuum(), FockStateVector::zeros(3));
    }

    #[test]
    fn commutators() {
        let sp = FockSpace::two_port(&[M00, M01], 2).unwrap();
        let lad = ladder_matrices(&sp).unwrap();
        let id = OperatorMatrix::identity(sp.dim(), sp.dim());
        let zero = OperatorMatrix::zeros(sp.dim(), sp.dim());
        let cols = interior(&sp);
        for (j, (aj, _)) in lad.iter().enumerate() {
            for (k, (ak, adk)) in lad.iter().enumerate() {
                let c = aj * adk - adk * aj;
                let want = if j == k { &id } else { &zero };
                assert!(max_dev_on_columns(&c, want, &cols) <= 1e-14);
                if j != k {
                    assert_eq!(aj * ak - ak * aj, zero);
                }
            }
        }
    }

    #[test]
    fn dimension_cap() {
        let sp = FockSpace::two_port(&[M00, M01], 8).unwrap();
        assert_eq!(sp.dim(), 6561);
        assert!(matches!(ladder_matrices(&sp), Err(Error::DimensionCap { dim: 6561, cap: 4096 })));
        // state-level work is unaffected
        assert_eq!(sp.create(0, &sp.vacuum()).norm(), 1.0);
    }

    #[test]
    fn projected_operators() {
        let sp = FockSpace::single_port(&[M00, M01], 3).unwrap();
        let cols = interior(&sp);
        let (a, _) = projected_ladder(&sp, &ModeVector::unit(basis(), M01), Port::One).unwrap();
        assert_eq!(a, ladder_matrices(&sp).unwrap().remove(1).0);

        let (pa, _) = (phi_a(), phi_b());
        let orth = ModeVector::new(
            basis(),
            vec![-pa.coeffs()[1].conj(), pa.coeffs()[0].conj(), C64::default(), C64::default()],
        )
        .unwrap();
        let (aa, _) = projected_ladder(&sp, &pa, Port::One).unwrap();
        let (_, adb) = projected_ladder(&sp, &orth, Port::One).unwrap();
        let zero = OperatorMatrix::zeros(sp.dim(), sp.dim());
        assert!(max_dev_on_columns(&(&aa * &adb - &adb * &aa), &zero, &cols) <= 1e-12);

        let (_, adb) = projected_ladder(&sp, &phi_b(), Port::One).unwrap();
        let ov = pa.inner(&phi_b()).unwrap();
        let want = OperatorMatrix::identity(sp.dim(), sp.dim()) * ov;
        assert!(max_dev_on_columns(&(&aa * &adb - &adb * &aa), &want, &cols) <= 1e-12);

        let missing = ModeVector::unit(ModeBasis::new(geom(), 2), ModeIndex::new(2, 0));
        assert!(matches!(
            projected_ladder(&sp, &missing, Port::One),
            Err(Error::MissingMode { .. })
        ));
    }

    #[test]
    fn number_states() {
        let sp = FockSpace::single_port(&[M00, M01], 3).unwrap();
        let (pa, pb) = (phi_a(), phi_b());
        assert_eq!(number_state(&sp, &pa, Port::One, 0).unwrap(), sp.vacuum());
        let ov = pa.inner(&pb).unwrap();
        for n in 0..=3 {
            let u = number_state(&sp, &pa, Port::One, n).unwrap();
            let nu = sp.total_number_apply(&u);
            assert!((nu - &u * C64::from(n as f64)).norm() <= 1e-12);
            for m in 0..=3 {
                let w = number_state(&sp, &pb, Port::One, m).unwrap();
                let want = if n == m { ov.powu(n as u32) } else { ZERO };
                assert!((braket(&u, &w) - want).norm() <= 1e-12, "{n} {m}");
            }
        }
        assert!(number_state(&sp, &pa, Port::One, 4).is_err());
    }

    #[test]
    fn coherent_states() {
        let sp = FockSpace::single_port(&[M00, M01], 8).unwrap();
        let pa = phi_a();
        assert_eq!(coherent_state(&sp, &pa, Port::One, ZERO).unwrap(), sp.vacuum());
        let alpha = C64::new(0.3, 0.0);
        let v = coherent_state(&sp, &pa, Port::One, alpha).unwrap();
        assert!((v[0].re - (-0.045f64).exp()).abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-10);
        let av = sp.annihilate_projected(&pa, Port::One, &v).unwrap();
        // the series stops at N = C; the missing N = C + 1 term bounds the residual
        let tail = alpha.norm().powi(9) / crate::geometry::factorial(8).sqrt() * (-0.045f64).exp();
        let resid = (av - &v * alpha).norm();
        assert!(resid <= tail * (1.0 + 1e-9), "{resid} vs {tail}");
        assert!(tail < 1e-7);
        assert!(coherent_state(&sp, &pa, Port::One, C64::new(0.6, 0.0)).is_err());
        let small = FockSpace::single_port(&[M00], 4).unwrap();
        let u00 = ModeVector::unit(basis(), M00);
        assert!(coherent_state(&small, &u00, Port::One, alpha).is_err());
    }

    #[test]
    fn generator_reproduces_block() {
        for s in [
            SplitterCoefficients::fifty_fifty(),
            SplitterCoefficients::from_transmission(0.3, 1.1).unwrap(),
            SplitterCoefficients::from_transmission(0.0, -2.0).unwrap(),
        ] {
            for parity in [1.0, -1.0] {
                let k = splitter_generator(&s, parity);
                let km = DMatrix::from_fn(2, 2, |i, j| C64::new(k[i][j], 0.0));
                let u = (km * C64::new(0.0, 1.0)).exp();
                let b = s.block(parity);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((u[(i, j)] - b[i][j]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn sector_exponential_matches_eigendecomposition() {
        let s = SplitterCoefficients::from_transmission(0.4, 0.7).unwrap();
        let k = splitter_generator(&s, -1.0);
        for n in [1, 3, 5, 9] {
            let g = sector_generator(k, n, 5);
            let pade = (&g * C64::new(0.0, 1.0)).exp();
            let eig = SymmetricEigen::new(g.clone());
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
            let via_eig = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
            assert!((pade - via_eig).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn identity_splitter_lifts_to_identity() {
        let sp = FockSpace::two_port(&[M00, M01], 2).unwrap();
        let s = bs_unitary(&sp, &SplitterCoefficients::identity()).unwrap().to_dense().unwrap();
        assert!((s - OperatorMatrix::identity(sp.dim(), sp.dim())).norm() < 1e-14);
    }

    #[test]
    fn unmatched_modes_rejected() {
        let sp = FockSpace::new(
            vec![FockMode::new(Port::One, M00), FockMode::new(Port::Two, M01)],
            2,
        )
        .unwrap();
        assert!(matches!(
            bs_unitary(&sp, &SplitterCoefficients::fifty_fifty()),
            Err(Error::UnmatchedModes(_))
        ));
    }

    fn conjugation_error(s: &SplitterCoefficients, cutoff: usize) -> (f64, f64, f64) {
        let sp = FockSpace::two_port(&[M00, M01], cutoff).unwrap();
        let e = splitter_conjugation_errors(&sp, s).unwrap();
        (e.unitarity, e.conjugation, e.commutators)
    }

    #[test]
    fn lifted_splitter_conjugation() {
        for s in [
            SplitterCoefficients::fifty_fifty(),
            SplitterCoefficients::from_transmission(0.8, 0.4).unwrap(),
        ] {
            let (u, c, k) = conjugation_error(&s, 3);
            assert!(u < 1e-10 && c < 1e-10 && k < 1e-10, "{u} {c} {k}");
        }
    }

    #[test]
    fn single_photon_and_coherent_conversion() {
        let sp = FockSpace::two_port(&[M00, M01], 8).unwrap();
        let s = SplitterCoefficients::fifty_fifty();
        let op = bs_unitary(&sp, &s).unwrap();
        let phi = phi_a();
        let phi_r = reflect_mode_vector(&phi);
        let input = number_state(&sp, &phi, Port::One, 1).unwrap();
        let out = op.apply(&input);
        let want = number_state(&sp, &phi, Port::One, 1).unwrap() * s.tau()
            + number_state(&sp, &phi_r, Port::Two, 1).unwrap() * s.rho();
        assert!((out - want).norm() < 1e-10);

        let alpha = C64::new(0.3, 0.0);
        let input = coherent_state(&sp, &phi, Port::One, alpha).unwrap();
        let out = op.apply(&input);
        let p1 = coherent_state(&sp, &phi, Port::One, s.tau() * alpha).unwrap();
        let prod = sp.coherent_excitation(&p1, &phi_r, Port::Two, s.rho() * alpha).unwrap();
        assert!(fidelity(&prod, &out) >= 1.0 - 1e-8);
        // energy
        let n_in = braket(&input, &sp.total_number_apply(&input)).re;
        let n_out = braket(&out, &sp.total_number_apply(&out)).re;
        assert!((n_in - n_out).abs() < 1e-10);
        assert!((op.apply_adjoint(&out) - input).norm() < 1e-12);
    }

    #[test]
    fn time_evolution_properties() {
        let sp = FockSpace::single_port(&[M00, M01], 3).unwrap();
        let omega = 1.7;
        let id = OperatorMatrix::identity(sp.dim(), sp.dim());
        assert_eq!(time_evolution(&sp, omega, 0.0).unwrap(), id);
        let (u1, u2) = (time_evolution(&sp, omega, 0.4).unwrap(), time_evolution(&sp, omega, -1.3).unwrap());
        let u12 = time_evolution(&sp, omega, -0.9).unwrap();
        assert!((&u1 * &u2 - u12).norm() < 1e-13);
        let (a, _) = ladder_matrices(&sp).unwrap().remove(0);
        let lhs = u1.adjoint() * &a * &u1;
        assert!((lhs - &a * C64::from_polar(1.0, -omega * 0.4)).norm() < 1e-12);

        // [A[phi](t1), A^dag[phi'](t2)] = (phi, phi') e^{-i w (t1 - t2)}
        let (pa, pb) = (phi_a(), phi_b());
        let (t1, t2) = (0.7, -0.2);
        let heis = |phi: &ModeVector, t: f64| {
            let u = time_evolution(&sp, omega, t).unwrap();
            let (a, _) = projected_ladder(&sp, phi, Port::One).unwrap();
            u.adjoint() * a * u
        };
        let a1 = heis(&pa, t1);
        let a2d = heis(&pb, t2).adjoint();
        let c = &a1 * &a2d - &a2d * &a1;
        let want = id * (pa.inner(&pb).unwrap() * C64::from_polar(1.0, -omega * (t1 - t2)));
        assert!(max_dev_on_columns(&c, &want, &interior(&sp)) < 1e-12);
    }

    #[test]
    fn field_operator() {
        let sp = FockSpace::two_port(&[M00, M01], 2).unwrap();
        let g = geom();
        let omega = g.omega();
        let r = [0.2, -0.4, 0.3];
        let f = field_operator_matrix(&sp, &g, Port::One, r, 0.5, omega).unwrap();
        assert!((&f - f.adjoint()).norm() < 1e-14);
        let vac = sp.vacuum();
        assert_eq!(braket(&vac, &(&f * &vac)), ZERO);
        let phi = phi_a();
        let one = number_state(&sp, &phi, Port::One, 1).unwrap();
        let got = braket(&vac, &(&f * &one));
        let want = crate::amplitudes::single_photon_wavefunction(&phi, r[0], r[1], r[2], 0.5, omega).unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lifted_splitter_random(tau in 0.0f64..=1.0, ph in -3.1f64..3.1) {
            let s = SplitterCoefficients::from_transmission(tau, ph).unwrap();
            let (u, c, k) = conjugation_error(&s, 2);
            prop_assert!(u < 1e-10 && c < 1e-10 && k < 1e-10);
        }
    }
}
