//! Invariant suites run by `qfield verify` and `qfield oracle verify`.
//!
//! Every check reports the largest deviation it saw next to its tolerance.
//! Random instances come from a fixed seed, so reports are reproducible.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::amplitudes::{
    coherent_state_ratio, number_state_ratio, two_port_coherent_ratio, two_port_single_photon_ratio,
    Convention, FieldConfiguration, TwoPortFieldConfiguration,
};
use crate::beamsplitter::{
    inverse_transform, operator_transform, reflect_mode_vector, SplitterCoefficients, TwoPortModeVectors,
};
use crate::error::{Error, Result};
use crate::fock::{
    self, braket, coherent_state, fidelity, number_state, FockSpace, FockStateVector, Port,
};
use crate::geometry::{factorial, hermite_poly, mode_2d, paraxial_residual, BeamGeometry, ModeIndex, Steps};
use crate::mode_space::{decompose, gram_matrix, quadrature_norm_sqr, synthesize, DisplacedMode, ModeBasis, ModeVector};
use crate::observables::{detection_probability_ratio, photon_number_correlation, r_functional, two_point_correlation};
use crate::quadrature::QuadratureRule;

const SEED: u64 = 0x5eed_0ff1_e1d0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Modes,
    Beamsplitter,
    Amplitudes,
    Oracle,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modes" => Ok(Suite::Modes),
            "beamsplitter" => Ok(Suite::Beamsplitter),
            "amplitudes" => Ok(Suite::Amplitudes),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite '{other}' (expected modes, beamsplitter, amplitudes, oracle or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Modes => "modes",
            Suite::Beamsplitter => "beamsplitter",
            Suite::Amplitudes => "amplitudes",
            Suite::Oracle => "oracle",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        Self {
            check_name: name.into(),
            max_error,
            tolerance,
            pass: max_error.is_finite() && max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub geom: BeamGeometry,
    pub n_max: usize,
    pub quad_order: usize,
    pub splitter: SplitterCoefficients,
    /// Cutoff of the dense-matrix oracle checks.
    pub oracle_cutoff: usize,
    /// Dimension cap for dense oracle matrices.
    pub oracle_max_dim: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            geom: BeamGeometry::new(1.0, 1.0).expect("unit geometry"),
            n_max: 8,
            quad_order: 40,
            splitter: SplitterCoefficients::fifty_fifty(),
            oracle_cutoff: 3,
            oracle_max_dim: fock::DEFAULT_DIM_CAP,
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Report> {
    let mut checks = Vec::new();
    let mut rng = StdRng::seed_from_u64(SEED);
    if matches!(suite, Suite::Modes | Suite::All) {
        checks.extend(modes_suite(cfg)?);
    }
    if matches!(suite, Suite::Beamsplitter | Suite::All) {
        checks.extend(beamsplitter_suite(cfg, &mut rng)?);
    }
    if matches!(suite, Suite::Amplitudes | Suite::All) {
        checks.extend(amplitudes_suite(cfg, &mut rng)?);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        checks.extend(oracle_suite(cfg, &mut rng)?);
    }
    Ok(Report { suite, checks })
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn modes_suite(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let geom = cfg.geom;
    let basis = ModeBasis::new(geom, cfg.n_max);
    let quad = QuadratureRule::gauss_hermite(cfg.quad_order)?;
    let mut out = Vec::new();

    let explicit: [fn(f64) -> f64; 7] = [
        |_| 1.0,
        |x| 2.0 * x,
        |x| 4.0 * x * x - 2.0,
        |x| 8.0 * x.powi(3) - 12.0 * x,
        |x| 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
        |x| 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x,
        |x| 64.0 * x.powi(6) - 480.0 * x.powi(4) + 720.0 * x * x - 120.0,
    ];
    let herr = max_abs(explicit.iter().enumerate().flat_map(|(n, p)| {
        (-20..=20).map(move |i| {
            let x = i as f64 * 0.1;
            (hermite_poly(n, x) - p(x)).abs() / p(x).abs().max(1.0)
        })
    }));
    out.push(CheckRecord::new("hermite_explicit_n_le_6", herr, 1e-12));

    let z0 = geom.z0();
    for (label, z) in [("0", 0.0), ("0.5z0", 0.5 * z0), ("2z0", 2.0 * z0)] {
        let g = gram_matrix(&basis, z, &quad);
        let err = max_abs(g.iter().enumerate().map(|(k, v)| {
            let (i, j) = (k % g.nrows(), k / g.nrows());
            (v - if i == j { C64::new(1.0, 0.0) } else { C64::default() }).norm()
        }));
        out.push(CheckRecord::new(format!("gram_identity_z={label}"), err, 1e-9));
    }

    let xs = geom.x_scale(0.3 * z0);
    let mut perr: f64 = 0.0;
    for mu in basis.modes() {
        for i in 0..5 {
            for j in 0..5 {
                let (x, y) = ((i as f64 - 2.0) * 0.6 * xs, (j as f64 - 1.7) * 0.5 * xs);
                let a = mode_2d(mu, x, -y, 0.3 * z0, &geom);
                let b = mode_2d(mu, x, y, 0.3 * z0, &geom) * mu.reflection_parity();
                perr = perr.max((a - b).norm() / b.norm().max(1e-300));
            }
        }
    }
    out.push(CheckRecord::new("reflection_parity", perr, 1e-12));

    // order of the finite-difference residual over three refinements
    let z = 0.2 * z0;
    let xs = geom.x_scale(z);
    let mut order_err: f64 = 0.0;
    for mu in [ModeIndex::new(0, 0), ModeIndex::new(1, 1), ModeIndex::new(2, 1)] {
        let r: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&f| paraxial_residual(mu, 0.3 * xs, 0.4 * xs, z, &geom, Steps::relative(f, &geom, z)).map(|c| c.norm()))
            .collect::<Result<_>>()?;
        for w in r.windows(2) {
            order_err = order_err.max(((w[0] / w[1]).log2() - 2.0).abs());
        }
    }
    out.push(CheckRecord::new("paraxial_residual_order_2", order_err, 0.1));

    let mut rerr: f64 = 0.0;
    for mu in [ModeIndex::new(0, 0), ModeIndex::new(2, 3).min(ModeIndex::new(cfg.n_max, cfg.n_max))] {
        let v = decompose(&DisplacedMode { geom, mu, dx: 0.0, dy: 0.0 }, &basis, 0.0, &quad)?;
        let u = ModeVector::unit(basis, mu);
        rerr = rerr.max(max_abs(v.coeffs().iter().zip(u.coeffs()).map(|(a, b)| (a - b).norm())));
    }
    out.push(CheckRecord::new("basis_reproduction", rerr, 1e-10));

    let field = DisplacedMode {
        geom,
        mu: ModeIndex::new(0, 0),
        dx: 0.2 * geom.x_scale(0.0),
        dy: -0.1 * geom.x_scale(0.0),
    };
    let a = decompose(&field, &basis, 0.0, &quad)?;
    let b = decompose(&field, &basis, 0.3 * z0, &quad)?;
    let zerr = max_abs(a.coeffs().iter().zip(b.coeffs()).map(|(p, q)| (p - q).norm()));
    out.push(CheckRecord::new("coefficient_z_invariance", zerr, 1e-8));

    let v = ModeVector::from_fn(basis, |mu| {
        C64::new(((mu.n * 7 + mu.m * 3) % 5) as f64 - 2.0, ((mu.n + 2 * mu.m) % 3) as f64 - 1.0) * 0.1
    });
    let pe = (quadrature_norm_sqr(&v, 0.5 * z0, &quad) - v.norm_sqr()).abs();
    out.push(CheckRecord::new("parseval", pe, 1e-8));
    Ok(out)
}

fn random_splitter(rng: &mut StdRng) -> SplitterCoefficients {
    SplitterCoefficients::from_transmission(rng.gen_range(0.0..=1.0), rng.gen_range(-PI..PI))
        .expect("parametrized splitter is valid")
}

fn random_vector(basis: ModeBasis, rng: &mut StdRng, complex: bool) -> ModeVector {
    ModeVector::from_fn(basis, |_| {
        C64::new(
            rng.gen_range(-1.0..1.0),
            if complex { rng.gen_range(-1.0..1.0) } else { 0.0 },
        )
    })
}

fn beamsplitter_suite(cfg: &VerifyConfig, rng: &mut StdRng) -> Result<Vec<CheckRecord>> {
    let basis = ModeBasis::new(cfg.geom, cfg.n_max.min(4));
    let mut out = Vec::new();

    let r = (0.55f64).sqrt();
    let rejected = [
        SplitterCoefficients::new(C64::new(0.0, r), C64::new(r, 0.0)).is_err(),
        SplitterCoefficients::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)).is_err(),
        SplitterCoefficients::new(cfg.splitter.rho(), cfg.splitter.tau()).is_ok(),
    ];
    let bad = rejected.iter().filter(|ok| !**ok).count() as f64;
    out.push(CheckRecord::new("splitter_constraint_validation", bad, 0.0));

    let mut splitters = vec![cfg.splitter];
    splitters.extend((0..20).map(|_| random_splitter(rng)));
    let mut uerr: f64 = 0.0;
    let mut nerr: f64 = 0.0;
    let mut ierr: f64 = 0.0;
    for s in &splitters {
        for parity in [1.0, -1.0] {
            let u = s.block(parity);
            for i in 0..2 {
                for j in 0..2 {
                    let d: C64 = (0..2).map(|k| u[k][i].conj() * u[k][j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    uerr = uerr.max((d - e).norm());
                }
            }
        }
        let a = TwoPortModeVectors::new(random_vector(basis, rng, true), random_vector(basis, rng, true))?;
        let b = operator_transform(&a, s);
        nerr = nerr.max((b.norm_sqr() - a.norm_sqr()).abs() / a.norm_sqr());
        let back = inverse_transform(&b, s);
        let pairs = back.port1.coeffs().iter().chain(back.port2.coeffs()).zip(a.port1.coeffs().iter().chain(a.port2.coeffs()));
        ierr = ierr.max(max_abs(pairs.map(|(x, y)| (x - y).norm())));
    }
    out.push(CheckRecord::new("block_unitarity", uerr, 1e-12));
    out.push(CheckRecord::new("transform_norm_preservation", nerr, 1e-12));
    out.push(CheckRecord::new("transform_inverse_identity", ierr, 1e-12));

    let v = random_vector(basis, rng, true);
    let vr = reflect_mode_vector(&v);
    let mut rerr: f64 = 0.0;
    for _ in 0..10 {
        let (x, y, z) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5));
        let a = synthesize(&vr, x, y, z);
        let b = synthesize(&v, x, -y, z);
        rerr = rerr.max((a - b).norm() / b.norm().max(1.0));
    }
    out.push(CheckRecord::new("reflection_matches_mirrored_field", rerr, 1e-12));
    Ok(out)
}

/// `sqrt(N!) [alpha^N] f(alpha)` by the trapezoidal rule on the unit circle.
fn taylor_coefficient(f: impl Fn(C64) -> Result<C64>, n: usize) -> Result<C64> {
    let m = 128;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        acc += f(C64::from_polar(1.0, th))? * C64::from_polar(1.0, -(n as f64) * th);
    }
    Ok(acc / m as f64 * factorial(n).sqrt())
}

/// `psi_N(x)/psi_0(x)` of the harmonic oscillator from its normalized recursion.
fn oscillator_ratio(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn amplitudes_suite(cfg: &VerifyConfig, rng: &mut StdRng) -> Result<Vec<CheckRecord>> {
    let basis = ModeBasis::new(cfg.geom, 4);
    let omega = cfg.geom.omega();
    let mut out = Vec::new();
    let mut table_err: f64 = 0.0;
    let mut gf_err: f64 = 0.0;
    for _ in 0..20 {
        let cfg1 = FieldConfiguration::reduced(random_vector(basis, rng, false))?;
        let phi = random_vector(basis, rng, true).normalized()?;
        let t = rng.gen_range(-2.0..2.0);
        let p = cfg1.psi().bracket(&phi)?;
        let q = phi.bracket(&phi)?;
        let e = |n: i32| C64::from_polar(1.0, -(n as f64) * omega * t);
        let table = [
            C64::new(1.0, 0.0),
            p * e(1),
            (p * p - q) * FRAC_1_SQRT_2 * e(2),
            p / 6f64.sqrt() * (p * p - 3.0 * q) * e(3),
        ];
        for (n, want) in table.iter().enumerate() {
            let got = number_state_ratio(&cfg1, &phi, n, t)?;
            table_err = table_err.max((got - want).norm() / want.norm().max(1.0));
            let gf = taylor_coefficient(
                |a| Ok(coherent_state_ratio(&cfg1, &phi, a, t)? * (0.5 * a.norm_sqr()).exp()),
                n,
            )?;
            gf_err = gf_err.max((got - gf).norm() / got.norm().max(1.0));
        }
    }
    out.push(CheckRecord::new("table1_closed_forms", table_err, 1e-10));
    out.push(CheckRecord::new("generating_function", gf_err, 1e-8));

    let mut ho_err: f64 = 0.0;
    for mu in [ModeIndex::new(0, 0), ModeIndex::new(1, 2), ModeIndex::new(3, 0)] {
        let phi = ModeVector::unit(basis, mu);
        for c in [-2.5, -0.7, 0.0, 0.4, 1.9] {
            let cfg1 = FieldConfiguration::reduced(phi.scaled(C64::new(c, 0.0)))?;
            for n in 0..10 {
                let got = number_state_ratio(&cfg1, &phi, n, 0.0)?;
                let want = oscillator_ratio(n, c * FRAC_1_SQRT_2);
                ho_err = ho_err.max((got - want).norm() / want.abs().max(1.0));
            }
        }
    }
    out.push(CheckRecord::new("oscillator_oracle", ho_err, 1e-10));

    let s = SplitterCoefficients::fifty_fifty();
    let mut q_err: f64 = 0.0;
    let mut r_err: f64 = 0.0;
    let mut det_err: f64 = 0.0;
    for _ in 0..10 {
        let phi = random_vector(basis, rng, true).normalized()?;
        let cfg2 = TwoPortFieldConfiguration::new(
            FieldConfiguration::reduced(random_vector(basis, rng, false))?,
            FieldConfiguration::reduced(random_vector(basis, rng, false))?,
        )?;
        let alpha = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let t = rng.gen_range(-1.0..1.0);
        let single = two_port_single_photon_ratio(&cfg2, &phi, &s, t)?;
        let coh = two_port_coherent_ratio(&cfg2, &phi, alpha, &s, t)?;
        let want = (-0.5 * alpha.norm_sqr() + alpha * single).exp();
        q_err = q_err.max((coh - want).norm() / want.norm().max(1.0));
        let r = r_functional(&cfg2, &phi, &cfg.splitter)?;
        let amp = two_port_single_photon_ratio(&cfg2, &phi, &cfg.splitter, t)?;
        r_err = r_err.max((r - amp.norm_sqr()).abs());

        let real = |rng: &mut StdRng| random_vector(basis, rng, false).normalized();
        let (phi1, phi2) = (real(rng)?, real(rng)?);
        let c1 = FieldConfiguration::new(random_vector(basis, rng, false), Convention::PhysicalPsi, omega)?;
        let c2 = FieldConfiguration::new(random_vector(basis, rng, false), Convention::PhysicalPsi, omega)?;
        let d2 = TwoPortFieldConfiguration::new(c1.clone(), c2.clone())?;
        for n1 in 0..=3 {
            for n2 in 0..=3 {
                let got = detection_probability_ratio(n1, n2, &d2, &phi1, &phi2)?;
                let want = number_state_ratio(&c1, &phi1, n1, t)?.norm_sqr()
                    * number_state_ratio(&c2, &phi2, n2, t)?.norm_sqr();
                det_err = det_err.max((got - want).abs() / want.max(1.0));
            }
        }
    }
    out.push(CheckRecord::new("coherent_single_photon_identity_5050", q_err, 1e-12));
    out.push(CheckRecord::new("r_equals_squared_ratio", r_err, 1e-12));
    out.push(CheckRecord::new("detection_ratio_vs_number_ratios", det_err, 1e-10));
    Ok(out)
}

/// Random vector supported on the spatial modes carried by the Fock oracle.
fn oracle_vector(basis: ModeBasis, mus: &[ModeIndex], rng: &mut StdRng, complex: bool) -> ModeVector {
    let v = random_vector(basis, rng, complex);
    ModeVector::from_fn(basis, |mu| if mus.contains(&mu) { v.coeff(mu) } else { C64::default() })
}

fn oracle_suite(cfg: &VerifyConfig, rng: &mut StdRng) -> Result<Vec<CheckRecord>> {
    let geom = cfg.geom;
    let omega = geom.omega();
    let basis = ModeBasis::new(geom, 1);
    let mus = [ModeIndex::new(0, 0), ModeIndex::new(0, 1)];
    let c = cfg.oracle_cutoff;
    let space = FockSpace::two_port(&mus, c)?.with_dim_cap(cfg.oracle_max_dim);
    space.check_cap()?;
    let s = cfg.splitter;
    let mut out = Vec::new();

    let lad = fock::ladder_matrices(&space)?;
    let interior: Vec<usize> = (0..space.dim())
        .filter(|&i| space.occupations(i).iter().all(|&n| n < c))
        .collect();
    let mut cerr: f64 = 0.0;
    for (j, (aj, _)) in lad.iter().enumerate() {
        for (k, (_, adk)) in lad.iter().enumerate() {
            let m = aj * adk - adk * aj;
            for &col in &interior {
                for row in 0..space.dim() {
                    let want = if j == k && row == col { 1.0 } else { 0.0 };
                    cerr = cerr.max((m[(row, col)] - want).norm());
                }
            }
        }
    }
    out.push(CheckRecord::new("ladder_commutators", cerr, 1e-14));

    let e = fock::splitter_conjugation_errors(&space, &s)?;
    out.push(CheckRecord::new("splitter_unitarity", e.unitarity, 1e-10));
    out.push(CheckRecord::new("splitter_conjugation", e.conjugation, 1e-10));
    out.push(CheckRecord::new("output_commutators", e.commutators, 1e-10));

    // state conversion on two spatial modes at C = 8
    let big = FockSpace::two_port(&mus, 8)?;
    let op = fock::bs_unitary(&big, &s)?;
    let phi = oracle_vector(basis, &mus, rng, true).normalized()?;
    let phi_r = reflect_mode_vector(&phi);
    let input = number_state(&big, &phi, Port::One, 1)?;
    let output = op.apply(&input);
    let want = number_state(&big, &phi, Port::One, 1)? * s.tau() + number_state(&big, &phi_r, Port::Two, 1)? * s.rho();
    out.push(CheckRecord::new("single_photon_conversion_infidelity", 1.0 - fidelity(&want, &output), 1e-10));
    let alpha = C64::new(0.3, 0.0);
    let input = coherent_state(&big, &phi, Port::One, alpha)?;
    let output = op.apply(&input);
    let p1 = coherent_state(&big, &phi, Port::One, s.tau() * alpha)?;
    let prod = big.coherent_excitation(&p1, &phi_r, Port::Two, s.rho() * alpha)?;
    out.push(CheckRecord::new("coherent_conversion_infidelity", 1.0 - fidelity(&prod, &output), 1e-8));
    let n_in = braket(&input, &big.total_number_apply(&input)).re;
    let n_out = braket(&output, &big.total_number_apply(&output)).re;
    out.push(CheckRecord::new("energy_conservation", (n_in - n_out).abs() * omega, 1e-10));

    // overlap law on one port
    let one = FockSpace::single_port(&mus, 3)?;
    let mut ov_err: f64 = 0.0;
    for _ in 0..10 {
        let a = oracle_vector(basis, &mus, rng, true).normalized()?;
        let b = oracle_vector(basis, &mus, rng, true).normalized()?;
        let ov = a.inner(&b)?;
        for n in 0..=3 {
            let u = number_state(&one, &a, Port::One, n)?;
            for m in 0..=3 {
                let w = number_state(&one, &b, Port::One, m)?;
                let want = if n == m { ov.powu(n as u32) } else { C64::default() };
                ov_err = ov_err.max((braket(&u, &w) - want).norm());
            }
        }
    }
    out.push(CheckRecord::new("number_state_overlap_law", ov_err, 1e-9));

    // correlations against the oracle on the output state
    let small = FockSpace::two_port(&mus, 2)?;
    let op = fock::bs_unitary(&small, &s)?;
    let state = op.apply(&number_state(&small, &phi, Port::One, 1)?);
    let mut corr_err: f64 = 0.0;
    let t = 0.37;
    for _ in 0..10 {
        let r1 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)];
        let r2 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)];
        let oracle = field_correlation(&small, &geom, &state, r1, r2, t, omega);
        let analytic = two_point_correlation(&phi, r1, r2, &s, omega)?;
        corr_err = corr_err.max((oracle - analytic).norm());
    }
    out.push(CheckRecord::new("two_point_correlation_vs_oracle", corr_err, 1e-9));

    let real_phi = oracle_vector(basis, &mus, rng, false).normalized()?;
    let mut zero_err: f64 = 0.0;
    for _ in 0..10 {
        let r1 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        let r2 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        zero_err = zero_err.max(two_point_correlation(&real_phi, r1, r2, &SplitterCoefficients::fifty_fifty(), omega)?.abs());
    }
    out.push(CheckRecord::new("two_point_correlation_real_phi_5050", zero_err, 1e-12));

    let (phi1, phi2) = (
        oracle_vector(basis, &mus, rng, true).normalized()?,
        oracle_vector(basis, &mus, rng, true).normalized()?,
    );
    let n12 = |v: &FockStateVector| -> Result<C64> {
        let w = small.number_projected(&phi2, Port::Two, v)?;
        let w = small.number_projected(&phi1, Port::One, &w)?;
        Ok(braket(v, &w))
    };
    let oracle_pnc = n12(&state)?.norm();
    let analytic_pnc = photon_number_correlation(&phi, &phi1, &phi2, &s)?;
    out.push(CheckRecord::new("photon_number_correlation", oracle_pnc.max(analytic_pnc.abs()), 1e-12));

    let vac = small.vacuum();
    let mut wf_err: f64 = 0.0;
    for _ in 0..5 {
        let r = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)];
        let got = braket(&vac, &small.apply_field(&geom, Port::One, r, t, omega, &number_state(&small, &phi, Port::One, 1)?));
        let want = crate::amplitudes::single_photon_wavefunction(&phi, r[0], r[1], r[2], t, omega)?;
        wf_err = wf_err.max((got - want).norm());
    }
    out.push(CheckRecord::new("single_photon_wavefunction_vs_oracle", wf_err, 1e-10));
    Ok(out)
}

/// `<v| Psi_1(r1, t) Psi_2(r2, t) |v>` by applying the field operators to `v`.
pub fn field_correlation(
    space: &FockSpace,
    geom: &BeamGeometry,
    v: &FockStateVector,
    r1: [f64; 3],
    r2: [f64; 3],
    t: f64,
    omega: f64,
) -> C64 {
    let w = space.apply_field(geom, Port::Two, r2, t, omega, v);
    let w = space.apply_field(geom, Port::One, r1, t, omega, &w);
    braket(v, &w)
}
