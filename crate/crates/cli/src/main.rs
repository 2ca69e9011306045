mod config;
mod output;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use qfield::amplitudes::{number_state_ratio, two_port_single_photon_ratio};
use qfield::observables::{
    detection_probability_ratio, linspace, photon_number_correlation, r_closed_form, r_functional, r_surface,
    two_point_correlation,
};
use qfield::verify::{run_suite, Report, Suite, VerifyConfig};
use qfield::{Convention, FieldConfiguration, TwoPortFieldConfiguration};
use serde_json::json;

use config::{parse_point, Format, GlobalArgs, RunConfig};
use output::{emit, metadata, render, Cell, Table};

#[derive(Parser)]
#[command(name = "qfield", version, about = "Single photon at a beam splitter: mode algebra, amplitudes, observables")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum ConventionArg {
    /// psi = sqrt(2 omega) Psi
    #[default]
    Reduced,
    /// Psi itself
    Physical,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Reduced => Convention::ReducedPsi,
            ConventionArg::Physical => Convention::PhysicalPsi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// R over a grid of displaced TEM10 detector modes, with the closed form alongside
    Fig2 {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        xi_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        xi_max: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        /// Run with a splitter other than 50:50 (the closed-form column assumes 50:50)
        #[arg(long)]
        allow_non_5050: bool,
    },
    /// Number-state ratios N = 0..3 against their closed forms
    Table1 {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        phi: String,
        /// Time; repeat for a sweep
        #[arg(long, default_values_t = [0.0], allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t)]
        convention: ConventionArg,
    },
    /// Number-state ratio rows N, re, im, |ratio|^2
    Amplitude {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        /// Largest photon number
        #[arg(long, default_value_t = 10)]
        n_photons: usize,
        #[arg(long, value_enum, default_value_t)]
        convention: ConventionArg,
    },
    /// R for one pair of output-port configurations
    RFunctional {
        #[arg(long)]
        psi1: String,
        #[arg(long)]
        psi2: String,
        #[arg(long, default_value = "tem:0,0")]
        phi: String,
        #[arg(long, value_enum, default_value_t)]
        convention: ConventionArg,
    },
    /// Output two-point field correlation for a single photon in phi
    Correlation {
        #[arg(long, default_value = "tem:0,0")]
        phi: String,
        /// x,y,z behind port 1
        #[arg(long, allow_hyphen_values = true)]
        r1: String,
        /// x,y,z behind port 2
        #[arg(long, allow_hyphen_values = true)]
        r2: String,
        /// Detector modes for the photon-number correlation column
        #[arg(long)]
        phi1: Option<String>,
        #[arg(long)]
        phi2: Option<String>,
    },
    /// Detection probabilities relative to vacuum for N1, N2 photons
    DetectProb {
        #[arg(long)]
        psi1: String,
        #[arg(long)]
        psi2: String,
        #[arg(long)]
        phi1: String,
        #[arg(long)]
        phi2: String,
        #[arg(long, default_value_t = 3)]
        max_n1: usize,
        #[arg(long, default_value_t = 3)]
        max_n2: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::Physical)]
        convention: ConventionArg,
    },
    /// Truncated-Fock-space oracle
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// Run an invariant suite: modes, beamsplitter, amplitudes, oracle or all
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        #[command(flatten)]
        oracle: OracleArgs,
    },
}

#[derive(Subcommand)]
enum OracleAction {
    /// Oracle cross-checks with a JSON report
    Verify {
        #[command(flatten)]
        oracle: OracleArgs,
    },
}

#[derive(Clone, Copy, clap::Args)]
struct OracleArgs {
    /// Cutoff of the dense oracle checks
    #[arg(long)]
    oracle_cutoff: Option<usize>,
    /// Dimension cap for dense oracle matrices
    #[arg(long)]
    max_dim: Option<usize>,
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QFIELD_NUM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("QFIELD_NUM_THREADS = '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Fig2 { xi_min, xi_max, steps, allow_non_5050 } => {
            let cfg = RunConfig::resolve(g, 14, Some(48), Format::Csv)?;
            fig2(&cfg, xi_min, xi_max, steps, allow_non_5050)
        }
        Command::Table1 { psi, phi, t, convention } => {
            let cfg = RunConfig::resolve(g, 8, None, Format::Csv)?;
            table1(&cfg, &psi, &phi, &t, convention.into())
        }
        Command::Amplitude { psi, phi, t, n_photons, convention } => {
            let cfg = RunConfig::resolve(g, 8, None, Format::Csv)?;
            amplitude(&cfg, &psi, &phi, t, n_photons, convention.into())
        }
        Command::RFunctional { psi1, psi2, phi, convention } => {
            let cfg = RunConfig::resolve(g, 8, None, Format::Csv)?;
            rfunc(&cfg, &psi1, &psi2, &phi, convention.into())
        }
        Command::Correlation { phi, r1, r2, phi1, phi2 } => {
            let cfg = RunConfig::resolve(g, 8, None, Format::Csv)?;
            correlation(&cfg, &phi, &r1, &r2, phi1.as_deref().zip(phi2.as_deref()))
        }
        Command::DetectProb { psi1, psi2, phi1, phi2, max_n1, max_n2, convention } => {
            let cfg = RunConfig::resolve(g, 8, None, Format::Csv)?;
            detect(&cfg, [&psi1, &psi2], [&phi1, &phi2], max_n1, max_n2, convention.into())
        }
        Command::Oracle { action: OracleAction::Verify { oracle } } => {
            let cfg = RunConfig::resolve(g, 8, Some(40), Format::Json)?;
            verify(&cfg, Suite::Oracle, oracle, "oracle verify")
        }
        Command::Verify { suite, oracle } => {
            let suite: Suite = suite.parse()?;
            let cfg = RunConfig::resolve(g, 8, Some(40), Format::Json)?;
            verify(&cfg, suite, oracle, "verify")
        }
    }
}

fn config_pair(cfg: &RunConfig, specs: [&str; 2], convention: Convention) -> Result<TwoPortFieldConfiguration> {
    let a = FieldConfiguration::new(cfg.field(specs[0])?, convention, cfg.omega)?;
    let b = FieldConfiguration::new(cfg.field(specs[1])?, convention, cfg.omega)?;
    Ok(TwoPortFieldConfiguration::new(a, b)?)
}

fn fig2(cfg: &RunConfig, lo: f64, hi: f64, steps: usize, allow_non_5050: bool) -> Result<ExitCode> {
    if !cfg.splitter.is_fifty_fifty() && !allow_non_5050 {
        bail!("the closed-form column holds only for a 50:50 splitter; pass --allow-non-5050 to run anyway");
    }
    if steps == 0 {
        bail!("steps must be at least 1");
    }
    let xi = linspace(lo, hi, steps);
    let surface = r_surface(&xi, &xi, &cfg.basis(), &cfg.quadrature()?, &cfg.splitter)?;
    let mut table = Table::new(&["xi1", "xi2", "R", "R_closed_form", "abs_diff", "truncation_loss"]);
    let mut max_diff: f64 = 0.0;
    for (i, a) in surface.xi1.iter().enumerate() {
        for (j, b) in surface.xi2.iter().enumerate() {
            let r = surface.values[i][j];
            let c = r_closed_form(*a, *b);
            max_diff = max_diff.max((r - c).abs());
            table.push(vec![(*a).into(), (*b).into(), r.into(), c.into(), (r - c).abs().into(), surface.truncation_loss[i][j].into()]);
        }
    }
    let meta = metadata(
        cfg,
        "fig2",
        json!({"xi_min": lo, "xi_max": hi, "steps": steps, "max_abs_diff": max_diff, "max_R": surface.max()}),
    );
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn table1(cfg: &RunConfig, psi: &str, phi: &str, ts: &[f64], convention: Convention) -> Result<ExitCode> {
    let fc = FieldConfiguration::new(cfg.field(psi)?, convention, cfg.omega)?;
    let phi_v = cfg.field(phi)?;
    let p = fc.psi().bracket(&phi_v)?;
    let q = phi_v.bracket(&phi_v)?;
    let mut table = Table::new(&["t", "N", "ratio_re", "ratio_im", "closed_re", "closed_im", "abs_diff"]);
    for &t in ts {
        let e = |n: i32| C64::from_polar(1.0, -(n as f64) * cfg.omega * t);
        let closed = [
            C64::new(1.0, 0.0),
            p * e(1),
            (p * p - q) / 2f64.sqrt() * e(2),
            p / 6f64.sqrt() * (p * p - 3.0 * q) * e(3),
        ];
        for (n, c) in closed.iter().enumerate() {
            let r = number_state_ratio(&fc, &phi_v, n, t)?;
            table.push(vec![t.into(), n.into(), r.re.into(), r.im.into(), c.re.into(), c.im.into(), (r - c).norm().into()]);
        }
    }
    let meta = metadata(
        cfg,
        "table1",
        json!({"psi": psi, "phi": phi, "psi_phi": [p.re, p.im], "phi_sq": [q.re, q.im]}),
    );
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn amplitude(cfg: &RunConfig, psi: &str, phi: &str, t: f64, n_photons: usize, convention: Convention) -> Result<ExitCode> {
    let fc = FieldConfiguration::new(cfg.field(psi)?, convention, cfg.omega)?;
    let phi_v = cfg.field(phi)?;
    let mut table = Table::new(&["N", "re", "im", "abs2"]);
    for n in 0..=n_photons {
        let r = number_state_ratio(&fc, &phi_v, n, t)?;
        table.push(vec![n.into(), r.re.into(), r.im.into(), r.norm_sqr().into()]);
    }
    let meta = metadata(cfg, "amplitude", json!({"psi": psi, "phi": phi, "t": t}));
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn rfunc(cfg: &RunConfig, psi1: &str, psi2: &str, phi: &str, convention: Convention) -> Result<ExitCode> {
    let cfg2 = config_pair(cfg, [psi1, psi2], convention)?;
    let phi_v = cfg.field(phi)?;
    let amp = two_port_single_photon_ratio(&cfg2, &phi_v, &cfg.splitter, 0.0)?;
    let r = r_functional(&cfg2, &phi_v, &cfg.splitter)?;
    let mut table = Table::new(&["R", "amp_re", "amp_im"]);
    table.push(vec![r.into(), amp.re.into(), amp.im.into()]);
    let meta = metadata(cfg, "r-functional", json!({"psi1": psi1, "psi2": psi2, "phi": phi}));
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn correlation(cfg: &RunConfig, phi: &str, r1: &str, r2: &str, detectors: Option<(&str, &str)>) -> Result<ExitCode> {
    let phi_v = cfg.field(phi)?;
    let (p1, p2) = (parse_point(r1)?, parse_point(r2)?);
    let g = two_point_correlation(&phi_v, p1, p2, &cfg.splitter, cfg.omega)?;
    let mut cols = vec!["x1", "y1", "z1", "x2", "y2", "z2", "G"];
    let mut row: Vec<Cell> = p1.iter().chain(&p2).map(|&v| v.into()).collect();
    row.push(g.into());
    if let Some((d1, d2)) = detectors {
        let n = photon_number_correlation(&phi_v, &cfg.field(d1)?, &cfg.field(d2)?, &cfg.splitter)?;
        cols.push("N1N2");
        row.push(n.into());
    }
    let mut table = Table::new(&cols);
    table.push(row);
    let meta = metadata(cfg, "correlation", json!({"phi": phi}));
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn detect(
    cfg: &RunConfig,
    psi: [&str; 2],
    phi: [&str; 2],
    max_n1: usize,
    max_n2: usize,
    convention: Convention,
) -> Result<ExitCode> {
    let cfg2 = config_pair(cfg, psi, convention)?;
    let (phi1, phi2) = (cfg.field(phi[0])?, cfg.field(phi[1])?);
    let mut table = Table::new(&["N1", "N2", "P_ratio"]);
    for n1 in 0..=max_n1 {
        for n2 in 0..=max_n2 {
            let p = detection_probability_ratio(n1, n2, &cfg2, &phi1, &phi2)?;
            table.push(vec![n1.into(), n2.into(), p.into()]);
        }
    }
    let meta = metadata(
        cfg,
        "detect-prob",
        json!({"psi1": psi[0], "psi2": psi[1], "phi1": phi[0], "phi2": phi[1]}),
    );
    emit(cfg, &render(&table, &meta, cfg.format))?;
    Ok(ExitCode::SUCCESS)
}

fn verify(cfg: &RunConfig, suite: Suite, oracle: OracleArgs, command: &str) -> Result<ExitCode> {
    let vc = VerifyConfig {
        geom: cfg.geom,
        n_max: cfg.n_max,
        quad_order: cfg.quad_order,
        splitter: cfg.splitter,
        oracle_cutoff: oracle.oracle_cutoff.unwrap_or(cfg.oracle_cutoff),
        oracle_max_dim: oracle.max_dim.unwrap_or(cfg.oracle_max_dim),
    };
    let report = run_suite(suite, &vc)?;
    emit(cfg, &render_report(cfg, &report, command))?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: max_error {:e} > tolerance {:e}", c.check_name, c.max_error, c.tolerance);
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn render_report(cfg: &RunConfig, report: &Report, command: &str) -> String {
    let meta = metadata(cfg, command, json!({"suite": report.suite, "all_passed": report.all_passed()}));
    match cfg.format {
        Format::Json => {
            let doc = json!({"metadata": meta, "checks": report.checks});
            let mut s = serde_json::to_string_pretty(&doc).expect("report renders");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            for (k, v) in &meta {
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str("check_name,max_error,tolerance,pass\n");
            for c in &report.checks {
                s.push_str(&format!("{},{:.16e},{:.16e},{}\n", c.check_name, c.max_error, c.tolerance, c.pass));
            }
            s
        }
    }
}
