use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64 as C64;
use qfield::fock::DEFAULT_DIM_CAP;
use qfield::observables::displaced_tem10_vector;
use qfield::{BeamGeometry, ModeBasis, ModeIndex, ModeVector, QuadratureRule, SplitterCoefficients};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Splitter as written in a config file: `"5050"`, `"rho_re,rho_im,tau_re,tau_im"`
/// or a four-element array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SplitterSpec {
    Text(String),
    Array([f64; 4]),
}

impl SplitterSpec {
    pub fn resolve(&self) -> Result<SplitterCoefficients> {
        match self {
            SplitterSpec::Text(s) => parse_splitter(s),
            SplitterSpec::Array([a, b, c, d]) => {
                Ok(SplitterCoefficients::new(C64::new(*a, *b), C64::new(*c, *d))?)
            }
        }
    }
}

pub fn parse_splitter(s: &str) -> Result<SplitterCoefficients> {
    let s = s.trim();
    if s == "5050" {
        return Ok(SplitterCoefficients::fifty_fifty());
    }
    let v = parse_floats(s, 4).with_context(|| format!("splitter '{s}'"))?;
    Ok(SplitterCoefficients::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))?)
}

pub fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number '{t}'")))
        .collect::<Result<_>>()?;
    if v.len() != n {
        bail!("expected {n} comma-separated numbers, got {}", v.len());
    }
    Ok(v)
}

/// Optional fields of the JSON config document. Flags override these.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub w0: Option<f64>,
    pub k: Option<f64>,
    pub omega: Option<f64>,
    pub n_max: Option<usize>,
    pub quad_order: Option<usize>,
    pub splitter: Option<SplitterSpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub oracle_cutoff: Option<usize>,
    pub oracle_max_dim: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GlobalArgs {
    /// JSON config document; flags override its fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// `5050` or `rho_re,rho_im,tau_re,tau_im`
    #[arg(long, global = true)]
    pub splitter: Option<String>,
    /// Angular frequency; natural units, so this also sets k
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Beam waist
    #[arg(long, global = true)]
    pub w0: Option<f64>,
}

/// Fully validated run parameters.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub w0: f64,
    pub k: f64,
    pub omega: f64,
    pub n_max: usize,
    pub quad_order: usize,
    #[serde(serialize_with = "ser_splitter")]
    pub splitter: SplitterCoefficients,
    pub format: Format,
    pub oracle_cutoff: usize,
    pub oracle_max_dim: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub geom: BeamGeometry,
}

fn ser_splitter<S: serde::Serializer>(s: &SplitterCoefficients, ser: S) -> Result<S::Ok, S::Error> {
    let (r, t) = (s.rho(), s.tau());
    serde::Serialize::serialize(
        &serde_json::json!({"rho": [r.re, r.im], "tau": [t.re, t.im]}),
        ser,
    )
}

impl RunConfig {
    /// Merges flags over the config file over the given defaults.
    pub fn resolve(args: &GlobalArgs, default_n_max: usize, default_quad: Option<usize>, default_format: Format) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let w0 = args.w0.or(file.w0).unwrap_or(1.0);
        let omega = match (args.omega, file.omega, file.k) {
            (Some(w), _, _) => w,
            (None, Some(w), Some(k)) if w != k => {
                bail!("config sets omega = {w} and k = {k}; natural units require omega = k")
            }
            (None, Some(w), _) => w,
            (None, None, Some(k)) => k,
            (None, None, None) => 1.0,
        };
        let geom = BeamGeometry::new(w0, omega)?;
        let n_max = args.n_max.or(file.n_max).unwrap_or(default_n_max);
        let quad_order = args
            .quad_order
            .or(file.quad_order)
            .or(default_quad)
            .unwrap_or_else(|| QuadratureRule::policy_order(n_max));
        let splitter = match (&args.splitter, &file.splitter) {
            (Some(s), _) => parse_splitter(s)?,
            (None, Some(s)) => s.resolve()?,
            (None, None) => SplitterCoefficients::fifty_fifty(),
        };
        Ok(Self {
            w0,
            k: omega,
            omega,
            n_max,
            quad_order,
            splitter,
            format: args.format.or(file.format).unwrap_or(default_format),
            oracle_cutoff: file.oracle_cutoff.unwrap_or(3),
            oracle_max_dim: file.oracle_max_dim.unwrap_or(DEFAULT_DIM_CAP),
            out: args.out.clone().or(file.out),
            geom,
        })
    }

    pub fn basis(&self) -> ModeBasis {
        ModeBasis::new(self.geom, self.n_max)
    }

    pub fn quadrature(&self) -> Result<QuadratureRule> {
        Ok(QuadratureRule::gauss_hermite(self.quad_order)?)
    }

    /// Resolves a field spec in the run's basis: a `.json`/`.csv` mode-vector
    /// file, or a sum of terms like `0.5*tem:0,0+tem:1,0` where each atom is
    /// `tem:n,m` (unit mode) or `displaced:xi` (TEM10 displaced by `xi` scale units).
    pub fn field(&self, spec: &str) -> Result<ModeVector> {
        let basis = self.basis();
        if Path::new(spec).is_file() {
            let text = std::fs::read_to_string(spec).with_context(|| format!("reading field file {spec}"))?;
            let v = if spec.ends_with(".csv") {
                ModeVector::from_csv(self.geom, &text)?
            } else {
                ModeVector::from_json_str(self.geom, &text)?
            };
            return embed(&v, basis).with_context(|| format!("field file {spec}"));
        }
        let mut total = ModeVector::zeros(basis);
        for term in spec.split('+') {
            let (scale, atom) = match term.split_once('*') {
                Some((c, a)) => (
                    c.trim().parse::<f64>().with_context(|| format!("field '{spec}': coefficient '{c}'"))?,
                    a.trim(),
                ),
                None => (1.0, term.trim()),
            };
            let v = self.atom(atom).with_context(|| format!("field '{spec}'"))?;
            total = total.add(&v.scaled(C64::new(scale, 0.0)))?;
        }
        Ok(total)
    }

    fn atom(&self, atom: &str) -> Result<ModeVector> {
        let basis = self.basis();
        if let Some(rest) = atom.strip_prefix("tem:") {
            let v = rest
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("mode '{atom}'"))?;
            let [n, m] = v[..] else { bail!("'{atom}': expected tem:n,m") };
            let mu = ModeIndex::new(n, m);
            if basis.index_of(mu).is_none() {
                bail!("'{atom}': mode outside n_max = {}", self.n_max);
            }
            return Ok(ModeVector::unit(basis, mu));
        }
        if let Some(rest) = atom.strip_prefix("displaced:") {
            let xi: f64 = rest.trim().parse().with_context(|| format!("'{atom}'"))?;
            return Ok(displaced_tem10_vector(xi, &basis, &self.quadrature()?)?.0);
        }
        bail!("'{atom}' is neither a file nor a tem:n,m / displaced:xi term")
    }
}

/// Copies `v` into `basis`; fails if a nonzero coefficient would be dropped.
fn embed(v: &ModeVector, basis: ModeBasis) -> Result<ModeVector> {
    let mut out = ModeVector::zeros(basis);
    for (mu, c) in v.iter() {
        match basis.index_of(mu) {
            Some(i) => out.coeffs_mut()[i] = c,
            None if c == C64::default() => {}
            None => bail!("mode ({}, {}) lies outside n_max = {}", mu.n, mu.m, basis.n_max()),
        }
    }
    Ok(out)
}

pub fn parse_point(s: &str) -> Result<[f64; 3]> {
    let v = parse_floats(s, 3).with_context(|| format!("point '{s}'"))?;
    Ok([v[0], v[1], v[2]])
}
