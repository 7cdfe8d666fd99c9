//! Strict JSON run configuration.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ops::Backend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Spectrum,
    Flow,
    UncertaintyCurve,
    Gup,
    GenerateAlgebra,
    FuzzybDemo,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Interval,
    Halfline,
    Beta,
    Matrix,
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelName::Interval => "interval",
            ModelName::Halfline => "halfline",
            ModelName::Beta => "beta",
            ModelName::Matrix => "matrix",
        })
    }
}

/// Model- and command-specific knobs; every key is optional and defaulted
/// per command in [`RunConfig::effective`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Boundary phase of `u = e^{iθ}·1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_prime: Option<f64>,
    /// Row-major `[re, im]` entries of `u`; overrides `theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_prime: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_states: Option<usize>,
    /// Dimension of the seeded random Hermitian matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Explicit Hermitian matrix as rows of `[re, im]`; overrides `dim`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extensions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub model: ModelName,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    1.0
}

/// Configuration failure, reported with the offending field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            return err("", format!("malformed JSON: {inner}"));
        }
        let path = if path == "." || path == "?" { String::new() } else { path };
        err(&path, inner.to_string())
    })?;
    if let Some(c) = cfg.command {
        cfg.effective(c, None)?;
    }
    Ok(cfg)
}

/// Configuration with every default resolved for one command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Effective {
    pub command: Command,
    pub model: ModelName,
    pub parameters: Parameters,
    pub hbar: f64,
    pub seed: u64,
}

impl Effective {
    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl RunConfig {
    /// Resolves defaults and validates against `command`. `seed_override`
    /// (from the flag or the environment) beats the configured seed.
    pub fn effective(&self, command: Command, seed_override: Option<u64>) -> Result<Effective, ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(err("command", format!("config is for `{c}` but `{command}` was requested")));
            }
        }
        use Command::*;
        use ModelName::*;
        let allowed = match command {
            Analyze | UncertaintyCurve => true,
            Spectrum => matches!(self.model, Interval | Matrix),
            Flow => self.model == Interval,
            Gup => self.model == Beta,
            GenerateAlgebra => self.model == Matrix,
            FuzzybDemo => self.model == Halfline,
        };
        if !allowed {
            return Err(err("model", format!("`{}` is not supported by `{command}`", self.model)));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(err("hbar", "must be > 0"));
        }
        let mut p = self.parameters.clone();
        let seed = seed_override.or(p.seed).unwrap_or(0);
        p.seed = Some(seed);
        match self.model {
            Interval => {
                p.copies.get_or_insert(1);
                let default_grid = if command == Flow { 513 } else { 256 };
                p.grid.get_or_insert(default_grid);
                let default_backend = if matches!(command, Spectrum | Flow) {
                    Backend::Spectral
                } else {
                    Backend::FiniteDifference
                };
                p.backend.get_or_insert(default_backend);
                if command == Flow {
                    p.a.get_or_insert(0.25);
                    p.theta_prime.get_or_insert(std::f64::consts::FRAC_PI_3);
                }
                if matches!(command, Spectrum | Flow) && p.u.is_none() {
                    p.theta.get_or_insert(0.0);
                }
                if command == UncertaintyCurve {
                    p.xi_min.get_or_insert(-5.0);
                    p.xi_max.get_or_insert(5.0);
                    p.xi_step.get_or_insert(1.0);
                }
            }
            Halfline => {
                p.grid.get_or_insert(1024);
                p.length.get_or_insert(32.0);
                if command == FuzzybDemo {
                    p.scales.get_or_insert(6);
                }
                if command == UncertaintyCurve {
                    p.xi_min.get_or_insert(-1.0);
                    p.xi_max.get_or_insert(1.0);
                    p.xi_step.get_or_insert(0.5);
                }
            }
            Beta => {
                let beta = *p.beta.get_or_insert(1.0);
                if !(beta > 0.0) || !beta.is_finite() {
                    return Err(err("parameters.beta", "must be > 0"));
                }
                p.cutoff.get_or_insert(20.0 / beta.sqrt());
                p.grid.get_or_insert(1024);
                if command == Gup {
                    p.n_states.get_or_insert(10_000);
                }
                if command == UncertaintyCurve {
                    let s = self.hbar * beta.sqrt();
                    p.xi_min.get_or_insert(-2.0 * s);
                    p.xi_max.get_or_insert(2.0 * s);
                    p.xi_step.get_or_insert(s);
                }
            }
            Matrix => {
                if p.matrix.is_none() {
                    p.dim.get_or_insert(6);
                }
                p.codim.get_or_insert(1);
                if command == GenerateAlgebra {
                    p.word_length.get_or_insert(6);
                    p.extensions.get_or_insert(3);
                }
                if command == Spectrum && p.u.is_none() {
                    p.theta.get_or_insert(0.5);
                }
                if command == UncertaintyCurve {
                    p.xi_min.get_or_insert(-1.0);
                    p.xi_max.get_or_insert(1.0);
                    p.xi_step.get_or_insert(0.25);
                }
            }
        }
        validate(&p, self.model)?;
        Ok(Effective {
            command,
            model: self.model,
            parameters: p,
            hbar: self.hbar,
            seed,
        })
    }
}

fn positive(path: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(err(path, "must be > 0")),
        _ => Ok(()),
    }
}

fn validate(p: &Parameters, model: ModelName) -> Result<(), ConfigError> {
    if let Some(g) = p.grid {
        if g < crate::ops::MIN_GRID {
            return Err(err("parameters.grid", format!("must be >= {}", crate::ops::MIN_GRID)));
        }
    }
    if p.copies == Some(0) {
        return Err(err("parameters.copies", "must be >= 1"));
    }
    positive("parameters.beta", p.beta)?;
    positive("parameters.cutoff", p.cutoff)?;
    positive("parameters.xi_step", p.xi_step)?;
    if let Some(l) = p.length {
        if !(l >= 10.0) {
            return Err(err("parameters.length", "must be >= 10"));
        }
    }
    if let (Some(lo), Some(hi)) = (p.xi_min, p.xi_max) {
        if !(hi >= lo) {
            return Err(err("parameters.xi_max", "must be >= xi_min"));
        }
    }
    if let Some(a) = p.a {
        if !(a > 0.0 && a < 1.0) {
            return Err(err("parameters.a", "must lie in (0, 1)"));
        }
    }
    // `u` labels copies of the interval, or `S′` on the deficiency space of a matrix model.
    let r = if model == ModelName::Matrix { p.codim.unwrap_or(1) } else { p.copies.unwrap_or(1) };
    for (name, entries) in [("parameters.u", &p.u), ("parameters.u_prime", &p.u_prime)] {
        if let Some(e) = entries {
            if e.len() != r * r {
                return Err(err(name, format!("needs {} entries for {r} copies (got {})", r * r, e.len())));
            }
            let m = to_matrix(r, e);
            if (&m.adjoint() * &m).identity_defect() > 1e-10 {
                return Err(err(name, "must be unitary"));
            }
        }
    }
    if model == ModelName::Matrix {
        if let Some(rows) = &p.matrix {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(err("parameters.matrix", "must be square"));
            }
            let m = matrix_from_rows(rows);
            if (&m - &m.adjoint()).max_abs() > 1e-9 * m.max_abs().max(1.0) {
                return Err(err("parameters.matrix", "must be Hermitian"));
            }
        }
        let n = p.matrix.as_ref().map_or(p.dim.unwrap_or(6), |m| m.len());
        let codim = p.codim.unwrap_or(1);
        if n < 2 * codim + 2 {
            return Err(err("parameters.codim", format!("dimension {n} needs codim <= {}", n.saturating_sub(2) / 2)));
        }
        if p.word_length.is_some() && n > 8 {
            return Err(err("parameters.dim", "algebra generation is limited to dimension <= 8"));
        }
    }
    Ok(())
}

pub(crate) fn to_matrix(r: usize, entries: &[[f64; 2]]) -> crate::ComplexMatrix {
    crate::ComplexMatrix::from_fn(r, r, |i, j| {
        let [re, im] = entries[i * r + j];
        crate::C64::new(re, im)
    })
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> crate::ComplexMatrix {
    let n = rows.len();
    crate::ComplexMatrix::from_fn(n, n, |i, j| crate::C64::new(rows[i][j][0], rows[i][j][1]))
}
