//! Dispatch of an [`Effective`] config to the library and rendering of the
//! result files. Every artifact carries the schema tag, config hash and seed.

use serde_json::{json, Map, Value};

use super::config::{matrix_from_rows, to_matrix, Command, Effective, ModelName, Parameters};
use super::plot::script_for;
use crate::error::{Error, Result};
use crate::extensions::{extend_by_boundary, extend_by_cayley, ExtensionParameter};
use crate::flows::{generated_algebra_dimension_seeded, local_phase_op};
use crate::ops::{
    build_beta_algebra_with_hbar, build_halfline_derivative, build_interval_derivative,
    build_matrix_model_seeded, random_hermitian, Backend, BetaAlgebraModel, OperatorOnDomain,
};
use crate::{deficiency_spaces, fuzzyb_localizing_sequence, sample_gup, uncertainty_curve, ComplexMatrix, SCHEMA};

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Upper bound on the number of ξ samples of one curve.
const MAX_XI_POINTS: usize = 10_000;

struct Stamp {
    hash: String,
    seed: u64,
    command: Command,
}

impl Stamp {
    fn csv(&self, name: &str, body: String) -> Artifact {
        Artifact {
            name: name.into(),
            contents: format!("# {SCHEMA} config_hash={} seed={}\n{body}", self.hash, self.seed),
        }
    }

    fn json(&self, name: &str, payload: Value) -> Artifact {
        let mut map = Map::new();
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("config_hash".into(), json!(self.hash));
        map.insert("seed".into(), json!(self.seed));
        map.insert("command".into(), json!(self.command.to_string()));
        if let Value::Object(fields) = payload {
            for (k, v) in fields {
                if k != "schema" {
                    map.insert(k, v);
                }
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("json serializes");
        text.push('\n');
        Artifact {
            name: name.into(),
            contents: text,
        }
    }

    fn plot(&self, csv: &Artifact) -> Result<Artifact> {
        let script = script_for(&[(csv.name.clone(), csv.contents.clone())]).map_err(|e| Error::Contract(e.to_string()))?;
        Ok(Artifact {
            name: "plot.gp".into(),
            contents: format!("# {SCHEMA} config_hash={} seed={}\n{script}", self.hash, self.seed),
        })
    }
}

/// Runs the analysis and returns the files to write, in a fixed order.
pub fn execute(eff: &Effective) -> Result<Vec<Artifact>> {
    let stamp = Stamp {
        hash: eff.hash(),
        seed: eff.seed,
        command: eff.command,
    };
    let p = &eff.parameters;
    match eff.command {
        Command::Analyze => {
            let op = scalar_model(eff)?;
            let report = deficiency_spaces(&op)?;
            let mut payload = report.to_json();
            payload["model"] = json!(op.model_tag());
            Ok(vec![stamp.json("deficiency.json", payload)])
        }
        Command::Spectrum => {
            let ext = match eff.model {
                ModelName::Interval => {
                    let op = interval(p)?;
                    extend_by_boundary(&op, &parameter(p.copies.unwrap_or(1), p.u.as_deref(), p.theta)?)?
                }
                _ => {
                    let op = matrix_model(p, eff.seed)?;
                    let r = p.codim.unwrap_or(1);
                    let s_prime = parameter(r, p.u.as_deref(), p.theta)?;
                    extend_by_cayley(&op, s_prime.u())?
                }
            };
            let eigenvalues = ext.physical_spectrum()?;
            let mut body = String::from("index,eigenvalue\n");
            for (k, e) in eigenvalues.iter().enumerate() {
                body.push_str(&format!("{k},{e:.16e}\n"));
            }
            Ok(vec![stamp.csv("spectrum.csv", body), stamp.json("extension.json", ext.to_json()?)])
        }
        Command::Flow => {
            let op = interval(p)?;
            let r = op.copies();
            let u = parameter(r, p.u.as_deref(), p.theta)?;
            let u_prime = parameter(r, p.u_prime.as_deref(), p.theta_prime)?;
            let a = p.a.unwrap_or(0.25);
            let t = local_phase_op(&op, &u, &u_prime, a)?;
            let csv = stamp.csv("flow.csv", t.to_csv());
            let plot = stamp.plot(&csv)?;
            let json = stamp.json(
                "flow.json",
                json!({
                    "model": op.model_tag(),
                    "backend": t.backend.to_string(),
                    "a": a,
                    "u": complex_entries(u.u()),
                    "u_prime": complex_entries(u_prime.u()),
                    "phase": complex_entries(&t.phase),
                    "identity_error": t.identity_error,
                    "phase_error": t.phase_error,
                    "max_error": t.max_error(),
                }),
            );
            Ok(vec![csv, json, plot])
        }
        Command::UncertaintyCurve => {
            let xi = xi_grid(p)?;
            let (op, beta) = match eff.model {
                ModelName::Beta => {
                    let m = beta_model(p, eff.hbar)?;
                    let beta = (m.beta, m.truncated_min_dx());
                    (m.x_op, Some(beta))
                }
                _ => (scalar_model(eff)?, None),
            };
            let curve = uncertainty_curve(&op, &xi)?;
            let csv = stamp.csv("uncertainty.csv", curve.to_csv());
            let plot = stamp.plot(&csv)?;
            let min = curve.min().map(|(x, d)| json!({ "xi": x, "dx_min": d }));
            let mut payload = json!({
                "model": curve.model_tag,
                "points": curve.xi_values.len(),
                "min": min,
                "max_residual": curve.solver_residuals.iter().cloned().fold(0.0, f64::max),
                "infeasible": curve.infeasible.iter().map(|(x, why)| json!({ "xi": x, "reason": why })).collect::<Vec<_>>(),
                "warnings": op.warnings(),
            });
            if let Some((beta, truncated)) = beta {
                payload["hbar_sqrt_beta"] = json!(eff.hbar * beta.sqrt());
                payload["truncated_closed_form"] = json!(truncated);
            }
            Ok(vec![csv, stamp.json("uncertainty.json", payload), plot])
        }
        Command::Gup => {
            let m = beta_model(p, eff.hbar)?;
            let report = sample_gup(&m, p.n_states.unwrap_or(10_000), eff.seed);
            let mut payload = serde_json::to_value(&report).expect("report serializes");
            payload["beta"] = json!(m.beta);
            payload["cutoff"] = json!(m.momentum_cutoff);
            payload["warnings"] = json!(m.x_op.warnings());
            Ok(vec![stamp.json("gup.json", payload)])
        }
        Command::GenerateAlgebra => {
            let op = matrix_model(p, eff.seed)?;
            let report = generated_algebra_dimension_seeded(
                &op,
                p.word_length.unwrap_or(6),
                p.extensions.unwrap_or(3),
                eff.seed,
            )?;
            Ok(vec![stamp.json(
                "algebra.json",
                json!({
                    "model": op.model_tag(),
                    "dimension": report.dimension,
                    "target": report.target,
                    "full_algebra": report.dimension == report.target,
                    "by_length": report.by_length,
                }),
            )])
        }
        Command::FuzzybDemo => {
            let op = halfline(p)?;
            let seq = fuzzyb_localizing_sequence(&op, p.scales.unwrap_or(6))?;
            let monotone = seq.dx_values.windows(2).all(|w| w[1] < w[0]);
            Ok(vec![
                stamp.csv("localization.csv", seq.to_csv()),
                stamp.json(
                    "localization.json",
                    json!({
                        "model": op.model_tag(),
                        "centers": [seq.centers.0, seq.centers.1],
                        "widths": seq.widths,
                        "dx_values": seq.dx_values,
                        "dx_decreasing": monotone,
                        "final_overlap": seq.final_overlap(),
                    }),
                ),
            ])
        }
    }
}

/// `error.json` for a failed run.
pub(crate) fn error_report(eff: &Effective, e: &Error) -> String {
    let kind = match e {
        Error::Dimension { .. } => "dimension",
        Error::Symmetry { .. } => "symmetry",
        Error::Config(_) => "config",
        Error::Parameter(_) => "parameter",
        Error::NumericalRank(_) => "numerical-rank",
        Error::EigenvalueOne { .. } => "eigenvalue-one",
        Error::Infeasible { .. } => "infeasible",
        Error::Contract(_) => "contract",
    };
    let v = json!({
        "schema": SCHEMA,
        "config_hash": eff.hash(),
        "seed": eff.seed,
        "command": eff.command.to_string(),
        "error": kind,
        "message": e.to_string(),
    });
    let mut text = serde_json::to_string_pretty(&v).expect("json serializes");
    text.push('\n');
    text
}

fn complex_entries(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.row_major().iter().map(|z| [z.re, z.im]).collect()
}

/// `u` from explicit entries, else `e^{iθ}·1_r`.
fn parameter(r: usize, entries: Option<&[[f64; 2]]>, theta: Option<f64>) -> Result<ExtensionParameter> {
    match entries {
        Some(e) => ExtensionParameter::new(to_matrix(r, e), "config"),
        None => Ok(ExtensionParameter::scalar(r, theta.unwrap_or(0.0))),
    }
}

fn xi_grid(p: &Parameters) -> Result<Vec<f64>> {
    let (lo, hi, step) = (p.xi_min.unwrap_or(0.0), p.xi_max.unwrap_or(0.0), p.xi_step.unwrap_or(1.0));
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > MAX_XI_POINTS {
        return Err(Error::Config(format!("xi grid has {n} points (limit {MAX_XI_POINTS})")));
    }
    Ok((0..n).map(|k| lo + k as f64 * step).collect())
}

fn interval(p: &Parameters) -> Result<OperatorOnDomain> {
    build_interval_derivative(
        p.copies.unwrap_or(1),
        p.grid.unwrap_or(256),
        p.backend.unwrap_or(Backend::FiniteDifference),
    )
}

fn halfline(p: &Parameters) -> Result<OperatorOnDomain> {
    build_halfline_derivative(p.grid.unwrap_or(1024), p.length.unwrap_or(32.0))
}

fn beta_model(p: &Parameters, hbar: f64) -> Result<BetaAlgebraModel> {
    let beta = p.beta.unwrap_or(1.0);
    build_beta_algebra_with_hbar(beta, p.cutoff.unwrap_or(20.0 / beta.sqrt()), p.grid.unwrap_or(1024), hbar)
}

fn matrix_model(p: &Parameters, seed: u64) -> Result<OperatorOnDomain> {
    let m = match &p.matrix {
        Some(rows) => matrix_from_rows(rows),
        None => random_hermitian(p.dim.unwrap_or(6), seed),
    };
    build_matrix_model_seeded(&m, p.codim.unwrap_or(1), seed)
}

/// The single operator a model names; for `beta` that is the position operator.
fn scalar_model(eff: &Effective) -> Result<OperatorOnDomain> {
    let p = &eff.parameters;
    match eff.model {
        ModelName::Interval => interval(p),
        ModelName::Halfline => halfline(p),
        ModelName::Beta => beta_model(p, eff.hbar).map(|m| m.x_op),
        ModelName::Matrix => matrix_model(p, eff.seed),
    }
}
