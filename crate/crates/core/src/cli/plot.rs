//! Plain gnuplot scripts for result CSVs. Curves of the same kind share one
//! plot; each kind gets its own.

use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug)]
pub struct PlotError(pub String);

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PlotError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Uncertainty,
    FlowError,
    Localization,
    Spectrum,
}

impl Kind {
    fn from_header(h: &str) -> Option<Kind> {
        match h.trim() {
            "xi,dx_min,residual" => Some(Kind::Uncertainty),
            "copy,lambda,error" => Some(Kind::FlowError),
            "index,width,dx,overlap" => Some(Kind::Localization),
            "index,eigenvalue" => Some(Kind::Spectrum),
            _ => None,
        }
    }

    /// `(x column, y column, x label, y label, logscale y)`.
    fn layout(self) -> (usize, usize, &'static str, &'static str, bool) {
        match self {
            Kind::Uncertainty => (1, 2, "xi", "dx_min", false),
            Kind::FlowError => (2, 3, "lambda", "|T phi - expected|", false),
            Kind::Localization => (2, 3, "width", "dx", true),
            Kind::Spectrum => (1, 2, "index", "eigenvalue", false),
        }
    }
}

/// Reads the given CSV files and returns a script plotting them.
pub fn emit_plot_script(files: &[PathBuf]) -> Result<String, PlotError> {
    let mut sources = Vec::with_capacity(files.len());
    for f in files {
        let text = std::fs::read_to_string(f).map_err(|e| PlotError(format!("cannot read {}: {e}", f.display())))?;
        sources.push((f.display().to_string(), text));
    }
    script_for(&sources)
}

/// Script for `(path, contents)` pairs; `path` is what the script references.
pub fn script_for(sources: &[(String, String)]) -> Result<String, PlotError> {
    let mut groups: Vec<(Kind, Vec<&str>)> = Vec::new();
    let mut out = String::from("# fuzzyspec/1 plot script\nset datafile separator ','\nset key autotitle columnhead\n");
    for (path, text) in sources {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines.next().unwrap_or("");
        let kind = Kind::from_header(header)
            .ok_or_else(|| PlotError(format!("{path}: unrecognised CSV header `{header}`")))?;
        if lines.next().is_none() {
            let _ = writeln!(out, "# {path}: no data rows, empty range; skipped");
            continue;
        }
        match groups.iter_mut().find(|(k, _)| *k == kind) {
            Some((_, v)) => v.push(path),
            None => groups.push((kind, vec![path])),
        }
    }
    if groups.is_empty() {
        out.push_str("# nothing to plot\n");
        return Ok(out);
    }
    for (kind, paths) in &groups {
        let (xc, yc, xl, yl, log) = kind.layout();
        let _ = writeln!(out, "\nset xlabel '{xl}'\nset ylabel '{yl}'");
        out.push_str(if log { "set logscale y\n" } else { "unset logscale y\n" });
        let items: Vec<String> = paths
            .iter()
            .map(|p| format!("'{p}' using {xc}:{yc} with linespoints title '{p}'"))
            .collect();
        let _ = writeln!(out, "plot {}", items.join(", \\\n     "));
    }
    Ok(out)
}
