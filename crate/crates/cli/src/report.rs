//! Check records, report serialization and numeric formatting shared by the
//! subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use dtn_krein::numerics::Complex64;
use serde_json::json;

use crate::runner::CliError;

/// One named check with its measured value and threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub lambda: Option<Complex64>,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

impl Check {
    /// Residual-style check: passes when `value <= tolerance`.
    pub fn residual(name: impl Into<String>, lambda: Option<Complex64>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), lambda, value: Some(value), tolerance, pass: value <= tolerance, error: None }
    }

    /// Check with its own pass semantics (e.g. lower bounds).
    pub fn flag(name: impl Into<String>, lambda: Option<Complex64>, value: f64, tolerance: f64, pass: bool) -> Self {
        Self { name: name.into(), lambda, value: Some(value), tolerance, pass, error: None }
    }

    /// A check that could not be evaluated at all.
    pub fn failure(name: impl Into<String>, lambda: Option<Complex64>, message: impl Into<String>) -> Self {
        Self { name: name.into(), lambda, value: None, tolerance: 0.0, pass: false, error: Some(message.into()) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut object = json!({
            "name": self.name,
            "tolerance": self.tolerance,
            "pass": self.pass,
        });
        let map = object.as_object_mut().unwrap();
        if let Some(value) = self.value {
            map.insert("value".into(), json!(value));
        }
        if let Some(error) = &self.error {
            map.insert("error".into(), json!(error));
        }
        if let Some(lambda) = self.lambda {
            map.insert("lambda".into(), complex_json(lambda));
        }
        object
    }
}

/// A λ point excluded from verification, with the rejection reason.
#[derive(Debug, Clone)]
pub struct Skip {
    pub lambda: Complex64,
    pub reason: String,
}

impl Skip {
    pub fn to_json(&self) -> serde_json::Value {
        json!({"lambda": complex_json(self.lambda), "reason": self.reason})
    }
}

pub fn complex_json(z: Complex64) -> serde_json::Value {
    json!({"re": z.re, "im": z.im})
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// 17 significant digits: round-trip exact for f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Eval(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Eval(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(content.as_bytes())
        .map_err(|e| CliError::Eval(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Print the per-check summary lines unless quiet.
pub fn print_checks(quiet: bool, checks: &[Check], skipped: &[Skip]) {
    if quiet {
        return;
    }
    for check in checks {
        let status = if check.pass { "pass" } else { "FAIL" };
        let at = check.lambda.map(|l| format!(" lambda={}", format_complex(l))).unwrap_or_default();
        match (check.value, &check.error) {
            (Some(value), _) => {
                println!("[{status}] {}{at}: value {value:.3e} (tolerance {:.3e})", check.name, check.tolerance)
            }
            (None, Some(error)) => println!("[{status}] {}{at}: {error}", check.name),
            (None, None) => println!("[{status}] {}{at}", check.name),
        }
    }
    for skip in skipped {
        println!("[skip] lambda={}: {}", format_complex(skip.lambda), skip.reason);
    }
}

pub fn counts_json(checks: &[Check], skipped: &[Skip]) -> serde_json::Value {
    let failed = checks.iter().filter(|c| !c.pass).count();
    json!({
        "total": checks.len(),
        "passed": checks.len() - failed,
        "failed": failed,
        "skipped": skipped.len(),
    })
}

pub fn tolerances_json(tol: &crate::config::Tolerances) -> serde_json::Value {
    json!({
        "krein": tol.krein,
        "trace": tol.trace,
        "identity": tol.identity,
        "representation": tol.representation,
        "symmetry": tol.symmetry,
        "nevanlinna": tol.nevanlinna,
        "stieltjes": tol.stieltjes,
        "steklov": tol.steklov,
        "flux": tol.flux,
        "green": tol.green,
        "singular": tol.singular,
    })
}
