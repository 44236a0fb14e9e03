use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use riccati_core::corpus::CaseRun;
use serde::Serialize;

/// Report written by `check` and `solve`. The first seven fields form the
/// stable schema shared with corpus runs.
#[derive(Debug, Serialize)]
pub struct Report {
    pub case: String,
    pub params: BTreeMap<String, f64>,
    pub tol: f64,
    pub max_residual: f64,
    pub oracle_max_error: Option<f64>,
    pub poles: Vec<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveDetails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SolveDetails {
    pub kind: String,
    pub sign: Option<String>,
    pub constant: f64,
    pub condition_holds: bool,
    pub corrupt: Option<f64>,
    pub segments: Vec<(f64, f64)>,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub x: f64,
    /// `None` inside a pole bracket or where evaluation fails.
    pub y: Option<f64>,
    pub denominator: Option<f64>,
    pub in_pole: bool,
}

#[derive(Debug, Serialize)]
pub struct CorpusReport<'a> {
    pub pass: bool,
    pub passed: usize,
    pub total: usize,
    pub cases: &'a [CaseRun],
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Fixed 17-significant-digit rendering used by every CSV writer.
fn num(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(v) if v.is_nan() => "nan".to_string(),
        Some(v) if v > 0.0 => "inf".to_string(),
        Some(_) => "-inf".to_string(),
        None => "nan".to_string(),
    }
}

pub fn samples_csv(samples: &[Sample]) -> String {
    let mut s = String::from("x,y,denominator,in_pole\n");
    for p in samples {
        let _ = writeln!(s, "{},{},{},{}", num(Some(p.x)), num(p.y), num(p.denominator), p.in_pole);
    }
    s
}

pub fn expr_csv(rows: &[(f64, Option<f64>, Option<f64>)]) -> String {
    let mut s = String::from("x,y,dy\n");
    for &(x, y, dy) in rows {
        let _ = writeln!(s, "{},{},{}", num(Some(x)), num(y), num(dy));
    }
    s
}

pub fn corpus_csv(runs: &[CaseRun]) -> String {
    let mut s = String::from("case,branch,check,max_residual,oracle_max_error,pass\n");
    for run in runs {
        for b in &run.branches {
            for c in &b.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    run.case,
                    b.branch,
                    c.equation,
                    num(Some(c.max_residual)),
                    num(Some(c.oracle_max_error)),
                    c.pass
                );
            }
        }
        for x in &run.cross_checks {
            let status = serde_json::to_value(x.status).expect("status serializes");
            let _ = writeln!(
                s,
                "{},,{},{},,{}",
                run.case,
                x.name,
                x.max_error.map(|v| num(Some(v))).unwrap_or_default(),
                status.as_str().unwrap_or_default()
            );
        }
    }
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
