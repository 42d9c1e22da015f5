//! CSV and JSON writers. Floats in CSV use 17 significant digits so values
//! round-trip exactly.

use std::io::Write;

use dln_core::StepRecord;
use serde::Serialize;

use crate::study::{ConvergenceRow, RunResult};
use crate::Format;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One CSV/JSON row of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub n: usize,
    pub t: f64,
    pub k: f64,
    pub eps: f64,
    pub y: Vec<f64>,
    pub lte_scalar: Option<f64>,
    pub g_norm_sq: f64,
    pub dissipation_sq: f64,
    pub energy_residual: f64,
    pub newton_iters: usize,
    pub accepted: bool,
    /// Only on the terminal row, and only when an exact solution exists.
    pub exact_error: Option<f64>,
}

pub fn run_rows(result: &RunResult) -> Vec<RunRow> {
    let traj = &result.trajectory;
    let last = traj.records.len().saturating_sub(1);
    traj.records
        .iter()
        .enumerate()
        .map(|(i, r): (usize, &StepRecord)| RunRow {
            n: r.n,
            t: r.t,
            k: r.k,
            eps: r.eps,
            y: traj.states[i + 1].clone(),
            lte_scalar: r.lte.as_ref().map(|e| e.scalar_error),
            g_norm_sq: r.ledger.g_norm_sq_after,
            dissipation_sq: r.ledger.dissipation_sq,
            energy_residual: r.ledger.relative_residual(),
            newton_iters: r.newton_iters,
            accepted: r.accepted,
            exact_error: if i == last {
                result.terminal_error
            } else {
                None
            },
        })
        .collect()
}

pub fn write_run_csv<W: Write + ?Sized>(out: &mut W, result: &RunResult) -> std::io::Result<()> {
    let dim = result.trajectory.states.first().map_or(0, Vec::len);
    let mut header = vec!["n".to_string(), "t".into(), "k".into(), "eps".into()];
    header.extend((0..dim).map(|i| format!("y{i}")));
    header.extend(
        [
            "lte_scalar",
            "g_norm_sq",
            "dissipation_sq",
            "energy_residual",
            "newton_iters",
            "accepted",
            "exact_error",
        ]
        .map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    for row in run_rows(result) {
        let mut fields = vec![row.n.to_string(), num(row.t), num(row.k), num(row.eps)];
        fields.extend(row.y.iter().map(|&v| num(v)));
        fields.push(opt(row.lte_scalar));
        fields.push(num(row.g_norm_sq));
        fields.push(num(row.dissipation_sq));
        fields.push(num(row.energy_residual));
        fields.push(row.newton_iters.to_string());
        fields.push(u8::from(row.accepted).to_string());
        fields.push(opt(row.exact_error));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunJson {
    rows: Vec<RunRow>,
    terminal_error: Option<f64>,
    rejected: usize,
}

pub fn write_run<W: Write + ?Sized>(
    out: &mut W,
    result: &RunResult,
    format: Format,
) -> std::io::Result<()> {
    match format {
        Format::Csv => write_run_csv(out, result),
        Format::Json => {
            let doc = RunJson {
                rows: run_rows(result),
                terminal_error: result.terminal_error,
                rejected: result.rejected,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)
        }
    }
}

pub fn write_convergence<W: Write + ?Sized>(
    out: &mut W,
    rows: &[ConvergenceRow],
    format: Format,
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(
                out,
                "level,base_k,terminal_error,observed_order,at_roundoff"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.level,
                    num(r.base_k),
                    num(r.terminal_error),
                    opt(r.observed_order),
                    u8::from(r.at_roundoff)
                )?;
            }
            Ok(())
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)
        }
    }
}

/// Writes a serializable report; CSV is a single `key,value` table of its
/// scalar fields.
pub fn write_report<T: Serialize, W: Write + ?Sized>(
    out: &mut W,
    report: &T,
    format: Format,
) -> std::io::Result<()> {
    let value = serde_json::to_value(report)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &value)?;
            writeln!(out)
        }
        Format::Csv => {
            writeln!(out, "key,value")?;
            if let serde_json::Value::Object(map) = value {
                for (k, v) in map {
                    let cell = match v {
                        serde_json::Value::Number(n) => match n.as_u64() {
                            Some(u) => u.to_string(),
                            None => n.as_f64().map(num).unwrap_or_default(),
                        },
                        serde_json::Value::Bool(b) => u8::from(b).to_string(),
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Null => String::new(),
                        // Arrays go to JSON output only.
                        _ => continue,
                    };
                    writeln!(out, "{k},{cell}")?;
                }
            }
            Ok(())
        }
    }
}
