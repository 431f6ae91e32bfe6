use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use fame_core::dynamics::JointState;
use fame_core::harness::{CellOutcome, SweepResult};

use crate::error::CliError;

/// Joint-state file: three headerless CSV rows labelled `q`, `qd` and
/// `tau`, each followed by one value per joint in model order.
pub fn read_state_csv(path: &Path, dof: usize) -> Result<JointState, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut rows: [Option<Vec<f64>>; 3] = [None, None, None];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let label = record.get(0).unwrap_or_default();
        let slot = match label {
            "q" => 0,
            "qd" => 1,
            "tau" => 2,
            other => {
                return Err(CliError::input(format!(
                    "{}: row {}: unknown label `{other}`",
                    path.display(),
                    line + 1
                )))
            }
        };
        if rows[slot].is_some() {
            return Err(CliError::input(format!("{}: row `{label}` repeated", path.display())));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::input(format!("{}: row `{label}`: bad number `{v}`", path.display())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != dof {
            return Err(CliError::validation(format!(
                "{}: row `{label}` has {} values, model has {dof} joints",
                path.display(),
                values.len()
            )));
        }
        rows[slot] = Some(values);
    }
    let [q, qd, tau] = rows;
    let missing = |n: &str| CliError::input(format!("{}: missing row `{n}`", path.display()));
    Ok(JointState::new(q.ok_or_else(|| missing("q"))?, qd.ok_or_else(|| missing("qd"))?, tau.ok_or_else(|| missing("tau"))?))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn csv_bytes<S: AsRef<[u8]>>(header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::input(e.to_string()))
}

pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let header: Vec<String> = ["cfg", "fx", "fy", "fz", "h_cmd", "success", "margin"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    csv_bytes(
        &header,
        result.cells.iter().map(|c| {
            vec![
                c.cfg.id().to_string(),
                c.force[0].to_string(),
                c.force[1].to_string(),
                c.force[2].to_string(),
                c.h_cmd.to_string(),
                c.success.to_string(),
                c.margin.to_string(),
            ]
        }),
    )
}

const PANEL: f64 = 220.0;
const PAD: f64 = 30.0;

/// One panel per configuration: `F_x` horizontal, `F_z` vertical, a dot
/// per cell, green for success and red for failure.
pub fn sweep_svg(result: &SweepResult, fx: [f64; 2], fz: [f64; 2]) -> String {
    let configs: Vec<&String> = result.summary.keys().collect();
    let width = PAD + configs.len() as f64 * (PANEL + PAD);
    let height = PANEL + 3.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let span = |r: [f64; 2]| if r[1] > r[0] { r[1] - r[0] } else { 1.0 };
    for (k, id) in configs.iter().enumerate() {
        let x0 = PAD + k as f64 * (PANEL + PAD);
        let y0 = 2.0 * PAD;
        let summary = &result.summary[*id];
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}">{id}: {:.3}</text>"#,
            y0 - 8.0,
            summary.success_fraction
        );
        let _ = writeln!(
            s,
            r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#444"/>"##
        );
        let cells: Vec<&CellOutcome> = result.cells.iter().filter(|c| c.cfg.id() == id.as_str()).collect();
        for c in cells {
            let px = x0 + PANEL * (c.force[0] - fx[0]) / span(fx);
            let py = y0 + PANEL * (1.0 - (c.force[2] - fz[0]) / span(fz));
            let color = if c.success { "#2a9d3f" } else { "#d62828" };
            let _ = writeln!(
                s,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}" fill-opacity="0.5"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}">Fx [{}, {}] N, Fz [{}, {}] N</text>"#,
            y0 + PANEL + 16.0,
            fx[0],
            fx[1],
            fz[0],
            fz[1]
        );
    }
    s.push_str("</svg>\n");
    s
}
