use std::path::Path;

use plugin_gp::Dataset;

use crate::error::{CliError, CliResult};

const COLUMNS: [&str; 3] = ["x", "y", "sigma_y"];

/// Reads `x,y[,sigma_y]` by position. A header row is required; its names
/// are not checked. `sigma_y` is kept only when `hetero` is set and is then
/// mandatory.
pub fn read_dataset(path: &Path, hetero: bool) -> CliResult<Dataset<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let width = reader.headers().map_err(|e| csv_error(path, e))?.len();
    if width < 2 {
        return Err(CliError::Input(format!(
            "{}: expected columns x,y[,sigma_y], header has {width}",
            path.display()
        )));
    }
    if hetero && width < 3 {
        return Err(CliError::Input(format!(
            "{}: --hetero needs a third column with per-observation sds",
            path.display()
        )));
    }
    let (mut x, mut y, mut sd) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |col: usize| -> CliResult<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "{}: row {line}: cannot read '{raw}' in column {} as a finite number",
                        path.display(),
                        COLUMNS[col]
                    ))
                })
        };
        x.push(cell(0)?);
        y.push(cell(1)?);
        if hetero {
            sd.push(cell(2)?);
        }
    }
    if x.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let data = if hetero {
        Dataset::with_obs_sd(x, y, sd)
    } else {
        Dataset::new(x, y)
    };
    data.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => CliError::Input(format!(
            "{}: row {}: expected {expected_len} fields, found {len}",
            path.display(),
            pos.map_or(0, |p| p.line())
        )),
        other => CliError::Input(format!("{}: {other:?}", path.display())),
    }
}

/// `a:b:m`, `m` equally spaced points including both ends.
pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, m] = parts.as_slice() else {
        return Err(format!("grid must look like a:b:m, got '{s}'"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad grid start '{a}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad grid end '{b}'"))?;
    let m: usize = m.parse().map_err(|_| format!("bad grid size '{m}'"))?;
    if m == 0 || !a.is_finite() || !b.is_finite() {
        return Err(format!(
            "grid needs finite ends and at least one point, got '{s}'"
        ));
    }
    if m == 1 && a != b {
        return Err("a one-point grid needs a == b".into());
    }
    Ok((a, b, m))
}
