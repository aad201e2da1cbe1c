//! Field snapshots (text and little-endian binary) and CSV helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::coupling::DiagnosticsRow;
use crate::error::GridError;
use crate::grid::{Grid2D, ScalarField};

/// Scientific notation with 15 significant digits.
pub fn fmt15(v: f64) -> String {
    format!("{v:.14e}")
}

pub const DIAGNOSTICS_HEADER: &str =
    "t,mass,rho_min,rho_max,variance,kinetic,potential,grad_energy";

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 180 + 64);
    s.push_str(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        let vals = [
            r.t,
            r.mass,
            r.rho_min,
            r.rho_max,
            r.variance,
            r.kinetic,
            r.potential,
            r.grad_energy,
        ];
        let line: Vec<String> = vals.iter().map(|v| fmt15(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Parses a diagnostics CSV written by [`diagnostics_csv`].
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRow>, GridError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => return Err(GridError::Format("missing diagnostics header".into())),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GridError::Format(format!("row {}: {e}", n + 1)))?;
        if v.len() != 8 {
            return Err(GridError::Format(format!(
                "row {}: expected 8 columns",
                n + 1
            )));
        }
        rows.push(DiagnosticsRow {
            t: v[0],
            mass: v[1],
            rho_min: v[2],
            rho_max: v[3],
            variance: v[4],
            kinetic: v[5],
            potential: v[6],
            grad_energy: v[7],
        });
    }
    Ok(rows)
}

/// Text snapshot: a header line `nx ny lx ly time`, then `ny` rows of `nx`
/// values (row `j` holds cells `(0..nx, j)`).
pub fn snapshot_to_text(field: &ScalarField, time: f64) -> String {
    let g = field.grid;
    let mut s = format!("{} {} {:?} {:?} {:?}\n", g.nx, g.ny, g.lx, g.ly, time);
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx)
            .map(|i| format!("{:.16e}", field.at(i, j)))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn snapshot_from_text(text: &str) -> Result<(ScalarField, f64), GridError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| GridError::Format("empty snapshot".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(GridError::Format(
            "header must be `nx ny lx ly time`".into(),
        ));
    }
    let bad = |what: &str| GridError::Format(format!("bad header field {what}"));
    let nx: usize = h[0].parse().map_err(|_| bad("nx"))?;
    let ny: usize = h[1].parse().map_err(|_| bad("ny"))?;
    let lx: f64 = h[2].parse().map_err(|_| bad("lx"))?;
    let ly: f64 = h[3].parse().map_err(|_| bad("ly"))?;
    let time: f64 = h[4].parse().map_err(|_| bad("time"))?;
    let grid = Grid2D::new(nx, ny, lx, ly)?;
    let mut values = Vec::with_capacity(grid.len());
    for (j, line) in lines.enumerate() {
        if j >= ny {
            return Err(GridError::Format(format!("more than {ny} rows")));
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| GridError::Format(format!("row {j}: {e}")))?;
        if row.len() != nx {
            return Err(GridError::Format(format!(
                "row {j} has {} values, expected {nx}",
                row.len()
            )));
        }
        values.extend(row);
    }
    Ok((ScalarField::from_values(grid, values)?, time))
}

/// Binary snapshot: five little-endian f64 header values
/// (`nx, ny, lx, ly, time`) followed by the row-major field.
pub fn snapshot_to_bytes(field: &ScalarField, time: f64) -> Vec<u8> {
    let g = field.grid;
    let mut out = Vec::with_capacity(8 * (5 + g.len()));
    for v in [g.nx as f64, g.ny as f64, g.lx, g.ly, time]
        .iter()
        .chain(&field.values)
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn snapshot_from_bytes(bytes: &[u8]) -> Result<(ScalarField, f64), GridError> {
    if !bytes.len().is_multiple_of(8) || bytes.len() < 40 {
        return Err(GridError::Format("truncated binary snapshot".into()));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (nx, ny) = (vals[0], vals[1]);
    if nx.fract() != 0.0 || ny.fract() != 0.0 || nx < 0.0 || ny < 0.0 {
        return Err(GridError::Format("non-integer grid size".into()));
    }
    let grid = Grid2D::new(nx as usize, ny as usize, vals[2], vals[3])?;
    let field = ScalarField::from_values(grid, vals[5..].to_vec())?;
    Ok((field, vals[4]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Text,
    Binary,
}

impl SnapshotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Text => "txt",
            Self::Binary => "bin",
        }
    }
}

pub fn write_snapshot(
    path: &Path,
    field: &ScalarField,
    time: f64,
    format: SnapshotFormat,
) -> Result<(), GridError> {
    let mut file = fs::File::create(path)?;
    match format {
        SnapshotFormat::Text => file.write_all(snapshot_to_text(field, time).as_bytes())?,
        SnapshotFormat::Binary => file.write_all(&snapshot_to_bytes(field, time))?,
    }
    Ok(())
}

/// Reads either format; binary is detected by the `.bin` extension.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField, f64), GridError> {
    if path.extension().is_some_and(|e| e == "bin") {
        snapshot_from_bytes(&fs::read(path)?)
    } else {
        snapshot_from_text(&fs::read_to_string(path)?)
    }
}
