use std::path::Path;

use super::{ConductivityField, FieldKind};
use crate::error::{Error, Result};

/// Conductivity sampled on a rectilinear grid, bilinear in between and
/// clamped to the grid outside it.
#[derive(Debug, Clone)]
pub struct SampledGrid {
    name: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major, `values[j * xs.len() + i]` at `(xs[i], ys[j])`.
    values: Vec<f64>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl SampledGrid {
    /// Builds a grid from scattered `(x, y, σ)` rows that cover a full
    /// rectilinear lattice.
    pub fn from_rows(name: impl Into<String>, rows: &[(f64, f64, f64)]) -> Result<Self> {
        let xs = sorted_unique(rows.iter().map(|r| r.0).collect());
        let ys = sorted_unique(rows.iter().map(|r| r.1).collect());
        if xs.len() < 2 || ys.len() < 2 {
            return Err(Error::invalid(
                "grid",
                "need at least two distinct x and y values",
            ));
        }
        if xs.len() * ys.len() != rows.len() {
            return Err(Error::invalid(
                "grid",
                format!(
                    "{} rows do not form a {}x{} rectilinear lattice",
                    rows.len(),
                    xs.len(),
                    ys.len()
                ),
            ));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for &(x, y, s) in rows {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NonPositiveConductivity { x, y, value: s });
            }
            let i = xs.binary_search_by(|v| v.total_cmp(&x)).unwrap();
            let j = ys.binary_search_by(|v| v.total_cmp(&y)).unwrap();
            let slot = &mut values[j * xs.len() + i];
            if !slot.is_nan() {
                return Err(Error::invalid(
                    "grid",
                    format!("duplicate sample at ({x}, {y})"),
                ));
            }
            *slot = s;
        }
        Ok(Self {
            name: name.into(),
            xs,
            ys,
            values,
        })
    }

    /// Parses `x,y,sigma` rows. A non-numeric first line is taken as a header;
    /// blank lines and lines starting with `#` are skipped.
    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => rows.push((v[0], v[1], v[2])),
                Err(_) if rows.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `x,y,sigma`, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_rows(name, &rows)
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sampled".into());
        Self::from_csv_str(name, &text).map_err(|e| e.context(path.display().to_string()))
    }

    fn locate(axis: &[f64], v: f64) -> (usize, f64) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, 0.0);
        }
        if v >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let hi = axis.partition_point(|&a| a <= v);
        let lo = hi - 1;
        (lo, (v - axis[lo]) / (axis[hi] - axis[lo]))
    }
}

impl ConductivityField for SampledGrid {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> FieldKind {
        FieldKind::SampledGrid
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = Self::locate(&self.xs, x);
        let (j, ty) = Self::locate(&self.ys, y);
        let nx = self.xs.len();
        let v = |a: usize, b: usize| self.values[b * nx + a];
        let lo = v(i, j) * (1.0 - tx) + v(i + 1, j) * tx;
        let hi = v(i, j + 1) * (1.0 - tx) + v(i + 1, j + 1) * tx;
        lo * (1.0 - ty) + hi * ty
    }
}
