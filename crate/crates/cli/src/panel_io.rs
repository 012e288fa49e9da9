//! Reading observed panels from CSV.

use std::path::Path;

use ndarray::Array2;
use pseudo_id::PanelData;

use crate::error::CliError;

/// Reads a balanced panel with columns `firm`, `period`, `y`, `x` and
/// optionally `z`, in any order; other columns are ignored. Firms and periods
/// are zero-based indices.
pub fn read_panel(path: &Path) -> Result<PanelData, CliError> {
    let err = |m: String| CliError::io("io", format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| col(name).ok_or_else(|| err(format!("missing column `{name}`")));
    let (fi, pi, yi, xi) = (need("firm")?, need("period")?, need("y")?, need("x")?);
    let zi = col("z");

    let mut rows = Vec::new();
    let (mut n, mut t) = (0usize, 0usize);
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let idx = |k: usize| {
            field(k)
                .parse::<usize>()
                .map_err(|_| err(format!("row {}: bad index `{}`", line + 1, field(k))))
        };
        let num = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|_| err(format!("row {}: bad number `{}`", line + 1, field(k))))
        };
        let (i, p) = (idx(fi)?, idx(pi)?);
        let z = zi.map(num).transpose()?;
        rows.push((i, p, num(yi)?, num(xi)?, z));
        n = n.max(i + 1);
        t = t.max(p + 1);
    }
    if rows.len() != n * t {
        return Err(err(format!("{} rows do not form a balanced {n} x {t} panel", rows.len())));
    }
    let mut y = Array2::from_elem((n, t), f64::NAN);
    let mut x = Array2::from_elem((n, t), f64::NAN);
    let mut z = zi.map(|_| Array2::from_elem((n, t), f64::NAN));
    for (i, p, yv, xv, zv) in rows {
        if !y[[i, p]].is_nan() {
            return Err(err(format!("duplicate firm {i}, period {p}")));
        }
        y[[i, p]] = yv;
        x[[i, p]] = xv;
        if let (Some(z), Some(v)) = (z.as_mut(), zv) {
            z[[i, p]] = v;
        }
    }
    PanelData::from_observables(y, x, z).map_err(|e| CliError::core("io", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pseudo_id::simulate::{draw_panel, DgpSpec, Variant};

    #[test]
    fn simulated_csv_reads_back() {
        let p = draw_panel(&DgpSpec::new(Variant::Benchmark).with_shape(7, 4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        std::fs::write(&f, p.to_csv()).unwrap();
        let q = read_panel(&f).unwrap();
        assert_eq!(q.y, p.y);
        assert_eq!(q.x, p.x);
        assert!(q.z.is_none());
    }

    #[test]
    fn unbalanced_panel_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        std::fs::write(&f, "firm,period,y,x\n0,0,1,1\n0,1,1,1\n1,0,1,1\n").unwrap();
        assert!(read_panel(&f).is_err());
    }
}
