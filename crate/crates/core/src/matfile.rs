//! Dense matrix text files and observation directories.
//!
//! ```text
//! # optional comments
//! 2 3 complex
//! 1 0   0 0   0.5 -1
//! 0 0   1 0   0 0
//! ```
//!
//! The header gives rows, columns and `complex` or `real`; entries follow in
//! row-major order, as `re im` pairs for complex matrices and single numbers
//! for real ones. Line breaks between entries are not significant.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num::complex::Complex64;

use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<DMatrix<Complex64>> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let mut header = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::Format(format!("missing {what} in matrix header")))
            .map(str::to_string)
    };
    let rows: usize = header("row count")?
        .parse()
        .map_err(|_| Error::Format("row count must be an integer".into()))?;
    let cols: usize = header("column count")?
        .parse()
        .map_err(|_| Error::Format("column count must be an integer".into()))?;
    let complex = match header("entry type")?.as_str() {
        "complex" => true,
        "real" => false,
        other => return Err(Error::Format(format!("entry type must be complex or real, got {other:?}"))),
    };
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty {rows}x{cols} matrix")));
    }
    let numbers: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Format(format!("bad matrix entry {t:?}")))
        })
        .collect::<Result<_>>()?;
    let per = if complex { 2 } else { 1 };
    if numbers.len() != rows * cols * per {
        return Err(Error::Format(format!(
            "{rows}x{cols} {} matrix needs {} numbers, found {}",
            if complex { "complex" } else { "real" },
            rows * cols * per,
            numbers.len()
        )));
    }
    Ok(DMatrix::from_row_iterator(
        rows,
        cols,
        numbers.chunks(per).map(|c| Complex64::new(c[0], if complex { c[1] } else { 0.0 })),
    ))
}

pub fn render_matrix(m: &DMatrix<Complex64>) -> String {
    let mut out = format!("{} {} complex\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:?} {:?}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<Complex64>> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_matrix(path: &Path, m: &DMatrix<Complex64>) -> Result<()> {
    fs::write(path, render_matrix(m))?;
    Ok(())
}

/// Every non-hidden regular file in `dir`, sorted by name, read as a matrix.
/// All matrices must share one shape.
pub fn read_observations(dir: &Path) -> Result<Vec<DMatrix<Complex64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        p.is_file()
            && !p
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'))
    });
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!("no observation files in {}", dir.display())));
    }
    let mats: Vec<_> = paths.iter().map(|p| read_matrix(p)).collect::<Result<_>>()?;
    let shape = mats[0].shape();
    if let Some((p, m)) = paths.iter().zip(&mats).find(|(_, m)| m.shape() != shape) {
        return Err(Error::dim(format!(
            "{} is {}x{} but the first observation is {}x{}",
            p.display(),
            m.nrows(),
            m.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_real_and_complex() {
        let m = parse_matrix("# c\n2 2 real\n1 0\n0 0.5\n").unwrap();
        assert_eq!(m[(1, 1)], Complex64::new(0.5, 0.0));
        let z = parse_matrix("1 2 complex 1 -1 0 2").unwrap();
        assert_eq!(z[(0, 1)], Complex64::new(0.0, 2.0));
    }

    #[test]
    fn round_trips() {
        let m = DMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64 * 0.1, -(j as f64) / 3.0));
        assert_eq!(parse_matrix(&render_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "2 2", "2 2 quaternion 1 2 3 4", "2 2 real 1 2 3", "1 1 real x", "0 1 real"] {
            assert!(matches!(parse_matrix(bad), Err(Error::Format(_))), "{bad:?}");
        }
    }

    #[test]
    fn observation_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_observations(dir.path()), Err(Error::InvalidInput(_))));
        fs::write(dir.path().join("a.txt"), "1 1 real 2").unwrap();
        fs::write(dir.path().join(".hidden"), "junk").unwrap();
        assert_eq!(read_observations(dir.path()).unwrap().len(), 1);
        fs::write(dir.path().join("b.txt"), "1 2 real 2 3").unwrap();
        assert!(matches!(read_observations(dir.path()), Err(Error::Dimension(_))));
    }
}
