//! Coordinate-format QUBO files.
//!
//! ```text
//! N target_size mode alpha
//! i j value
//! ```
//! One line per nonzero coefficient with `i ≤ j`, ordered by `(i, j)`. Values
//! carry 17 significant digits so a round trip is lossless.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{BuildMode, QuboMatrix};
use crate::error::{Error, Result};

pub fn write_qubo<W: Write>(q: &QuboMatrix, mut w: W) -> std::io::Result<()> {
    let n = q.dim();
    writeln!(w, "{} {} {} {:.16e}", n, q.target_size(), q.mode(), q.alpha())?;
    for i in 0..n {
        for j in i..n {
            let v = q.coeffs()[(i, j)];
            if v != 0.0 {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
    }
    Ok(())
}

pub fn export_qubo(q: &QuboMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_qubo(q, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_qubo<R: BufRead>(reader: R) -> Result<QuboMatrix> {
    let mut lines = reader.lines().enumerate();
    let bad = |line: usize, what: &str| Error::MalformedData(format!("qubo line {}: {what}", line + 1));

    let (_, header) = lines.next().ok_or_else(|| Error::MalformedData("empty qubo file".into()))?;
    let header = header.map_err(|e| Error::io("<qubo>", e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, target, mode, alpha] = fields[..] else {
        return Err(bad(0, "header must be `N target_size mode alpha`"));
    };
    let n: usize = n.parse().map_err(|_| bad(0, "bad N"))?;
    let target: usize = target.parse().map_err(|_| bad(0, "bad target_size"))?;
    let mode: BuildMode = mode.parse()?;
    let alpha: f64 = alpha.parse().map_err(|_| bad(0, "bad alpha"))?;
    if n == 0 {
        return Err(bad(0, "N must be positive"));
    }

    let mut coeffs = DMatrix::zeros(n, n);
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io("<qubo>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = parts[..] else {
            return Err(bad(idx, "expected `i j value`"));
        };
        let i: usize = i.parse().map_err(|_| bad(idx, "bad row index"))?;
        let j: usize = j.parse().map_err(|_| bad(idx, "bad column index"))?;
        let v: f64 = v.parse().map_err(|_| bad(idx, "bad value"))?;
        if i > j || j >= n {
            return Err(bad(idx, "index outside the upper triangle"));
        }
        coeffs[(i, j)] = v;
    }
    QuboMatrix::from_coeffs(coeffs, target, mode, alpha)
}

pub fn import_qubo(path: impl AsRef<Path>) -> Result<QuboMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_qubo(std::io::BufReader::new(file))
}
