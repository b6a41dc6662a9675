//! Dense symmetric matrix text format: a first line holding `n`, then `n`
//! rows of `n` whitespace-separated decimals.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, first) = lines.next().context("matrix file is empty")?;
    let n: usize = first.trim().parse().with_context(|| format!("bad dimension line {first:?}"))?;
    if n == 0 {
        bail!("matrix dimension must be positive");
    }
    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let (lineno, line) = lines.next().with_context(|| format!("expected {n} rows, found {row}"))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .with_context(|| format!("line {}: bad number {tok:?}", lineno + 1))?;
            data.push(v);
        }
        if data.len() - before != n {
            bail!("line {}: expected {n} values, found {}", lineno + 1, data.len() - before);
        }
    }
    if let Some((lineno, _)) = lines.next() {
        bail!("line {}: unexpected data after {n} rows", lineno + 1);
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix(&text)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.5, -2.0, -2.0, 1e-300]);
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_ragged() {
        assert!(parse_matrix("2\n1 2\n3\n").is_err());
        assert!(parse_matrix("2\n1 2\n").is_err());
        assert!(parse_matrix("1\n1\n2\n").is_err());
        assert!(parse_matrix("").is_err());
    }
}
