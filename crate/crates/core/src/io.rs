//! Plain-text dense matrix format: a `rows cols` header, then one line per row of
//! whitespace-separated values printed with 17 significant digits.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn matrix_to_text(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn matrix_from_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate();
    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { line: hl + 1, message: format!("bad header: {e}") })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse { line: hl + 1, message: "header must be `rows cols`".into() });
    };
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (ln, line) = lines.next().ok_or(Error::Parse { line: hl + 2 + i, message: "missing row".into() })?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() })?;
        if vals.len() != cols {
            return Err(Error::Parse {
                line: ln + 1,
                message: format!("expected {cols} values, found {}", vals.len()),
            });
        }
        for (j, v) in vals.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    if let Some((ln, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Parse { line: ln + 1, message: "trailing data".into() });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in 0usize..5, cols in 0usize..5, seed in any::<u64>()) {
            let m = DMatrix::from_fn(rows, cols, |i, j| {
                let x = seed.wrapping_mul(6364136223846793005).wrapping_add((i * 31 + j) as u64);
                f64::from_bits((x >> 12) | 0x3ff0_0000_0000_0000) * if (i + j) % 2 == 0 { 1e-7 } else { -3e5 }
            });
            let back = matrix_from_text(&matrix_to_text(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn malformed_input_reports_line() {
        assert!(matches!(matrix_from_text("2 2\n1 2\n3\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matrix_from_text("x 2\n").is_err());
    }
}
