//! Matrix files for `matgame solve`.

use nalgebra::DMatrix;
use secgame_core::{Error, Result};

/// Accepts a JSON array of rows, or one row per line with entries separated
/// by whitespace or commas. Blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix: {e}")))?
    } else {
        text.lines()
            .enumerate()
            .map(|(i, line)| (i, line.split('#').next().unwrap_or("").trim()))
            .filter(|(_, line)| !line.is_empty())
            .map(|(i, line)| {
                line.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("matrix line {}: bad number {t:?}", i + 1)))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?
    };
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if let Some(k) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Parse(format!(
            "matrix row {} has {} entries, expected {cols}",
            k + 1,
            rows[k].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}
