use std::path::Path;

use crate::commands::CliError;

/// One number per line; blank lines and `#` comments are skipped.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: cannot parse {body:?} as a number", i + 1)))?;
        if !v.is_finite() {
            return Err(CliError::Data(format!("line {}: non-finite value {body}", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_numbers(&text)
}

/// Differences of logs of successive values, all of which must be positive.
pub fn log_returns(values: &[f64]) -> Result<Vec<f64>, CliError> {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(CliError::Data(format!("value {i} is {v}; log returns need positive values")));
    }
    if values.len() < 2 {
        return Err(CliError::Data("log returns need at least two values".into()));
    }
    Ok(values.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}
