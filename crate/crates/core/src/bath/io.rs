//! Plain-text bath tables.
//!
//! Format: a header line `# omega_k  z_k  g_k  beta  cert_err`, then one
//! whitespace-separated row per mode with 17 significant digits.

use std::io::{BufRead, Write};

use super::{BathError, DiscretizedBath};

const HEADER: &str = "# omega_k  z_k  g_k  beta  cert_err";

/// Writes a bath table.
pub fn write_bath<W: Write>(mut w: W, bath: &DiscretizedBath) -> Result<(), BathError> {
    writeln!(w, "{HEADER}")?;
    for k in 0..bath.len() {
        writeln!(
            w,
            "{:.16e}  {:.16e}  {:.16e}  {:.16e}  {:.16e}",
            bath.frequencies[k], bath.weights[k], bath.couplings[k], bath.beta, bath.certification_error
        )?;
    }
    Ok(())
}

/// Reads a bath table written by [`write_bath`].
pub fn read_bath<R: BufRead>(r: R) -> Result<DiscretizedBath, BathError> {
    let mut bath = DiscretizedBath {
        frequencies: Vec::new(),
        couplings: Vec::new(),
        weights: Vec::new(),
        beta: f64::NAN,
        certification_error: f64::NAN,
    };
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| BathError::Parse { line: idx + 1, message };
        let fields: Vec<f64> = trimmed
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("`{s}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 columns, found {}", fields.len())));
        }
        bath.frequencies.push(fields[0]);
        bath.weights.push(fields[1]);
        bath.couplings.push(fields[2]);
        bath.beta = fields[3];
        bath.certification_error = fields[4];
    }
    if bath.is_empty() {
        return Err(BathError::Parse { line: 0, message: "bath table has no modes".into() });
    }
    Ok(bath)
}
