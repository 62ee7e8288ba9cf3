//! Observable time series and their text format.
//!
//! Files start with `#` metadata lines, then a column header
//! `t sigma_z norm energy sigma2`, then one row per sample with 17
//! significant digits. `sigma2` is `NaN` on rows where it was not evaluated.
//! Two-column files `t sigma_z` (e.g. exported by external solvers) are also
//! accepted by the reader.

use std::io::{BufRead, Write};

use super::DynamicsError;

/// A ridge escalation during the implicit solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeEvent {
    pub time: f64,
    /// Ridge finally accepted.
    pub ridge: f64,
    /// Velocity norm of the accepted solution.
    pub norm: f64,
}

/// Run metadata carried alongside a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryMeta {
    pub multiplicity: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub dt: f64,
    pub seed: u64,
    /// Human-readable bath descriptors.
    pub baths: Vec<String>,
    pub regularization: Vec<RidgeEvent>,
    /// Free-form `key value` notes.
    pub notes: Vec<String>,
}

/// Observables sampled along one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, sigma_z: f64, norm: f64, energy: f64, sigma2: f64) {
        self.times.push(t);
        self.sigma_z.push(sigma_z);
        self.norm.push(norm);
        self.energy.push(energy);
        self.sigma2.push(sigma2);
    }

    /// Largest evaluated σ² (`NaN` entries skipped); `None` if none evaluated.
    pub fn max_sigma2(&self) -> Option<f64> {
        self.sigma2.iter().filter(|v| !v.is_nan()).copied().reduce(f64::max)
    }

    /// Largest evaluated σ² after the initial instant.
    ///
    /// At the first sample the seeded configurations are nearly degenerate,
    /// so σ² there equals the single-configuration value `Σ_k κ_k²`
    /// independently of the multiplicity; it says nothing about how well the
    /// dynamics is resolved and is left out of convergence decisions.
    pub fn max_sigma2_after_start(&self) -> Option<f64> {
        let t0 = *self.times.first()?;
        self.times
            .iter()
            .zip(&self.sigma2)
            .filter(|(&t, s)| t > t0 && !s.is_nan())
            .map(|(_, &s)| s)
            .reduce(f64::max)
    }

    /// First time at which σ² exceeds `threshold`.
    pub fn sigma2_crossing(&self, threshold: f64) -> Option<f64> {
        self.times.iter().zip(&self.sigma2).find(|(_, &s)| s > threshold).map(|(&t, _)| t)
    }

    /// `max_t |norm(t) − 1|`.
    pub fn max_norm_deviation(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max_t |E(t) − E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn relative_energy_drift(&self) -> f64 {
        let Some(&e0) = self.energy.first() else { return 0.0 };
        let d = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        if e0 != 0.0 {
            d / e0.abs()
        } else {
            d
        }
    }

    /// Range `max σ_z − min σ_z`.
    pub fn sigma_z_range(&self) -> f64 {
        let max = self.sigma_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.sigma_z.iter().copied().fold(f64::INFINITY, f64::min);
        if max >= min {
            max - min
        } else {
            0.0
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a trajectory file.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> Result<(), DynamicsError> {
    let m = &traj.meta;
    writeln!(w, "# md2 trajectory")?;
    writeln!(w, "# multiplicity {}", m.multiplicity)?;
    writeln!(w, "# n_left {}", m.n_left)?;
    writeln!(w, "# n_right {}", m.n_right)?;
    writeln!(w, "# dt {}", fmt(m.dt))?;
    writeln!(w, "# seed {}", m.seed)?;
    for b in &m.baths {
        writeln!(w, "# bath {b}")?;
    }
    for n in &m.notes {
        writeln!(w, "# note {n}")?;
    }
    let max_ridge = m.regularization.iter().map(|e| e.ridge).fold(0.0, f64::max);
    writeln!(w, "# regularization_events {} max_ridge {}", m.regularization.len(), fmt(max_ridge))?;
    for e in &m.regularization {
        writeln!(w, "# ridge {} {} {}", fmt(e.time), fmt(e.ridge), fmt(e.norm))?;
    }
    writeln!(w, "t sigma_z norm energy sigma2")?;
    for i in 0..traj.len() {
        writeln!(
            w,
            "{} {} {} {} {}",
            fmt(traj.times[i]),
            fmt(traj.sigma_z[i]),
            fmt(traj.norm[i]),
            fmt(traj.energy[i]),
            fmt(traj.sigma2[i])
        )?;
    }
    Ok(())
}

/// Reads a trajectory file, or a plain two-column `t sigma_z` table.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<Trajectory, DynamicsError> {
    let mut traj = Trajectory::default();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            parse_meta(rest.trim(), &mut traj.meta, lineno)?;
            continue;
        }
        if trimmed.starts_with(|c: char| c.is_ascii_alphabetic()) && !trimmed.starts_with("inf") && !trimmed.starts_with("NaN") {
            continue; // column header
        }
        let perr = |message: String| DynamicsError::Parse { line: lineno, message };
        let vals: Vec<f64> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| perr(format!("`{s}`: {e}"))))
            .collect::<Result<_, _>>()?;
        match vals.len() {
            2 => traj.push(vals[0], vals[1], f64::NAN, f64::NAN, f64::NAN),
            5 => traj.push(vals[0], vals[1], vals[2], vals[3], vals[4]),
            n => return Err(perr(format!("expected 2 or 5 columns, found {n}"))),
        }
    }
    if traj.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::Parse { line: 0, message: "times are not sorted".into() });
    }
    Ok(traj)
}

fn parse_meta(rest: &str, meta: &mut TrajectoryMeta, line: usize) -> Result<(), DynamicsError> {
    let (key, value) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let value = value.trim();
    let perr = |message: String| DynamicsError::Parse { line, message };
    let num = |s: &str| s.parse::<f64>().map_err(|e| perr(format!("`{s}`: {e}")));
    match key {
        "multiplicity" => meta.multiplicity = value.parse().map_err(|e| perr(format!("{e}")))?,
        "n_left" => meta.n_left = value.parse().map_err(|e| perr(format!("{e}")))?,
        "n_right" => meta.n_right = value.parse().map_err(|e| perr(format!("{e}")))?,
        "dt" => meta.dt = num(value)?,
        "seed" => meta.seed = value.parse().map_err(|e| perr(format!("{e}")))?,
        "bath" => meta.baths.push(value.to_string()),
        "note" => meta.notes.push(value.to_string()),
        "ridge" => {
            let f: Vec<&str> = value.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr("ridge record needs 3 fields".into()));
            }
            meta.regularization.push(RidgeEvent { time: num(f[0])?, ridge: num(f[1])?, norm: num(f[2])? });
        }
        _ => {}
    }
    Ok(())
}
