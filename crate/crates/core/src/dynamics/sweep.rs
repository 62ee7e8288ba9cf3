//! Two-stage convergence sweep: first over the multiplicity at fixed mode
//! count, then over the mode count at the converged multiplicity.

use rayon::prelude::*;

use super::{run_trajectory, DynamicsError, RunParameters, Trajectory};

/// Sweep thresholds and parallelism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Absolute tolerance on `max_t |σ_z^(k) − σ_z^(k+1)|`; `None` means
    /// `10⁻²` times the σ_z range of the larger run.
    pub tol_conv: Option<f64>,
    /// Upper bound on `max_t σ²` (after the initial instant, see
    /// [`Trajectory::max_sigma2_after_start`]) for the smaller run.
    pub sigma2_threshold: f64,
    /// Worker threads (0 = rayon default).
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tol_conv: None, sigma2_threshold: 1e-2, workers: 0 }
    }
}

/// Which stage an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepStage {
    Multiplicity,
    Modes,
}

/// One trajectory of the sweep.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub stage: SweepStage,
    pub multiplicity: usize,
    /// Mode count `N` passed to the builder.
    pub modes: usize,
    /// `max_t σ²` after the initial instant (`NaN` if none evaluated).
    pub max_sigma2: f64,
    /// Run reached `t_final`.
    pub completed: bool,
    /// `max_t |σ_z − σ_z^next|` against the next entry of the same stage.
    pub diff_to_next: Option<f64>,
    /// Tolerance the difference was compared against.
    pub tolerance: Option<f64>,
    /// Abort or setup message, if any.
    pub error: Option<String>,
    pub trajectory: Trajectory,
}

impl SweepEntry {
    fn converged_against_next(&self, threshold: f64) -> bool {
        self.completed
            && self.max_sigma2 < threshold
            && matches!((self.diff_to_next, self.tolerance), (Some(d), Some(t)) if d < t)
    }
}

/// Outcome of a sweep; non-convergence is reported, not raised.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Smallest multiplicity that agreed with its successor.
    pub converged_multiplicity: Option<usize>,
    /// Smallest mode count that agreed with its successor.
    pub converged_modes: Option<usize>,
}

impl SweepReport {
    pub fn converged(&self) -> bool {
        self.converged_multiplicity.is_some() && self.converged_modes.is_some()
    }

    pub fn stage(&self, stage: SweepStage) -> impl Iterator<Item = &SweepEntry> {
        self.entries.iter().filter(move |e| e.stage == stage)
    }
}

fn run_one<F>(build: &F, stage: SweepStage, m: usize, n: usize) -> SweepEntry
where
    F: Fn(usize, usize) -> Result<RunParameters, DynamicsError>,
{
    let (trajectory, completed, error) = match build(m, n) {
        Err(e) => (Trajectory::default(), false, Some(e.to_string())),
        Ok(p) => match run_trajectory(&p) {
            Ok(t) => (t, true, None),
            Err(abort) => {
                let msg = abort.to_string();
                (abort.partial, false, Some(msg))
            }
        },
    };
    SweepEntry {
        stage,
        multiplicity: m,
        modes: n,
        max_sigma2: trajectory.max_sigma2_after_start().unwrap_or(f64::NAN),
        completed,
        diff_to_next: None,
        tolerance: None,
        error,
        trajectory,
    }
}

fn max_abs_diff(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    Some(a.sigma_z.iter().zip(&b.sigma_z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Fills in successor differences and returns the index of the first entry
/// converged against its successor.
fn compare_chain(entries: &mut [SweepEntry], opts: &SweepOptions) -> Option<usize> {
    for k in 0..entries.len().saturating_sub(1) {
        let (head, tail) = entries.split_at_mut(k + 1);
        let (cur, next) = (&mut head[k], &tail[0]);
        if cur.completed && next.completed {
            cur.diff_to_next = max_abs_diff(&cur.trajectory, &next.trajectory);
            cur.tolerance = Some(opts.tol_conv.unwrap_or(1e-2 * next.trajectory.sigma_z_range()));
        }
    }
    entries.iter().position(|e| e.converged_against_next(opts.sigma2_threshold))
}

fn check_list(name: &str, list: &[usize]) -> Result<(), DynamicsError> {
    if list.is_empty() {
        return Err(DynamicsError::InvalidParameter(format!("{name} list is empty")));
    }
    if list.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::InvalidParameter(format!("{name} list must be nondecreasing")));
    }
    Ok(())
}

/// Runs the two-stage protocol. `build(M, N)` produces the run parameters for
/// multiplicity `M` and mode count `N`. Stage one varies `M` over `m_list`
/// at `N = n_list[0]`; stage two varies `N` over `n_list` at the converged
/// multiplicity (or the last one tried if none converged).
///
/// Returns an error only for malformed lists or a failing thread pool.
pub fn convergence_sweep<F>(
    build: F,
    m_list: &[usize],
    n_list: &[usize],
    opts: &SweepOptions,
) -> Result<SweepReport, DynamicsError>
where
    F: Fn(usize, usize) -> Result<RunParameters, DynamicsError> + Sync,
{
    check_list("multiplicity", m_list)?;
    check_list("mode", n_list)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| DynamicsError::InvalidParameter(format!("thread pool: {e}")))?;

    let n0 = n_list[0];
    let mut stage1: Vec<SweepEntry> = pool.install(|| {
        m_list.par_iter().map(|&m| run_one(&build, SweepStage::Multiplicity, m, n0)).collect()
    });
    let m_idx = compare_chain(&mut stage1, opts);
    let converged_multiplicity = m_idx.map(|i| stage1[i].multiplicity);
    let m_star = converged_multiplicity.unwrap_or(*m_list.last().expect("nonempty"));

    let reuse = stage1.iter().find(|e| e.multiplicity == m_star).cloned();
    let mut stage2: Vec<SweepEntry> = pool.install(|| {
        n_list
            .par_iter()
            .enumerate()
            .map(|(i, &n)| match (&reuse, i) {
                (Some(e), 0) => SweepEntry { stage: SweepStage::Modes, diff_to_next: None, tolerance: None, ..e.clone() },
                _ => run_one(&build, SweepStage::Modes, m_star, n),
            })
            .collect()
    });
    let n_idx = compare_chain(&mut stage2, opts);
    let converged_modes = n_idx.map(|i| stage2[i].modes);

    stage1.extend(stage2);
    Ok(SweepReport { entries: stage1, converged_multiplicity, converged_modes })
}
