//! Text snapshots of variational states for checkpoint/restart.
//!
//! Format: header `md2-state <M> <N_l> <N_r> <time>`, then one row per
//! parameter `<block> <i> <k> <re> <im>` where `block` is `A`, `B`, `f`,
//! `f_tilde`, `g` or `g_tilde` (`k` is `0` for amplitudes).

use std::io::{BufRead, Write};

use super::{AnsatzError, Block, MD2State, ModeLayout};
use crate::C64;

/// Writes a full-precision snapshot.
pub fn write_state<W: Write>(mut w: W, state: &MD2State) -> Result<(), AnsatzError> {
    let m = state.multiplicity();
    writeln!(w, "md2-state {} {} {} {:.16e}", m, state.layout.n_left, state.layout.n_right, state.time)?;
    for (name, v) in [("A", &state.a), ("B", &state.b)] {
        for i in 0..m {
            writeln!(w, "{name} {i} 0 {:.16e} {:.16e}", v[i].re, v[i].im)?;
        }
    }
    for blk in Block::ALL {
        let z = state.block(blk);
        for ((i, k), v) in z.indexed_iter() {
            writeln!(w, "{} {i} {k} {:.16e} {:.16e}", blk.name(), v.re, v.im)?;
        }
    }
    Ok(())
}

/// Reads a snapshot written by [`write_state`].
pub fn read_state<R: BufRead>(r: R) -> Result<MD2State, AnsatzError> {
    let mut lines = r.lines().enumerate();
    let perr = |line: usize, message: String| AnsatzError::Parse { line, message };
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty snapshot".into()))?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "md2-state" {
        return Err(perr(1, format!("bad header `{header}`")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| perr(1, format!("`{s}`: {e}")));
    let (m, nl, nr) = (num(h[1])?, num(h[2])?, num(h[3])?);
    let time = h[4].parse::<f64>().map_err(|e| perr(1, format!("`{}`: {e}", h[4])))?;
    let mut state = MD2State::zeros(m, ModeLayout::new(nl, nr));
    state.time = time;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(perr(lineno, format!("expected 5 fields, found {}", f.len())));
        }
        let i: usize = f[1].parse().map_err(|e| perr(lineno, format!("`{}`: {e}", f[1])))?;
        let k: usize = f[2].parse().map_err(|e| perr(lineno, format!("`{}`: {e}", f[2])))?;
        let re: f64 = f[3].parse().map_err(|e| perr(lineno, format!("`{}`: {e}", f[3])))?;
        let im: f64 = f[4].parse().map_err(|e| perr(lineno, format!("`{}`: {e}", f[4])))?;
        let v = C64::new(re, im);
        if i >= m {
            return Err(perr(lineno, format!("configuration index {i} ≥ M = {m}")));
        }
        match f[0] {
            "A" => state.a[i] = v,
            "B" => state.b[i] = v,
            name => {
                let blk = Block::from_name(name).ok_or_else(|| perr(lineno, format!("unknown block `{name}`")))?;
                let mut z = state.block_mut(blk);
                if k >= z.ncols() {
                    return Err(perr(lineno, format!("mode index {k} out of range for block {name}")));
                }
                z[[i, k]] = v;
            }
        }
        seen += 1;
    }
    if seen != state.parameter_count() {
        return Err(perr(0, format!("expected {} parameters, found {seen}", state.parameter_count())));
    }
    Ok(state)
}
