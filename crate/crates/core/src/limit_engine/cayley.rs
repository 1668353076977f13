//! Clique radius and rate for percolation on Cayley graphs.

use crate::error::{domain, resource, Result};
use crate::group::{MetricGroup, ShellTable};

/// Smallest `k ≥ 1` with
/// `(|𝒮||B_k| - (|𝒮| - 1)|B_k \ B_{k-1}|) / 2 ≥ -log|A_n| / log p`,
/// where `|𝒮|` counts the symmetric generating set.
pub fn cayley_dn(group: &MetricGroup, p: f64, window_size: u64, shells: &ShellTable) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    let s = match group.generators() {
        Some(g) => g.len() as f64,
        None => return domain("cayley_dn needs a fin_gen group"),
    };
    if window_size == 0 {
        return domain("window must be non-empty");
    }
    let rhs = -(window_size as f64).ln() / p.ln();
    for k in 1..=shells.r_max {
        let ball = shells.ball(k) as f64;
        let shell = (shells.ball(k) - shells.ball(k - 1)) as f64;
        if 0.5 * (s * ball - (s - 1.0) * shell) >= rhs {
            return Ok(k);
        }
    }
    resource(format!("no k <= {} satisfies the clique condition", shells.r_max))
}

/// `λ_n = p^{|𝒢_n|}`.
pub fn cayley_lambda(p: f64, edges: usize) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return domain(format!("p must lie in (0, 1], got {p}"));
    }
    Ok(p.powi(edges as i32))
}
