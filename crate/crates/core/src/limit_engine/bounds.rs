//! Moment terms and the explicit total-variation bound for deterministic
//! window sums.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::group::ShellTable;
use crate::mixing::residue_sum;

/// Hölder index `p` used for the boundary term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderIndex {
    One,
    Two,
    Infinity,
}

impl HolderIndex {
    pub const ALL: [HolderIndex; 3] = [HolderIndex::One, HolderIndex::Two, HolderIndex::Infinity];

    /// `(p - 1) / p`.
    pub fn exponent(self) -> f64 {
        match self {
            HolderIndex::One => 0.0,
            HolderIndex::Two => 0.5,
            HolderIndex::Infinity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTerms {
    pub mu: f64,
    pub eta: f64,
    pub gamma: f64,
    pub p: HolderIndex,
    pub ergodic: bool,
}

/// For a stationary law, `Q_n(φ) = q` is constant, so
/// `μ = |A_n| q`, `η = q` and `γ = |A_n|² q²` for every `p`.
pub fn moment_terms_ergodic(q_origin: f64, window_size: u64, p: HolderIndex) -> Result<MomentTerms> {
    if !(0.0..=1.0).contains(&q_origin) {
        return domain(format!("origin probability must lie in [0, 1], got {q_origin}"));
    }
    let a = window_size as f64;
    Ok(MomentTerms {
        mu: a * q_origin,
        eta: q_origin,
        gamma: a * a * q_origin * q_origin,
        p,
        ergodic: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    Theorem1,
    Mtkatahdin,
}

/// Assembled right-hand side of a total-variation bound.
///
/// For the randomized variant the four columns are, in order, the whole
/// `H₀` part and the `H₁` parts attached to `q²(|B_2b| + |B_2b \ B_b|)`,
/// `R_Ψ` and `R_ξ`; the `H₀` breakdown is kept in `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(with = "crate::limit_engine::serde_extended")]
    pub term_boundary: f64,
    #[serde(with = "crate::limit_engine::serde_extended")]
    pub term_gamma: f64,
    #[serde(with = "crate::limit_engine::serde_extended")]
    pub term_psi_residue: f64,
    #[serde(with = "crate::limit_engine::serde_extended")]
    pub term_xi_residue: f64,
    pub h0: f64,
    pub h1: f64,
    #[serde(with = "crate::limit_engine::serde_extended")]
    pub total: f64,
    pub variant: BoundVariant,
    pub p: Option<HolderIndex>,
    /// Last summand of each residue series, a truncation indicator.
    pub residue_last_terms: [f64; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Whether the bound carries information (`total < 1`).
    pub fn is_informative(&self) -> bool {
        self.total < 1.0
    }
}

/// `h₀ η δ^{(p-1)/p} + h₁ (2 (|B_2b| / |A_n|) γ + μ R_Ψ(b) + 2 μ R_ξ(b))`,
/// where `δ = |A_n B_b △ A_n| / |A_n|`. A zero defect contributes zero for
/// every `p`, matching the infimum over `p > 1`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_bound(
    moments: &MomentTerms,
    window_size: u64,
    shells: &ShellTable,
    psi: impl Fn(usize) -> f64,
    xi: impl Fn(usize) -> f64,
    b: usize,
    defect: f64,
    h0: f64,
    h1: f64,
    cutoff: usize,
) -> Result<BoundReport> {
    if !(defect >= 0.0) {
        return domain(format!("boundary defect must be non-negative, got {defect}"));
    }
    if window_size == 0 {
        return domain("window must be non-empty");
    }
    let b2 = shells.try_ball(2 * b)? as f64;
    let r_psi = residue_sum(shells, psi, b, 1, cutoff)?;
    let r_xi = residue_sum(shells, xi, b, 2, cutoff.max(2 * b))?;
    let boundary = if defect == 0.0 {
        0.0
    } else {
        h0 * moments.eta * defect.powf(moments.p.exponent())
    };
    let gamma = h1 * 2.0 * b2 / window_size as f64 * moments.gamma;
    let psi_term = h1 * moments.mu * r_psi.value;
    let xi_term = h1 * 2.0 * moments.mu * r_xi.value;
    Ok(BoundReport {
        term_boundary: boundary,
        term_gamma: gamma,
        term_psi_residue: psi_term,
        term_xi_residue: xi_term,
        h0,
        h1,
        total: boundary + gamma + psi_term + xi_term,
        variant: BoundVariant::Theorem1,
        p: Some(moments.p),
        residue_last_terms: [r_psi.last_term, r_xi.last_term],
        extra: BTreeMap::new(),
    })
}

/// Evaluates [`theorem1_bound`] at `p ∈ {1, 2, ∞}` and keeps the smallest.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_best(
    q_origin: f64,
    window_size: u64,
    shells: &ShellTable,
    psi: impl Fn(usize) -> f64 + Copy,
    xi: impl Fn(usize) -> f64 + Copy,
    b: usize,
    defect: f64,
    h0: f64,
    h1: f64,
    cutoff: usize,
) -> Result<BoundReport> {
    let mut best: Option<BoundReport> = None;
    for p in HolderIndex::ALL {
        let m = moment_terms_ergodic(q_origin, window_size, p)?;
        let r = theorem1_bound(&m, window_size, shells, psi, xi, b, defect, h0, h1, cutoff)?;
        if best.as_ref().is_none_or(|x| r.total < x.total) {
            best = Some(r);
        }
    }
    Ok(best.expect("three candidates"))
}
