//! The Stein equation `w f(w) - Σ_k k λ(k) f(w+k) = h(w) - E h(Z)` for
//! indicator test functions `h = 𝟙_A`, and analytic bounds on its solutions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{cp_pmf_to_tail, DiscreteDist, ParamVector};
use crate::error::{domain, Error, Result};

/// Tail mass at which `E h(Z)` is truncated.
pub const EXPECTATION_TAIL: f64 = 1e-14;

/// Tolerance on the `w = 0` line of the equation.
pub const RESIDUAL_TOL: f64 = 1e-10;

const MAX_HORIZON: usize = 1 << 20;

/// A subset `A ⊆ ℕ`, either finite or with finite complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorSet {
    Finite(BTreeSet<u64>),
    Cofinite(BTreeSet<u64>),
}

impl IndicatorSet {
    /// `A = ℕ`, i.e. `h ≡ 1`.
    pub fn all() -> Self {
        IndicatorSet::Cofinite(BTreeSet::new())
    }

    pub fn finite(points: impl IntoIterator<Item = u64>) -> Self {
        IndicatorSet::Finite(points.into_iter().collect())
    }

    /// `{0, …, k}`.
    pub fn at_most(k: u64) -> Self {
        IndicatorSet::Finite((0..=k).collect())
    }

    pub fn contains(&self, w: u64) -> bool {
        match self {
            IndicatorSet::Finite(s) => s.contains(&w),
            IndicatorSet::Cofinite(s) => !s.contains(&w),
        }
    }

    /// Largest explicitly listed point (the set is eventually constant beyond).
    pub fn last_listed(&self) -> u64 {
        match self {
            IndicatorSet::Finite(s) | IndicatorSet::Cofinite(s) => s.iter().next_back().copied().unwrap_or(0),
        }
    }

    /// `P(Z ∈ A)` for a table whose tail lies beyond every listed point.
    pub fn probability(&self, dist: &DiscreteDist) -> f64 {
        match self {
            IndicatorSet::Finite(s) => s.iter().map(|&w| dist.prob(w as usize)).sum(),
            IndicatorSet::Cofinite(s) => 1.0 - s.iter().map(|&w| dist.prob(w as usize)).sum::<f64>(),
        }
    }
}

/// A solution `f` of the Stein equation on `0..=w_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinSolution {
    /// `f(0), …, f(w_max)`, with `f(0) := f(1)`.
    pub values: Vec<f64>,
    pub lambda: ParamVector,
    pub h_set: IndicatorSet,
    /// `E h(Z(λ))`.
    pub expectation: f64,
    /// Truncation point beyond which `f ≡ 0` was imposed.
    pub horizon: usize,
    /// Largest absolute residual over `w = 0..=w_max - K`.
    pub residual: f64,
}

impl SteinSolution {
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_abs_diff(&self) -> f64 {
        self.values.windows(2).fold(0.0, |m, w| m.max((w[1] - w[0]).abs()))
    }

    /// `f(w)` for `w <= w_max`.
    pub fn at(&self, w: usize) -> Option<f64> {
        self.values.get(w).copied()
    }
}

fn residual_at(f: &[f64], weights: &[f64], h: f64, eh: f64, w: usize) -> f64 {
    let fw = |i: usize| f.get(i).copied().unwrap_or(0.0);
    let shift: f64 = weights.iter().enumerate().map(|(i, kl)| kl * fw(w + i + 1)).sum();
    let lhs = if w == 0 { 0.0 } else { w as f64 * fw(w) };
    (lhs - shift - (h - eh)).abs()
}

/// Solves the Stein equation for `h = 𝟙_A` by backward substitution from a
/// horizon beyond which `f` is set to zero.
///
/// The equations for `w >= 1` determine `f(1), f(2), …`; the `w = 0` line
/// `-Σ_k k λ(k) f(k) = h(0) - E h(Z)` is not used by the recursion and serves
/// as the accuracy check. When it fails, the horizon is doubled.
pub fn stein_solve(lambda: &ParamVector, h_set: &IndicatorSet, w_max: usize) -> Result<SteinSolution> {
    let k_support = lambda.support();
    if w_max < 2 * k_support.max(1) {
        return domain(format!("w_max = {w_max} must be at least 2·K = {}", 2 * k_support));
    }
    if lambda.total() > 700.0 {
        return domain("Σλ > 700 underflows e^{-Σλ}");
    }
    let dist = cp_pmf_to_tail(lambda, EXPECTATION_TAIL);
    let last = h_set.last_listed() as usize;
    let dist = if dist.len() <= last { super::cp_pmf(lambda, last + 1) } else { dist };
    let eh = h_set.probability(&dist);
    let weights: Vec<f64> = (1..=k_support).map(|k| k as f64 * lambda.rate(k)).collect();

    let mut horizon = w_max
        .max(dist.len() + k_support)
        .max(last + k_support + 1)
        .max((4.0 * lambda.mean()) as usize + 50);
    loop {
        let mut f = vec![0.0; horizon + 1];
        for w in (1..=horizon).rev() {
            let h = if h_set.contains(w as u64) { 1.0 } else { 0.0 };
            let shift: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, kl)| kl * f.get(w + i + 1).copied().unwrap_or(0.0))
                .sum();
            f[w] = (h - eh + shift) / w as f64;
        }
        f[0] = f[1];
        let h0 = if h_set.contains(0) { 1.0 } else { 0.0 };
        let zero_line = residual_at(&f, &weights, h0, eh, 0);
        if zero_line <= RESIDUAL_TOL {
            let mut residual = zero_line;
            for w in 1..=w_max.saturating_sub(k_support) {
                let h = if h_set.contains(w as u64) { 1.0 } else { 0.0 };
                residual = residual.max(residual_at(&f, &weights, h, eh, w));
            }
            f.truncate(w_max + 1);
            return Ok(SteinSolution {
                values: f,
                lambda: lambda.clone(),
                h_set: h_set.clone(),
                expectation: eh,
                horizon,
                residual,
            });
        }
        if horizon >= MAX_HORIZON {
            return Err(Error::Numeric {
                message: format!("Stein solver did not meet tolerance at horizon {horizon}"),
                residual: zero_line,
            });
        }
        horizon *= 2;
    }
}

/// Analytic bounds on `sup|f|` and `sup|Δf|` over all indicator test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HBounds {
    pub h0: f64,
    pub h1: f64,
    /// Whether the sharper `λ(1) - 2λ(2)` bound entered `h1`.
    pub refined: bool,
}

/// Whether `k λ(k)` is nonincreasing in `k`.
pub fn is_size_biased_monotone(lambda: &ParamVector) -> bool {
    (1..lambda.support()).all(|k| k as f64 * lambda.rate(k) >= (k + 1) as f64 * lambda.rate(k + 1))
}

/// `H₀, H₁ ≤ min{1/λ(1), 1}·e^{Σλ}`.
///
/// When `d = λ(1) - 2λ(2) > 0` and `k λ(k)` is nonincreasing, also
/// `H₁ ≤ (1/d)(1/(4d) + log⁺(2d)) ∧ 1`, and the smaller value is returned.
/// Without monotonicity the sharper bound can fail (e.g. `λ = (0.06, 0.012,
/// 0.146, 0.008)` has `sup|Δf| ≈ 1.07`), so it is not applied.
pub fn h_bounds_analytic(lambda: &ParamVector) -> HBounds {
    let l1 = lambda.rate(1);
    let first = if l1 > 0.0 { (1.0 / l1).min(1.0) } else { 1.0 } * lambda.total().exp();
    let d = l1 - 2.0 * lambda.rate(2);
    if d > 0.0 && is_size_biased_monotone(lambda) {
        let second = ((1.0 / d) * (1.0 / (4.0 * d) + (2.0 * d).ln().max(0.0))).min(1.0);
        HBounds {
            h0: first,
            h1: first.min(second),
            refined: second < first,
        }
    } else {
        HBounds {
            h0: first,
            h1: first,
            refined: false,
        }
    }
}

/// The sharper `H₁` candidate applied whenever `λ(1) > 2λ(2)`, without the
/// monotonicity check. Exposed for diagnostics only.
pub fn h1_refined_unchecked(lambda: &ParamVector) -> Option<f64> {
    let d = lambda.rate(1) - 2.0 * lambda.rate(2);
    (d > 0.0).then(|| ((1.0 / d) * (1.0 / (4.0 * d) + (2.0 * d).ln().max(0.0))).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compound_poisson::cp_pmf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_h_has_zero_solution() {
        let lambda = ParamVector::new(vec![0.5, 0.25]).unwrap();
        let sol = stein_solve(&lambda, &IndicatorSet::all(), 30).unwrap();
        assert!(sol.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn zero_line_by_hand() {
        let lambda = ParamVector::poisson(1.0).unwrap();
        let sol = stein_solve(&lambda, &IndicatorSet::finite([0]), 30).unwrap();
        assert_abs_diff_eq!(sol.values[1], (-1.0f64).exp() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.values[1], -0.632121, epsilon = 1e-6);
        assert_eq!(sol.values[0], sol.values[1]);
    }

    #[test]
    fn residuals_by_substitution() {
        let lambda = ParamVector::new(vec![0.5, 0.25]).unwrap();
        let sol = stein_solve(&lambda, &IndicatorSet::finite([0, 1]), 40).unwrap();
        let eh = cp_pmf(&lambda, 1).pmf.iter().sum::<f64>();
        assert_abs_diff_eq!(sol.expectation, eh, epsilon = 1e-15);
        let f = &sol.values;
        for w in 0..=38 {
            let h = if w <= 1 { 1.0 } else { 0.0 };
            let lhs = w as f64 * f[w] - 0.5 * f[w + 1] - 0.5 * f[w + 2];
            let lhs = if w == 0 { -0.5 * f[1] - 0.5 * f[2] } else { lhs };
            assert!((lhs - (h - eh)).abs() < 1e-10, "w={w}");
        }
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn stein_identity_under_z() {
        let lambda = ParamVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        let sol = stein_solve(&lambda, &IndicatorSet::finite([1, 3, 4]), 80).unwrap();
        let z = cp_pmf(&lambda, 60);
        let f = |w: usize| sol.values[w];
        let lhs: f64 = (0..=60)
            .map(|w| {
                z.pmf[w] * (w as f64 * f(w) - (1..=3).map(|k| k as f64 * lambda.rate(k) * f(w + k)).sum::<f64>())
            })
            .sum();
        assert!(lhs.abs() < 1e-8, "{lhs}");
    }

    #[test]
    fn domain_errors() {
        let lambda = ParamVector::new(vec![0.5, 0.0, 0.0, 0.1]).unwrap();
        assert!(matches!(stein_solve(&lambda, &IndicatorSet::all(), 7), Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_bounds() {
        let e = std::f64::consts::E;
        let b = h_bounds_analytic(&ParamVector::poisson(1.0).unwrap());
        assert_abs_diff_eq!(b.h0, e, epsilon = 1e-15);
        let b = h_bounds_analytic(&ParamVector::new(vec![2.0, 0.5]).unwrap());
        assert_abs_diff_eq!(b.h1, 0.25 + 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.h0, 0.5 * 2.5f64.exp(), epsilon = 1e-12);
        assert!(b.refined);
        let b = h_bounds_analytic(&ParamVector::zero());
        assert_eq!((b.h0, b.h1), (1.0, 1.0));
        let b = h_bounds_analytic(&ParamVector::from_pairs([(2, 0.3)]).unwrap());
        assert_abs_diff_eq!(b.h0, 0.3f64.exp(), epsilon = 1e-15);
    }

    #[test]
    fn refined_bound_needs_monotone_size_bias() {
        let lambda = ParamVector::new(vec![0.060920143918358774, 0.011849575784702684, 0.14564518061919207, 0.007840441732086515]).unwrap();
        assert!(!is_size_biased_monotone(&lambda));
        assert_eq!(h1_refined_unchecked(&lambda), Some(1.0));
        let sol = stein_solve(&lambda, &IndicatorSet::finite([0, 2, 5, 6, 7, 8, 9, 13, 14, 17]), 60).unwrap();
        let mut worst = 0.0f64;
        for bits in 0u32..(1 << 12) {
            let set = IndicatorSet::finite((0..12u64).filter(|i| bits >> i & 1 == 1));
            worst = worst.max(stein_solve(&lambda, &set, 60).unwrap().sup_abs_diff());
        }
        assert!(worst.max(sol.sup_abs_diff()) > 1.0);
        assert!(worst <= h_bounds_analytic(&lambda).h1);
    }
}
