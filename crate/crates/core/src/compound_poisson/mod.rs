//! Compound Poisson laws `Z(λ)`, their probability tables and samplers, the
//! total-variation metric, and the Stein machinery in [`stein`].
//!
//! `Z(λ)` is the sum of `N ~ Poisson(Σ_k λ(k))` independent cluster sizes
//! with law `P(M = k) = λ(k) / Σ_j λ(j)`.

pub mod stein;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use stein::{
    h1_refined_unchecked, h_bounds_analytic, is_size_biased_monotone, stein_solve, HBounds, IndicatorSet, SteinSolution,
};

/// Normalization tolerance accepted by [`DiscreteDist::new`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Rates `λ(1), …, λ(K)` of a compound Poisson law (index `k - 1` holds `λ(k)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector {
    rates: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(rates: Vec<f64>) -> Result<Self> {
        Self::new(rates)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.rates
    }
}

impl ParamVector {
    /// Builds from `[λ(1), λ(2), …]`. Trailing zeros are dropped.
    pub fn new(mut rates: Vec<f64>) -> Result<Self> {
        if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
            return domain(format!("λ({}) = {r} is not a finite non-negative rate", i + 1));
        }
        while rates.last() == Some(&0.0) {
            rates.pop();
        }
        Ok(Self { rates })
    }

    /// Builds from `(k, λ(k))` pairs with `k >= 1`; repeated `k` accumulate.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut rates = Vec::new();
        for (k, r) in pairs {
            if k == 0 {
                return domain("cluster sizes start at 1");
            }
            if rates.len() < k {
                rates.resize(k, 0.0);
            }
            rates[k - 1] += r;
        }
        Self::new(rates)
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Self::new(vec![rate])
    }

    pub fn zero() -> Self {
        Self { rates: Vec::new() }
    }

    /// `λ(k)`, zero outside the support.
    pub fn rate(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.rates.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Largest `k` with `λ(k) > 0` (0 for the zero vector).
    pub fn support(&self) -> usize {
        self.rates.len()
    }

    /// `Σ_k λ(k)`, the Poisson rate of the cluster count.
    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `Σ_k k λ(k) = E[Z(λ)]`.
    pub fn mean(&self) -> f64 {
        self.rates.iter().enumerate().map(|(i, r)| (i + 1) as f64 * r).sum()
    }

    /// `Σ_k k² λ(k) = Var[Z(λ)]`.
    pub fn variance(&self) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .map(|(i, r)| ((i + 1) * (i + 1)) as f64 * r)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rates.iter().map(|r| r * c).collect())
    }
}

/// A probability law on `{0, …, len-1}` plus residual mass beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    pub pmf: Vec<f64>,
    pub tail: f64,
}

impl DiscreteDist {
    pub fn new(pmf: Vec<f64>, tail: f64) -> Result<Self> {
        if pmf.iter().chain(std::iter::once(&tail)).any(|p| !(p.is_finite() && *p >= 0.0)) {
            return domain("probabilities must be finite and non-negative");
        }
        let total: f64 = pmf.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!("distribution sums to {total}, not 1"));
        }
        Ok(Self { pmf, tail })
    }

    pub fn point_mass(at: usize) -> Self {
        let mut pmf = vec![0.0; at + 1];
        pmf[at] = 1.0;
        Self { pmf, tail: 0.0 }
    }

    /// Empirical law of integer observations.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let m: u64 = counts.iter().sum();
        if m == 0 {
            return Err(Error::Estimation("empirical law of zero samples".into()));
        }
        let mut pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        Ok(Self { pmf, tail: 0.0 })
    }

    pub fn prob(&self, w: usize) -> f64 {
        self.pmf.get(w).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    /// Mean of the tabulated part (ignores the tail).
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(w, p)| w as f64 * p).sum()
    }

    /// Returns the law restricted to `{0, …, len-1}` with the rest folded
    /// into the tail.
    pub fn truncated(&self, len: usize) -> Self {
        if len >= self.pmf.len() {
            return self.clone();
        }
        let folded: f64 = self.pmf[len..].iter().sum();
        Self {
            pmf: self.pmf[..len].to_vec(),
            tail: self.tail + folded,
        }
    }
}

/// Probability table of `Z(λ)` on `0..=k_max` by the Panjer recursion
/// `w p(w) = Σ_k k λ(k) p(w - k)`.
pub fn cp_pmf(lambda: &ParamVector, k_max: usize) -> DiscreteDist {
    let mut pmf = vec![0.0; k_max + 1];
    pmf[0] = (-lambda.total()).exp();
    let weights: Vec<f64> = (1..=lambda.support()).map(|k| k as f64 * lambda.rate(k)).collect();
    for w in 1..=k_max {
        let mut s = 0.0;
        for (i, kl) in weights.iter().enumerate().take(w) {
            s += kl * pmf[w - i - 1];
        }
        pmf[w] = s / w as f64;
    }
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    DiscreteDist { pmf, tail }
}

/// `cp_pmf` extended until the residual tail falls below `tail_tol`.
pub fn cp_pmf_to_tail(lambda: &ParamVector, tail_tol: f64) -> DiscreteDist {
    let mut k_max = (4.0 * lambda.mean() + 20.0 + lambda.support() as f64) as usize;
    loop {
        let d = cp_pmf(lambda, k_max);
        if d.tail < tail_tol || k_max > 1 << 22 {
            return d;
        }
        k_max *= 2;
    }
}

/// Draws from `Z(λ)`; preprocesses the cluster-size law once.
#[derive(Debug, Clone)]
pub struct CpSampler {
    count: Option<Poisson<f64>>,
    sizes: Option<WeightedIndex<f64>>,
}

impl CpSampler {
    pub fn new(lambda: &ParamVector) -> Self {
        if lambda.is_zero() {
            return Self {
                count: None,
                sizes: None,
            };
        }
        Self {
            count: Some(Poisson::new(lambda.total()).expect("positive finite rate")),
            sizes: Some(WeightedIndex::new(lambda.rates().iter().copied()).expect("non-negative weights")),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let (Some(count), Some(sizes)) = (&self.count, &self.sizes) else {
            return 0;
        };
        let n = count.sample(rng) as u64;
        (0..n).map(|_| sizes.sample(rng) as u64 + 1).sum()
    }
}

/// One draw from `Z(λ)`.
pub fn cp_sample<R: Rng + ?Sized>(lambda: &ParamVector, rng: &mut R) -> u64 {
    CpSampler::new(lambda).sample(rng)
}

/// Total-variation distance `sup_A |P(A) - Q(A)|` for laws on `ℕ`.
///
/// Both tables are cut to their common length, folding the excess of the
/// longer one into its tail, so the result is exact whenever the shorter law
/// has no tail mass.
pub fn tv_distance(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    for d in [p, q] {
        let total: f64 = d.pmf.iter().sum::<f64>() + d.tail;
        if (total - 1.0).abs() > NORMALIZATION_TOL || d.pmf.iter().any(|x| *x < 0.0) || d.tail < 0.0 {
            return domain(format!("tv_distance needs normalized laws (mass {total})"));
        }
    }
    let len = p.len().min(q.len());
    let (p, q) = (p.truncated(len), q.truncated(len));
    let body: f64 = p.pmf.iter().zip(&q.pmf).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * (body + (p.tail - q.tail).abs())).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Law of `Σ_{i≤N} M_i` by explicit convolution over `N ≤ n_max`.
    pub(crate) fn convolution_oracle(lambda: &ParamVector, w_max: usize, n_max: usize) -> Vec<f64> {
        let total = lambda.total();
        let mut out = vec![0.0; w_max + 1];
        if total == 0.0 {
            out[0] = 1.0;
            return out;
        }
        let cluster: Vec<f64> = (0..=w_max).map(|k| lambda.rate(k) / total).collect();
        let mut conv = vec![0.0; w_max + 1];
        conv[0] = 1.0;
        let mut poisson = (-total).exp();
        for n in 0..=n_max {
            for w in 0..=w_max {
                out[w] += poisson * conv[w];
            }
            let mut next = vec![0.0; w_max + 1];
            for (w, c) in conv.iter().enumerate() {
                for (k, m) in cluster.iter().enumerate().skip(1) {
                    if w + k <= w_max {
                        next[w + k] += c * m;
                    }
                }
            }
            conv = next;
            poisson *= total / (n + 1) as f64;
        }
        out
    }

    #[test]
    fn poisson_special_case() {
        let d = cp_pmf(&ParamVector::poisson(0.7).unwrap(), 10);
        assert_abs_diff_eq!(d.pmf[0], 0.496585, epsilon = 1e-6);
        let mut fact = 1.0;
        for j in 0..=10 {
            if j > 0 {
                fact *= j as f64;
            }
            assert_abs_diff_eq!(d.pmf[j], (-0.7f64).exp() * 0.7f64.powi(j as i32) / fact, epsilon = 1e-15);
        }
    }

    #[test]
    fn parity() {
        let d = cp_pmf(&ParamVector::from_pairs([(2, 0.5)]).unwrap(), 9);
        for w in (1..=9).step_by(2) {
            assert_eq!(d.pmf[w], 0.0);
        }
    }

    #[test]
    fn two_point_cluster_law() {
        let lambda = ParamVector::new(vec![0.5, 0.25]).unwrap();
        let d = cp_pmf(&lambda, 20);
        let oracle = convolution_oracle(&lambda, 20, 30);
        for w in 0..=20 {
            assert_abs_diff_eq!(d.pmf[w], oracle[w], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(d.pmf.iter().sum::<f64>() + d.tail, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_rates() {
        assert!(matches!(ParamVector::new(vec![0.1, -0.2]), Err(Error::Domain(_))));
        assert!(matches!(ParamVector::new(vec![f64::NAN]), Err(Error::Domain(_))));
        assert!(serde_json::from_str::<ParamVector>("[1.0, -1.0]").is_err());
        assert_eq!(ParamVector::new(vec![1.0, 0.0, 0.0]).unwrap().support(), 1);
    }

    #[test]
    fn sampler_moments() {
        let mut rng = substream(1, 0, 0);
        let zero = ParamVector::zero();
        assert!((0..100).all(|_| cp_sample(&zero, &mut rng) == 0));

        let pois = CpSampler::new(&ParamVector::poisson(2.0).unwrap());
        let m = 100_000;
        let mean = (0..m).map(|_| pois.sample(&mut rng)).sum::<u64>() as f64 / m as f64;
        assert!((mean - 2.0).abs() < 0.02, "{mean}");

        let mixed = CpSampler::new(&ParamVector::new(vec![0.5, 0.25]).unwrap());
        let mean = (0..m).map(|_| mixed.sample(&mut rng)).sum::<u64>() as f64 / m as f64;
        // Var Z = Σ k² λ(k) = 1.5
        assert!((mean - 1.0).abs() < 4.0 * (1.5f64 / m as f64).sqrt(), "{mean}");
    }

    #[test]
    fn sampler_matches_pmf() {
        let lambda = ParamVector::new(vec![0.5, 0.25, 0.1]).unwrap();
        let sampler = CpSampler::new(&lambda);
        let m = 1_000_000usize;
        let mut rng = substream(2, 0, 0);
        let mut counts = vec![0u64; 64];
        for _ in 0..m {
            let w = sampler.sample(&mut rng) as usize;
            counts[w.min(63)] += 1;
        }
        let d = cp_pmf(&lambda, 62);
        for w in 0..=20 {
            let p = d.pmf[w];
            let se = (p * (1.0 - p) / m as f64).sqrt();
            let phat = counts[w] as f64 / m as f64;
            assert!((phat - p).abs() <= 4.0 * se + 1e-12, "w={w}: {phat} vs {p}");
        }
    }

    #[test]
    fn tv_examples() {
        let p = cp_pmf(&ParamVector::new(vec![0.3, 0.2]).unwrap(), 40);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&DiscreteDist::point_mass(0), &DiscreteDist::point_mass(1)).unwrap(), 1.0);
        let bern = DiscreteDist::new(vec![0.5, 0.5], 0.0).unwrap();
        assert_abs_diff_eq!(tv_distance(&bern, &DiscreteDist::point_mass(0)).unwrap(), 0.5);
        let bad = DiscreteDist { pmf: vec![0.5, 0.4], tail: 0.0 };
        assert!(matches!(tv_distance(&bad, &bern), Err(Error::Domain(_))));
        assert!(DiscreteDist::new(vec![0.5, 0.4], 0.0).is_err());
    }

    fn arb_lambda() -> impl Strategy<Value = ParamVector> {
        proptest::collection::vec(0.0f64..1.0, 1..=4).prop_map(|v| {
            let s: f64 = v.iter().sum();
            let scale = if s > 4.0 { 4.0 / s } else { 1.0 };
            ParamVector::new(v.into_iter().map(|x| x * scale).collect()).unwrap()
        })
    }

    fn normalize(v: Vec<f64>) -> DiscreteDist {
        let s: f64 = v.iter().sum::<f64>() + 1e-3;
        let pmf: Vec<f64> = v.iter().map(|x| x / s).collect();
        let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
        DiscreteDist { pmf, tail }
    }

    fn arb_triple() -> impl Strategy<Value = (DiscreteDist, DiscreteDist, DiscreteDist)> {
        (1usize..8).prop_flat_map(|n| {
            let v = || proptest::collection::vec(0.0f64..1.0, n).prop_map(normalize);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn panjer_matches_convolution(lambda in arb_lambda()) {
            let d = cp_pmf(&lambda, 40);
            let oracle = convolution_oracle(&lambda, 40, 60);
            for w in 0..=40 {
                prop_assert!((d.pmf[w] - oracle[w]).abs() <= 1e-12);
            }
        }

        #[test]
        fn tv_metric_axioms((p, q, r) in arb_triple()) {
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((pq - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
        }
    }
}
