//! `W_n` and Monte-Carlo estimates of the cluster rates `λ_n(k)`.

use serde::{Deserialize, Serialize};

use crate::compound_poisson::ParamVector;
use crate::error::{domain, Result};
use crate::exec::{add_counts, bump, fold_replicates};
use crate::group::FolnerWindow;
use crate::rng::{phase, SeedRecord};
use crate::simulators::{sample_window, FieldSample, MixtureAtom, SimulatorSpec};

/// Default cap on the number of reported rates.
pub const K_MAX_DEFAULT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    /// `λ̂(k)` for `k = 1..=rates.len()`.
    pub rates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub b: usize,
    pub n: usize,
    pub m_reps: u64,
    pub window_size: u64,
    /// `P̂(f(e) = 1)`.
    pub origin_rate: f64,
    /// `|A_n| / k · P̂(f(e) = 1, Σ_{B_b} f = k)` summed over `k > rates.len()`.
    pub truncated_mass: f64,
}

impl LambdaEstimate {
    pub fn params(&self) -> Result<ParamVector> {
        ParamVector::new(self.rates.clone())
    }

    /// `Σ_k k λ̂(k)` over the reported rates.
    pub fn size_biased_mass(&self) -> f64 {
        self.rates.iter().enumerate().map(|(i, r)| (i + 1) as f64 * r).sum()
    }
}

/// `W_n = Σ_{φ ∈ A_n} f_n(φX_n)`.
pub fn w_sum(sample: &FieldSample, window: &FolnerWindow) -> Result<u64> {
    let mut total = 0u64;
    for phi in &window.elements {
        total += sample.eval_f(phi)? as u64;
    }
    Ok(total)
}

/// `|A_n| = (2n + 1)^m` for a grid field.
pub fn grid_window_size(m: usize, n: usize) -> u64 {
    (2 * n as u64 + 1).pow(m as u32)
}

/// Estimates `λ_n(k) = (|A_n| / k) P(f(e) = 1, Σ_{B_b} f = k)` from
/// `m_reps` samples of the ball `B_b` (invariance shortcut for
/// stationary grid fields).
pub fn lambda_hat_ergodic(
    spec: &SimulatorSpec,
    n: usize,
    b: usize,
    k_max: usize,
    m_reps: u64,
    seed: u64,
) -> Result<LambdaEstimate> {
    let m = match spec {
        SimulatorSpec::IidField { m, .. } | SimulatorSpec::MdepField { m, .. } | SimulatorSpec::IsingField { m, .. } => *m,
        SimulatorSpec::ExchSeq { .. } => {
            return domain("exchangeable sequences are not ergodic; use lambda_hat_exchangeable")
        }
        _ => return domain("the ergodic estimator needs a stationary grid field"),
    };
    if b < 1 {
        return domain("ball radius b must be at least 1");
    }
    if m_reps == 0 {
        return domain("m_reps must be positive");
    }
    spec.check()?;
    let ball = (2 * b + 1).pow(m as u32);
    let origin = ball / 2;
    // counts[0]: f(e) = 0; counts[k]: f(e) = 1 and ball sum k
    let counts = fold_replicates(
        m_reps,
        Vec::new,
        |acc: &mut Vec<u64>, i| {
            let s = sample_window(spec, b, &SeedRecord::new(seed, phase::LAMBDA, i))?;
            let values = s.grid().expect("grid field").2;
            if values[origin] == 1 {
                bump(acc, values.iter().map(|&v| v as usize).sum());
            } else {
                bump(acc, 0);
            }
            Ok(())
        },
        add_counts,
    )?;
    let size = grid_window_size(m, n);
    let mf = m_reps as f64;
    let k_max = k_max.min(ball).max(1);
    let rate = |k: usize| size as f64 / k as f64 * counts.get(k).copied().unwrap_or(0) as f64 / mf;
    let rates: Vec<f64> = (1..=k_max).map(rate).collect();
    let stderr = (1..=k_max)
        .map(|k| {
            let p = counts.get(k).copied().unwrap_or(0) as f64 / mf;
            size as f64 / k as f64 * (p * (1.0 - p) / mf).sqrt()
        })
        .collect();
    let ones: u64 = counts.iter().skip(1).sum();
    Ok(LambdaEstimate {
        rates,
        stderr,
        b,
        n,
        m_reps,
        window_size: size,
        origin_rate: ones as f64 / mf,
        truncated_mass: (k_max + 1..counts.len()).map(rate).sum(),
    })
}

/// Limit rate and finite-`n` diagnostic for one mixture atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRate {
    pub theta: f64,
    pub weight: f64,
    /// The conditional limit rate `θ`.
    pub rate: f64,
    /// `n · P̂(X(1) = 1 | θ)`.
    pub empirical: f64,
    pub stderr: f64,
    pub draws: u64,
}

/// Per-atom Poisson rates of an exchangeable sequence.
pub fn lambda_hat_exchangeable(spec: &SimulatorSpec, n: usize, m_reps: u64, seed: u64) -> Result<Vec<AtomRate>> {
    let mixture: &[MixtureAtom] = match spec {
        SimulatorSpec::ExchSeq { mixture, .. } => mixture,
        _ => return domain("lambda_hat_exchangeable needs an exch_seq simulator"),
    };
    let spec = match spec {
        SimulatorSpec::ExchSeq { mixture, .. } => SimulatorSpec::ExchSeq {
            mixture: mixture.clone(),
            n,
        },
        _ => unreachable!(),
    };
    spec.check()?;
    let atoms = mixture.len();
    // per atom: [draws, ones]
    let counts = fold_replicates(
        m_reps,
        || vec![0u64; 2 * atoms],
        |acc, i| {
            let s = sample_window(&spec, 0, &SeedRecord::new(seed, phase::LAMBDA, i))?;
            let theta = s.latent().expect("exchangeable samples carry θ");
            let j = mixture.iter().position(|a| a.theta == theta).expect("drawn atom");
            acc[2 * j] += 1;
            acc[2 * j + 1] += s.sequence().expect("sequence")[0] as u64;
            Ok(())
        },
        add_counts,
    )?;
    Ok(mixture
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let (draws, ones) = (counts[2 * j], counts[2 * j + 1]);
            let p = if draws > 0 { ones as f64 / draws as f64 } else { 0.0 };
            AtomRate {
                theta: a.theta,
                weight: a.weight,
                rate: a.theta,
                empirical: n as f64 * p,
                stderr: if draws > 0 { n as f64 * (p * (1.0 - p) / draws as f64).sqrt() } else { f64::NAN },
                draws,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MetricGroup;
    use crate::simulators::{SampleData, FieldSample};

    fn grid_sample(m: usize, radius: usize, values: Vec<u8>) -> FieldSample {
        FieldSample {
            data: SampleData::Grid { m, radius, values },
            latent: None,
            region_radius: radius,
            seed_record: SeedRecord::new(0, 0, 0),
        }
    }

    #[test]
    fn w_sum_examples() {
        let g = MetricGroup::grid(2).unwrap();
        let w = g.folner_set(1).unwrap();
        assert_eq!(w_sum(&grid_sample(2, 1, vec![0; 9]), &w).unwrap(), 0);
        assert_eq!(w_sum(&grid_sample(2, 1, vec![1; 9]), &w).unwrap(), 9);
        let g1 = MetricGroup::grid(1).unwrap();
        let w1 = g1.folner_set(1).unwrap();
        assert_eq!(w_sum(&grid_sample(1, 1, vec![1, 0, 1]), &w1).unwrap(), 2);
        let big = g1.folner_set(2).unwrap();
        assert!(w_sum(&grid_sample(1, 1, vec![1, 0, 1]), &big).is_err());
    }

    #[test]
    fn iid_closed_form() {
        let n = 50;
        let size = grid_window_size(1, n) as f64;
        let p = 2.0 / size;
        let spec = SimulatorSpec::IidField { m: 1, p };
        let est = lambda_hat_ergodic(&spec, n, 2, 12, 400_000, 3).unwrap();
        let exact = size * p * (1.0 - p).powi(4);
        assert!((exact - 1.846228).abs() < 1e-6, "{exact}");
        assert!((est.rates[0] - exact).abs() < 4.0 * est.stderr[0], "{} vs {exact}", est.rates[0]);
        assert_eq!(est.rates.len(), 5);
        // mass identity on shared samples
        assert!((est.size_biased_mass() - size * est.origin_rate).abs() < 1e-9);
    }

    #[test]
    fn zero_rates_and_errors() {
        let spec = SimulatorSpec::IidField { m: 2, p: 0.0 };
        let est = lambda_hat_ergodic(&spec, 5, 1, 12, 200, 1).unwrap();
        assert!(est.rates.iter().all(|&r| r == 0.0));
        assert_eq!(est.rates.len(), 9);
        assert!(lambda_hat_ergodic(&spec, 5, 0, 12, 200, 1).is_err());
        let exch = SimulatorSpec::ExchSeq {
            mixture: vec![MixtureAtom { theta: 1.0, weight: 1.0 }],
            n: 10,
        };
        assert!(lambda_hat_ergodic(&exch, 5, 1, 12, 200, 1).is_err());
    }

    #[test]
    fn exchangeable_rates() {
        let spec = SimulatorSpec::ExchSeq {
            mixture: vec![
                MixtureAtom { theta: 1.0, weight: 0.5 },
                MixtureAtom { theta: 3.0, weight: 0.5 },
            ],
            n: 50,
        };
        let rates = lambda_hat_exchangeable(&spec, 50, 40_000, 4).unwrap();
        for r in &rates {
            assert_eq!(r.rate, r.theta);
            assert!((r.empirical - r.theta).abs() < 4.0 * r.stderr, "{r:?}");
        }
        let zero = SimulatorSpec::ExchSeq {
            mixture: vec![MixtureAtom { theta: 0.0, weight: 1.0 }],
            n: 20,
        };
        let r = lambda_hat_exchangeable(&zero, 20, 100, 1).unwrap();
        assert_eq!(r[0].rate, 0.0);
        assert_eq!(r[0].empirical, 0.0);
    }
}
