//! Ψ- and ξ-mixing: Monte-Carlo lower bounds over a finite event
//! dictionary, analytic envelopes for the built-in simulators, and the
//! residue sums `R_Ψ`, `R_ξ`.
//!
//! The estimators sample the structure on a box around the origin. Origin
//! events are measurable from `f(e)` (Ψ) or from `(f(e), Σ_{B_b} f)` (ξ);
//! far events live on the box `G` of radius `w_cap` centred at
//! `(t + w_cap, 0, …, 0)`, whose nearest point lies at distance `t`.
//!
//! For every admissible pair the statistic is `|P̂(B|A) − P̂(B)|` and the
//! reported value is the maximum. The reported standard error is the
//! largest per-pair standard error among admissible pairs, so a pair with
//! a small sample cannot hide behind a tight pair when the estimate is
//! compared against `k · mc_stderr`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::fold_replicates;
use crate::group::ShellTable;
use crate::rng::{phase, SeedRecord};
use crate::simulators::{dobrushin_rho, grid_index, sample_window, SimulatorSpec};

/// Templates of origin and far events, with their size caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDictionary {
    /// Largest ball sum `k` in `{f(e) = 1, Σ_{B_b} f = k}`.
    pub k_cap: usize,
    /// Radius of the far window `G`; also caps the window-sum events.
    pub w_cap: usize,
    /// Include the per-site events `{f(ψ) = 1}`, `ψ ∈ G`.
    pub site_events: bool,
    /// Include the window-sum events `{Σ_G f = j}`, `j ≤ k_cap`.
    pub sum_events: bool,
    /// Pairs whose origin event (or its complement) has fewer samples are
    /// skipped.
    pub min_count: u64,
}

impl Default for EventDictionary {
    fn default() -> Self {
        Self {
            k_cap: 6,
            w_cap: 3,
            site_events: true,
            sum_events: true,
            min_count: 30,
        }
    }
}

impl EventDictionary {
    /// Number of far events on a window of `window_len` sites.
    fn b_len(&self, window_len: usize) -> usize {
        let sites = if self.site_events { window_len } else { 0 };
        let sums = if self.sum_events { self.k_cap + 1 } else { 0 };
        sites + sums
    }

    /// Number of origin events; ξ adds one event per ball sum `0..=cap`.
    fn a_len(&self, ball_len: Option<usize>) -> usize {
        2 + ball_len.map_or(0, |n| self.k_cap.min(n) + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub t: usize,
    pub value: f64,
    pub mc_stderr: f64,
    pub n_samples: u64,
}

/// How per-atom coefficients of a latent mixture are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpNorm {
    L1,
    L2,
    Max,
}

/// What one replicate contributes: the origin value, the origin ball sum
/// (ξ only) and the far-window values.
struct Observation {
    origin: u8,
    ball_sum: Option<usize>,
    far: Vec<u8>,
}

/// Integer tallies for one latent atom.
#[derive(Debug, Clone, PartialEq)]
struct Tally {
    m: u64,
    a_len: usize,
    b_len: usize,
    n_a: Vec<u64>,
    n_b: Vec<u64>,
    n_ab: Vec<u64>,
}

impl Tally {
    fn new(a_len: usize, b_len: usize) -> Self {
        Self {
            m: 0,
            a_len,
            b_len,
            n_a: vec![0; a_len],
            n_b: vec![0; b_len],
            n_ab: vec![0; a_len * b_len],
        }
    }

    fn add(&mut self, dict: &EventDictionary, obs: &Observation) {
        self.m += 1;
        let mut a_hits = [0usize; 2];
        a_hits[0] = if obs.origin == 1 { 0 } else { 1 };
        let extra = match obs.ball_sum {
            Some(k) if obs.origin == 1 && 2 + k < self.a_len => Some(2 + k),
            _ => None,
        };
        let mut b_hits = Vec::new();
        if dict.site_events {
            b_hits.extend(obs.far.iter().enumerate().filter(|(_, &v)| v == 1).map(|(i, _)| i));
        }
        if dict.sum_events {
            let s: usize = obs.far.iter().map(|&v| v as usize).sum();
            if s <= dict.k_cap {
                let offset = if dict.site_events { obs.far.len() } else { 0 };
                b_hits.push(offset + s);
            }
        }
        for a in std::iter::once(a_hits[0]).chain(extra) {
            self.n_a[a] += 1;
            for &b in &b_hits {
                self.n_ab[a * self.b_len + b] += 1;
            }
        }
        for &b in &b_hits {
            self.n_b[b] += 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.m += other.m;
        for (x, y) in self.n_a.iter_mut().zip(other.n_a) {
            *x += y;
        }
        for (x, y) in self.n_b.iter_mut().zip(other.n_b) {
            *x += y;
        }
        for (x, y) in self.n_ab.iter_mut().zip(other.n_ab) {
            *x += y;
        }
        self
    }

    /// `(value, stderr)` over admissible pairs, or `None` when no pair is
    /// admissible.
    fn evaluate(&self, min_count: u64) -> Result<Option<(f64, f64)>> {
        if self.n_a.iter().all(|&n| n == 0) {
            return Err(Error::Estimation("no origin event was observed".into()));
        }
        let m = self.m as f64;
        let mut best: Option<(f64, f64)> = None;
        for a in 0..self.a_len {
            let na = self.n_a[a];
            if na < min_count || self.m - na < min_count {
                continue;
            }
            let pi_a = na as f64 / m;
            for b in 0..self.b_len {
                let nb = self.n_b[b];
                if nb == 0 || nb == self.m {
                    continue;
                }
                let pb = nb as f64 / m;
                let value = (self.n_ab[a * self.b_len + b] as f64 / na as f64 - pb).abs();
                let se = (1.0 - pi_a) * (pb * (1.0 - pb) * (1.0 / na as f64 + 1.0 / (self.m - na) as f64)).sqrt();
                best = Some(match best {
                    None => (value, se),
                    Some((v, s)) => (v.max(value), s.max(se)),
                });
            }
        }
        Ok(best)
    }
}

/// Far window: box of radius `w` centred at `(t + w, 0, …)`, lexicographic.
fn far_window(m: usize, t: usize, w: usize) -> Vec<Vec<i64>> {
    let w = w as i64;
    let center = t as i64 + w;
    crate::group::box_points(m, w)
        .into_iter()
        .map(|mut c| {
            c[0] += center;
            c
        })
        .collect()
}

/// Where to look in one sample; precomputed per estimate.
enum Layout {
    Grid {
        radius: usize,
        ball: Option<Vec<usize>>,
        origin: usize,
        far: Vec<usize>,
    },
    Sequence {
        n: usize,
        b: Option<usize>,
        far: Vec<usize>,
    },
}

impl Layout {
    fn new(spec: &SimulatorSpec, b: Option<usize>, t: usize, dict: &EventDictionary) -> Result<Self> {
        let w = dict.w_cap;
        match spec {
            SimulatorSpec::IidField { m, .. } | SimulatorSpec::MdepField { m, .. } | SimulatorSpec::IsingField { m, .. } => {
                let radius = (t + 2 * w).max(b.unwrap_or(0));
                let at = |c: &[i64]| grid_index(c, radius).expect("inside the sampled box");
                let ball = b.map(|b| crate::group::box_points(*m, b as i64).iter().map(|c| at(c)).collect());
                Ok(Layout::Grid {
                    radius,
                    ball,
                    origin: at(&vec![0; *m]),
                    far: far_window(*m, t, w).iter().map(|c| at(c)).collect(),
                })
            }
            SimulatorSpec::ExchSeq { n, .. } => {
                let reach = t + 2 * w;
                if 2 * reach.max(b.unwrap_or(0)) + 1 > *n {
                    return domain(format!(
                        "sequence of length {n} is too short for separation {t} and window {w}"
                    ));
                }
                Ok(Layout::Sequence {
                    n: *n,
                    b,
                    far: (t..=t + 2 * w).collect(),
                })
            }
            _ => domain("mixing estimation supports grid fields and exchangeable sequences"),
        }
    }

    fn radius(&self) -> usize {
        match self {
            Layout::Grid { radius, .. } => *radius,
            Layout::Sequence { .. } => 0,
        }
    }

    fn observe(&self, values: &[u8]) -> Observation {
        match self {
            Layout::Grid { ball, origin, far, .. } => Observation {
                origin: values[*origin],
                ball_sum: ball.as_ref().map(|idx| idx.iter().map(|&i| values[i] as usize).sum()),
                far: far.iter().map(|&i| values[i]).collect(),
            },
            Layout::Sequence { n, b, far } => Observation {
                origin: values[0],
                ball_sum: b.map(|b| {
                    (-(b as i64)..=b as i64)
                        .map(|i| values[i.rem_euclid(*n as i64) as usize] as usize)
                        .sum()
                }),
                far: far.iter().map(|&i| values[i % n]).collect(),
            },
        }
    }
}

fn tally(
    spec: &SimulatorSpec,
    b: Option<usize>,
    t: usize,
    dict: &EventDictionary,
    m_reps: u64,
    seed: u64,
) -> Result<BTreeMap<u64, Tally>> {
    if t < 1 {
        return domain("separation t must be at least 1");
    }
    if m_reps == 0 {
        return domain("m_reps must be positive");
    }
    spec.check()?;
    let layout = Layout::new(spec, b, t, dict)?;
    let radius = layout.radius();
    let window_len = (2 * dict.w_cap + 1).pow(spec.grid_dim().unwrap_or(1) as u32);
    let ball_len = b.map(|b| (2 * b + 1).pow(spec.grid_dim().unwrap_or(1) as u32));
    let (a_len, b_len) = (dict.a_len(ball_len), dict.b_len(window_len));
    if b_len == 0 {
        return domain("event dictionary has no far events");
    }
    fold_replicates(
        m_reps,
        BTreeMap::new,
        |acc: &mut BTreeMap<u64, Tally>, i| {
            let sample = sample_window(spec, radius, &SeedRecord::new(seed, phase::MIXING, i))?;
            let values = sample.grid().map(|g| g.2).or_else(|| sample.sequence()).expect("layout checked");
            let key = sample.latent().map_or(0, f64::to_bits);
            acc.entry(key)
                .or_insert_with(|| Tally::new(a_len, b_len))
                .add(dict, &layout.observe(values));
            Ok(())
        },
        |mut x, y| {
            for (k, v) in y {
                let merged = match x.remove(&k) {
                    Some(prev) => prev.merge(v),
                    None => v,
                };
                x.insert(k, merged);
            }
            x
        },
    )
}

fn combine(t: usize, tallies: &BTreeMap<u64, Tally>, min_count: u64, norm: LpNorm) -> Result<MixingEstimate> {
    let total: u64 = tallies.values().map(|t| t.m).sum();
    let mut parts = Vec::new();
    for tally in tallies.values() {
        match tally.evaluate(min_count) {
            Ok(Some(vs)) => parts.push((tally.m as f64 / total as f64, vs)),
            Ok(None) | Err(Error::Estimation(_)) if tallies.len() > 1 => {}
            Ok(None) => {
                return Err(Error::Estimation(format!(
                    "no event pair has at least {min_count} samples on both sides"
                )))
            }
            Err(e) => return Err(e),
        }
    }
    if parts.is_empty() {
        return Err(Error::Estimation("no latent atom has an admissible event pair".into()));
    }
    let weight: f64 = parts.iter().map(|p| p.0).sum();
    let (value, mc_stderr) = match norm {
        LpNorm::Max => parts
            .iter()
            .fold((0.0f64, 0.0f64), |(v, s), (_, (pv, ps))| (v.max(*pv), s.max(*ps))),
        LpNorm::L1 => parts
            .iter()
            .fold((0.0, 0.0), |(v, s), (w, (pv, ps))| (v + w * pv / weight, s + w * ps / weight)),
        LpNorm::L2 => {
            let (v, s) = parts.iter().fold((0.0, 0.0), |(v, s), (w, (pv, ps))| {
                (v + w * pv * pv / weight, s + w * ps * ps / weight)
            });
            (v.sqrt(), s.sqrt())
        }
    };
    Ok(MixingEstimate {
        t,
        value,
        mc_stderr,
        n_samples: total,
    })
}

/// Estimated `Ψ(t)`. Latent-mixture simulators are conditioned on the
/// latent atom and combined with the max norm.
pub fn estimate_psi(
    spec: &SimulatorSpec,
    t: usize,
    dict: &EventDictionary,
    m_reps: u64,
    seed: u64,
) -> Result<MixingEstimate> {
    combine(t, &tally(spec, None, t, dict, m_reps, seed)?, dict.min_count, LpNorm::Max)
}

/// Estimated `ξ^b(t)`; requires `t ≥ 2b`.
pub fn estimate_xi(
    spec: &SimulatorSpec,
    b: usize,
    t: usize,
    dict: &EventDictionary,
    m_reps: u64,
    seed: u64,
) -> Result<MixingEstimate> {
    if t < 2 * b {
        return domain(format!("ξ needs t >= 2b, got t = {t}, b = {b}"));
    }
    combine(t, &tally(spec, Some(b), t, dict, m_reps, seed)?, dict.min_count, LpNorm::Max)
}

/// Conditional coefficient `‖Ψ(t | latent)‖_p` (or ξ when `b` is given)
/// for latent-mixture simulators, weighting atoms by their frequency.
pub fn estimate_conditional(
    spec: &SimulatorSpec,
    b: Option<usize>,
    t: usize,
    norm: LpNorm,
    dict: &EventDictionary,
    m_reps: u64,
    seed: u64,
) -> Result<MixingEstimate> {
    if !matches!(spec, SimulatorSpec::ExchSeq { .. }) {
        return domain("conditional mixing needs a latent-mixture simulator");
    }
    if let Some(b) = b {
        if t < 2 * b {
            return domain(format!("ξ needs t >= 2b, got t = {t}, b = {b}"));
        }
    }
    combine(t, &tally(spec, b, t, dict, m_reps, seed)?, dict.min_count, norm)
}

/// The Dobrushin envelope `ρ^t`.
pub fn analytic_markov_psi(rho: f64, t: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("rho must lie in (0, 1), got {rho}"));
    }
    Ok(rho.powi(t as i32))
}

/// Upper bound on `Ψ(t)` (`b = None`) or `ξ^b(t)` for a built-in simulator,
/// conditioned on the latent where there is one. Finite-range laws give
/// `0` beyond their range and the trivial `1` inside it.
pub fn analytic_mixing(spec: &SimulatorSpec, b: Option<usize>, t: usize) -> Result<f64> {
    let b = b.unwrap_or(0);
    let beyond = |range: usize| if t > range + b { 0.0 } else { 1.0 };
    match spec {
        SimulatorSpec::IidField { .. } => Ok(beyond(0)),
        SimulatorSpec::MdepField { w, .. } => Ok(beyond(w - 1)),
        SimulatorSpec::IsingField { m, beta, .. } => analytic_markov_psi(dobrushin_rho(*m, *beta), t).map_err(|_| {
            Error::Domain(format!(
                "Ising field outside the Dobrushin regime (2m·tanh β = {})",
                dobrushin_rho(*m, *beta)
            ))
        }),
        SimulatorSpec::ExchSeq { .. } => Ok(0.0),
        SimulatorSpec::CayleyPerc { d, .. } => Ok(beyond(2 * d)),
        SimulatorSpec::PlanarPoisson { delta, .. } => Ok(if t as f64 > 2.0 * delta + b as f64 { 0.0 } else { 1.0 }),
    }
}

/// A truncated residue sum and its last term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidueSum {
    pub value: f64,
    pub last_term: f64,
}

/// `Σ_{i = s·b}^{cutoff} |B_{i+1} \ B_i| · coeff(i)` with `s = start_multiplier`.
/// Shell `i` needs `|B_{i+1}|`, so `cutoff < shells.r_max`.
pub fn residue_sum(
    shells: &ShellTable,
    coeff: impl Fn(usize) -> f64,
    b: usize,
    start_multiplier: usize,
    cutoff: usize,
) -> Result<ResidueSum> {
    if !matches!(start_multiplier, 1 | 2) {
        return domain(format!("start multiplier must be 1 or 2, got {start_multiplier}"));
    }
    if cutoff >= shells.r_max {
        return domain(format!(
            "cutoff {cutoff} needs a shell table of radius > {cutoff}, have {}",
            shells.r_max
        ));
    }
    let mut out = ResidueSum {
        value: 0.0,
        last_term: 0.0,
    };
    for i in start_multiplier * b..=cutoff {
        let term = shells.shell_sizes[i] as f64 * coeff(i);
        out.value += term;
        out.last_term = term;
    }
    Ok(out)
}
