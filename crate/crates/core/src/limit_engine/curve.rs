//! Empirical laws of `W_n`, their distance to the compound-Poisson limit,
//! and the per-window pipeline behind a convergence curve.
//!
//! Replicate `i` of window `n` draws its field from `(seed, FIELD, i)` and
//! its random locations from `(seed, CURVE, i)`; the rate estimates use the
//! `LAMBDA`, `RANDOMIZED` and `SAMPLER` phases of the same seed, so `W_n`
//! and `λ̂` are independent.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bounds::{theorem1_best, BoundReport};
use super::cayley::{cayley_dn, cayley_lambda};
use super::lambda::{grid_window_size, lambda_hat_ergodic, lambda_hat_exchangeable, AtomRate, K_MAX_DEFAULT};
use super::randomized::{
    lambda_hat_randomized, mtkatahdin_bound, randomized_draw, sample_for_window, JRule, RandomizedBoundInputs,
    RandomizedSpec, SumWindow,
};
use crate::compound_poisson::{cp_pmf_to_tail, h_bounds_analytic, tv_distance, DiscreteDist, ParamVector};
use crate::error::{domain, Error, Result};
use crate::exec::{add_counts, bump, fold_replicates};
use crate::group::{GroupSpec, MetricGroup};
use crate::mixing::analytic_mixing;
use crate::rng::{phase, SeedRecord};
use crate::simulators::{
    dobrushin_rho, induced_subgraph_edges, ising_field_for_rarity, sample_window, PercolationGeometry,
    PercolationSample, SimulatorSpec,
};

/// Tail mass left off when tabulating `Z(λ)` for a distance.
const CP_TAIL: f64 = 1e-13;
/// Residue series stop once a shell term falls below this.
const RESIDUE_TERM_TOL: f64 = 1e-17;
const RESIDUE_MAX_CUTOFF: usize = 20_000;

/// Parameters of the randomized-sum mode as written in a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizedConfig {
    pub j: JRule,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default = "half")]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Deterministic,
    Randomized(RandomizedConfig),
}

/// `b_n`: one value for all windows, or one per window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BRule {
    Constant(usize),
    Table(Vec<usize>),
}

impl BRule {
    pub fn at(&self, index: usize) -> Result<usize> {
        match self {
            BRule::Constant(b) => Ok(*b),
            BRule::Table(t) => t
                .get(index)
                .copied()
                .ok_or_else(|| Error::Domain(format!("b_n table has no entry {index}"))),
        }
    }
}

/// Per-window adjustment of the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Scaling {
    /// Tune the site rarity so that `E[W_n]` equals the target.
    TargetMean { target_mean: f64 },
    /// Set the percolation clique radius `d` to `cayley_dn` for each window.
    CayleyDn,
}

/// Everything about an experiment except the window grid, replicate count
/// and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub simulator: SimulatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub mode: Mode,
    pub b_n: BRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Compare `W_n` against this fixed `Z(λ)` instead of `Z(λ̂)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ParamVector>,
    /// Replicates for `λ̂`; defaults to the run's `m_reps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_reps: Option<u64>,
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

impl Scenario {
    /// Appends one message per offending field.
    pub fn validate(&self, path: &str, errors: &mut Vec<String>) {
        if self.name.trim().is_empty() {
            errors.push(format!("{}: must not be empty", join(path, "name")));
        }
        self.simulator.validate(&join(path, "simulator"), errors);
        if let Some(g) = &self.group {
            let gpath = join(path, "group");
            g.validate(&gpath, errors);
            let consistent = match (&self.simulator, g) {
                (SimulatorSpec::CayleyPerc { group, .. }, g) => group == g,
                (s, GroupSpec::Grid { r }) => s.grid_dim() == Some(*r as usize),
                (SimulatorSpec::ExchSeq { .. }, GroupSpec::Sym { .. }) => true,
                _ => false,
            };
            if !consistent {
                errors.push(format!("{gpath}: does not match the simulator"));
            }
        }
        let bpath = join(path, "b_n");
        match &self.b_n {
            BRule::Constant(0) => errors.push(format!("{bpath}: must be at least 1")),
            BRule::Table(t) if t.is_empty() || t.contains(&0) => {
                errors.push(format!("{bpath}: entries must be at least 1"))
            }
            _ => {}
        }
        if let Mode::Randomized(r) = &self.mode {
            let mpath = join(path, "mode");
            r.j.validate(&format!("{mpath}.j"), errors);
            if !(r.spread.is_finite() && r.spread >= 1.0) {
                errors.push(format!("{mpath}.spread: must be at least 1, got {}", r.spread));
            }
            for (name, v) in [("alpha", r.alpha), ("beta", r.beta)] {
                if !(v > 0.0 && v < 1.0) {
                    errors.push(format!("{mpath}.{name}: must lie in (0, 1), got {v}"));
                }
            }
            if SumWindow::for_simulator(&self.simulator, 1).is_err() {
                errors.push(format!(
                    "{mpath}: randomized sums need a grid field or the planar process"
                ));
            }
        } else if matches!(self.simulator, SimulatorSpec::PlanarPoisson { .. }) {
            errors.push(format!(
                "{}: the planar process is only summed in randomized mode",
                join(path, "mode")
            ));
        }
        if let Some(s) = &self.scaling {
            let spath = join(path, "scaling");
            match (s, &self.simulator) {
                (Scaling::TargetMean { target_mean }, sim) => {
                    if !(target_mean.is_finite() && *target_mean > 0.0) {
                        errors.push(format!("{spath}.target_mean: must be positive, got {target_mean}"));
                    }
                    if matches!(sim, SimulatorSpec::ExchSeq { .. } | SimulatorSpec::CayleyPerc { .. }) {
                        errors.push(format!("{spath}: target_mean does not apply to this simulator"));
                    }
                }
                (Scaling::CayleyDn, SimulatorSpec::CayleyPerc { .. }) => {}
                (Scaling::CayleyDn, _) => errors.push(format!("{spath}: cayley_dn needs a cayley_perc simulator")),
            }
        }
        if let Some(0) = self.k_max {
            errors.push(format!("{}: must be at least 1", join(path, "k_max")));
        }
        if let Some(0) = self.lambda_reps {
            errors.push(format!(
                "{}: must be positive",
                join(path, "lambda_reps")
            ));
        }
    }
}

/// Empirical law of `W_n` as integer counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub counts: Vec<u64>,
    pub m: u64,
}

impl EmpiricalLaw {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let m = counts.iter().sum();
        Self { counts, m }
    }

    pub fn dist(&self) -> Result<DiscreteDist> {
        DiscreteDist::from_counts(&self.counts)
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().enumerate().map(|(w, &c)| w as f64 * c as f64).sum::<f64>() / self.m as f64
    }

    /// Binomial standard error of bin `w`.
    pub fn bin_stderr(&self, w: usize) -> f64 {
        let p = self.counts.get(w).copied().unwrap_or(0) as f64 / self.m as f64;
        (p * (1.0 - p) / self.m as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub stderr: f64,
}

/// `d_TV(P̂, Q)` with the delta-method standard error
/// `½ sd(s(W)) / √m`, `s(w) = sign(P̂(w) - Q(w))`.
pub fn tv_with_stderr(law: &EmpiricalLaw, reference: &DiscreteDist) -> Result<TvEstimate> {
    let p = law.dist()?;
    let tv = tv_distance(&p, reference)?;
    let mf = law.m as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (w, &c) in law.counts.iter().enumerate() {
        let sign = (p.prob(w) - reference.prob(w)).signum();
        let sign = if p.prob(w) == reference.prob(w) { 0.0 } else { sign };
        s1 += c as f64 / mf * sign;
        s2 += c as f64 / mf * sign * sign;
    }
    Ok(TvEstimate {
        tv,
        stderr: 0.5 * ((s2 - s1 * s1).max(0.0) / mf).sqrt(),
    })
}

/// How the window sum is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumMode {
    Deterministic,
    Randomized(RandomizedSpec),
}

/// Law of `W_n` over `m_reps` replicates. Deterministic sums run over the
/// whole window `A_n` (box, word ball or sequence).
pub fn empirical_w_dist(spec: &SimulatorSpec, n: usize, m_reps: u64, seed: u64, mode: &SumMode) -> Result<EmpiricalLaw> {
    if m_reps == 0 {
        return domain("m_reps must be positive");
    }
    spec.check()?;
    let counts = match (mode, spec) {
        (SumMode::Randomized(rspec), _) => {
            let window = SumWindow::for_simulator(spec, n)?;
            fold_replicates(
                m_reps,
                Vec::new,
                |acc: &mut Vec<u64>, i| {
                    let sample = sample_for_window(spec, &window, &SeedRecord::new(seed, phase::FIELD, i))?;
                    let mut rng = SeedRecord::new(seed, phase::CURVE, i).rng();
                    bump(acc, randomized_draw(&sample, &window, rspec, &mut rng)?.w as usize);
                    Ok(())
                },
                add_counts,
            )?
        }
        (SumMode::Deterministic, SimulatorSpec::CayleyPerc { group, p, d }) => {
            let g = MetricGroup::from_spec(group)?;
            let geometry = Arc::new(PercolationGeometry::new(&g, *d, n)?);
            fold_replicates(
                m_reps,
                Vec::new,
                |acc: &mut Vec<u64>, i| {
                    let mut rng = SeedRecord::new(seed, phase::FIELD, i).rng();
                    bump(acc, PercolationSample::sample_with(geometry.clone(), *p, &mut rng).w_sum() as usize);
                    Ok(())
                },
                add_counts,
            )?
        }
        (SumMode::Deterministic, SimulatorSpec::PlanarPoisson { .. }) => {
            return domain("the planar process is only summed in randomized mode")
        }
        (SumMode::Deterministic, _) => fold_replicates(
            m_reps,
            Vec::new,
            |acc: &mut Vec<u64>, i| {
                let s = sample_window(spec, n, &SeedRecord::new(seed, phase::FIELD, i))?;
                let values = s.grid().map(|g| g.2).or_else(|| s.sequence()).expect("grid or sequence");
                bump(acc, values.iter().map(|&v| v as usize).sum());
                Ok(())
            },
            add_counts,
        )?,
    };
    Ok(EmpiricalLaw::from_counts(counts))
}

/// Per-atom laws of `W_n` for an exchangeable sequence of length `n`.
fn empirical_w_by_atom(spec: &SimulatorSpec, m_reps: u64, seed: u64) -> Result<Vec<EmpiricalLaw>> {
    let mixture = match spec {
        SimulatorSpec::ExchSeq { mixture, .. } => mixture.clone(),
        _ => return domain("per-atom laws need an exch_seq simulator"),
    };
    let atoms = mixture.len();
    let per_atom = fold_replicates(
        m_reps,
        || vec![Vec::new(); atoms],
        |acc: &mut Vec<Vec<u64>>, i| {
            let s = sample_window(spec, 0, &SeedRecord::new(seed, phase::FIELD, i))?;
            let theta = s.latent().expect("latent");
            let j = mixture.iter().position(|a| a.theta == theta).expect("drawn atom");
            let w: usize = s.sequence().expect("sequence").iter().map(|&v| v as usize).sum();
            bump(&mut acc[j], w);
            Ok(())
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| add_counts(x, y)).collect(),
    )?;
    Ok(per_atom.into_iter().map(EmpiricalLaw::from_counts).collect())
}

/// One point of a convergence curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub window_size: u64,
    pub b_n: usize,
    /// The simulator after per-window scaling.
    pub simulator: SimulatorSpec,
    /// `λ̂(k)`, or one Poisson rate per mixture atom for exchangeable
    /// sequences, or the single rate `p^{|𝒢_n|}` for percolation.
    pub lambda: Vec<f64>,
    pub lambda_stderr: Vec<f64>,
    pub tv: f64,
    pub tv_stderr: f64,
    pub bound: Option<BoundReport>,
    pub w_counts: Vec<u64>,
    pub mean_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomRate>>,
    /// Named scalar side results (alternative distances, H constants, …).
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

/// The scenario's simulator with per-window scaling applied.
pub fn resolve_simulator(scenario: &Scenario, n: usize) -> Result<SimulatorSpec> {
    let mut sim = scenario.simulator.clone();
    if let SimulatorSpec::ExchSeq { n: len, .. } = &mut sim {
        *len = n;
    }
    match scenario.scaling {
        None => {}
        Some(Scaling::CayleyDn) => {
            if let SimulatorSpec::CayleyPerc { group, p, d } = &mut sim {
                let g = MetricGroup::from_spec(group)?;
                let size = g.ball_size(n as f64)?;
                *d = cayley_dn(&g, *p, size, &g.shell_table(n.max(1))?)?;
            }
        }
        Some(Scaling::TargetMean { target_mean }) => {
            let expected_j = match &scenario.mode {
                Mode::Deterministic => match &sim {
                    s if s.grid_dim().is_some() => grid_window_size(s.grid_dim().unwrap(), n) as f64,
                    _ => return domain("target_mean needs a grid field in deterministic mode"),
                },
                Mode::Randomized(r) => r.j.resolve(SumWindow::for_simulator(&sim, n)?.size()).moments().m1,
            };
            let q = target_mean / expected_j;
            if !(q > 0.0 && q < 1.0) {
                return domain(format!(
                    "target mean {target_mean} needs site probability {q} at n = {n}"
                ));
            }
            match &mut sim {
                SimulatorSpec::IidField { p, .. } => *p = q,
                SimulatorSpec::MdepField { m, w, tau } => *tau = 1.0 - q.powf(1.0 / (w.pow(*m as u32)) as f64),
                SimulatorSpec::IsingField { m, beta, h, .. } => *h = ising_field_for_rarity(*m, *beta, q)?,
                SimulatorSpec::PlanarPoisson { kappa, delta } => {
                    *kappa = -((n * n) as f64) * (1.0 - q).ln() / (std::f64::consts::PI * *delta * *delta)
                }
                _ => return domain("target_mean does not apply to this simulator"),
            }
        }
    }
    Ok(sim)
}

/// Site probability `P(f(e) = 1)` in closed form where available.
fn closed_form_marginal(sim: &SimulatorSpec) -> Option<f64> {
    sim.site_marginal()
}

/// Residue cutoff: past the dependence range for finite-range laws, or
/// where shell terms of the geometric envelope become negligible.
fn residue_cutoff(sim: &SimulatorSpec, m: usize, b: usize) -> usize {
    let base = 2 * b + 2;
    match sim {
        SimulatorSpec::IsingField { m: dim, beta, .. } => {
            let rho = dobrushin_rho(*dim, *beta);
            let mut i = base;
            while i < RESIDUE_MAX_CUTOFF && ((2 * i + 3) as f64).powi(m as i32) * rho.powi(i as i32) > RESIDUE_TERM_TOL {
                i += 1;
            }
            i
        }
        s => base + s.dependence_range().unwrap_or(0) + b,
    }
}

fn reference_or(scenario: &Scenario, lambda: &ParamVector) -> DiscreteDist {
    cp_pmf_to_tail(scenario.reference.as_ref().unwrap_or(lambda), CP_TAIL)
}

/// Runs one window of a scenario.
pub fn evaluate_point(scenario: &Scenario, index: usize, n: usize, m_reps: u64, seed: u64) -> Result<CurvePoint> {
    let b = scenario.b_n.at(index)?;
    let sim = resolve_simulator(scenario, n)?;
    let lambda_reps = scenario.lambda_reps.unwrap_or(m_reps);
    let mut diagnostics = BTreeMap::new();
    match (&scenario.mode, &sim) {
        (Mode::Deterministic, SimulatorSpec::ExchSeq { mixture, .. }) => {
            let laws = empirical_w_by_atom(&sim, m_reps, seed)?;
            let atoms = lambda_hat_exchangeable(&sim, n, lambda_reps, seed)?;
            let (mut tv, mut var) = (0.0, 0.0);
            let mut all = Vec::new();
            for (j, (law, atom)) in laws.iter().zip(mixture).enumerate() {
                if law.m == 0 {
                    continue;
                }
                let est = tv_with_stderr(law, &cp_pmf_to_tail(&ParamVector::poisson(atom.theta)?, CP_TAIL))?;
                diagnostics.insert(format!("tv_atom_{j}"), est.tv);
                diagnostics.insert(format!("tv_atom_{j}_stderr"), est.stderr);
                tv += atom.weight * est.tv;
                var += (atom.weight * est.stderr).powi(2);
                all = add_counts(all, law.counts.clone());
            }
            let pooled = EmpiricalLaw::from_counts(all);
            Ok(CurvePoint {
                n,
                window_size: n as u64,
                b_n: b,
                simulator: sim.clone(),
                lambda: atoms.iter().map(|a| a.rate).collect(),
                lambda_stderr: atoms.iter().map(|_| 0.0).collect(),
                tv,
                tv_stderr: var.sqrt(),
                bound: None,
                mean_w: pooled.mean(),
                w_counts: pooled.counts,
                atoms: Some(atoms),
                diagnostics,
            })
        }
        (Mode::Deterministic, SimulatorSpec::CayleyPerc { group, p, d }) => {
            let g = MetricGroup::from_spec(group)?;
            let edges = induced_subgraph_edges(&g, *d)?;
            let rate = cayley_lambda(*p, edges)?;
            let law = empirical_w_dist(&sim, n, m_reps, seed, &SumMode::Deterministic)?;
            let lambda = ParamVector::poisson(rate)?;
            let est = tv_with_stderr(&law, &reference_or(scenario, &lambda))?;
            let interior = PercolationGeometry::new(&g, *d, n)?.interior_count();
            let exact_mean = interior as f64 * rate;
            let vs_mean = tv_with_stderr(&law, &cp_pmf_to_tail(&ParamVector::poisson(exact_mean)?, CP_TAIL))?;
            diagnostics.insert("d_n".into(), *d as f64);
            diagnostics.insert("clique_edges".into(), edges as f64);
            diagnostics.insert("exact_mean_w".into(), exact_mean);
            diagnostics.insert("tv_vs_poisson_mean".into(), vs_mean.tv);
            diagnostics.insert("tv_vs_poisson_mean_stderr".into(), vs_mean.stderr);
            Ok(CurvePoint {
                n,
                window_size: g.ball_size(n as f64)?,
                b_n: b,
                simulator: sim.clone(),
                lambda: vec![rate],
                lambda_stderr: vec![0.0],
                tv: est.tv,
                tv_stderr: est.stderr,
                bound: None,
                mean_w: law.mean(),
                w_counts: law.counts,
                atoms: None,
                diagnostics,
            })
        }
        (Mode::Deterministic, s) if s.grid_dim().is_some() => {
            let m = s.grid_dim().unwrap();
            let k_max = scenario.k_max.unwrap_or(K_MAX_DEFAULT);
            let est = lambda_hat_ergodic(&sim, n, b, k_max, lambda_reps, seed)?;
            let lambda = est.params()?;
            let law = empirical_w_dist(&sim, n, m_reps, seed, &SumMode::Deterministic)?;
            let tv = tv_with_stderr(&law, &reference_or(scenario, &lambda))?;
            let size = grid_window_size(m, n);
            let q = closed_form_marginal(&sim).unwrap_or(est.origin_rate);
            let h = h_bounds_analytic(&lambda);
            diagnostics.insert("h0".into(), h.h0);
            diagnostics.insert("h1".into(), h.h1);
            diagnostics.insert("q_origin".into(), q);
            diagnostics.insert("lambda_truncated_mass".into(), est.truncated_mass);
            let bound = deterministic_bound(&sim, m, n, b, size, q, h.h0, h.h1, &mut diagnostics)?;
            Ok(CurvePoint {
                n,
                window_size: size,
                b_n: b,
                simulator: sim.clone(),
                lambda: est.rates,
                lambda_stderr: est.stderr,
                tv: tv.tv,
                tv_stderr: tv.stderr,
                bound,
                mean_w: law.mean(),
                w_counts: law.counts,
                atoms: None,
                diagnostics,
            })
        }
        (Mode::Randomized(cfg), _) => {
            let window = SumWindow::for_simulator(&sim, n)?;
            let rspec = RandomizedSpec {
                j_dist: cfg.j.resolve(window.size()),
                spread: cfg.spread,
                b_n: b,
                alpha: cfg.alpha,
                beta: cfg.beta,
            };
            let k_max = scenario.k_max.unwrap_or(K_MAX_DEFAULT);
            let est = lambda_hat_randomized(&sim, &window, &rspec, k_max, lambda_reps, seed)?;
            let cluster = est.cluster.params()?;
            let display = est.display.params()?;
            let law = empirical_w_dist(&sim, n, m_reps, seed, &SumMode::Randomized(rspec))?;
            let tv = tv_with_stderr(&law, &reference_or(scenario, &cluster))?;
            let tv_display = tv_with_stderr(&law, &cp_pmf_to_tail(&display, CP_TAIL))?;
            diagnostics.insert("tv_display_rates".into(), tv_display.tv);
            diagnostics.insert("tv_display_rates_stderr".into(), tv_display.stderr);
            diagnostics.insert("expected_j".into(), rspec.j_dist.moments().m1);
            let h = h_bounds_analytic(&cluster);
            diagnostics.insert("h0".into(), h.h0);
            diagnostics.insert("h1".into(), h.h1);
            let bound = match (&window, sim.grid_dim()) {
                (SumWindow::Grid { .. }, Some(m)) => {
                    let q = closed_form_marginal(&sim).unwrap_or(est.cluster.origin_rate);
                    diagnostics.insert("q_origin".into(), q);
                    randomized_bound(&sim, m, &rspec, window.size(), q, h.h0, h.h1, &mut diagnostics)?
                }
                _ => None,
            };
            Ok(CurvePoint {
                n,
                window_size: window.size().round() as u64,
                b_n: b,
                simulator: sim.clone(),
                lambda: est.cluster.rates,
                lambda_stderr: est.cluster.stderr,
                tv: tv.tv,
                tv_stderr: tv.stderr,
                bound,
                mean_w: law.mean(),
                w_counts: law.counts,
                atoms: None,
                diagnostics,
            })
        }
        (Mode::Deterministic, _) => domain("this simulator has no deterministic window sum"),
    }
}

/// Mixing envelopes for the bound, or `None` outside their validity range.
fn envelopes(sim: &SimulatorSpec, b: usize) -> Option<(impl Fn(usize) -> f64 + Copy + '_, impl Fn(usize) -> f64 + Copy + '_)> {
    analytic_mixing(sim, None, 1).ok()?;
    Some((
        move |t| analytic_mixing(sim, None, t).expect("checked"),
        move |t| analytic_mixing(sim, Some(b), t).expect("checked"),
    ))
}

#[allow(clippy::too_many_arguments)]
fn deterministic_bound(
    sim: &SimulatorSpec,
    m: usize,
    n: usize,
    b: usize,
    size: u64,
    q: f64,
    h0: f64,
    h1: f64,
    diagnostics: &mut BTreeMap<String, f64>,
) -> Result<Option<BoundReport>> {
    let Some((psi, xi)) = envelopes(sim, b) else {
        diagnostics.insert("bound_unavailable".into(), 1.0);
        return Ok(None);
    };
    let cutoff = residue_cutoff(sim, m, b);
    let shells = MetricGroup::grid(m)?.shell_table(cutoff + 1)?;
    // A_n B_b is the box of radius n + b
    let defect = (grid_window_size(m, n + b) - size) as f64 / size as f64;
    diagnostics.insert("boundary_defect".into(), defect);
    Ok(Some(theorem1_best(q, size, &shells, psi, xi, b, defect, h0, h1, cutoff)?))
}

#[allow(clippy::too_many_arguments)]
fn randomized_bound(
    sim: &SimulatorSpec,
    m: usize,
    rspec: &RandomizedSpec,
    size: f64,
    q: f64,
    h0: f64,
    h1: f64,
    diagnostics: &mut BTreeMap<String, f64>,
) -> Result<Option<BoundReport>> {
    let b = rspec.b_n;
    let Some((psi, xi)) = envelopes(sim, b) else {
        diagnostics.insert("bound_unavailable".into(), 1.0);
        return Ok(None);
    };
    let cutoff = residue_cutoff(sim, m, b);
    // c_n needs a ball larger than k_n^{1-β}
    let jm = rspec.j_dist.moments();
    let ball_b = grid_window_size(m, b) as f64;
    let eps = super::randomized::epsilon_n(&jm, rspec.spread, ball_b, size, q, q);
    let mut r_max = cutoff + 1;
    if eps > 0.0 {
        let threshold = eps.powf(rspec.alpha - 1.0).floor().powf(1.0 - rspec.beta);
        let side = threshold.powf(1.0 / m as f64);
        r_max = r_max.max((side / 2.0).ceil() as usize + 2);
    }
    let shells = MetricGroup::grid(m)?.with_budget(usize::MAX).shell_table(r_max)?;
    let inputs = RandomizedBoundInputs {
        window_size: size,
        q,
        rspec: *rspec,
        h0,
        h1,
    };
    Ok(Some(mtkatahdin_bound(&inputs, &shells, psi, xi, cutoff)?))
}

/// All windows of a scenario; stops at the first failure.
pub fn convergence_curve(scenario: &Scenario, n_grid: &[usize], m_reps: u64, seed: u64) -> Result<Vec<CurvePoint>> {
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| evaluate_point(scenario, i, n, m_reps, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::MixtureAtom;

    fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
        let mut out = vec![0.0; n as usize + 1];
        out[0] = (1.0 - p).powi(n as i32);
        for k in 1..=n as usize {
            out[k] = out[k - 1] * (n as f64 - k as f64 + 1.0) / k as f64 * p / (1.0 - p);
        }
        out
    }

    fn scenario(sim: SimulatorSpec) -> Scenario {
        Scenario {
            name: "t".into(),
            simulator: sim,
            group: None,
            mode: Mode::Deterministic,
            b_n: BRule::Constant(1),
            scaling: None,
            k_max: None,
            reference: None,
            lambda_reps: None,
        }
    }

    #[test]
    fn zero_field_is_point_mass() {
        let law = empirical_w_dist(&SimulatorSpec::IidField { m: 2, p: 0.0 }, 3, 500, 1, &SumMode::Deterministic).unwrap();
        assert_eq!(law.counts, vec![500]);
        let pt = evaluate_point(&scenario(SimulatorSpec::IidField { m: 1, p: 0.0 }), 0, 5, 300, 1).unwrap();
        assert_eq!(pt.tv, 0.0);
        assert_eq!(pt.mean_w, 0.0);
    }

    #[test]
    fn iid_law_matches_binomial() {
        let (n, p) = (5usize, 0.2);
        let law = empirical_w_dist(&SimulatorSpec::IidField { m: 1, p }, n, 20_000, 2, &SumMode::Deterministic).unwrap();
        let exact = binomial_pmf(11, p);
        for (w, e) in exact.iter().enumerate() {
            let emp = law.counts.get(w).copied().unwrap_or(0) as f64 / law.m as f64;
            let se = (e * (1.0 - e) / law.m as f64).sqrt();
            assert!((emp - e).abs() <= 4.0 * se + 1e-12, "w = {w}: {emp} vs {e}");
        }
    }

    #[test]
    fn exchangeable_single_atom_is_binomial() {
        let spec = SimulatorSpec::ExchSeq {
            mixture: vec![MixtureAtom { theta: 2.0, weight: 1.0 }],
            n: 30,
        };
        let law = empirical_w_dist(&spec, 30, 20_000, 3, &SumMode::Deterministic).unwrap();
        let exact = binomial_pmf(30, 2.0 / 30.0);
        for w in 0..8 {
            let emp = law.counts.get(w).copied().unwrap_or(0) as f64 / law.m as f64;
            let se = (exact[w] * (1.0 - exact[w]) / law.m as f64).sqrt();
            assert!((emp - exact[w]).abs() <= 4.0 * se, "w = {w}");
        }
    }

    #[test]
    fn tv_stderr_shape() {
        let law = EmpiricalLaw::from_counts(vec![50, 50]);
        let est = tv_with_stderr(&law, &DiscreteDist::new(vec![0.5, 0.5], 0.0).unwrap()).unwrap();
        assert_eq!(est.tv, 0.0);
        assert_eq!(est.stderr, 0.0);
        let est = tv_with_stderr(&law, &DiscreteDist::new(vec![0.25, 0.75], 0.0).unwrap()).unwrap();
        assert!((est.tv - 0.25).abs() < 1e-15);
        assert!((est.stderr - 0.5 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn binomial_poisson_curve_tracks_exact() {
        let mut sc = scenario(SimulatorSpec::IidField { m: 1, p: 0.1 });
        sc.scaling = Some(Scaling::TargetMean { target_mean: 2.0 });
        sc.reference = Some(ParamVector::poisson(2.0).unwrap());
        let points = convergence_curve(&sc, &[3, 10], 40_000, 4).unwrap();
        for pt in &points {
            let size = pt.window_size;
            let bin = DiscreteDist::new(binomial_pmf(size, 2.0 / size as f64), 0.0).unwrap();
            let exact = tv_distance(&bin, &cp_pmf_to_tail(&ParamVector::poisson(2.0).unwrap(), 1e-14)).unwrap();
            // the plug-in estimate is biased upwards by sampling noise
            assert!((pt.tv - exact).abs() < 4.0 * pt.tv_stderr + 0.01, "{} vs {exact}", pt.tv);
        }
        assert!(points[1].tv < points[0].tv);
        assert!(points.iter().all(|p| p.bound.is_some()));
    }

    #[test]
    fn scaling_rules() {
        let mut sc = scenario(SimulatorSpec::MdepField { m: 1, w: 2, tau: 0.5 });
        sc.scaling = Some(Scaling::TargetMean { target_mean: 2.0 });
        let sim = resolve_simulator(&sc, 50).unwrap();
        let marginal = sim.site_marginal().unwrap();
        assert!((marginal * 101.0 - 2.0).abs() < 1e-12);
        sc.scaling = Some(Scaling::TargetMean { target_mean: 500.0 });
        assert!(resolve_simulator(&sc, 50).is_err());
    }

    #[test]
    fn validation_messages() {
        let mut sc = scenario(SimulatorSpec::IidField { m: 1, p: 1.5 });
        sc.b_n = BRule::Constant(0);
        sc.mode = Mode::Randomized(RandomizedConfig {
            j: JRule::Fixed { j: 3 },
            spread: 1.0,
            alpha: 1.5,
            beta: 0.5,
        });
        let mut errors = Vec::new();
        sc.validate("", &mut errors);
        assert!(errors.iter().any(|e| e.starts_with("simulator.p:")), "{errors:?}");
        assert!(errors.iter().any(|e| e.starts_with("b_n:")));
        assert!(errors.iter().any(|e| e.starts_with("mode.alpha:")));
    }
}
