//! Randomized sums `W_n = Σ_{i ≤ J_n} f_n(φ_{ni} X_n)` with locations drawn
//! uniformly from the window, and the explicit bound for them.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::bounds::{BoundReport, BoundVariant};
use super::lambda::LambdaEstimate;
use crate::error::{domain, Error, Result};
use crate::exec::fold_replicates;
use crate::group::ShellTable;
use crate::mixing::residue_sum;
use crate::rng::{phase, SeedRecord};
use crate::simulators::{sample_window, FieldSample, SimulatorSpec};

/// How `J_n` is chosen; the `*_window` forms scale with `|A_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JRule {
    Fixed { j: u64 },
    Poisson { theta: f64 },
    FixedWindow { scale: f64 },
    PoissonWindow { scale: f64 },
}

impl JRule {
    pub fn validate(&self, path: &str, errors: &mut Vec<String>) {
        match self {
            JRule::Fixed { .. } => {}
            JRule::Poisson { theta } if !(theta.is_finite() && *theta >= 0.0) => {
                errors.push(format!("{path}.theta: must be finite and non-negative, got {theta}"))
            }
            JRule::FixedWindow { scale } | JRule::PoissonWindow { scale } if !(scale.is_finite() && *scale >= 0.0) => {
                errors.push(format!("{path}.scale: must be finite and non-negative, got {scale}"))
            }
            _ => {}
        }
    }

    pub fn resolve(&self, window_size: f64) -> JDist {
        match *self {
            JRule::Fixed { j } => JDist::Fixed(j),
            JRule::Poisson { theta } => JDist::Poisson(theta),
            JRule::FixedWindow { scale } => JDist::Fixed((scale * window_size).round() as u64),
            JRule::PoissonWindow { scale } => JDist::Poisson(scale * window_size),
        }
    }
}

/// Law of the number of summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JDist {
    Fixed(u64),
    Poisson(f64),
}

/// Raw moments `E J`, `E J²`, `E J³` and `Var J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub var: f64,
}

impl JDist {
    pub fn moments(&self) -> JMoments {
        match *self {
            JDist::Fixed(j) => {
                let j = j as f64;
                JMoments {
                    m1: j,
                    m2: j * j,
                    m3: j * j * j,
                    var: 0.0,
                }
            }
            JDist::Poisson(t) => JMoments {
                m1: t,
                m2: t * t + t,
                m3: t * t * t + 3.0 * t * t + t,
                var: t,
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            JDist::Fixed(j) => j,
            JDist::Poisson(t) if t > 0.0 => Poisson::new(t).expect("positive rate").sample(rng) as u64,
            JDist::Poisson(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedSpec {
    pub j_dist: JDist,
    /// Well-spread constant `𝒮`; uniform sampling certifies `1`.
    pub spread: f64,
    pub b_n: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl RandomizedSpec {
    pub fn uniform(j_dist: JDist, b_n: usize) -> Self {
        Self {
            j_dist,
            spread: 1.0,
            b_n,
            alpha: 0.5,
            beta: 0.5,
        }
    }
}

/// The region locations are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumWindow {
    /// The box `[-n, n]^m` with the sup metric.
    Grid { m: usize, n: usize },
    /// The square `[0, side]²` with the Euclidean metric.
    Square { side: usize },
}

impl SumWindow {
    pub fn for_simulator(spec: &SimulatorSpec, n: usize) -> Result<Self> {
        match spec {
            SimulatorSpec::PlanarPoisson { .. } => Ok(SumWindow::Square { side: n }),
            s => match s.grid_dim() {
                Some(m) => Ok(SumWindow::Grid { m, n }),
                None => domain("randomized sums need a grid field or the planar process"),
            },
        }
    }

    /// `|A_n|`: site count or Lebesgue area.
    pub fn size(&self) -> f64 {
        match *self {
            SumWindow::Grid { m, n } => ((2 * n + 1) as f64).powi(m as i32),
            SumWindow::Square { side } => (side * side) as f64,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Location {
        match *self {
            SumWindow::Grid { m, n } => {
                let side = 2 * n as i64 + 1;
                Location::Grid((0..m).map(|_| rng.random_range(0..side) - n as i64).collect())
            }
            SumWindow::Square { side } => {
                let s = side as f64;
                Location::Plane([rng.random::<f64>() * s, rng.random::<f64>() * s])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Location {
    Grid(Vec<i64>),
    Plane([f64; 2]),
}

impl Location {
    fn within(&self, other: &Location, b: f64) -> bool {
        match (self, other) {
            (Location::Grid(x), Location::Grid(y)) => x.iter().zip(y).all(|(a, c)| ((a - c).abs() as f64) <= b),
            (Location::Plane(x), Location::Plane(y)) => (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) <= b * b,
            _ => false,
        }
    }

    fn eval(&self, sample: &FieldSample) -> Result<u8> {
        match self {
            Location::Grid(c) => {
                let (m, r, values) = sample
                    .grid()
                    .ok_or_else(|| Error::Domain("grid location on a non-grid sample".into()))?;
                if c.len() != m {
                    return domain("location rank does not match the field");
                }
                crate::simulators::grid_index(c, r)
                    .map(|i| values[i])
                    .ok_or_else(|| Error::Region(format!("{c:?} lies outside the sampled box")))
            }
            Location::Plane(x) => sample
                .planar()
                .ok_or_else(|| Error::Domain("planar location on a non-planar sample".into()))?
                .eval_point(*x),
        }
    }
}

/// One replicate: `W_n` and, for each sampled location carrying a one,
/// the number of ones among sampled locations within distance `b`
/// (itself and repeated draws included).
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedDraw {
    pub w: u64,
    pub neighbourhood_counts: Vec<usize>,
}

pub fn randomized_draw(
    sample: &FieldSample,
    window: &SumWindow,
    rspec: &RandomizedSpec,
    rng: &mut ChaCha8Rng,
) -> Result<RandomizedDraw> {
    let j = rspec.j_dist.sample(rng);
    let mut ones = Vec::new();
    for _ in 0..j {
        let loc = window.draw(rng);
        if loc.eval(sample)? == 1 {
            ones.push(loc);
        }
    }
    let b = rspec.b_n as f64;
    let neighbourhood_counts = ones
        .iter()
        .map(|x| ones.iter().filter(|y| x.within(y, b)).count())
        .collect();
    Ok(RandomizedDraw {
        w: ones.len() as u64,
        neighbourhood_counts,
    })
}

/// `W_n` for one sample.
pub fn randomized_sum(
    sample: &FieldSample,
    window: &SumWindow,
    rspec: &RandomizedSpec,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    Ok(randomized_draw(sample, window, rspec, rng)?.w)
}

/// Samples the structure that backs a randomized sum over `window`.
pub fn sample_for_window(spec: &SimulatorSpec, window: &SumWindow, seed: &SeedRecord) -> Result<FieldSample> {
    let radius = match *window {
        SumWindow::Grid { n, .. } => n,
        SumWindow::Square { side } => side,
    };
    sample_window(spec, radius, seed)
}

/// `λ̂` in the displayed form `E[Σ_i f_i 𝟙(N_i = k)]` and the cluster rates
/// obtained by dividing by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedLambda {
    pub display: LambdaEstimate,
    pub cluster: LambdaEstimate,
}

pub fn lambda_hat_randomized(
    spec: &SimulatorSpec,
    window: &SumWindow,
    rspec: &RandomizedSpec,
    k_max: usize,
    m_reps: u64,
    seed: u64,
) -> Result<RandomizedLambda> {
    if m_reps == 0 {
        return domain("m_reps must be positive");
    }
    let k_max = k_max.max(1);
    // [Σ W, then per k = 1..=k_max: Σ Y_k, Σ Y_k², then Σ over k > k_max]
    let len = 2 + 2 * k_max;
    let acc = fold_replicates(
        m_reps,
        || vec![0u64; len],
        |acc, i| {
            let sample = sample_for_window(spec, window, &SeedRecord::new(seed, phase::RANDOMIZED, i))?;
            let mut rng = SeedRecord::new(seed, phase::SAMPLER, i).rng();
            let draw = randomized_draw(&sample, window, rspec, &mut rng)?;
            acc[0] += draw.w;
            let mut y = vec![0u64; k_max + 1];
            for &k in &draw.neighbourhood_counts {
                if k <= k_max {
                    y[k] += 1;
                } else {
                    acc[len - 1] += 1;
                }
            }
            for k in 1..=k_max {
                acc[2 * k - 1] += y[k];
                acc[2 * k] += y[k] * y[k];
            }
            Ok(())
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )?;
    let mf = m_reps as f64;
    let mut disp = Vec::with_capacity(k_max);
    let mut disp_se = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mean = acc[2 * k - 1] as f64 / mf;
        let var = (acc[2 * k] as f64 / mf - mean * mean).max(0.0);
        disp.push(mean);
        disp_se.push((var / mf).sqrt());
    }
    let size = window.size();
    let jm = rspec.j_dist.moments();
    let origin_rate = if jm.m1 > 0.0 { acc[0] as f64 / mf / jm.m1 } else { 0.0 };
    let base = LambdaEstimate {
        rates: disp.clone(),
        stderr: disp_se.clone(),
        b: rspec.b_n,
        n: match *window {
            SumWindow::Grid { n, .. } => n,
            SumWindow::Square { side } => side,
        },
        m_reps,
        window_size: size.round() as u64,
        origin_rate,
        truncated_mass: acc[len - 1] as f64 / mf,
    };
    let cluster = LambdaEstimate {
        rates: disp.iter().enumerate().map(|(i, r)| r / (i + 1) as f64).collect(),
        stderr: disp_se.iter().enumerate().map(|(i, s)| s / (i + 1) as f64).collect(),
        ..base.clone()
    };
    Ok(RandomizedLambda { display: base, cluster })
}

/// `ε_n = 2(2𝒮² E[J³] |B_b|² q₁² / |A_n|² + (E[J] + 4𝒮 E[J²] |B_b| / |A_n|) q₂²)^{1/2}`.
pub fn epsilon_n(j: &JMoments, spread: f64, ball_b: f64, window_size: f64, q1: f64, q2: f64) -> f64 {
    let first = 2.0 * spread * spread * j.m3 * ball_b * ball_b / (window_size * window_size) * q1 * q1;
    let second = (j.m1 + 4.0 * spread * j.m2 * ball_b / window_size) * q2 * q2;
    2.0 * (first + second).sqrt()
}

/// `k_n = ⌊ε^{α-1}⌋` and `c_n = max{r : |B_r| ≤ k_n^{1-β}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusChoice {
    pub k_n: u64,
    pub threshold: f64,
    pub c_n: usize,
    /// The threshold is below `|B_0| = 1`, so `c_n = 0` by convention.
    pub degenerate: bool,
}

/// Relative slack absorbing rounding in `ε^{α-1}` before the floor.
const FLOOR_SLACK: f64 = 1e-12;

pub fn radii_cn(epsilon: f64, alpha: f64, beta: f64, shells: &ShellTable) -> Result<RadiusChoice> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return domain(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
        return domain(format!("alpha and beta must lie in (0, 1), got {alpha}, {beta}"));
    }
    let raw = epsilon.powf(alpha - 1.0);
    let k_n = (raw * (1.0 + FLOOR_SLACK)).floor().min(u64::MAX as f64) as u64;
    let threshold = (k_n as f64).powf(1.0 - beta);
    if threshold < 1.0 {
        return Ok(RadiusChoice {
            k_n,
            threshold,
            c_n: 0,
            degenerate: true,
        });
    }
    if shells.ball(shells.r_max) as f64 <= threshold {
        return domain(format!(
            "shell table of radius {} cannot resolve c_n for threshold {threshold}",
            shells.r_max
        ));
    }
    let c_n = (0..=shells.r_max).take_while(|&r| shells.ball(r) as f64 <= threshold).last().unwrap_or(0);
    Ok(RadiusChoice {
        k_n,
        threshold,
        c_n,
        degenerate: false,
    })
}

/// Inputs of the explicit randomized bound for a stationary law with
/// `Q_n(φ) = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedBoundInputs {
    pub window_size: f64,
    pub q: f64,
    pub rspec: RandomizedSpec,
    pub h0: f64,
    pub h1: f64,
}

/// The explicit bound `(P₁) + (P₂)` with `p = q = s = 2`.
pub fn mtkatahdin_bound(
    inputs: &RandomizedBoundInputs,
    shells: &ShellTable,
    psi: impl Fn(usize) -> f64,
    xi: impl Fn(usize) -> f64,
    cutoff: usize,
) -> Result<BoundReport> {
    let RandomizedBoundInputs {
        window_size: a,
        q,
        rspec,
        h0,
        h1,
    } = *inputs;
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("origin probability must lie in [0, 1], got {q}"));
    }
    let s = rspec.spread;
    let b = rspec.b_n;
    let j = rspec.j_dist.moments();
    let ball_b = shells.try_ball(b)? as f64;
    let ball_2b = shells.try_ball(2 * b)? as f64;
    let r_psi = residue_sum(shells, &psi, b, 1, cutoff)?;
    let r_xi = residue_sum(shells, &xi, b, 2, cutoff.max(2 * b))?;

    let lead = h1 * s * j.m2 / a;
    let term_psi = lead * q * r_psi.value;
    let term_xi = lead * 2.0 * q * r_xi.value;
    let term_gamma = lead * q * q * (ball_2b + (ball_2b - ball_b));

    let eps = epsilon_n(&j, s, ball_b, a, q, q);
    let (eps_alpha, radius) = if eps > 0.0 {
        (eps.powf(rspec.alpha), Some(radii_cn(eps, rspec.alpha, rspec.beta, shells)?))
    } else {
        (0.0, None)
    };
    let c = radius.map_or(0, |r| r.c_n);
    let ball_c = shells.try_ball(c)? as f64;
    let annulus = if c < b { ball_b - ball_c } else { 0.0 };
    let annulus_term = 2.0 * s * j.m2 * annulus / a * q * q;
    let psi_c_term = 2.0 * j.m1 * psi(c) * q;
    let cluster_term = match radius {
        Some(r) if r.k_n == 0 => f64::INFINITY,
        Some(r) => q / a * 2.0 * s * ball_c * j.m2 / r.k_n as f64,
        // ε = 0 forces q = 0 or J ≡ 0, where the term vanishes
        None => 0.0,
    };
    let root_var = (2.0 * j.var).sqrt();
    let variance_term = q / a * (s * ball_b * root_var * j.m2.sqrt() + a * root_var);
    let p2 = h0 * (eps_alpha + annulus_term + psi_c_term + cluster_term + variance_term);

    let mut extra = BTreeMap::new();
    extra.insert("epsilon".to_string(), eps);
    extra.insert("k_n".to_string(), radius.map_or(0.0, |r| r.k_n as f64));
    extra.insert("c_n".to_string(), c as f64);
    extra.insert("eps_alpha".to_string(), h0 * eps_alpha);
    extra.insert("annulus".to_string(), h0 * annulus_term);
    extra.insert("psi_c".to_string(), h0 * psi_c_term);
    if cluster_term.is_finite() {
        extra.insert("cluster".to_string(), h0 * cluster_term);
    }
    extra.insert("variance".to_string(), h0 * variance_term);
    Ok(BoundReport {
        term_boundary: p2,
        term_gamma,
        term_psi_residue: term_psi,
        term_xi_residue: term_xi,
        h0,
        h1,
        total: p2 + term_gamma + term_psi + term_xi,
        variant: BoundVariant::Mtkatahdin,
        p: None,
        residue_last_terms: [r_psi.last_term, r_xi.last_term],
        extra,
    })
}
