//! Random binary structures and their evaluation under the group action.
//!
//! Every sampler is a pure function of `(spec, radius, seed)`. Grid fields are
//! stored densely on the box `[-R, R]^m`; sequences store all `n` entries;
//! percolation samples store one bit per edge of the word ball `B_R`;
//! planar samples store the sparse disk centers that define `X_n`.

mod ising;
mod percolation;
mod planar;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::rng::SeedRecord;

pub use ising::{dobrushin_rho, ising_field_for_rarity, IsingConfig};
pub use percolation::{cayley_clique, induced_subgraph_edges, CliqueTemplate, PercolationGeometry, PercolationSample};
pub use planar::PlanarSample;

/// Default Gibbs burn-in, in full sweeps.
pub const DEFAULT_BURN_IN: usize = 200;

/// One atom `(θ_j, weight_j)` of the latent mixture of an exchangeable sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureAtom {
    pub theta: f64,
    pub weight: f64,
}

/// The `simulator` object of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorSpec {
    /// Independent Bernoulli(`p`) sites on `ℤᵐ`.
    IidField { m: usize, p: f64 },
    /// `X(t) = Π_{s ∈ [0,w)^m} 𝟙(U(t+s) > τ)` for i.i.d. uniforms `U`.
    MdepField { m: usize, w: usize, tau: f64 },
    /// Nearest-neighbour Ising model on `ℤᵐ`, `X(t) = 𝟙(σ_t = +1)`.
    IsingField {
        m: usize,
        beta: f64,
        h: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_pad")]
        pad: usize,
    },
    /// Conditionally i.i.d. Bernoulli(`θ/n`) entries given a latent `θ`.
    ExchSeq { mixture: Vec<MixtureAtom>, n: usize },
    /// Bond percolation on a Cayley graph; `Y_φ` detects an open translate
    /// of the induced subgraph on `B_d`.
    CayleyPerc { group: GroupSpec, p: f64, d: usize },
    /// Disk-coverage indicator of a sparse Poisson process of rate `κ/n²`
    /// on `[0, n]²`, disks of radius `δ`.
    PlanarPoisson { kappa: f64, delta: f64 },
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_pad() -> usize {
    2
}

impl SimulatorSpec {
    /// Appends one message per offending field, prefixed by `path`.
    pub fn validate(&self, path: &str, errors: &mut Vec<String>) {
        let prob = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(0.0..=1.0).contains(&v) {
                errors.push(format!("{path}.{name}: must lie in [0, 1], got {v}"));
            }
        };
        let dim = |m: usize, errors: &mut Vec<String>| {
            if m == 0 || m > 3 {
                errors.push(format!("{path}.m: dimension must be in 1..=3, got {m}"));
            }
        };
        match self {
            SimulatorSpec::IidField { m, p } => {
                dim(*m, errors);
                prob("p", *p, errors);
            }
            SimulatorSpec::MdepField { m, w, tau } => {
                dim(*m, errors);
                if *w == 0 {
                    errors.push(format!("{path}.w: window must be positive"));
                }
                prob("tau", *tau, errors);
            }
            SimulatorSpec::IsingField { m, beta, h, .. } => {
                dim(*m, errors);
                if !(beta.is_finite() && *beta >= 0.0) {
                    errors.push(format!("{path}.beta: must be finite and non-negative, got {beta}"));
                }
                if !h.is_finite() {
                    errors.push(format!("{path}.h: must be finite"));
                }
            }
            SimulatorSpec::ExchSeq { mixture, n } => {
                if *n == 0 {
                    errors.push(format!("{path}.n: must be positive"));
                }
                if mixture.is_empty() {
                    errors.push(format!("{path}.mixture: at least one atom required"));
                }
                for (i, a) in mixture.iter().enumerate() {
                    if !(a.theta.is_finite() && a.theta >= 0.0) {
                        errors.push(format!("{path}.mixture[{i}].theta: must be finite and non-negative"));
                    }
                    if !(a.weight >= 0.0) {
                        errors.push(format!("{path}.mixture[{i}].weight: must be non-negative"));
                    }
                }
                let total: f64 = mixture.iter().map(|a| a.weight).sum();
                if !mixture.is_empty() && (total - 1.0).abs() > 1e-9 {
                    errors.push(format!("{path}.mixture: weights sum to {total}, not 1"));
                }
            }
            SimulatorSpec::CayleyPerc { group, p, .. } => {
                group.validate(&format!("{path}.group"), errors);
                if !matches!(group, GroupSpec::FinGen { .. }) {
                    errors.push(format!("{path}.group: percolation needs a fin_gen group"));
                }
                prob("p", *p, errors);
            }
            SimulatorSpec::PlanarPoisson { kappa, delta } => {
                if !(kappa.is_finite() && *kappa >= 0.0) {
                    errors.push(format!("{path}.kappa: must be finite and non-negative"));
                }
                if !(delta.is_finite() && *delta > 0.0) {
                    errors.push(format!("{path}.delta: must be positive"));
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.validate("simulator", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(errors.join("; ")))
        }
    }

    /// Dimension of the grid for field variants.
    pub fn grid_dim(&self) -> Option<usize> {
        match self {
            SimulatorSpec::IidField { m, .. } | SimulatorSpec::MdepField { m, .. } | SimulatorSpec::IsingField { m, .. } => {
                Some(*m)
            }
            _ => None,
        }
    }

    /// Whether the law is ergodic (no latent component).
    pub fn is_ergodic(&self) -> bool {
        match self {
            SimulatorSpec::ExchSeq { mixture, .. } => mixture.iter().filter(|a| a.weight > 0.0).count() <= 1,
            _ => true,
        }
    }

    /// `P(X(e) = 1)` when available in closed form.
    pub fn site_marginal(&self) -> Option<f64> {
        match self {
            SimulatorSpec::IidField { p, .. } => Some(*p),
            SimulatorSpec::MdepField { m, w, tau } => Some((1.0 - tau).powi(w.pow(*m as u32) as i32)),
            _ => None,
        }
    }

    /// Distance beyond which site values are independent, if finite.
    pub fn dependence_range(&self) -> Option<usize> {
        match self {
            SimulatorSpec::IidField { .. } => Some(0),
            SimulatorSpec::MdepField { w, .. } => Some(w - 1),
            SimulatorSpec::CayleyPerc { d, .. } => Some(2 * d),
            _ => None,
        }
    }
}

/// Storage of one sampled structure.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleData {
    /// Values on `[-radius, radius]^m`, lexicographic with the last
    /// coordinate fastest.
    Grid { m: usize, radius: usize, values: Vec<u8> },
    /// Entries `X(1), …, X(n)`; indices wrap modulo `n`.
    Sequence { values: Vec<u8> },
    Percolation(PercolationSample),
    Planar(PlanarSample),
}

/// One realization of a simulator over a finite region.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub data: SampleData,
    pub latent: Option<f64>,
    pub region_radius: usize,
    pub seed_record: SeedRecord,
}

impl FieldSample {
    /// `f_n(φX)`, i.e. the value of the structure seen from `φ`.
    pub fn eval_f(&self, phi: &GroupElement) -> Result<u8> {
        match (&self.data, phi) {
            (SampleData::Grid { m, radius, values }, GroupElement::Vector(c)) => {
                if c.len() != *m {
                    return domain(format!("element of rank {} queried on a {m}-dimensional field", c.len()));
                }
                grid_index(c, *radius)
                    .map(|i| values[i])
                    .ok_or_else(|| Error::Region(format!("{c:?} lies outside the sampled box of radius {radius}")))
            }
            (SampleData::Sequence { values }, GroupElement::Vector(c)) if c.len() == 1 => {
                Ok(values[c[0].rem_euclid(values.len() as i64) as usize])
            }
            (SampleData::Sequence { values }, GroupElement::Perm(p)) => {
                let i = p.first().copied().unwrap_or(0) as usize;
                values.get(i).copied().ok_or_else(|| Error::Region(format!("position {} beyond n", i + 1)))
            }
            (SampleData::Percolation(s), GroupElement::Vector(c)) => s.eval(c),
            (SampleData::Planar(s), GroupElement::Vector(c)) if c.len() == 2 => {
                s.eval_point([c[0] as f64, c[1] as f64])
            }
            _ => domain(format!("{phi:?} cannot be evaluated on this sample")),
        }
    }

    pub fn latent(&self) -> Option<f64> {
        self.latent
    }

    /// Dense grid values and the box radius, for fast paths.
    pub fn grid(&self) -> Option<(usize, usize, &[u8])> {
        match &self.data {
            SampleData::Grid { m, radius, values } => Some((*m, *radius, values)),
            _ => None,
        }
    }

    pub fn sequence(&self) -> Option<&[u8]> {
        match &self.data {
            SampleData::Sequence { values } => Some(values),
            _ => None,
        }
    }

    pub fn planar(&self) -> Option<&PlanarSample> {
        match &self.data {
            SampleData::Planar(s) => Some(s),
            _ => None,
        }
    }
}

/// Position of `c` in the box `[-r, r]^m`, if inside.
pub fn grid_index(c: &[i64], r: usize) -> Option<usize> {
    let r = r as i64;
    let side = 2 * r + 1;
    let mut idx = 0i64;
    for &x in c {
        if x < -r || x > r {
            return None;
        }
        idx = idx * side + (x + r);
    }
    Some(idx as usize)
}

/// Threshold `t` with `P(U < t) = p` for a uniform `u64`; `p = 1` maps to
/// `2^64`, so comparisons are done in `u128`.
pub(crate) fn bernoulli_threshold(p: f64) -> u128 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        1u128 << 64
    } else {
        (p * 18_446_744_073_709_551_616.0) as u128
    }
}

#[inline]
pub(crate) fn bernoulli(rng: &mut ChaCha8Rng, threshold: u128) -> u8 {
    ((rng.next_u64() as u128) < threshold) as u8
}

/// Samples `spec` on the region of radius `radius` (the box `[-R, R]^m` for
/// fields, the word ball `B_R` for percolation, the square `[0, R]²` for the
/// planar process; sequences ignore it).
pub fn sample_window(spec: &SimulatorSpec, radius: usize, seed: &SeedRecord) -> Result<FieldSample> {
    spec.check()?;
    let mut rng = seed.rng();
    let mut latent = None;
    let data = match spec {
        SimulatorSpec::IidField { m, p } => {
            let len = (2 * radius + 1).pow(*m as u32);
            let t = bernoulli_threshold(*p);
            SampleData::Grid {
                m: *m,
                radius,
                values: (0..len).map(|_| bernoulli(&mut rng, t)).collect(),
            }
        }
        SimulatorSpec::MdepField { m, w, tau } => SampleData::Grid {
            m: *m,
            radius,
            values: sample_mdep(*m, *w, *tau, radius, &mut rng),
        },
        SimulatorSpec::IsingField { m, beta, h, burn_in, pad } => {
            let cfg = IsingConfig {
                m: *m,
                beta: *beta,
                h: *h,
                burn_in: *burn_in,
                pad: *pad,
            };
            SampleData::Grid {
                m: *m,
                radius,
                values: ising::sample_box(&cfg, radius, &mut rng),
            }
        }
        SimulatorSpec::ExchSeq { mixture, n } => {
            let theta = draw_atom(mixture, &mut rng)?;
            latent = Some(theta);
            let t = bernoulli_threshold((theta / *n as f64).min(1.0));
            SampleData::Sequence {
                values: (0..*n).map(|_| bernoulli(&mut rng, t)).collect(),
            }
        }
        SimulatorSpec::CayleyPerc { group, p, d } => {
            SampleData::Percolation(PercolationSample::sample(group, *p, *d, radius, &mut rng)?)
        }
        SimulatorSpec::PlanarPoisson { kappa, delta } => {
            SampleData::Planar(PlanarSample::sample(*kappa, *delta, radius as f64, &mut rng))
        }
    };
    Ok(FieldSample {
        data,
        latent,
        region_radius: radius,
        seed_record: *seed,
    })
}

/// Draws a mixture atom; the returned value is `θ_j`.
pub fn draw_atom<R: Rng + ?Sized>(mixture: &[MixtureAtom], rng: &mut R) -> Result<f64> {
    let index = WeightedIndex::new(mixture.iter().map(|a| a.weight))
        .map_err(|e| Error::Domain(format!("invalid mixture weights: {e}")))?;
    Ok(mixture[index.sample(rng)].theta)
}

fn sample_mdep(m: usize, w: usize, tau: f64, radius: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let side = 2 * radius + 1;
    let mut shape = vec![side + w - 1; m];
    let t = bernoulli_threshold(1.0 - tau);
    let mut values: Vec<u8> = (0..shape.iter().product::<usize>()).map(|_| bernoulli(rng, t)).collect();
    for axis in 0..m {
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let len = shape[axis];
        let new_len = len - (w - 1);
        let mut next = vec![0u8; outer * new_len * inner];
        for o in 0..outer {
            for i in 0..new_len {
                for j in 0..inner {
                    let all = (0..w).all(|s| values[(o * len + i + s) * inner + j] == 1);
                    next[(o * new_len + i) * inner + j] = all as u8;
                }
            }
        }
        shape[axis] = new_len;
        values = next;
    }
    values
}
