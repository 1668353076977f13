//! The planar disk-coverage function `X_n(x) = 𝟙(dist(x, Π_n) ≤ δ)` for a
//! Poisson process `Π_n` of rate `κ/n²`, observed on `A_n = [0, n]²`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSample {
    pub side: f64,
    pub delta: f64,
    /// Points of `Π_n` in `[-δ, n + δ]²` (the only ones that can cover `A_n`).
    pub centers: Vec<[f64; 2]>,
}

impl PlanarSample {
    pub fn sample(kappa: f64, delta: f64, side: f64, rng: &mut ChaCha8Rng) -> Self {
        let extent = side + 2.0 * delta;
        let mean = if side > 0.0 { kappa / (side * side) * extent * extent } else { 0.0 };
        let count = if mean > 0.0 {
            Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
        } else {
            0
        };
        let centers = (0..count)
            .map(|_| [rng.random::<f64>() * extent - delta, rng.random::<f64>() * extent - delta])
            .collect();
        Self { side, delta, centers }
    }

    /// `P(X_n(x) = 1) = 1 - exp(-κπδ²/n²)` for `x` in the window.
    pub fn coverage_probability(kappa: f64, delta: f64, side: f64) -> f64 {
        1.0 - (-kappa * std::f64::consts::PI * delta * delta / (side * side)).exp()
    }

    pub fn eval_point(&self, x: [f64; 2]) -> Result<u8> {
        if !(0.0..=self.side).contains(&x[0]) || !(0.0..=self.side).contains(&x[1]) {
            return Err(Error::Region(format!("{x:?} lies outside [0, {}]²", self.side)));
        }
        let d2 = self.delta * self.delta;
        Ok(self
            .centers
            .iter()
            .any(|c| (c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2) <= d2) as u8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn coverage_marginal() {
        let (kappa, delta, side) = (2.0, 3.0, 20.0);
        let p = PlanarSample::coverage_probability(kappa, delta, side);
        let reps = 20_000u64;
        let mut hits = 0;
        for i in 0..reps {
            let s = PlanarSample::sample(kappa, delta, side, &mut substream(1, 1, i));
            hits += s.eval_point([1.5, 17.0]).unwrap() as u64;
        }
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((hits as f64 / reps as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn empty_process_and_region() {
        let s = PlanarSample::sample(0.0, 1.0, 10.0, &mut substream(1, 1, 0));
        assert!(s.centers.is_empty());
        assert_eq!(s.eval_point([5.0, 5.0]).unwrap(), 0);
        assert!(matches!(s.eval_point([-0.1, 5.0]), Err(Error::Region(_))));
    }
}
