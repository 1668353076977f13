//! Heat-bath Gibbs sampler for the nearest-neighbour Ising model.
//!
//! The chain runs on a torus of side `2(R + pad) + 1`, starts from all spins
//! down, and performs `burn_in` systematic sweeps; the central box
//! `[-R, R]^m` is returned with `1` for an up spin.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::bernoulli_threshold;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingConfig {
    pub m: usize,
    pub beta: f64,
    pub h: f64,
    pub burn_in: usize,
    pub pad: usize,
}

/// Dobrushin contraction coefficient `ρ = 2m·tanh β` of the heat-bath
/// kernel; the regime `ρ < 1` gives the `ρ^t` mixing envelope.
pub fn dobrushin_rho(m: usize, beta: f64) -> f64 {
    2.0 * m as f64 * beta.tanh()
}

/// Mean-field external field giving up-spin density `q`:
/// `h = atanh(2q - 1) - 2mβ(2q - 1)`.
///
/// For rare up spins this matches the exact conditional law given an
/// all-down neighbourhood.
pub fn ising_field_for_rarity(m: usize, beta: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("rarity must lie in (0, 1), got {q}"));
    }
    let mag = 2.0 * q - 1.0;
    Ok(mag.atanh() - 2.0 * m as f64 * beta * mag)
}

pub(super) fn sample_box(cfg: &IsingConfig, radius: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let m = cfg.m;
    let side = 2 * (radius + cfg.pad) + 1;
    let sites = side.pow(m as u32);
    // up-spin probability indexed by the number of up neighbours
    let degree = 2 * m;
    let thresholds: Vec<u128> = (0..=degree)
        .map(|up| {
            let s = 2.0 * up as f64 - degree as f64;
            bernoulli_threshold(1.0 / (1.0 + (-2.0 * (cfg.beta * s + cfg.h)).exp()))
        })
        .collect();
    let strides: Vec<usize> = (0..m).map(|a| side.pow((m - 1 - a) as u32)).collect();
    let mut spins = vec![0u8; sites];
    let mut coords = vec![0usize; m];
    for _ in 0..cfg.burn_in {
        coords.iter_mut().for_each(|c| *c = 0);
        for idx in 0..sites {
            let mut up = 0usize;
            for a in 0..m {
                let c = coords[a];
                let st = strides[a];
                let prev = if c == 0 { idx + (side - 1) * st } else { idx - st };
                let next = if c == side - 1 { idx - (side - 1) * st } else { idx + st };
                up += (spins[prev] + spins[next]) as usize;
            }
            spins[idx] = ((rng.next_u64() as u128) < thresholds[up]) as u8;
            for a in (0..m).rev() {
                coords[a] += 1;
                if coords[a] < side {
                    break;
                }
                coords[a] = 0;
            }
        }
    }
    let box_side = 2 * radius + 1;
    let mut out = Vec::with_capacity(box_side.pow(m as u32));
    let mut local = vec![0usize; m];
    for _ in 0..box_side.pow(m as u32) {
        let idx: usize = local.iter().zip(&strides).map(|(c, st)| (c + cfg.pad) * st).sum();
        out.push(spins[idx]);
        for a in (0..m).rev() {
            local[a] += 1;
            if local[a] < box_side {
                break;
            }
            local[a] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn rho_and_field() {
        assert!((dobrushin_rho(2, 0.15) - 4.0 * 0.15f64.tanh()).abs() < 1e-15);
        let h = ising_field_for_rarity(2, 0.1, 0.01).unwrap();
        // all-down neighbourhood: P(+) = 1/(1 + e^{-2(-0.4 + h)})
        let p = 1.0 / (1.0 + (-2.0 * (-0.4 + h)).exp());
        assert!((p - 0.01).abs() < 1e-3);
        assert!(ising_field_for_rarity(2, 0.1, 1.0).is_err());
    }

    #[test]
    fn zero_coupling_is_iid() {
        let cfg = IsingConfig {
            m: 2,
            beta: 0.0,
            h: 0.0,
            burn_in: 1,
            pad: 1,
        };
        let mut ones = 0usize;
        let mut total = 0usize;
        for i in 0..200 {
            let v = sample_box(&cfg, 4, &mut substream(1, 1, i));
            ones += v.iter().map(|&x| x as usize).sum::<usize>();
            total += v.len();
        }
        let f = ones as f64 / total as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / total as f64).sqrt());
    }

    #[test]
    fn rarity_is_close_to_target() {
        let (m, beta, q) = (2, 0.15, 0.02);
        let h = ising_field_for_rarity(m, beta, q).unwrap();
        let cfg = IsingConfig {
            m,
            beta,
            h,
            burn_in: 100,
            pad: 2,
        };
        let mut ones = 0usize;
        let mut total = 0usize;
        for i in 0..100 {
            let v = sample_box(&cfg, 6, &mut substream(2, 1, i));
            ones += v.iter().map(|&x| x as usize).sum::<usize>();
            total += v.len();
        }
        let f = ones as f64 / total as f64;
        assert!((f - q).abs() < 0.3 * q, "{f}");
    }

    #[test]
    fn positive_coupling_correlates_neighbours() {
        let cfg = IsingConfig {
            m: 1,
            beta: 0.4,
            h: 0.0,
            burn_in: 50,
            pad: 2,
        };
        let (mut same, mut total) = (0usize, 0usize);
        for i in 0..400 {
            let v = sample_box(&cfg, 5, &mut substream(3, 1, i));
            same += v.windows(2).filter(|w| w[0] == w[1]).count();
            total += v.len() - 1;
        }
        // 1-d Ising: P(equal neighbours) = (1 + tanh β)/2
        let expect = (1.0 + 0.4f64.tanh()) / 2.0;
        let f = same as f64 / total as f64;
        assert!((f - expect).abs() < 0.03, "{f} vs {expect}");
    }
}
