//! Exact reference computations shared by the integration tests. None of
//! them call into the library's own distribution code.

#![allow(dead_code)]

/// Poisson(θ) probabilities on `0..=w_max` by the ratio recurrence.
pub fn poisson_pmf(theta: f64, w_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; w_max + 1];
    p[0] = (-theta).exp();
    for w in 1..=w_max {
        p[w] = p[w - 1] * theta / w as f64;
    }
    p
}

/// Binomial(n, p) probabilities on `0..=n`, built in log space.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let lgam = |k: u64| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    (0..=n)
        .map(|k| {
            if p == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            (lgam(n) - lgam(k) - lgam(n - k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
        })
        .collect()
}

/// Half the L1 distance of two tables; missing mass on either side counts.
pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let inside: f64 = (0..len).map(|i| (get(p, i) - get(q, i)).abs()).sum();
    let tails = (1.0 - p.iter().sum::<f64>()).max(0.0) + (1.0 - q.iter().sum::<f64>()).max(0.0);
    0.5 * (inside + tails)
}

/// Exact `d_TV(Binomial(n, θ/n), Poisson(θ))`.
pub fn binomial_poisson_tv(n: u64, theta: f64) -> f64 {
    let b = binomial_pmf(n, theta / n as f64);
    let w_max = (n as usize).max(60);
    tv(&b, &poisson_pmf(theta, w_max))
}

pub fn convolve(a: &[f64], b: &[f64], w_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; w_max + 1];
    for (i, x) in a.iter().enumerate().take(w_max + 1) {
        for (j, y) in b.iter().enumerate().take(w_max + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Law of `Σ_k k N_k`, `N_k ~ Poisson(λ(k))` independent, on `0..=w_max`,
/// by direct convolution. `rates[k - 1] = λ(k)`.
pub fn cp_convolution(rates: &[f64], w_max: usize) -> Vec<f64> {
    let mut acc = vec![0.0; w_max + 1];
    acc[0] = 1.0;
    for (i, &r) in rates.iter().enumerate() {
        let k = i + 1;
        let pois = poisson_pmf(r, w_max / k);
        let mut scaled = vec![0.0; w_max + 1];
        for (n, p) in pois.iter().enumerate() {
            scaled[n * k] = *p;
        }
        acc = convolve(&acc, &scaled, w_max);
    }
    acc
}

/// Exact `λ(k)`, `k = 1..=k_max`, for the one-dimensional moving-window
/// field `X_t = Π_{s<w} 𝟙(U_{t+s} > τ)` on a window of `size` sites with
/// neighbourhood radius `b`:
/// `λ(k) = size / k · P(X_0 = 1, Σ_{|i| ≤ b} X_i = k)`.
/// Enumerates the `2b + w` underlying indicator bits.
pub fn mdep_lambda_exact(w: usize, tau: f64, b: usize, size: f64, k_max: usize) -> Vec<f64> {
    let bits = 2 * b + w;
    assert!(bits <= 24, "enumeration too large");
    let on = 1.0 - tau;
    let mut joint = vec![0.0; k_max + 1];
    for mask in 0u32..(1 << bits) {
        let ones = mask.count_ones() as i32;
        let prob = on.powi(ones) * tau.powi(bits as i32 - ones);
        // bit j is V at offset j - b
        let x = |t: usize| (0..w).all(|s| mask >> (t + s) & 1 == 1);
        if !x(b) {
            continue;
        }
        let k = (0..=2 * b).filter(|&t| x(t)).count();
        if k <= k_max {
            joint[k] += prob;
        }
    }
    (1..=k_max).map(|k| size / k as f64 * joint[k]).collect()
}

/// Exact displayed rates `E[Σ_i f_i 𝟙(N_i = k)]` for a randomized sum of
/// `j` locations drawn uniformly with replacement from `{-n..=n}`, over an
/// i.i.d. Bernoulli(`p`) field; `N_i` counts the drawn ones within distance
/// `b` of draw `i`, itself included. Enumerates every location tuple and
/// every field configuration.
pub fn randomized_display_exact(n: usize, j: usize, p: f64, b: usize, k_max: usize) -> Vec<f64> {
    let size = 2 * n + 1;
    assert!(size <= 7 && j <= 3, "enumeration too large");
    let mut out = vec![0.0; k_max + 1];
    let tuples = size.pow(j as u32);
    let tuple_prob = 1.0 / tuples as f64;
    for t in 0..tuples {
        let locs: Vec<i64> = (0..j).map(|i| ((t / size.pow(i as u32)) % size) as i64).collect();
        for field in 0u32..(1 << size) {
            let ones = field.count_ones() as i32;
            let prob = tuple_prob * p.powi(ones) * (1.0 - p).powi(size as i32 - ones);
            let f = |x: i64| field >> x & 1 == 1;
            for &x in &locs {
                if !f(x) {
                    continue;
                }
                let k = locs.iter().filter(|&&y| f(y) && (x - y).unsigned_abs() as usize <= b).count();
                if k <= k_max {
                    out[k] += prob;
                }
            }
        }
    }
    out[1..].to_vec()
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {id:>2} {:<4} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
