//! Tabulates a compound-Poisson law, samples from it, and measures how far
//! the sample is from the table.

use amenpois::compound_poisson::{cp_pmf, cp_pmf_to_tail, tv_distance, CpSampler, DiscreteDist, ParamVector};
use amenpois::rng::SeedRecord;

fn main() -> amenpois::Result<()> {
    // clusters of size 1, 2 and 3
    let lambda = ParamVector::new(vec![1.2, 0.3, 0.05])?;
    let table = cp_pmf(&lambda, 15);
    println!("Z(λ) with total rate {:.2}, mean {:.3}", lambda.total(), lambda.mean());
    for w in 0..=10 {
        println!("  P(Z = {w:>2}) = {:.6}", table.prob(w));
    }
    println!("  mass beyond 15: {:.2e}", table.tail);

    let sampler = CpSampler::new(&lambda);
    let mut rng = SeedRecord::new(1, 0, 0).rng();
    let mut counts = Vec::new();
    for _ in 0..100_000 {
        let w = sampler.sample(&mut rng) as usize;
        if counts.len() <= w {
            counts.resize(w + 1, 0);
        }
        counts[w] += 1;
    }
    let empirical = DiscreteDist::from_counts(&counts)?;
    let tv = tv_distance(&empirical, &cp_pmf_to_tail(&lambda, 1e-13))?;
    println!("TV(100k samples, table) = {tv:.5}");
    Ok(())
}
