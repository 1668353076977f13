//! Sums over randomly placed locations: a Poisson number of uniform draws
//! from a box over an i.i.d. field, and from a square over the disk
//! coverage process.

use amenpois::limit_engine::{evaluate_point, BRule, JRule, Mode, RandomizedConfig, Scaling, Scenario};
use amenpois::simulators::SimulatorSpec;

fn scenario(simulator: SimulatorSpec) -> Scenario {
    Scenario {
        name: "randomized".into(),
        simulator,
        group: None,
        mode: Mode::Randomized(RandomizedConfig {
            j: JRule::PoissonWindow { scale: 1.0 },
            spread: 1.0,
            alpha: 0.5,
            beta: 0.5,
        }),
        b_n: BRule::Constant(1),
        scaling: Some(Scaling::TargetMean { target_mean: 2.0 }),
        k_max: None,
        reference: None,
        lambda_reps: None,
    }
}

fn main() -> amenpois::Result<()> {
    let grid = scenario(SimulatorSpec::IidField { m: 1, p: 0.01 });
    let planar = scenario(SimulatorSpec::PlanarPoisson { kappa: 1.0, delta: 0.5 });
    for (label, sc, n) in [("grid", &grid, 50), ("plane", &planar, 12)] {
        let p = evaluate_point(sc, 0, n, 20_000, 4)?;
        println!(
            "{label}: n = {n}, λ̂ = {:?}, mean W = {:.3}, TV = {:.4}, bound = {}",
            p.lambda.iter().take(4).map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
            p.mean_w,
            p.tv,
            p.bound.map_or("none".to_string(), |b| format!("{:.3}", b.total))
        );
    }
    Ok(())
}
