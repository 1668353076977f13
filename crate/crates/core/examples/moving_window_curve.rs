//! Convergence of a clustered window sum to its compound-Poisson limit,
//! with the explicit bound next to the measured distance.

use amenpois::limit_engine::{convergence_curve, BRule, Mode, Scaling, Scenario};
use amenpois::simulators::SimulatorSpec;

fn main() -> amenpois::Result<()> {
    let scenario = Scenario {
        name: "moving-window".into(),
        simulator: SimulatorSpec::MdepField { m: 1, w: 2, tau: 0.5 },
        group: None,
        mode: Mode::Deterministic,
        b_n: BRule::Constant(2),
        scaling: Some(Scaling::TargetMean { target_mean: 2.0 }),
        k_max: None,
        reference: None,
        // λ̂ only needs the ball around the origin, so it can afford many more draws
        lambda_reps: Some(1_000_000),
    };
    println!("{:>4} {:>6} {:>22} {:>10} {:>10}", "n", "|A_n|", "λ̂(1..3)", "TV", "bound");
    for p in convergence_curve(&scenario, &[10, 25, 50, 100, 200], 50_000, 1)? {
        let bound = p.bound.as_ref().map_or(f64::NAN, |b| b.total);
        println!(
            "{:>4} {:>6} {:>22} {:>10.4} {:>10.4}",
            p.n,
            p.window_size,
            format!("{:.3} {:.3} {:.4}", p.lambda[0], p.lambda[1], p.lambda[2]),
            p.tv,
            bound
        );
    }
    Ok(())
}
