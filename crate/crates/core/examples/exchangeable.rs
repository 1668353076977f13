//! A mixed-binomial sequence: the unconditional sum is not Poisson, but
//! given the latent rate it is close to Poisson(θ).

use amenpois::limit_engine::{evaluate_point, BRule, Mode, Scenario};
use amenpois::simulators::{MixtureAtom, SimulatorSpec};

fn main() -> amenpois::Result<()> {
    let mixture = vec![
        MixtureAtom { theta: 1.0, weight: 0.5 },
        MixtureAtom { theta: 3.0, weight: 0.5 },
    ];
    let scenario = Scenario {
        name: "exchangeable".into(),
        simulator: SimulatorSpec::ExchSeq { mixture, n: 0 },
        group: None,
        mode: Mode::Deterministic,
        b_n: BRule::Constant(1),
        scaling: None,
        k_max: None,
        reference: None,
        lambda_reps: None,
    };
    for n in [20, 100, 500] {
        let p = evaluate_point(&scenario, 0, n, 40_000, 5)?;
        println!(
            "n = {n:>3}: conditional TV = {:.4} ± {:.4} (atoms: {:.4}, {:.4}), mean W = {:.3}",
            p.tv, p.tv_stderr, p.diagnostics["tv_atom_0"], p.diagnostics["tv_atom_1"], p.mean_w
        );
    }
    Ok(())
}
