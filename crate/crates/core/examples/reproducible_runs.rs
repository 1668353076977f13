//! Runs one configured experiment with different worker counts and checks
//! that the CSV output is byte-identical.

use amenpois::harness::{execute, ExperimentConfig};

const CONFIG: &str = r#"{
    "name": "iid-demo",
    "simulator": {"kind": "iid_field", "m": 2, "p": 0.01},
    "b_n": 1,
    "scaling": {"rule": "target_mean", "target_mean": 1.5},
    "n_grid": [3, 6, 9],
    "m_reps": 5000,
    "master_seed": 2024
}"#;

fn main() -> amenpois::Result<()> {
    let config = ExperimentConfig::from_json(CONFIG)?;
    let (one, csv_one) = execute(&config, 1)?;
    let (_, csv_four) = execute(&config, 4)?;
    print!("{csv_one}");
    println!("config hash {}", one.config_hash);
    println!("identical with 1 and 4 workers: {}", csv_one == csv_four);
    Ok(())
}
