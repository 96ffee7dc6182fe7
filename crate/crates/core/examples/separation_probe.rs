//! Quick look at the separation experiment at the benchmark parameters.
//!
//! Usage: separation_probe [seeds] [mu] [n]

use dplinear::{PrivacyBudget, SeparationConfig};

fn run(label: &str, config: &SeparationConfig) {
    let t0 = std::time::Instant::now();
    let report = dplinear::separation_experiment(config).unwrap();
    let b1 = &report.best_dpsgd;
    let b2 = &report.best_dpsgdf;
    println!(
        "{label}: dpsgd best {:.4} (C={}, lr={}, T={}), dpsgdf best {:.4} (C={}, lr={}, T={}), gap {:.4}, per-variant dpsgdf ({:.4}, {:.4}), sound={}, {:?}",
        b1.worst_variant_excess, b1.clip_norm, b1.learning_rate, b1.steps,
        b2.worst_variant_excess, b2.clip_norm, b2.learning_rate, b2.steps,
        report.gap(),
        b2.per_variant[0], b2.per_variant[1],
        report.budget_sound,
        t0.elapsed(),
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50);
    let mu: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(100.0);
    let n: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(64);

    let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();

    let mut config = SeparationConfig::new(mu, n, budget, seeds);
    run("private mean", &config);

    config.oracle_mean = true;
    run("oracle mean ", &config);

    // outside the failure regime
    let mut easy = SeparationConfig::new(2.0, 1000, budget, seeds.min(50));
    run("mu=2 n=1000 p", &easy);
    easy.oracle_mean = true;
    run("mu=2 n=1000 o", &easy);
}
