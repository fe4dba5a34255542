//! Evolve a feature-map circuit with the genetic search and print its progress.
use qfmap::dataset::moons_benchmark;
use qfmap::ga::{evolve, GaConfig};

fn main() -> qfmap::Result<()> {
    let data = moons_benchmark(0)?;
    let cfg = GaConfig {
        generations: 10,
        seed: 1,
        ..GaConfig::default()
    };
    let r = evolve(&cfg, &data)?;
    for g in &r.history {
        println!(
            "gen {:>2}  best fitness {:>6.2}  mean {:>6.2}  acc {:.3}  cost {}",
            g.generation, g.best_fitness, g.mean_fitness, g.best_accuracy, g.best_cost
        );
    }
    println!("best chromosome {}", r.best);
    println!("accuracy {:.3} at gate cost {}", r.eval.accuracy, r.eval.gate_cost);
    println!("{}", r.circuit.to_json()?);
    Ok(())
}
