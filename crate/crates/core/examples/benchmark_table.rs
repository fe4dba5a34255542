//! Reduced benchmark over every method on both datasets.
use qfmap::benchmark::{render_table, run_benchmark, BenchmarkConfig};

fn main() -> qfmap::Result<()> {
    let mut cfg = BenchmarkConfig::default();
    cfg.moons_ga.generations = 5;
    cfg.adhoc_ga.generations = 5;
    cfg.optimizer.max_evals = 100;
    let rows = run_benchmark(&cfg)?;
    print!("{}", render_table(&rows));
    Ok(())
}
