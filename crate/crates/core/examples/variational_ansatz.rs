//! Train the hardware-efficient and two-qubit decomposition ansatzes.
use qfmap::ansatz::{train, AnsatzSpec};
use qfmap::dataset::moons_benchmark;
use qfmap::optim::OptimizerConfig;
use qfmap::simplify::peephole;
use qfmap::{EvalMode, SvmConfig};

fn main() -> qfmap::Result<()> {
    let data = moons_benchmark(0)?;
    let opt = OptimizerConfig {
        max_evals: 150,
        ..OptimizerConfig::default()
    };
    for spec in [AnsatzSpec::hardware_efficient(1), AnsatzSpec::unitary_decomposition()] {
        let r = train(&spec, &data, &opt, &SvmConfig::default(), EvalMode::Exact, 0)?;
        println!(
            "{:?}: {} params, {} evals, test accuracy {:.3}, cost {} (peephole {})",
            spec.kind,
            spec.parameter_count(),
            r.evals,
            r.accuracy,
            r.circuit.gate_cost(),
            peephole(&r.circuit).gate_cost()
        );
        let first = r.history.first().map_or(f64::NAN, |h| h.value);
        println!("  objective {first:.3} -> {:.3}", 1.0 - r.accuracy);
    }
    Ok(())
}
