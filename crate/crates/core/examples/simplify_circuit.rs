//! Peephole simplification, qubit pruning and accuracy-guarded ablation.
use qfmap::dataset::moons_benchmark;
use qfmap::simplify::{ablate, covariant_style_circuit, simplify};
use qfmap::{AngleExpr, Circuit, EvalMode, FeatureMap, Gate, SvmConfig};

fn main() -> qfmap::Result<()> {
    let c = covariant_style_circuit();
    let (s, report) = simplify(&c);
    println!(
        "structural: {} qubits / cost {} -> {} qubits / cost {}",
        c.n_qubits(),
        report.cost_before,
        s.n_qubits(),
        report.cost_after
    );
    for p in &report.passes_applied {
        println!("  {:<14} removed {}", p.pass, p.gates_removed);
    }

    let data = moons_benchmark(0)?;
    let small = Circuit::from_gates(
        2,
        vec![
            Gate::Hadamard(0),
            Gate::Hadamard(1),
            Gate::rz(0, AngleExpr::feature(0, 1.0)),
            Gate::rz(1, AngleExpr::feature(1, 1.0)),
            Gate::cnot(0, 1),
            Gate::rz(1, AngleExpr::feature(0, 0.5)),
            Gate::ry(0, AngleExpr::feature(1, 0.25)),
            Gate::cnot(0, 1),
        ],
    )?;
    let (out, report) = ablate(&FeatureMap::from(small), &data, &SvmConfig::default(), EvalMode::Exact)?;
    println!(
        "ablation: cost {} -> {}, accuracy {:?} -> {:?}",
        report.cost_before, report.cost_after, report.accuracy_before, report.accuracy_after
    );
    println!("{}", out.to_json()?);
    Ok(())
}
