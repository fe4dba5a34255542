//! Fidelity kernel of the ZZ feature map, exact and shot-sampled.
use qfmap::dataset::moons_benchmark;
use qfmap::kernel::{kernel_matrix, zz_feature_map};
use qfmap::{EvalMode, QuantumKernel};

fn main() -> qfmap::Result<()> {
    let data = moons_benchmark(0)?;
    let (x, _) = data.train();
    let x = &x[..6];

    let map = zz_feature_map();
    println!(
        "ZZ map: {} qubits, gate cost {}",
        map.circuit.n_qubits(),
        map.gate_cost()
    );

    let exact = kernel_matrix(&QuantumKernel::exact(map.clone()), x, x)?;
    println!("exact Gram (6x6):\n{:.3}", exact.entries());
    println!(
        "min eigenvalue {:.2e}, asymmetry {:.1e}",
        exact.min_eigenvalue(),
        exact.asymmetry()
    );

    for shots in [100, 1000, 10_000] {
        let k = QuantumKernel::with_mode(map.clone(), EvalMode::from_shots(shots, 7));
        let sampled = kernel_matrix(&k, x, x)?;
        let err = (sampled.entries() - exact.entries()).abs().max();
        println!("{shots:>6} shots: max |K_sampled - K_exact| = {err:.4}");
    }
    Ok(())
}
