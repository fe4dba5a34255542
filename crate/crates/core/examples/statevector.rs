//! Build a small data-dependent circuit and inspect its state and unitary.
use qfmap::{run, unitary_of, AngleExpr, Circuit, Gate};

fn main() -> qfmap::Result<()> {
    let mut c = Circuit::new(2)?;
    c.extend([
        Gate::Hadamard(0),
        Gate::rz(0, AngleExpr::feature(0, 1.0)),
        Gate::cnot(0, 1),
        Gate::ry(1, AngleExpr::linear(&[0.5, -0.5])),
    ])?;
    println!("gate cost {}  counts {:?}", c.gate_cost(), c.counts());

    let x = [0.3, 1.2];
    let state = run(&c, &x)?;
    for (i, p) in state.probabilities().iter().enumerate() {
        println!("|{i:02b}>  p = {p:.4}");
    }
    let u = unitary_of(&c, &x)?;
    println!("unitary column 0: {:.4}", u.column(0).transpose());
    Ok(())
}
