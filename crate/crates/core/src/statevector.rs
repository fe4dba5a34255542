//! Dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of the basis-state index, so the
//! dense matrix of a gate `A` on qubit 0 of a two-qubit register is
//! `I (x) A` in Kronecker notation.

use nalgebra::DMatrix;

use crate::circuit::{Axis, Circuit, Gate};
use crate::error::{Error, Result};
use crate::C64;

/// Largest register `unitary_of` will materialize.
pub const MAX_UNITARY_QUBITS: usize = 10;
/// Largest register `run` will simulate.
pub const MAX_STATE_QUBITS: usize = 20;

pub type Matrix2 = [[C64; 2]; 2];

pub fn rotation_matrix(axis: Axis, theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let z = C64::new(0.0, 0.0);
    match axis {
        Axis::X => [
            [C64::new(c, 0.0), C64::new(0.0, -s)],
            [C64::new(0.0, -s), C64::new(c, 0.0)],
        ],
        Axis::Y => [
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ],
        Axis::Z => [[C64::new(c, -s), z], [z, C64::new(c, s)]],
    }
}

pub fn hadamard_matrix() -> Matrix2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_STATE_QUBITS {
            return Err(Error::Capacity {
                what: "statevector qubits",
                got: n_qubits,
                max: MAX_STATE_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Shape(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Shape(format!("amplitude count {dim} is not a power of two")));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply_matrix(&mut self, qubit: usize, m: &Matrix2) {
        let stride = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & stride == 0 {
                let j = i | stride;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Applies `gate` in place, evaluating its angle at `x`.
    pub fn apply(&mut self, gate: &Gate, x: &[f64]) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "gate {gate} uses qubit {q} on a {}-qubit state",
                self.n_qubits
            )));
        }
        match gate {
            Gate::Identity(_) => {}
            Gate::Hadamard(q) => self.apply_matrix(*q, &hadamard_matrix()),
            Gate::Rot(axis, q, angle) => {
                let theta = angle.evaluate(x)?;
                self.apply_matrix(*q, &rotation_matrix(*axis, theta));
            }
            Gate::Cnot { control, target } => self.apply_cnot(*control, *target),
            Gate::Cz { control, target } => self.apply_cz(*control, *target),
        }
        Ok(())
    }
}

/// Functional form of [`Statevector::apply`].
pub fn apply_gate(state: &Statevector, gate: &Gate, x: &[f64]) -> Result<Statevector> {
    let mut next = state.clone();
    next.apply(gate, x)?;
    Ok(next)
}

/// Applies every gate of `circuit` to `state` in order.
pub fn run_on(circuit: &Circuit, x: &[f64], state: &mut Statevector) -> Result<()> {
    if state.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            got: state.n_qubits(),
        });
    }
    for gate in circuit.gates() {
        state.apply(gate, x)?;
    }
    Ok(())
}

/// `U(x)|0...0>`.
pub fn run(circuit: &Circuit, x: &[f64]) -> Result<Statevector> {
    let mut state = Statevector::zero(circuit.n_qubits())?;
    run_on(circuit, x, &mut state)?;
    Ok(state)
}

/// Dense `2^n x 2^n` matrix of the circuit at input `x`. Column `j` is the
/// circuit applied to basis state `|j>`.
pub fn unitary_of(circuit: &Circuit, x: &[f64]) -> Result<DMatrix<C64>> {
    let n = circuit.n_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::Capacity {
            what: "unitary qubits",
            got: n,
            max: MAX_UNITARY_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        let mut state = Statevector::basis(n, j)?;
        run_on(circuit, x, &mut state)?;
        u.set_column(j, &nalgebra::DVector::from_vec(state.into_amplitudes()));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::AngleExpr;
    use crate::linalg::unitarity_error;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let c = Circuit::from_gates(2, vec![Gate::Hadamard(0)]).unwrap();
        let s = run(&c, &[]).unwrap();
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let zero = C64::new(0.0, 0.0);
        assert_eq!(s.amplitudes().len(), 4);
        // |00> + |01>: qubit 0 is the low bit, so indices 0 and 1.
        for (a, e) in s.amplitudes().iter().zip([h, h, zero, zero]) {
            assert!(close(*a, e));
        }
    }

    #[test]
    fn bell_state() {
        let c = Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::cnot(0, 1)]).unwrap();
        let s = run(&c, &[]).unwrap();
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let zero = C64::new(0.0, 0.0);
        for (a, e) in s.amplitudes().iter().zip([h, zero, zero, h]) {
            assert!(close(*a, e));
        }
    }

    #[test]
    fn rz_is_phase_only_on_zero() {
        let theta = 1.234;
        let c = Circuit::from_gates(1, vec![Gate::rz(0, AngleExpr::constant(theta))]).unwrap();
        let s = run(&c, &[]).unwrap();
        assert!(close(s.amplitudes()[0], C64::from_polar(1.0, -theta / 2.0)));
        assert!((s.amplitudes()[0].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3).unwrap();
        let s = run(&c, &[0.3]).unwrap();
        assert_eq!(s, Statevector::zero(3).unwrap());
        let u = unitary_of(&c, &[]).unwrap();
        assert!((u - DMatrix::<C64>::identity(8, 8)).norm() < 1e-15);
    }

    #[test]
    fn uniform_superposition() {
        let c = Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::Hadamard(1)]).unwrap();
        let s = run(&c, &[]).unwrap();
        for p in s.probabilities() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hadamard_unitary() {
        let c = Circuit::from_gates(1, vec![Gate::Hadamard(0)]).unwrap();
        let u = unitary_of(&c, &[]).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = DMatrix::from_row_slice(2, 2, &[h, h, h, -h]).map(|v| C64::new(v, 0.0));
        assert!((u - expected).norm() < 1e-15);
    }

    #[test]
    fn unitary_capacity() {
        let c = Circuit::new(MAX_UNITARY_QUBITS + 1).unwrap();
        assert!(matches!(unitary_of(&c, &[]), Err(Error::Capacity { .. })));
    }

    #[test]
    fn rotation_half_angle_convention() {
        // RX(pi) = -i X, RY(pi) maps |0> to |1>.
        let m = rotation_matrix(Axis::X, PI);
        assert!(close(m[0][1], C64::new(0.0, -1.0)));
        assert!(m[0][0].norm() < 1e-15);
        let c = Circuit::from_gates(1, vec![Gate::ry(0, AngleExpr::constant(PI))]).unwrap();
        let s = run(&c, &[]).unwrap();
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cz_phase() {
        let c = Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::Hadamard(1), Gate::cz(0, 1)]).unwrap();
        let s = run(&c, &[]).unwrap();
        assert!(close(s.amplitudes()[3], C64::new(-0.5, 0.0)));
        let u = unitary_of(&c, &[]).unwrap();
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn input_dimension_error_propagates() {
        let c = Circuit::from_gates(1, vec![Gate::rz(0, AngleExpr::feature(2, 1.0))]).unwrap();
        assert!(matches!(run(&c, &[0.0]), Err(Error::InputDimension { .. })));
    }
}
