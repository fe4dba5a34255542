//! Trainable two-qubit feature maps.
//!
//! Every rotation carries its own linear angle `phi_j = a_j x0 + b_j x1`
//! and realizes `exp(i phi_j A)`, which is `RotA(-2 phi_j)` in the
//! simulator's half-angle convention.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{AngleExpr, Axis, Circuit, Gate};
use crate::dataset::Dataset;
use crate::decompose::multiplexed_pair;
use crate::error::{Error, Result};
use crate::kernel::{EvalMode, QuantumKernel};
use crate::optim::{minimize_dfo, EvalRecord, OptimizerConfig};
use crate::svm::{test_accuracy, SvmConfig};

/// Angle expressions in the unitary-decomposition ansatz.
pub const UD_ANGLES: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AnsatzKind {
    HardwareEfficient { depth: usize },
    UnitaryDecomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    #[serde(flatten)]
    pub kind: AnsatzKind,
    pub n_features: usize,
}

impl AnsatzSpec {
    pub fn hardware_efficient(depth: usize) -> Self {
        Self {
            kind: AnsatzKind::HardwareEfficient { depth },
            n_features: 2,
        }
    }

    pub fn unitary_decomposition() -> Self {
        Self {
            kind: AnsatzKind::UnitaryDecomposition,
            n_features: 2,
        }
    }

    /// Number of angle expressions.
    pub fn angle_count(&self) -> usize {
        match self.kind {
            AnsatzKind::HardwareEfficient { depth } => 4 * depth,
            AnsatzKind::UnitaryDecomposition => UD_ANGLES,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.angle_count() * self.n_features
    }

    pub fn build(&self, params: &[f64]) -> Result<Circuit> {
        if self.n_features == 0 {
            return Err(Error::Config("ansatz needs at least one feature".into()));
        }
        if let AnsatzKind::HardwareEfficient { depth: 0 } = self.kind {
            return Err(Error::Config("hardware-efficient depth must be at least 1".into()));
        }
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let phis: Vec<AngleExpr> = params
            .chunks(self.n_features)
            .map(|c| AngleExpr::linear(&c.iter().map(|v| -2.0 * v).collect::<Vec<_>>()))
            .collect();
        match self.kind {
            AnsatzKind::HardwareEfficient { depth } => build_he_angles(depth, &phis),
            AnsatzKind::UnitaryDecomposition => build_ud_angles(&phis),
        }
    }
}

/// Hardware-efficient ansatz: `depth` blocks of `RY RY RZ RZ` with one
/// CNOT(0, 1) between consecutive blocks. Gate cost `4d + 5(d - 1)`.
pub fn build_he(depth: usize, params: &[f64]) -> Result<Circuit> {
    AnsatzSpec::hardware_efficient(depth).build(params)
}

/// Unitary-decomposition ansatz with single-qubit ZYZ blocks on qubit 0 and
/// multiplexed rotations on qubit 1 selected by qubit 0. Raw gate cost 48.
pub fn build_ud(params: &[f64]) -> Result<Circuit> {
    AnsatzSpec::unitary_decomposition().build(params)
}

fn build_he_angles(depth: usize, phis: &[AngleExpr]) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(5 * depth);
    for (b, block) in phis.chunks(4).enumerate() {
        if b > 0 {
            gates.push(Gate::cnot(0, 1));
        }
        gates.extend([
            Gate::ry(0, block[0].clone()),
            Gate::ry(1, block[1].clone()),
            Gate::rz(0, block[2].clone()),
            Gate::rz(1, block[3].clone()),
        ]);
    }
    debug_assert_eq!(phis.len(), 4 * depth);
    Circuit::from_gates(2, gates)
}

/// `exp(i a Z) exp(i b Y) exp(i c Z)` on qubit 0, in circuit order.
fn zyz_block(a: &AngleExpr, b: &AngleExpr, c: &AngleExpr) -> [Gate; 3] {
    [Gate::rz(0, c.clone()), Gate::ry(0, b.clone()), Gate::rz(0, a.clone())]
}

fn build_ud_angles(phi: &[AngleExpr]) -> Result<Circuit> {
    // Operator product U(0..3) MZ(3,4) U(5..8) MY(8,9) U(10..13) MZ(13,14) U(15..18),
    // applied right to left.
    let mut gates = Vec::with_capacity(24);
    gates.extend(zyz_block(&phi[15], &phi[16], &phi[17]));
    gates.extend(multiplexed_pair(Axis::Z, 0, 1, phi[13].clone(), phi[14].clone()));
    gates.extend(zyz_block(&phi[10], &phi[11], &phi[12]));
    gates.extend(multiplexed_pair(Axis::Y, 0, 1, phi[8].clone(), phi[9].clone()));
    gates.extend(zyz_block(&phi[5], &phi[6], &phi[7]));
    gates.extend(multiplexed_pair(Axis::Z, 0, 1, phi[3].clone(), phi[4].clone()));
    gates.extend(zyz_block(&phi[0], &phi[1], &phi[2]));
    Circuit::from_gates(2, gates)
}

/// Seeded uniform draw in `[-1, 1]` for every parameter.
pub fn initial_params(spec: &AnsatzSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.parameter_count())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainResult {
    pub spec: AnsatzSpec,
    pub params: Vec<f64>,
    pub circuit: Circuit,
    pub accuracy: f64,
    pub evals: usize,
    pub capped: bool,
    pub history: Vec<EvalRecord>,
}

/// Minimizes `1 - test accuracy` over the ansatz parameters. A failed
/// evaluation counts as accuracy 0.
pub fn train(
    spec: &AnsatzSpec,
    data: &Dataset,
    opt: &OptimizerConfig,
    svm: &SvmConfig,
    mode: EvalMode,
    seed: u64,
) -> Result<TrainResult> {
    if !data.has_split() {
        return Err(Error::Config("ansatz training needs a train/test split".into()));
    }
    if data.dim() != spec.n_features {
        return Err(Error::DimensionMismatch {
            expected: spec.n_features,
            got: data.dim(),
        });
    }
    let x0 = initial_params(spec, seed);
    spec.build(&x0)?;
    let objective = |theta: &[f64]| -> f64 {
        let acc = spec
            .build(theta)
            .and_then(|c| test_accuracy(&QuantumKernel::with_mode(c, mode), data, svm));
        match acc {
            Ok(a) => 1.0 - a,
            Err(e) => {
                log::warn!("ansatz evaluation failed: {e}");
                1.0
            }
        }
    };
    let result = minimize_dfo(objective, &x0, opt);
    let circuit = spec.build(&result.x)?;
    Ok(TrainResult {
        spec: *spec,
        accuracy: 1.0 - result.value,
        params: result.x,
        circuit,
        evals: result.evals,
        capped: result.capped,
        history: result.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, unitarity_error, CMatrix};
    use crate::simplify::peephole;
    use crate::statevector::unitary_of;
    use crate::C64;

    /// `exp(i phi A) = cos(phi) I + i sin(phi) A`.
    fn exp_pauli(axis: Axis, phi: f64) -> CMatrix {
        let (c, s) = (C64::new(phi.cos(), 0.0), C64::new(0.0, phi.sin()));
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let p = match axis {
            Axis::X => [zero, one, one, zero],
            Axis::Y => [zero, C64::new(0.0, -1.0), C64::new(0.0, 1.0), zero],
            Axis::Z => [one, zero, zero, -one],
        };
        CMatrix::identity(2, 2) * c + CMatrix::from_row_slice(2, 2, &p) * s
    }

    fn projector(bit: usize) -> CMatrix {
        let mut p = CMatrix::zeros(2, 2);
        p[(bit, bit)] = C64::new(1.0, 0.0);
        p
    }

    fn ud_oracle(params: &[f64], x: &[f64]) -> CMatrix {
        let phi: Vec<f64> = params.chunks(2).map(|p| p[0] * x[0] + p[1] * x[1]).collect();
        let i2 = CMatrix::identity(2, 2);
        let u = |j: usize| {
            kron(
                &i2,
                &(exp_pauli(Axis::Z, phi[j]) * exp_pauli(Axis::Y, phi[j + 1]) * exp_pauli(Axis::Z, phi[j + 2])),
            )
        };
        let m = |axis: Axis, j: usize| {
            kron(&exp_pauli(axis, phi[j]), &projector(0)) + kron(&exp_pauli(axis, phi[j + 1]), &projector(1))
        };
        u(0) * m(Axis::Z, 3) * u(5) * m(Axis::Y, 8) * u(10) * m(Axis::Z, 13) * u(15)
    }

    #[test]
    fn he_costs() {
        for d in 1..=6 {
            let spec = AnsatzSpec::hardware_efficient(d);
            assert_eq!(spec.parameter_count(), 8 * d);
            let c = spec.build(&vec![0.1; 8 * d]).unwrap();
            assert_eq!(c.gate_cost(), 4 * d + 5 * (d - 1));
        }
        let c1 = build_he(1, &[0.0; 8]).unwrap();
        assert_eq!((c1.counts().rotation, c1.counts().cnot), (4, 0));
        let c4 = build_he(4, &[0.0; 32]).unwrap();
        assert_eq!((c4.counts().rotation, c4.counts().cnot, c4.gate_cost()), (16, 3, 31));
    }

    #[test]
    fn length_checked() {
        assert!(matches!(build_he(2, &[0.0; 15]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(build_ud(&[0.0; 35]), Err(Error::DimensionMismatch { .. })));
        assert!(build_he(0, &[]).is_err());
    }

    #[test]
    fn he_angles_carry_factor() {
        let c = build_he(1, &[0.5, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.gates()[0], Gate::ry(0, AngleExpr::linear(&[-1.0, 2.0])));
    }

    #[test]
    fn ud_cost_and_zero_params() {
        let spec = AnsatzSpec::unitary_decomposition();
        assert_eq!(spec.parameter_count(), 36);
        let c = build_ud(&[0.0; 36]).unwrap();
        assert_eq!(c.gate_cost(), 48);
        assert!(peephole(&c).is_empty());
    }

    #[test]
    fn ud_matches_operator_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let params: Vec<f64> = (0..36).map(|_| rng.random_range(-1.5..1.5)).collect();
            let x = [rng.random_range(0.0..6.3), rng.random_range(0.0..6.3)];
            let u = unitary_of(&build_ud(&params).unwrap(), &x).unwrap();
            assert!((u - ud_oracle(&params, &x)).norm() < 1e-9);
        }
    }

    #[test]
    fn ud_is_unitary_and_peephole_never_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let params: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let c = build_ud(&params).unwrap();
            assert!(unitarity_error(&unitary_of(&c, &x).unwrap()) < 1e-10);
            assert!(peephole(&c).gate_cost() <= 48);
        }
    }

    #[test]
    fn deterministic_build_and_init() {
        let spec = AnsatzSpec::hardware_efficient(2);
        let p = initial_params(&spec, 3);
        assert_eq!(p, initial_params(&spec, 3));
        assert!(p.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(
            spec.build(&p).unwrap().to_json().unwrap(),
            spec.build(&p).unwrap().to_json().unwrap()
        );
    }

    #[test]
    fn train_counts_one_eval_per_iteration() {
        let data = crate::dataset::make_moons(24, 0.05, 2).unwrap().split(0.5, 2).unwrap();
        let opt = OptimizerConfig {
            max_evals: 30,
            ..Default::default()
        };
        let r = train(
            &AnsatzSpec::hardware_efficient(1),
            &data,
            &opt,
            &SvmConfig::default(),
            EvalMode::Exact,
            1,
        )
        .unwrap();
        assert_eq!(r.evals, r.history.len());
        assert!(r.evals <= 30);
        let best = r.history.iter().map(|h| h.value).fold(f64::INFINITY, f64::min);
        assert!((1.0 - r.accuracy - best).abs() < 1e-12);
    }
}
