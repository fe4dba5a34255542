//! Circuit simplification: local rewriting, removal of qubits that cannot
//! affect the kernel, and accuracy-guarded removal of rotations.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, Gate};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::kernel::{EvalMode, FeatureMap, QuantumKernel};
use crate::svm::{test_accuracy, SvmConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRecord {
    pub pass: String,
    pub gates_removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplifyReport {
    pub passes_applied: Vec<PassRecord>,
    pub cost_before: usize,
    pub cost_after: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_after: Option<f64>,
}

impl SimplifyReport {
    fn new(cost_before: usize) -> Self {
        Self {
            passes_applied: Vec::new(),
            cost_before,
            cost_after: cost_before,
            accuracy_before: None,
            accuracy_after: None,
        }
    }

    fn record(&mut self, pass: &str, before: &Circuit, after: &Circuit) {
        self.passes_applied.push(PassRecord {
            pass: pass.to_string(),
            gates_removed: before.len().saturating_sub(after.len()),
        });
        self.cost_after = after.gate_cost();
    }
}

/// Seven-qubit, fourteen-feature circuit of gate cost 41 whose last wire
/// carries only four Hadamards.
pub const COVARIANT_STYLE_CIRCUIT_JSON: &str = include_str!("../data/covariant_style_circuit.json");

pub fn covariant_style_circuit() -> Circuit {
    Circuit::from_json(COVARIANT_STYLE_CIRCUIT_JSON).expect("bundled circuit is valid")
}

/// Index of the next live gate after `i` that touches `qubit`.
fn next_on(gates: &[Option<Gate>], i: usize, qubit: usize) -> Option<usize> {
    gates[i + 1..]
        .iter()
        .position(|g| g.as_ref().is_some_and(|g| g.acts_on(qubit)))
        .map(|k| k + i + 1)
}

/// Rewrites to a fixpoint: drops identities and zero rotations, merges
/// same-axis rotations that are neighbours on their wire, cancels
/// neighbouring Hadamard pairs, and cancels CNOT pairs that are neighbours
/// on both wires.
pub fn peephole(circuit: &Circuit) -> Circuit {
    let mut gates: Vec<Option<Gate>> = circuit.gates().iter().cloned().map(Some).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..gates.len() {
            let Some(gate) = gates[i].clone() else { continue };
            match gate {
                Gate::Identity(_) => {
                    gates[i] = None;
                    changed = true;
                }
                Gate::Rot(_, _, ref a) if a.is_zero() => {
                    gates[i] = None;
                    changed = true;
                }
                Gate::Rot(axis, q, ref a) => {
                    if let Some(j) = next_on(&gates, i, q) {
                        if let Some(Gate::Rot(axis2, _, b)) = &gates[j] {
                            if *axis2 == axis {
                                gates[i] = Some(Gate::Rot(axis, q, (a + b).normalized()));
                                gates[j] = None;
                                changed = true;
                            }
                        }
                    }
                }
                Gate::Hadamard(q) => {
                    if let Some(j) = next_on(&gates, i, q) {
                        if gates[j] == Some(Gate::Hadamard(q)) {
                            gates[i] = None;
                            gates[j] = None;
                            changed = true;
                        }
                    }
                }
                Gate::Cnot { control, target } => {
                    let jc = next_on(&gates, i, control);
                    if jc.is_some() && jc == next_on(&gates, i, target) {
                        let j = jc.unwrap_or_default();
                        if gates[j] == Some(gate.clone()) {
                            gates[i] = None;
                            gates[j] = None;
                            changed = true;
                        }
                    }
                }
                Gate::Cz { .. } => {}
            }
        }
    }
    Circuit::from_gates(circuit.n_qubits(), gates.into_iter().flatten().collect())
        .expect("rewriting keeps qubit indices in range")
}

/// Removes every group of qubits (connected through two-qubit gates) that
/// carries no data-dependent rotation, and renumbers the rest in order.
/// A circuit with no data-dependent rotation at all becomes an empty
/// one-qubit circuit.
pub fn prune_qubits(circuit: &Circuit) -> Circuit {
    let n = circuit.n_qubits();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut q: usize) -> usize {
        while parent[q] != q {
            parent[q] = parent[parent[q]];
            q = parent[q];
        }
        q
    }
    for g in circuit.gates() {
        if let Gate::Cnot { control, target } | Gate::Cz { control, target } = *g {
            let (a, b) = (find(&mut parent, control), find(&mut parent, target));
            parent[a] = b;
        }
    }
    let mut live_root = vec![false; n];
    for g in circuit.gates() {
        if let Gate::Rot(_, q, a) = g {
            if !a.is_data_independent() {
                let r = find(&mut parent, *q);
                live_root[r] = true;
            }
        }
    }
    let keep: Vec<bool> = (0..n).map(|q| live_root[find(&mut parent, q)]).collect();
    let mut new_index = vec![usize::MAX; n];
    let mut next = 0;
    for q in 0..n {
        if keep[q] {
            new_index[q] = next;
            next += 1;
        }
    }
    if next == 0 {
        return Circuit::new(1).expect("one qubit is valid");
    }
    let gates = circuit
        .gates()
        .iter()
        .filter(|g| g.qubits().iter().all(|&q| keep[q]))
        .map(|g| g.remap(|q| new_index[q]))
        .collect();
    Circuit::from_gates(next, gates).expect("remapped indices are in range")
}

/// `peephole` followed by `prune_qubits`.
pub fn simplify(circuit: &Circuit) -> (Circuit, SimplifyReport) {
    let mut report = SimplifyReport::new(circuit.gate_cost());
    let p = peephole(circuit);
    report.record("peephole", circuit, &p);
    let q = prune_qubits(&p);
    report.record("prune_qubits", &p, &q);
    (q, report)
}

fn reduced(circuit: &Circuit) -> Circuit {
    prune_qubits(&peephole(circuit))
}

fn without(circuit: &Circuit, index: usize) -> Circuit {
    let mut gates = circuit.gates().to_vec();
    gates.remove(index);
    Circuit::from_gates(circuit.n_qubits(), gates).expect("removal keeps indices valid")
}

/// Rotation positions ordered by how much cost disappears when each is
/// removed and the result re-simplified, largest first, ties by position.
pub fn removal_order(circuit: &Circuit) -> Vec<usize> {
    let cost = circuit.gate_cost();
    let mut scored: Vec<(usize, usize)> = circuit
        .gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_rotation())
        .map(|(i, _)| (i, cost.saturating_sub(reduced(&without(circuit, i)).gate_cost())))
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(i, _)| i).collect()
}

/// Greedily removes rotations whose removal does not lower test accuracy.
///
/// Each round scores every remaining rotation in [`removal_order`] and keeps
/// the first removal that holds accuracy; candidates within a round are
/// evaluated in parallel. A candidate whose evaluation fails is skipped.
/// The map's derived features are kept unchanged.
pub fn ablate(
    map: &FeatureMap,
    data: &Dataset,
    svm: &SvmConfig,
    mode: EvalMode,
) -> Result<(FeatureMap, SimplifyReport)> {
    let score = |circuit: &Circuit| -> Result<f64> {
        let kernel = QuantumKernel::with_mode(
            FeatureMap {
                circuit: circuit.clone(),
                derived: map.derived.clone(),
            },
            mode,
        );
        test_accuracy(&kernel, data, svm)
    };

    let mut report = SimplifyReport::new(map.circuit.gate_cost());
    let start_acc = score(&map.circuit)?;
    report.accuracy_before = Some(start_acc);

    let mut current = reduced(&map.circuit);
    report.record("peephole+prune", &map.circuit, &current);
    let mut acc = score(&current)?;
    if acc < start_acc {
        // Numerically different kernel changed the fit; keep the original.
        current = map.circuit.clone();
        acc = start_acc;
    }

    let mut removed = 0;
    loop {
        let order = removal_order(&current);
        let trials: Vec<Option<(Circuit, f64)>> = order
            .par_iter()
            .map(|&i| {
                let candidate = reduced(&without(&current, i));
                match score(&candidate) {
                    Ok(a) => Some((candidate, a)),
                    Err(e) => {
                        log::warn!("skipping removal of gate {i}: {e}");
                        None
                    }
                }
            })
            .collect();
        let accepted = trials.into_iter().flatten().find(|(_, a)| *a >= acc);
        match accepted {
            Some((candidate, a)) => {
                log::debug!(
                    "ablation: cost {} -> {}, accuracy {a}",
                    current.gate_cost(),
                    candidate.gate_cost()
                );
                removed += current.len().saturating_sub(candidate.len());
                current = candidate;
                acc = a;
            }
            None => break,
        }
    }
    report.passes_applied.push(PassRecord {
        pass: "ablate".into(),
        gates_removed: removed,
    });
    let final_circuit = reduced(&current);
    report.record("peephole+prune", &current, &final_circuit);
    report.accuracy_after = Some(acc);
    Ok((
        FeatureMap {
            circuit: final_circuit,
            derived: map.derived.clone(),
        },
        report,
    ))
}
