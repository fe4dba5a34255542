//! Parameterized circuits over a small register of qubits.
//!
//! Every rotation carries an [`AngleExpr`], an affine function of the input
//! feature vector. Rotations follow the half-angle convention
//! `RotA(theta) = exp(-i theta A / 2)`. A generator written as
//! `exp(i phi A)` is therefore `RotA(-2 phi)` up to global phase, and the
//! ansatz builders fold that factor into the coefficients they emit.
//!
//! Circuits serialize to JSON as
//! `{"n_qubits": n, "gates": [{"kind": "rz", "qubits": [0], "angle": {"constant": 0.0, "coeffs": [[0, 1.0]]}}]}`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `constant + sum(coef * x[index])`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleExpr {
    pub constant: f64,
    #[serde(default)]
    pub coeffs: Vec<(usize, f64)>,
}

impl AngleExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            coeffs: Vec::new(),
        }
    }

    /// `coef * x[index]`.
    pub fn feature(index: usize, coef: f64) -> Self {
        Self {
            constant: 0.0,
            coeffs: vec![(index, coef)],
        }
    }

    /// Linear form `sum_k coefs[k] * x[k]` with no constant term.
    pub fn linear(coefs: &[f64]) -> Self {
        Self {
            constant: 0.0,
            coeffs: coefs.iter().copied().enumerate().collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut acc = self.constant;
        for &(index, coef) in &self.coeffs {
            let value = x.get(index).ok_or(Error::InputDimension { index, dim: x.len() })?;
            acc += coef * value;
        }
        Ok(acc)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            constant: self.constant * factor,
            coeffs: self.coeffs.iter().map(|&(i, c)| (i, c * factor)).collect(),
        }
    }

    /// Merge repeated feature indices, drop zero coefficients and sort by index.
    pub fn normalized(&self) -> Self {
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(self.coeffs.len());
        let mut sorted = self.coeffs.clone();
        sorted.sort_by_key(|&(i, _)| i);
        for (index, coef) in sorted {
            match coeffs.last_mut() {
                Some((last, acc)) if *last == index => *acc += coef,
                _ => coeffs.push((index, coef)),
            }
        }
        coeffs.retain(|&(_, c)| c != 0.0);
        Self {
            constant: self.constant,
            coeffs,
        }
    }

    /// True when the expression evaluates to exactly zero for every input.
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.coeffs.iter().all(|&(_, c)| c == 0.0)
    }

    /// True when no nonzero coefficient references the input.
    pub fn is_data_independent(&self) -> bool {
        self.coeffs.iter().all(|&(_, c)| c == 0.0)
    }

    /// One past the largest feature index referenced, or 0.
    pub fn required_dim(&self) -> usize {
        self.coeffs.iter().map(|&(i, _)| i + 1).max().unwrap_or(0)
    }
}

impl Add for &AngleExpr {
    type Output = AngleExpr;

    fn add(self, rhs: &AngleExpr) -> AngleExpr {
        let mut coeffs = self.coeffs.clone();
        coeffs.extend_from_slice(&rhs.coeffs);
        AngleExpr {
            constant: self.constant + rhs.constant,
            coeffs,
        }
        .normalized()
    }
}

impl Sub for &AngleExpr {
    type Output = AngleExpr;

    fn sub(self, rhs: &AngleExpr) -> AngleExpr {
        self + &(-rhs)
    }
}

impl Neg for &AngleExpr {
    type Output = AngleExpr;

    fn neg(self) -> AngleExpr {
        self.scale(-1.0)
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if self.constant != 0.0 || self.coeffs.is_empty() {
            write!(f, "{:.4}", self.constant)?;
            wrote = true;
        }
        for &(i, c) in &self.coeffs {
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "{c:.4}*x{i}")?;
            wrote = true;
        }
        Ok(())
    }
}

/// Rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Identity(usize),
    Hadamard(usize),
    Rot(Axis, usize, AngleExpr),
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

impl Gate {
    pub fn rx(qubit: usize, angle: AngleExpr) -> Self {
        Gate::Rot(Axis::X, qubit, angle)
    }

    pub fn ry(qubit: usize, angle: AngleExpr) -> Self {
        Gate::Rot(Axis::Y, qubit, angle)
    }

    pub fn rz(qubit: usize, angle: AngleExpr) -> Self {
        Gate::Rot(Axis::Z, qubit, angle)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Gate::Cz { control, target }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Identity(q) | Gate::Hadamard(q) | Gate::Rot(_, q, _) => vec![q],
            Gate::Cnot { control, target } | Gate::Cz { control, target } => {
                vec![control, target]
            }
        }
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        match *self {
            Gate::Identity(q) | Gate::Hadamard(q) | Gate::Rot(_, q, _) => q == qubit,
            Gate::Cnot { control, target } | Gate::Cz { control, target } => control == qubit || target == qubit,
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Gate::Rot(..))
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Cz { .. })
    }

    pub fn angle(&self) -> Option<&AngleExpr> {
        match self {
            Gate::Rot(_, _, a) => Some(a),
            _ => None,
        }
    }

    /// Weighted cost: rotation 1, Hadamard 2, CNOT/CZ 5, identity 0.
    pub fn cost(&self) -> usize {
        match self {
            Gate::Identity(_) => 0,
            Gate::Rot(..) => 1,
            Gate::Hadamard(_) => 2,
            Gate::Cnot { .. } | Gate::Cz { .. } => 5,
        }
    }

    /// The inverse gate. Hadamard, CNOT and CZ are self-inverse.
    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::Rot(axis, q, a) => Gate::Rot(*axis, *q, -a),
            g => g.clone(),
        }
    }

    /// Same gate with every qubit index passed through `map`.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Identity(q) => Gate::Identity(map(*q)),
            Gate::Hadamard(q) => Gate::Hadamard(map(*q)),
            Gate::Rot(axis, q, a) => Gate::Rot(*axis, map(*q), a.clone()),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map(*control),
                target: map(*target),
            },
            Gate::Cz { control, target } => Gate::Cz {
                control: map(*control),
                target: map(*target),
            },
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Gate::Identity(_) => "id",
            Gate::Hadamard(_) => "h",
            Gate::Rot(Axis::X, ..) => "rx",
            Gate::Rot(Axis::Y, ..) => "ry",
            Gate::Rot(Axis::Z, ..) => "rz",
            Gate::Cnot { .. } => "cx",
            Gate::Cz { .. } => "cz",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rot(_, q, a) => write!(f, "{}(q{q}, {a})", self.kind_name()),
            Gate::Cnot { control, target } | Gate::Cz { control, target } => {
                write!(f, "{}(q{control}, q{target})", self.kind_name())
            }
            Gate::Identity(q) | Gate::Hadamard(q) => write!(f, "{}(q{q})", self.kind_name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<AngleExpr>,
}

impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GateRecord {
            kind: self.kind_name().to_string(),
            qubits: self.qubits(),
            angle: self.angle().cloned(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = GateRecord::deserialize(deserializer)?;
        let arity = match rec.kind.as_str() {
            "cx" | "cnot" | "cz" => 2,
            _ => 1,
        };
        if rec.qubits.len() != arity {
            return Err(D::Error::custom(format!(
                "gate '{}' expects {arity} qubit(s), got {}",
                rec.kind,
                rec.qubits.len()
            )));
        }
        let q = rec.qubits[0];
        let angle = || {
            rec.angle
                .clone()
                .ok_or_else(|| D::Error::custom(format!("rotation '{}' is missing an angle", rec.kind)))
        };
        Ok(match rec.kind.as_str() {
            "id" | "i" => Gate::Identity(q),
            "h" => Gate::Hadamard(q),
            "rx" => Gate::rx(q, angle()?),
            "ry" => Gate::ry(q, angle()?),
            "rz" => Gate::rz(q, angle()?),
            "cx" | "cnot" => Gate::cnot(q, rec.qubits[1]),
            "cz" => Gate::cz(q, rec.qubits[1]),
            other => return Err(D::Error::custom(format!("unknown gate kind '{other}'"))),
        })
    }
}

/// Ordered gate list over `n_qubits` wires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct RawCircuit {
    n_qubits: usize,
    #[serde(default)]
    gates: Vec<Gate>,
}

impl TryFrom<RawCircuit> for Circuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        Circuit::from_gates(raw.n_qubits, raw.gates)
    }
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit("a circuit needs at least one qubit".into()));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut circuit = Self::new(n_qubits)?;
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    fn check_gate(&self, gate: &Gate) -> Result<()> {
        let qubits = gate.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "gate {gate} uses qubit {q} but the circuit has {} qubit(s)",
                self.n_qubits
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidCircuit(format!(
                "gate {gate} has identical control and target"
            )));
        }
        Ok(())
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        let n = self.n_qubits.max(other.n_qubits);
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Circuit::from_gates(n, gates)
    }

    /// Inverse circuit: reversed order, each gate inverted.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Smallest input dimension the circuit can be evaluated on.
    pub fn required_dim(&self) -> usize {
        self.gates
            .iter()
            .filter_map(Gate::angle)
            .map(AngleExpr::required_dim)
            .max()
            .unwrap_or(0)
    }

    /// True when no rotation depends on the input.
    pub fn is_data_independent(&self) -> bool {
        self.gates
            .iter()
            .filter_map(Gate::angle)
            .all(AngleExpr::is_data_independent)
    }

    pub fn gate_cost(&self) -> usize {
        gate_cost(self)
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            match g {
                Gate::Identity(_) => c.identity += 1,
                Gate::Hadamard(_) => c.hadamard += 1,
                Gate::Rot(..) => c.rotation += 1,
                Gate::Cnot { .. } => c.cnot += 1,
                Gate::Cz { .. } => c.cz += 1,
            }
        }
        c
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit on {} qubit(s), cost {}", self.n_qubits, self.gate_cost())?;
        for g in &self.gates {
            writeln!(f, "  {g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub identity: usize,
    pub hadamard: usize,
    pub rotation: usize,
    pub cnot: usize,
    pub cz: usize,
}

/// `R + 2H + 5(CNOT + CZ)`; identity gates are free.
pub fn gate_cost(circuit: &Circuit) -> usize {
    circuit.gates().iter().map(Gate::cost).sum()
}
