//! Kernel functions and Gram matrices.
//!
//! The quantum kernel is the fidelity `|<0|U(xi)^dagger U(xj)|0>|^2` of two
//! feature-map states. It can be evaluated exactly from the simulated
//! amplitudes or estimated by sampling `shots` measurement outcomes and
//! counting how often the all-zero string appears.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{AngleExpr, Circuit, Gate};
use crate::error::{Error, Result};
use crate::statevector::{run, run_on, Statevector};

/// Non-affine feature computed from the raw input and appended after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedFeature {
    /// `(pi - x[i]) * (pi - x[j])`
    ZzProduct(usize, usize),
}

impl DerivedFeature {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match *self {
            DerivedFeature::ZzProduct(i, j) => {
                let get = |k: usize| {
                    x.get(k)
                        .copied()
                        .ok_or(Error::InputDimension { index: k, dim: x.len() })
                };
                Ok((PI - get(i)?) * (PI - get(j)?))
            }
        }
    }
}

/// A circuit plus the feature preprocessing it expects.
///
/// Derived features occupy indices `d, d+1, ...` where `d` is the raw input
/// dimension, so angle expressions stay affine in the augmented vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    #[serde(flatten)]
    pub circuit: Circuit,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived: Vec<DerivedFeature>,
}

impl From<Circuit> for FeatureMap {
    fn from(circuit: Circuit) -> Self {
        Self {
            circuit,
            derived: Vec::new(),
        }
    }
}

impl FeatureMap {
    pub fn augment(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        for d in &self.derived {
            out.push(d.evaluate(x)?);
        }
        Ok(out)
    }

    /// `|Phi(x)> = U(x)|0...0>`.
    pub fn state(&self, x: &[f64]) -> Result<Statevector> {
        if self.derived.is_empty() {
            run(&self.circuit, x)
        } else {
            run(&self.circuit, &self.augment(x)?)
        }
    }

    pub fn gate_cost(&self) -> usize {
        self.circuit.gate_cost()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Accepts both feature-map JSON and bare circuit JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// The two-qubit second-order Pauli-Z feature map: two repetitions of a
/// Hadamard layer followed by `Z` phases `2 x0`, `2 x1` and a `ZZ` phase
/// `2 (pi - x0)(pi - x1)` realized as CNOT-RZ-CNOT. Gate cost 34.
pub fn zz_feature_map() -> FeatureMap {
    let mut gates = Vec::new();
    for _ in 0..2 {
        gates.extend([
            Gate::Hadamard(0),
            Gate::Hadamard(1),
            Gate::rz(0, AngleExpr::feature(0, 2.0)),
            Gate::rz(1, AngleExpr::feature(1, 2.0)),
            Gate::cnot(0, 1),
            Gate::rz(1, AngleExpr::feature(2, 2.0)),
            Gate::cnot(0, 1),
        ]);
    }
    FeatureMap {
        circuit: Circuit::from_gates(2, gates).expect("static circuit is valid"),
        derived: vec![DerivedFeature::ZzProduct(0, 1)],
    }
}

/// Runs `U(xj)` then `U(xi)^dagger` and returns the all-zero probability.
pub fn quantum_kernel_exact(map: &FeatureMap, xi: &[f64], xj: &[f64]) -> Result<f64> {
    Ok(zero_return_probability(map, xi, xj)?.min(1.0))
}

fn zero_return_probability(map: &FeatureMap, xi: &[f64], xj: &[f64]) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            got: xj.len(),
        });
    }
    let mut state = map.state(xj)?;
    let xi = map.augment(xi)?;
    run_on(&map.circuit.adjoint(), &xi, &mut state)?;
    Ok(state.amplitudes()[0].norm_sqr())
}

/// Shot-sampled estimate of the kernel: the fraction of `shots` draws from
/// the output distribution of `U(xi)^dagger U(xj)|0>` that land on `|0...0>`.
///
/// The all-zero count is drawn directly as `Binomial(shots, p0)`, which is
/// the marginal of the full multinomial outcome distribution.
pub fn quantum_kernel_sampled<R: Rng + ?Sized>(
    map: &FeatureMap,
    xi: &[f64],
    xj: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let p = zero_return_probability(map, xi, xj)?.clamp(0.0, 1.0);
    Ok(sample_fraction(p, shots, rng))
}

fn sample_fraction<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> f64 {
    let hits = Binomial::new(shots, p).expect("p is clamped to [0, 1]").sample(rng);
    hits as f64 / shots as f64
}

pub fn rbf_kernel(xi: &[f64], xj: &[f64], gamma: f64) -> Result<f64> {
    check_dims(xi, xj)?;
    let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d2).exp())
}

pub fn linear_kernel(xi: &[f64], xj: &[f64]) -> Result<f64> {
    check_dims(xi, xj)?;
    Ok(xi.iter().zip(xj).map(|(a, b)| a * b).sum())
}

fn check_dims(xi: &[f64], xj: &[f64]) -> Result<()> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            got: xj.len(),
        });
    }
    Ok(())
}

fn check_samples(samples: &[Vec<f64>], dim: usize) -> Result<()> {
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// Dense kernel matrix, rows indexed by left samples and columns by right.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        check_samples(rows, m)?;
        Ok(Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j])))
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Largest `|K[i][j] - K[j][i]|`; infinite for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        (&self.entries - self.entries.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Row-major, header-free CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.nrows() {
            let row: Vec<String> = (0..self.ncols()).map(|j| format!("{}", self.get(i, j))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// How the quantum kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Exact,
    /// Shot-sampled with one generator per matrix entry derived from `seed`.
    Sampled {
        shots: u64,
        seed: u64,
    },
}

impl EvalMode {
    /// `shots == 0` selects exact evaluation.
    pub fn from_shots(shots: u64, seed: u64) -> Self {
        if shots == 0 {
            EvalMode::Exact
        } else {
            EvalMode::Sampled { shots, seed }
        }
    }
}

/// A kernel function that can fill Gram and cross matrices.
pub trait Kernel: Sync {
    fn eval(&self, xi: &[f64], xj: &[f64]) -> Result<f64>;

    /// Entries `K[i][j] = k(a[i], b[j])`.
    fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<KernelMatrix> {
        let dim = a.first().or(b.first()).map_or(0, Vec::len);
        check_samples(a, dim)?;
        check_samples(b, dim)?;
        let rows: Vec<Vec<f64>> = a
            .par_iter()
            .map(|xi| b.iter().map(|xj| self.eval(xi, xj)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(KernelMatrix::new(DMatrix::from_fn(a.len(), b.len(), |i, j| rows[i][j])))
    }

    /// Symmetric Gram matrix; only the upper triangle is evaluated.
    fn gram(&self, a: &[Vec<f64>]) -> Result<KernelMatrix> {
        let dim = a.first().map_or(0, Vec::len);
        check_samples(a, dim)?;
        let n = a.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| self.eval(&a[i], &a[j])).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| {
            if j >= i {
                rows[i][j - i]
            } else {
                rows[j][i - j]
            }
        })))
    }
}

/// `kernel_matrix(k, a, b)`; uses the symmetric path when `a` and `b` are the
/// same slice.
pub fn kernel_matrix<K: Kernel + ?Sized>(kernel: &K, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<KernelMatrix> {
    if std::ptr::eq(a, b) {
        kernel.gram(a)
    } else {
        kernel.cross(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearKernel;

impl Kernel for LinearKernel {
    fn eval(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        linear_kernel(xi, xj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel {
    pub gamma: f64,
}

impl Kernel for RbfKernel {
    fn eval(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        rbf_kernel(xi, xj, self.gamma)
    }
}

/// Fidelity kernel of a feature map.
///
/// Matrix construction simulates each sample's state once and takes squared
/// overlaps, which is equivalent to [`quantum_kernel_exact`] per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumKernel {
    pub map: FeatureMap,
    pub mode: EvalMode,
}

impl QuantumKernel {
    pub fn exact(map: impl Into<FeatureMap>) -> Self {
        Self {
            map: map.into(),
            mode: EvalMode::Exact,
        }
    }

    pub fn with_mode(map: impl Into<FeatureMap>, mode: EvalMode) -> Self {
        Self { map: map.into(), mode }
    }

    fn states(&self, samples: &[Vec<f64>]) -> Result<Vec<Statevector>> {
        samples.par_iter().map(|x| self.map.state(x)).collect()
    }

    fn finish(&self, p: f64, i: usize, j: usize) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self.mode {
            EvalMode::Exact => p,
            EvalMode::Sampled { shots, seed } => {
                let mut rng = entry_rng(seed, i, j);
                sample_fraction(p, shots.max(1), &mut rng)
            }
        }
    }
}

/// Generator for matrix entry `(i, j)` derived from a master seed.
pub fn entry_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 32) ^ (j as u64));
    rng
}

impl Kernel for QuantumKernel {
    fn eval(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        let p = zero_return_probability(&self.map, xi, xj)?;
        Ok(self.finish(p, 0, 0))
    }

    fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<KernelMatrix> {
        let dim = a.first().or(b.first()).map_or(0, Vec::len);
        check_samples(a, dim)?;
        check_samples(b, dim)?;
        let sa = self.states(a)?;
        let sb = self.states(b)?;
        Ok(KernelMatrix::new(DMatrix::from_fn(a.len(), b.len(), |i, j| {
            self.finish(sa[i].inner(&sb[j]).norm_sqr(), i, j)
        })))
    }

    fn gram(&self, a: &[Vec<f64>]) -> Result<KernelMatrix> {
        let dim = a.first().map_or(0, Vec::len);
        check_samples(a, dim)?;
        let s = self.states(a)?;
        let n = a.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.finish(s[i].norm_sqr(), i, i);
            for j in i + 1..n {
                let v = self.finish(s[i].inner(&s[j]).norm_sqr(), i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(KernelMatrix::new(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(gates: Vec<Gate>) -> FeatureMap {
        Circuit::from_gates(1, gates).unwrap().into()
    }

    #[test]
    fn same_input_gives_one() {
        let map = zz_feature_map();
        let k = quantum_kernel_exact(&map, &[0.3, 1.7], &[0.3, 1.7]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn data_independent_circuit_gives_one() {
        let map: FeatureMap = Circuit::from_gates(2, vec![Gate::Hadamard(0), Gate::cnot(0, 1)])
            .unwrap()
            .into();
        let k = quantum_kernel_exact(&map, &[0.1, 0.2], &[2.0, -1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rz_and_hadamard_sandwich() {
        // RZ alone only adds a phase to |0>: fidelity 1. H RZ(pi) H flips |0> to |1>.
        let rz = single(vec![Gate::rz(0, AngleExpr::feature(0, 1.0))]);
        let k = quantum_kernel_exact(&rz, &[0.0], &[PI]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let hzh = single(vec![
            Gate::Hadamard(0),
            Gate::rz(0, AngleExpr::feature(0, 1.0)),
            Gate::Hadamard(0),
        ]);
        let k = quantum_kernel_exact(&hzh, &[0.0], &[PI]).unwrap();
        assert!(k.abs() < 1e-12);
    }

    #[test]
    fn sampled_point_mass_and_single_shot() {
        let map = zz_feature_map();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = quantum_kernel_sampled(&map, &[0.4, 0.9], &[0.4, 0.9], 37, &mut rng).unwrap();
        assert_eq!(k, 1.0);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = quantum_kernel_sampled(&map, &[0.4, 0.9], &[2.0, 0.1], 1, &mut rng).unwrap();
            assert!(k == 0.0 || k == 1.0);
        }
        assert!(quantum_kernel_sampled(&map, &[0.0, 0.0], &[0.0, 0.0], 0, &mut rng).is_err());
    }

    #[test]
    fn rbf_and_linear_examples() {
        assert_eq!(linear_kernel(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(linear_kernel(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), 1.0);
        assert!(linear_kernel(&[1.0], &[1.0, 2.0]).is_err());

        let a = vec![0.0, 1.0];
        let b = vec![2.0, -1.0];
        let samples = vec![a, b];
        let gamma = 0.5;
        let k = kernel_matrix(&RbfKernel { gamma }, &samples, &samples).unwrap();
        let off = (-gamma * 8.0_f64).exp();
        assert_eq!(k.get(0, 0), 1.0);
        assert!((k.get(0, 1) - off).abs() < 1e-15);
        assert_eq!(k.get(0, 1), k.get(1, 0));
    }

    #[test]
    fn single_sample_gram() {
        let samples = vec![vec![0.2, 0.4]];
        let k = kernel_matrix(&QuantumKernel::exact(zz_feature_map()), &samples, &samples).unwrap();
        assert_eq!(k.nrows(), 1);
        assert!((k.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zz_cost_is_34() {
        assert_eq!(zz_feature_map().gate_cost(), 34);
    }

    #[test]
    fn overlap_route_matches_adjoint_route() {
        let map = zz_feature_map();
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![0.3 * i as f64, 1.0 - 0.2 * i as f64]).collect();
        let k = QuantumKernel::exact(map.clone()).cross(&xs, &xs).unwrap();
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                let direct = quantum_kernel_exact(&map, &xs[i], &xs[j]).unwrap();
                assert!((k.get(i, j) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn feature_map_json_accepts_bare_circuit() {
        let fm = zz_feature_map();
        let text = fm.to_json().unwrap();
        assert!(text.contains("zz_product"));
        assert_eq!(FeatureMap::from_json(&text).unwrap(), fm);
        let bare = fm.circuit.to_json().unwrap();
        let loaded = FeatureMap::from_json(&bare).unwrap();
        assert!(loaded.derived.is_empty());
        assert_eq!(loaded.circuit, fm.circuit);
    }

    #[test]
    fn csv_export() {
        let k = KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,0.5\n0.5,1\n");
    }
}
