//! Soft-margin kernel SVM trained on the Lagrange dual with Platt's
//! sequential minimal optimization.
//!
//! The dual is
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. sum_i a_i y_i = 0,  0 <= a_i <= C
//! ```
//!
//! and the decision function is `f(x) = sum_i a_i y_i K(x_i, x) + b`.
//! A large `C` (default 1000) approximates the hard-margin problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Box constraint.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Maximum number of full sweeps over the training set.
    pub max_passes: usize,
    /// Maximum number of successful pair updates.
    pub max_updates: usize,
    /// Seed for the randomized second-choice fallback.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1000.0,
            tol: 1e-3,
            max_passes: 50,
            max_updates: 50_000,
            seed: 0,
        }
    }
}

/// Dual solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub train_labels: Vec<f64>,
    pub c: f64,
    /// Set when SMO stopped on `max_passes` or `max_updates` before reaching the KKT tolerance.
    pub capped: bool,
}

/// `alpha` above this (relative to `C`) marks a support vector.
const SUPPORT_THRESHOLD: f64 = 1e-8;

fn validate_labels(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidLabel(bad));
    }
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

struct Smo<'a> {
    k: &'a KernelMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// `g_i = sum_j a_j y_j K_ij`, i.e. `f(x_i) - b`.
    g: Vec<f64>,
    b: f64,
    rng: ChaCha8Rng,
    updates: usize,
}

impl Smo<'_> {
    fn err(&self, i: usize) -> f64 {
        self.g[i] + self.b - self.y[i]
    }

    fn is_free(&self, i: usize) -> bool {
        let a = self.alpha[i];
        a > 0.0 && a < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (e1, e2) = (self.err(i1), self.err(i2));
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= 1e-14 * c.max(1.0) {
            return false;
        }
        let k11 = self.k.get(i1, i1);
        let k22 = self.k.get(i2, i2);
        let k12 = self.k.get(i1, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut new_a2 = if eta > 1e-12 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective is linear (or convex) along the constraint line: pick the better end.
            let (g1, g2) = (self.g[i1], self.g[i2]);
            let gain = |t: f64| {
                let d2 = t - a2;
                let d1 = -s * d2;
                (d1 + d2)
                    - (d1 * y1 * g1 + d2 * y2 * g2)
                    - 0.5 * (d1 * d1 * k11 + d2 * d2 * k22 + 2.0 * s * d1 * d2 * k12)
            };
            let (wl, wh) = (gain(lo), gain(hi));
            if wl > wh + 1e-12 {
                lo
            } else if wh > wl + 1e-12 {
                hi
            } else {
                a2
            }
        };
        if new_a2 < 1e-12 * c {
            new_a2 = 0.0;
        } else if new_a2 > c * (1.0 - 1e-12) {
            new_a2 = c;
        }
        if (new_a2 - a2).abs() < 1e-12 * (new_a2 + a2 + 1e-12) {
            return false;
        }
        let mut new_a1 = a1 + s * (a2 - new_a2);
        if new_a1 < 1e-12 * c {
            new_a1 = 0.0;
        } else if new_a1 > c * (1.0 - 1e-12) {
            new_a1 = c;
        }

        let (d1, d2) = ((new_a1 - a1) * y1, (new_a2 - a2) * y2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let free1 = new_a1 > 0.0 && new_a1 < c;
        let free2 = new_a2 > 0.0 && new_a2 < c;
        self.b = if free1 {
            b1
        } else if free2 {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        for (i, gi) in self.g.iter_mut().enumerate() {
            *gi += d1 * self.k.get(i1, i) + d2 * self.k.get(i2, i);
        }
        self.alpha[i1] = new_a1;
        self.alpha[i2] = new_a2;
        self.updates += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let n = self.alpha.len();
        let r2 = self.err(i2) * self.y[i2];
        let a2 = self.alpha[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let e2 = self.err(i2);
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();
        if free.len() > 1 {
            // Second-choice heuristic: maximize |E1 - E2|.
            let i1 = free
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    (self.err(a) - e2)
                        .abs()
                        .partial_cmp(&(self.err(b) - e2).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("nonempty");
            if self.take_step(i1, i2) {
                return true;
            }
        }
        if !free.is_empty() {
            let start = self.rng.random_range(0..free.len());
            for k in 0..free.len() {
                let i1 = free[(start + k) % free.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            if self.take_step((start + k) % n, i2) {
                return true;
            }
        }
        false
    }
}

/// Trains the dual on a precomputed train-by-train kernel matrix.
pub fn train_smo(k: &KernelMatrix, y: &[f64], config: &SvmConfig) -> Result<SvmModel> {
    validate_labels(y)?;
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::InvalidKernel(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let scale = k.entries().amax().max(1.0);
    if k.asymmetry() > 1e-8 * scale {
        return Err(Error::InvalidKernel("matrix is not symmetric".into()));
    }
    if config.c.is_nan() || config.c <= 0.0 {
        return Err(Error::Config("C must be positive".into()));
    }

    let mut smo = Smo {
        k,
        y,
        c: config.c,
        tol: config.tol,
        alpha: vec![0.0; n],
        g: vec![0.0; n],
        b: 0.0,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        updates: 0,
    };

    let mut examine_all = true;
    let mut full_sweeps = 0;
    let mut capped = false;
    loop {
        let mut changed = 0;
        if examine_all {
            full_sweeps += 1;
            for i in 0..n {
                changed += usize::from(smo.examine(i));
            }
        } else {
            for i in 0..n {
                if smo.is_free(i) {
                    changed += usize::from(smo.examine(i));
                }
            }
        }
        if smo.updates >= config.max_updates {
            capped = true;
            break;
        }
        if examine_all {
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            if full_sweeps >= config.max_passes {
                capped = true;
                break;
            }
            examine_all = true;
        }
    }
    if capped {
        log::debug!(
            "SMO stopped early after {} updates and {} sweeps",
            smo.updates,
            full_sweeps
        );
    }

    let alphas = smo.alpha;
    // Recompute g from scratch to drop accumulated drift.
    let g: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| alphas[j] * y[j] * k.get(i, j)).sum())
        .collect();
    let bias = compute_bias(&alphas, &g, y, config.c);
    let support_indices = (0..n).filter(|&i| alphas[i] > SUPPORT_THRESHOLD * config.c).collect();
    Ok(SvmModel {
        alphas,
        bias,
        support_indices,
        train_labels: y.to_vec(),
        c: config.c,
        capped,
    })
}

/// Average of `y_i - g_i` over free vectors; otherwise the midpoint of the
/// interval the bound vectors allow.
fn compute_bias(alphas: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let eps = SUPPORT_THRESHOLD * c;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..alphas.len() {
        let v = y[i] - g[i];
        let at_zero = alphas[i] <= eps;
        let at_c = alphas[i] >= c - eps;
        if !at_zero && !at_c {
            free_sum += v;
            free_count += 1;
        } else if (at_zero && y[i] > 0.0) || (at_c && y[i] < 0.0) {
            lower = lower.max(v);
        } else {
            upper = upper.min(v);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}

impl SvmModel {
    pub fn n_train(&self) -> usize {
        self.alphas.len()
    }

    /// `f_i = sum_j a_j y_j K[i][j] + b` for each row of a test-by-train matrix.
    pub fn decision_values(&self, k_cross: &KernelMatrix) -> Result<Vec<f64>> {
        if k_cross.nrows() > 0 && k_cross.ncols() != self.n_train() {
            return Err(Error::DimensionMismatch {
                expected: self.n_train(),
                got: k_cross.ncols(),
            });
        }
        Ok((0..k_cross.nrows())
            .map(|i| {
                self.support_indices
                    .iter()
                    .map(|&j| self.alphas[j] * self.train_labels[j] * k_cross.get(i, j))
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }

    /// Labels `sign(f)` with `sign(0) = +1`.
    pub fn predict(&self, k_cross: &KernelMatrix) -> Result<Vec<f64>> {
        Ok(self.decision_values(k_cross)?.into_iter().map(sign).collect())
    }
}

pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum a - 1/2 a^T Q a` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], k: &KernelMatrix, y: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * k.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation of a trained model on its own training matrix.
pub fn kkt_violation(model: &SvmModel, k: &KernelMatrix) -> f64 {
    let f = model.decision_values(k).unwrap_or_default();
    let c = model.c;
    let eps = SUPPORT_THRESHOLD * c;
    f.iter()
        .zip(&model.train_labels)
        .zip(&model.alphas)
        .map(|((fi, yi), &a)| {
            let m = yi * fi;
            if a <= eps {
                (1.0 - m).max(0.0)
            } else if a >= c - eps {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Fraction of matching labels.
pub fn accuracy(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Result of fitting on a dataset's train split and scoring its test split.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub model: SvmModel,
    pub test_decision: Vec<f64>,
    pub test_accuracy: f64,
    pub train_accuracy: f64,
}

/// Trains on the train split and scores the test split.
pub fn fit_and_score<K: Kernel + ?Sized>(kernel: &K, data: &Dataset, config: &SvmConfig) -> Result<Evaluation> {
    let (xtr, ytr) = data.train();
    let (xte, yte) = data.test();
    let k_train = kernel.gram(&xtr)?;
    let model = train_smo(&k_train, &ytr, config)?;
    let train_pred = model.predict(&k_train)?;
    let k_test = kernel.cross(&xte, &xtr)?;
    let test_decision = model.decision_values(&k_test)?;
    let test_pred: Vec<f64> = test_decision.iter().copied().map(sign).collect();
    Ok(Evaluation {
        test_accuracy: accuracy(&test_pred, &yte)?,
        train_accuracy: accuracy(&train_pred, &ytr)?,
        test_decision,
        model,
    })
}

/// Test accuracy of a kernel on a dataset split.
pub fn test_accuracy<K: Kernel + ?Sized>(kernel: &K, data: &Dataset, config: &SvmConfig) -> Result<f64> {
    Ok(fit_and_score(kernel, data, config)?.test_accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{LinearKernel, RbfKernel};

    fn km(rows: &[&[f64]]) -> KernelMatrix {
        KernelMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_point_hard_margin() {
        // x = 0 (+1), x = 2 (-1): w = -1, b = 1, boundary at x = 1.
        let xs = vec![vec![0.0], vec![2.0]];
        let y = [1.0, -1.0];
        let k = LinearKernel.gram(&xs).unwrap();
        let model = train_smo(&k, &y, &SvmConfig::default()).unwrap();
        assert!((model.alphas[0] - 0.5).abs() < 1e-9);
        assert!((model.alphas[1] - 0.5).abs() < 1e-9);
        assert!((model.bias - 1.0).abs() < 1e-9);
        let kc = LinearKernel.cross(&[vec![1.0]], &xs).unwrap();
        let f = model.decision_values(&kc).unwrap();
        assert!(f[0].abs() < 1e-9);
        assert_eq!(model.predict(&kc).unwrap(), vec![1.0]);
    }

    #[test]
    fn free_support_vector_hits_margin() {
        let xs = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.0], vec![3.0, 1.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let k = LinearKernel.gram(&xs).unwrap();
        let cfg = SvmConfig::default();
        let model = train_smo(&k, &y, &cfg).unwrap();
        let f = model.decision_values(&k).unwrap();
        for &i in &model.support_indices {
            if model.alphas[i] < cfg.c {
                assert!((f[i] - y[i]).abs() <= cfg.tol + 1e-9);
            }
        }
        assert_eq!(model.predict(&k).unwrap(), y.to_vec());
    }

    #[test]
    fn empty_test_set() {
        let xs = vec![vec![0.0], vec![2.0]];
        let k = LinearKernel.gram(&xs).unwrap();
        let model = train_smo(&k, &[1.0, -1.0], &SvmConfig::default()).unwrap();
        let kc = LinearKernel.cross(&[], &xs).unwrap();
        assert!(model.decision_values(&kc).unwrap().is_empty());
    }

    #[test]
    fn error_paths() {
        let k = km(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            train_smo(&k, &[1.0, 1.0], &SvmConfig::default()),
            Err(Error::DegenerateLabels)
        ));
        assert!(matches!(
            train_smo(&k, &[1.0, 0.5], &SvmConfig::default()),
            Err(Error::InvalidLabel(_))
        ));
        let asym = km(&[&[1.0, 0.3], &[0.0, 1.0]]);
        assert!(matches!(
            train_smo(&asym, &[1.0, -1.0], &SvmConfig::default()),
            Err(Error::InvalidKernel(_))
        ));
        let model = train_smo(&k, &[1.0, -1.0], &SvmConfig::default()).unwrap();
        let wrong = km(&[&[1.0, 0.0, 0.0]]);
        assert!(model.decision_values(&wrong).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let a = [1.0, -1.0, 1.0, 1.0];
        assert_eq!(accuracy(&a, &a).unwrap(), 1.0);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(accuracy(&a, &neg).unwrap(), 0.0);
        let truth = vec![1.0; 40];
        let mut pred = truth.clone();
        for p in pred.iter_mut().take(4) {
            *p = -1.0;
        }
        assert!((accuracy(&pred, &truth).unwrap() - 0.9).abs() < 1e-15);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn sign_tie_break() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }

    #[test]
    fn constant_kernel_does_not_diverge() {
        let k = KernelMatrix::from_rows(&vec![vec![1.0; 6]; 6]).unwrap();
        let y = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let model = train_smo(&k, &y, &SvmConfig::default()).unwrap();
        let s: f64 = model.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-8);
        let pred = model.predict(&k).unwrap();
        assert!(pred.iter().all(|&p| p == pred[0]));
    }

    #[test]
    fn rbf_separable_training_accuracy() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect();
        let k = RbfKernel { gamma: 2.0 }.gram(&xs).unwrap();
        let model = train_smo(&k, &y, &SvmConfig::default()).unwrap();
        assert_eq!(accuracy(&model.predict(&k).unwrap(), &y).unwrap(), 1.0);
        assert!(kkt_violation(&model, &k) <= 1e-3 + 1e-9);
    }
}
