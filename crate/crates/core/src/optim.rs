//! Derivative-free minimization with linear interpolation models.
//!
//! A simplex of `n + 1` evaluated points defines a linear model of the
//! objective. Each iteration performs exactly one evaluation: either a step
//! of length `rho` down the model gradient from the best vertex, or a
//! geometry step that restores a well-shaped simplex. When steps stop paying
//! off on a well-shaped simplex, `rho` is halved until it reaches `rho_end`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub rho_start: f64,
    pub rho_end: f64,
    pub max_evals: usize,
    #[serde(default)]
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rho_start: 0.5,
            rho_end: 1e-3,
            max_evals: 500,
            restarts: 0,
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalRecord {
    pub theta_norm: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// The evaluation budget ran out before `rho` reached `rho_end`.
    pub capped: bool,
    pub history: Vec<EvalRecord>,
}

// Simplex acceptability: vertices within BETA * rho of the base and at least
// ALPHA * rho from the opposite face. Geometry steps have length GAMMA * rho.
const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;
const POOR_RATIO: f64 = 0.1;

struct Tracker<'a, F> {
    f: &'a mut F,
    history: Vec<EvalRecord>,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        self.history.push(EvalRecord {
            theta_norm: x.iter().map(|a| a * a).sum::<f64>().sqrt(),
            value: v,
        });
        // Strict comparison keeps the earliest point among ties.
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        v
    }

    fn count(&self) -> usize {
        self.history.len()
    }
}

/// Minimizes `f` from `x0`. Returns the best point evaluated, preferring the
/// earliest one among equal values.
///
/// With `restarts > 0`, each time `rho` reaches `rho_end` the search starts
/// over from the best point with a fresh simplex of size `rho_start`, while
/// evaluations remain.
pub fn minimize_dfo<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], config: &OptimizerConfig) -> OptimResult {
    let mut t = Tracker {
        f: &mut f,
        history: Vec::new(),
        best: None,
    };
    let mut capped = config.max_evals == 0;
    if !capped {
        let f0 = t.eval(x0);
        capped = run(&mut t, x0, f0, config);
        for _ in 0..config.restarts {
            if capped {
                break;
            }
            let (x, v) = t.best.clone().expect("evaluated at least once");
            capped = run(&mut t, &x, v, config);
        }
    }
    let (x, value) = t.best.clone().unwrap_or((x0.to_vec(), f64::INFINITY));
    OptimResult {
        x,
        value,
        evals: t.history.len(),
        capped,
        history: t.history,
    }
}

/// One trust-region descent from an evaluated start point. Returns true when
/// the evaluation budget ran out.
fn run<F: FnMut(&[f64]) -> f64>(t: &mut Tracker<'_, F>, x0: &[f64], f0: f64, config: &OptimizerConfig) -> bool {
    let n = x0.len();
    if n == 0 {
        return false;
    }
    let mut base = DVector::from_column_slice(x0);
    let mut f_base = f0;
    let mut base_order = 0usize;

    let mut rho = config.rho_start.max(config.rho_end);
    // Row i is the offset of vertex i from the base.
    let mut offsets = DMatrix::<f64>::zeros(n, n);
    let mut values = vec![0.0; n];
    let mut order = vec![0usize; n];
    for i in 0..n {
        if t.count() >= config.max_evals {
            return true;
        }
        offsets[(i, i)] = rho;
        let x = &base + offsets.row(i).transpose();
        values[i] = t.eval(x.as_slice());
        order[i] = t.count();
    }

    let mut need_reduce = false;
    loop {
        // Move the best vertex (earliest among ties) into the base position.
        let mut best = None;
        for i in 0..n {
            let better = values[i] < f_base || (values[i] == f_base && order[i] < base_order);
            let beats_current =
                best.is_none_or(|b: usize| values[i] < values[b] || (values[i] == values[b] && order[i] < order[b]));
            if better && beats_current {
                best = Some(i);
            }
        }
        if let Some(j) = best {
            let dj = offsets.row(j).into_owned();
            for k in 0..n {
                if k != j {
                    let row = offsets.row(k) - &dj;
                    offsets.set_row(k, &row);
                }
            }
            offsets.set_row(j, &(-&dj));
            base += dj.transpose();
            std::mem::swap(&mut f_base, &mut values[j]);
            std::mem::swap(&mut base_order, &mut order[j]);
        }

        let Some(inv) = offsets.clone().try_inverse() else {
            // Degenerate simplex: rebuild it around the base.
            for i in 0..n {
                if t.count() >= config.max_evals {
                    return true;
                }
                offsets.set_row(i, &DVector::zeros(n).transpose());
                offsets[(i, i)] = rho;
                let x = &base + offsets.row(i).transpose();
                values[i] = t.eval(x.as_slice());
                order[i] = t.count();
            }
            continue;
        };
        let delta = DVector::from_iterator(n, values.iter().map(|v| v - f_base));
        let mut g = &inv * &delta;
        if g.iter().any(|v| !v.is_finite()) {
            g.fill(0.0);
        }
        let gnorm = g.norm();

        // Column j of the inverse is dual to vertex j.
        let dist: Vec<f64> = (0..n).map(|j| offsets.row(j).norm()).collect();
        let sigma: Vec<f64> = (0..n).map(|j| 1.0 / inv.column(j).norm()).collect();
        let far = (0..n)
            .filter(|&j| dist[j] > BETA * rho)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        let flat = (0..n)
            .filter(|&j| sigma[j] < ALPHA * rho)
            .min_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
        let bad_vertex = far.or(flat);

        if need_reduce || gnorm == 0.0 {
            if let Some(j) = bad_vertex {
                if t.count() >= config.max_evals {
                    return true;
                }
                let dir = inv.column(j) / inv.column(j).norm();
                let mut step = dir * (GAMMA * rho);
                if g.dot(&step) > 0.0 {
                    step = -step;
                }
                offsets.set_row(j, &step.transpose());
                let x = &base + step;
                values[j] = t.eval(x.as_slice());
                order[j] = t.count();
                continue;
            }
            if rho <= config.rho_end {
                return false;
            }
            rho = (rho * 0.5).max(config.rho_end);
            need_reduce = false;
            continue;
        }

        if t.count() >= config.max_evals {
            return true;
        }
        let step = &g * (-rho / gnorm);
        let x = &base + &step;
        let f_new = t.eval(x.as_slice());
        let predicted = rho * gnorm;
        let ratio = (f_base - f_new) / predicted;

        // Replace the vertex whose removal keeps the simplex fattest, with a
        // bias toward distant vertices.
        let lambda = inv.transpose() * &step;
        let j = (0..n)
            .max_by(|&a, &b| {
                let w = |k: usize| lambda[k].abs() * (dist[k] / rho).max(1.0).powi(2);
                w(a).total_cmp(&w(b))
            })
            .unwrap_or(0);
        if lambda[j].abs() > 1e-12 {
            offsets.set_row(j, &step.transpose());
            values[j] = f_new;
            order[j] = t.count();
        }
        if ratio < POOR_RATIO {
            need_reduce = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges() {
        let c = [0.3, -0.7, 1.1, 0.05];
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let cfg = OptimizerConfig {
            max_evals: 200,
            ..Default::default()
        };
        let r = minimize_dfo(f, &[0.0; 4], &cfg);
        let err: f64 = r.x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-2, "err {err} after {} evals", r.evals);
        assert!(r.evals <= 200);
    }

    #[test]
    fn constant_returns_start() {
        let x0 = [0.4, -0.2, 0.9];
        let r = minimize_dfo(|_| 1.0, &x0, &OptimizerConfig::default());
        assert_eq!(r.x, x0.to_vec());
        assert!(!r.capped);
        assert_eq!(r.evals, r.history.len());
    }

    #[test]
    fn piecewise_constant_terminates() {
        let f = |x: &[f64]| ((x[0] * 3.0).floor() + (x[1] * 2.0).floor()).abs();
        let r = minimize_dfo(f, &[0.9, 0.8], &OptimizerConfig::default());
        assert!(!r.capped);
        assert!(r.value <= f(&[0.9, 0.8]));
    }

    #[test]
    fn cap_is_respected() {
        let cfg = OptimizerConfig {
            max_evals: 7,
            ..Default::default()
        };
        let r = minimize_dfo(|x: &[f64]| x.iter().map(|v| (v - 5.0).powi(2)).sum(), &[0.0; 3], &cfg);
        assert!(r.capped);
        assert_eq!(r.evals, 7);
    }

    #[test]
    fn anisotropic_quadratic_six_dims() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (1.0 + 4.0 * i as f64) * (v - 0.5).powi(2))
                .sum::<f64>()
        };
        let r = minimize_dfo(f, &[0.0; 6], &OptimizerConfig::default());
        assert!(r.value < 1e-2, "{} after {} evals", r.value, r.evals);
    }
}
