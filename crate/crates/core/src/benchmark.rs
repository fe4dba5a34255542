//! Method comparison on the moons and ad hoc benchmarks, and decision
//! grids for plotting.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::ansatz::{train, AnsatzSpec};
use crate::dataset::{adhoc_benchmark, moons_benchmark, Dataset};
use crate::error::{Error, Result};
use crate::ga::{evolve, GaConfig};
use crate::kernel::{zz_feature_map, EvalMode, FeatureMap, Kernel, LinearKernel, QuantumKernel, RbfKernel};
use crate::optim::OptimizerConfig;
use crate::simplify::peephole;
use crate::svm::{fit_and_score, test_accuracy, SvmConfig, SvmModel};

pub const MOONS_RBF_GAMMA: f64 = 0.5;
pub const ADHOC_RBF_GAMMA: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub method: String,
    pub dataset: String,
    /// `None` when the method failed.
    pub accuracy: Option<f64>,
    /// Absent for classical kernels.
    pub gate_cost: Option<usize>,
    /// Cost before peephole rewriting, when it differs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_gate_cost: Option<usize>,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub data_seed: u64,
    pub moons_ga: GaConfig,
    pub adhoc_ga: GaConfig,
    pub he_depth_moons: usize,
    pub he_depth_adhoc: usize,
    pub ansatz_seed: u64,
    pub optimizer: OptimizerConfig,
    pub svm: SvmConfig,
    pub shots: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            data_seed: 0,
            moons_ga: GaConfig::default(),
            adhoc_ga: GaConfig {
                weight: 80.0,
                ..GaConfig::default()
            },
            he_depth_moons: 1,
            he_depth_adhoc: 4,
            ansatz_seed: 0,
            optimizer: OptimizerConfig::default(),
            svm: SvmConfig::default(),
            shots: 0,
        }
    }
}

struct Outcome {
    accuracy: f64,
    gate_cost: Option<usize>,
    raw_gate_cost: Option<usize>,
}

fn timed(method: &str, dataset: &str, f: impl FnOnce() -> Result<Outcome>) -> BenchmarkRow {
    let start = Instant::now();
    let result = f();
    let wall_time_seconds = start.elapsed().as_secs_f64();
    log::info!("{method} on {dataset}: {:.1}s", wall_time_seconds);
    match result {
        Ok(o) => BenchmarkRow {
            method: method.into(),
            dataset: dataset.into(),
            accuracy: Some(o.accuracy),
            gate_cost: o.gate_cost,
            raw_gate_cost: o.raw_gate_cost,
            wall_time_seconds,
            error: None,
        },
        Err(e) => BenchmarkRow {
            method: method.into(),
            dataset: dataset.into(),
            accuracy: None,
            gate_cost: None,
            raw_gate_cost: None,
            wall_time_seconds,
            error: Some(e.to_string()),
        },
    }
}

fn classical<K: Kernel>(kernel: &K, data: &Dataset, svm: &SvmConfig) -> Result<Outcome> {
    Ok(Outcome {
        accuracy: test_accuracy(kernel, data, svm)?,
        gate_cost: None,
        raw_gate_cost: None,
    })
}

/// Runs every method on one dataset. A failing method yields a row with an
/// error and the run continues.
pub fn run_dataset(
    name: &str,
    data: &Dataset,
    rbf_gamma: f64,
    ga: &GaConfig,
    he_depth: usize,
    cfg: &BenchmarkConfig,
) -> Vec<BenchmarkRow> {
    let mode = EvalMode::from_shots(cfg.shots, cfg.data_seed);
    let mut rows = vec![
        timed("SVM-linear", name, || classical(&LinearKernel, data, &cfg.svm)),
        timed("SVM-RBF", name, || {
            classical(&RbfKernel { gamma: rbf_gamma }, data, &cfg.svm)
        }),
        timed("QSVM-ZZ", name, || {
            let map = zz_feature_map();
            let cost = map.gate_cost();
            Ok(Outcome {
                accuracy: test_accuracy(&QuantumKernel::with_mode(map, mode), data, &cfg.svm)?,
                gate_cost: Some(cost),
                raw_gate_cost: None,
            })
        }),
        timed("QSVM-GA", name, || {
            let r = evolve(
                &GaConfig {
                    shots: cfg.shots,
                    ..ga.clone()
                },
                data,
            )?;
            let simplified = peephole(&r.circuit).gate_cost();
            Ok(Outcome {
                accuracy: r.eval.accuracy,
                gate_cost: Some(simplified),
                raw_gate_cost: (simplified != r.eval.gate_cost).then_some(r.eval.gate_cost),
            })
        }),
    ];
    for (method, spec) in [
        ("QSVM-HE", AnsatzSpec::hardware_efficient(he_depth)),
        ("QSVM-UD", AnsatzSpec::unitary_decomposition()),
    ] {
        rows.push(timed(method, name, || {
            let r = train(&spec, data, &cfg.optimizer, &cfg.svm, mode, cfg.ansatz_seed)?;
            let raw = r.circuit.gate_cost();
            let simplified = peephole(&r.circuit).gate_cost();
            Ok(Outcome {
                accuracy: r.accuracy,
                gate_cost: Some(simplified),
                raw_gate_cost: (simplified != raw).then_some(raw),
            })
        }));
    }
    rows
}

/// All methods on both benchmark datasets.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>> {
    let moons = moons_benchmark(cfg.data_seed)?;
    let adhoc = adhoc_benchmark(cfg.data_seed)?;
    let mut rows = run_dataset("moons", &moons, MOONS_RBF_GAMMA, &cfg.moons_ga, cfg.he_depth_moons, cfg);
    rows.extend(run_dataset(
        "adhoc",
        &adhoc,
        ADHOC_RBF_GAMMA,
        &cfg.adhoc_ga,
        cfg.he_depth_adhoc,
        cfg,
    ));
    Ok(rows)
}

/// Aligned text table with one line per method and the datasets side by side.
pub fn render_table(rows: &[BenchmarkRow]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "Method");
    for d in &datasets {
        let _ = write!(out, " | {:^26}", d);
    }
    out.push('\n');
    let _ = write!(out, "{:<12}", "");
    for _ in &datasets {
        let _ = write!(out, " | {:>8} {:>7} {:>9}", "acc", "gate", "time");
    }
    out.push('\n');
    out.push_str(&"-".repeat(12 + datasets.len() * 29));
    out.push('\n');
    for m in &methods {
        let _ = write!(out, "{:<12}", m);
        for d in &datasets {
            match rows.iter().find(|r| r.method == *m && r.dataset == *d) {
                Some(r) => {
                    let acc = r
                        .accuracy
                        .map_or("failed".to_string(), |a| format!("{:.1}%", 100.0 * a));
                    let gate = match (r.gate_cost, r.raw_gate_cost) {
                        (Some(g), Some(raw)) => format!("{g}/{raw}"),
                        (Some(g), None) => g.to_string(),
                        _ => String::new(),
                    };
                    let _ = write!(out, " | {:>8} {:>7} {:>8.2}s", acc, gate, r.wall_time_seconds);
                }
                None => {
                    let _ = write!(out, " | {:>26}", "");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// One point of a decision-value grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub decision: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    pub gate_cost: usize,
    pub support_vectors: usize,
}

pub struct Evaluated {
    pub report: EvalReport,
    pub grid: Vec<GridPoint>,
    pub model: SvmModel,
}

/// Trains a QSVM and samples its decision function on a `resolution x
/// resolution` grid spanning the bounding box of all samples.
pub fn evaluate_with_grid(
    map: &FeatureMap,
    data: &Dataset,
    svm: &SvmConfig,
    mode: EvalMode,
    resolution: usize,
) -> Result<Evaluated> {
    let needed = map.circuit.required_dim().saturating_sub(map.derived.len());
    if data.dim() < needed || (data.dim() != 2 && resolution > 0) {
        return Err(Error::DimensionMismatch {
            expected: needed.max(2),
            got: data.dim(),
        });
    }
    let kernel = QuantumKernel::with_mode(map.clone(), mode);
    let eval = fit_and_score(&kernel, data, svm)?;
    let report = EvalReport {
        test_accuracy: eval.test_accuracy,
        train_accuracy: eval.train_accuracy,
        gate_cost: map.gate_cost(),
        support_vectors: eval.model.support_indices.len(),
    };
    if resolution == 0 {
        return Ok(Evaluated {
            report,
            grid: Vec::new(),
            model: eval.model,
        });
    }
    let (lo, hi) = data
        .features()
        .iter()
        .fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(mut lo, mut hi), x| {
            for k in 0..2 {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
            (lo, hi)
        });
    let axis = |k: usize, i: usize| {
        if resolution == 1 {
            (lo[k] + hi[k]) / 2.0
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (resolution - 1) as f64
        }
    };
    let points: Vec<Vec<f64>> = (0..resolution)
        .flat_map(|j| (0..resolution).map(move |i| (i, j)))
        .map(|(i, j)| vec![axis(0, i), axis(1, j)])
        .collect();
    let (xtr, _) = data.train();
    let decision = eval.model.decision_values(&kernel.cross(&points, &xtr)?)?;
    let grid = points
        .iter()
        .zip(decision)
        .map(|(p, d)| GridPoint {
            x: p[0],
            y: p[1],
            decision: d,
        })
        .collect();
    Ok(Evaluated {
        report,
        grid,
        model: eval.model,
    })
}

pub fn write_grid_csv<W: std::io::Write>(grid: &[GridPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "decision"])
        .map_err(std::io::Error::other)?;
    for p in grid {
        out.write_record([p.x.to_string(), p.y.to_string(), p.decision.to_string()])
            .map_err(std::io::Error::other)?;
    }
    out.flush()?;
    Ok(())
}
