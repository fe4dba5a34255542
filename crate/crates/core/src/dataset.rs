//! Labelled datasets, synthetic generators and CSV I/O.
//!
//! CSV layout: a header `x1,...,xd,label` followed by one sample per line,
//! features as decimal literals and the label as `+1` or `-1`.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::{zz_feature_map, FeatureMap};
use crate::linalg::{haar_unitary, CMatrix};
use crate::C64;

/// Train/test sizes used for the benchmark reproductions.
pub const BENCH_TRAIN: usize = 100;
pub const BENCH_TEST: usize = 40;
pub const DEFAULT_MOONS_NOISE: f64 = 0.1;
pub const DEFAULT_ADHOC_GAP: f64 = 0.3;
/// Rejections tolerated by the ad hoc sampler before giving up.
pub const ADHOC_MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
}

impl Dataset {
    /// Unsplit dataset: every row is in the train partition.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidLabel(bad));
        }
        let dim = features.first().map_or(0, Vec::len);
        if let Some(row) = features.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        let n = labels.len();
        Ok(Self {
            features,
            labels,
            train_idx: (0..n).collect(),
            test_idx: Vec::new(),
        })
    }

    /// Concatenates a train set and a test set and marks the split.
    pub fn from_parts(train: Dataset, test: Dataset) -> Result<Self> {
        if !train.is_empty() && !test.is_empty() && train.dim() != test.dim() {
            return Err(Error::DimensionMismatch {
                expected: train.dim(),
                got: test.dim(),
            });
        }
        let n_train = train.len();
        let mut features = train.features;
        features.extend(test.features);
        let mut labels = train.labels;
        labels.extend(test.labels);
        let n = labels.len();
        let ds = Self {
            features,
            labels,
            train_idx: (0..n_train).collect(),
            test_idx: (n_train..n).collect(),
        };
        ds.check_split()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn has_split(&self) -> bool {
        !self.test_idx.is_empty()
    }

    fn gather(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    pub fn train(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.gather(&self.train_idx)
    }

    pub fn test(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.gather(&self.test_idx)
    }

    pub fn train_set(&self) -> Dataset {
        let (x, y) = self.train();
        Dataset::new(x, y).expect("subset of a valid dataset")
    }

    pub fn test_set(&self) -> Dataset {
        let (x, y) = self.test();
        Dataset::new(x, y).expect("subset of a valid dataset")
    }

    /// Keeps only the listed feature columns, in order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        let dim = self.dim();
        if let Some(&c) = columns.iter().find(|&&c| c >= dim) {
            return Err(Error::InputDimension { index: c, dim });
        }
        Ok(Self {
            features: self
                .features
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            ..self.clone()
        })
    }

    fn check_split(&self) -> Result<()> {
        for idx in [&self.train_idx, &self.test_idx] {
            let pos = idx.iter().filter(|&&i| self.labels[i] > 0.0).count();
            if pos == 0 || pos == idx.len() {
                return Err(Error::DegenerateLabels);
            }
        }
        Ok(())
    }

    /// Stratified split: `round(train_fraction * n)` rows go to train, spread
    /// over the classes by largest remainder so each class keeps its
    /// proportion within one sample.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<Dataset> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let n = self.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut classes: Vec<Vec<usize>> = [1.0, -1.0]
            .iter()
            .map(|&c| (0..n).filter(|&i| self.labels[i] == c).collect())
            .collect();
        for class in &mut classes {
            class.shuffle(&mut rng);
        }
        let n_train = (train_fraction * n as f64).round() as usize;
        let exact: Vec<f64> = classes.iter().map(|c| train_fraction * c.len() as f64).collect();
        let mut take: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .partial_cmp(&(exact[a] - exact[a].floor()))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut missing = n_train.saturating_sub(take.iter().sum());
        for &c in order.iter().cycle().take(2 * classes.len()) {
            if missing == 0 {
                break;
            }
            if take[c] < classes[c].len() {
                take[c] += 1;
                missing -= 1;
            }
        }
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for (class, &t) in classes.iter().zip(&take) {
            train_idx.extend_from_slice(&class[..t]);
            test_idx.extend_from_slice(&class[t..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        let ds = Self {
            train_idx,
            test_idx,
            ..self.clone()
        };
        ds.check_split()?;
        Ok(ds)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        out.write_record(&header).map_err(csv_err)?;
        for (row, &label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            rec.push(if label > 0.0 { "+1".into() } else { "-1".into() });
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = reader.headers().map_err(csv_err)?.clone();
        let width = headers.len();
        if width < 2 {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header x1,...,xd,label".into(),
            });
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != width {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {width} fields, found {}", rec.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("'{s}' is not a number"),
                })
            };
            let row = rec.iter().take(width - 1).map(parse).collect::<Result<Vec<_>>>()?;
            let label = parse(&rec[width - 1])?;
            if label != 1.0 && label != -1.0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("label must be +1 or -1, found '{}'", &rec[width - 1]),
                });
            }
            features.push(row);
            labels.push(label);
        }
        Dataset::new(features, labels)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Two interleaving half circles. Class `+1` is `(cos t, sin t)`, class `-1`
/// is `(1 - cos t, 0.5 - sin t)`, with `t` evenly spaced on `[0, pi]`,
/// plus isotropic Gaussian noise. Rows are shuffled.
pub fn make_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("moons needs an even n >= 4, got {n}")));
    }
    if noise_sd.is_nan() || noise_sd < 0.0 {
        return Err(Error::Config("noise must be non-negative".into()));
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    for i in 0..half {
        let t = std::f64::consts::PI * i as f64 / (half - 1) as f64;
        rows.push((vec![t.cos(), t.sin()], 1.0));
    }
    for i in 0..half {
        let t = std::f64::consts::PI * i as f64 / (half - 1) as f64;
        rows.push((vec![1.0 - t.cos(), 0.5 - t.sin()], -1.0));
    }
    rows.shuffle(&mut rng);
    if noise_sd > 0.0 {
        let normal = Normal::new(0.0, noise_sd).expect("valid sd");
        for (x, _) in &mut rows {
            for v in x.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let (features, labels) = rows.into_iter().unzip();
    Dataset::new(features, labels)
}

/// Labelling oracle for the ad hoc dataset: a fixed Haar-random two-qubit
/// unitary `V` and the parity observable measured after it on the
/// second-order Pauli-Z feature-map state.
#[derive(Debug, Clone)]
pub struct AdhocOracle {
    map: FeatureMap,
    observable: CMatrix,
}

impl AdhocOracle {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ad0c);
        let v = haar_unitary(4, &mut rng);
        let parity = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [1.0, -1.0, -1.0, 1.0].iter().map(|&d| C64::new(d, 0.0)).collect(),
        ));
        Self {
            map: zz_feature_map(),
            observable: v.adjoint() * parity * v,
        }
    }

    /// `<Phi(x)| V^dagger (Z (x) Z) V |Phi(x)>`.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        let state = self.map.state(x)?;
        let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok((psi.adjoint() * &self.observable * &psi)[(0, 0)].re)
    }
}

/// Rejection-samples `x` uniformly from `[0, 2 pi]^2` and keeps it with label
/// `sign(m(x))` when `|m(x)| >= gap` and that class still needs samples.
pub fn make_adhoc(n: usize, gap: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::Config(format!("ad hoc needs n >= 4, got {n}")));
    }
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::Config("gap must be positive".into()));
    }
    let oracle = AdhocOracle::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quota = [n - n / 2, n / 2];
    let mut counts = [0usize; 2];
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut rejections = 0usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    while rows.len() < n {
        let x = vec![rng.random_range(0.0..two_pi), rng.random_range(0.0..two_pi)];
        let m = oracle.margin(&x)?;
        let class = usize::from(m < 0.0);
        if m.abs() >= gap && counts[class] < quota[class] {
            counts[class] += 1;
            rows.push((x, if class == 0 { 1.0 } else { -1.0 }));
        } else {
            rejections += 1;
            if rejections > ADHOC_MAX_REJECTIONS {
                return Err(Error::SamplingStall(rejections));
            }
        }
    }
    let (features, labels) = rows.into_iter().unzip();
    Dataset::new(features, labels)
}

/// Moons with the benchmark sizes, split 100/40.
pub fn moons_benchmark(seed: u64) -> Result<Dataset> {
    make_moons(BENCH_TRAIN + BENCH_TEST, DEFAULT_MOONS_NOISE, seed)?.split(bench_fraction(), seed)
}

/// Ad hoc data with the benchmark sizes, split 100/40.
pub fn adhoc_benchmark(seed: u64) -> Result<Dataset> {
    make_adhoc(BENCH_TRAIN + BENCH_TEST, DEFAULT_ADHOC_GAP, seed)?.split(bench_fraction(), seed)
}

pub fn bench_fraction() -> f64 {
    BENCH_TRAIN as f64 / (BENCH_TRAIN + BENCH_TEST) as f64
}
