//! Checks shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfmap::ansatz::{build_he, build_ud, UD_ANGLES};
use qfmap::decompose::{csd, demultiplex, qsd, zyz};
use qfmap::kernel::{
    kernel_matrix, quantum_kernel_exact, quantum_kernel_sampled, zz_feature_map, LinearKernel, RbfKernel,
};
use qfmap::linalg::{direct_sum, haar_unitary, phase_aligned_distance, CMatrix};
use qfmap::simplify::{covariant_style_circuit, peephole, prune_qubits, simplify};
use qfmap::svm::{dual_objective, kkt_violation, train_smo};
use qfmap::{unitary_of, AngleExpr, Circuit, FeatureMap, Gate, Kernel, KernelMatrix, QuantumKernel, SvmConfig, C64};

pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    pub fn all(checks: Vec<Check>) -> Check {
        let pass = checks.iter().all(|c| c.pass);
        let detail = checks
            .iter()
            .map(|c| format!("{}{}", if c.pass { "" } else { "!" }, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Check { pass, detail }
    }
}

pub fn random_x<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

fn random_angle<R: Rng>(rng: &mut R, n_features: usize) -> AngleExpr {
    let coefs: Vec<f64> = (0..n_features).map(|_| rng.random_range(-1.5..1.5)).collect();
    let mut a = AngleExpr::linear(&coefs);
    a.constant = rng.random_range(-1.0..1.0);
    a
}

/// Random gate over every kind, including CZ and identities.
pub fn random_gate<R: Rng>(rng: &mut R, n_qubits: usize, n_features: usize) -> Gate {
    let q = rng.random_range(0..n_qubits);
    let other = |rng: &mut R| (q + rng.random_range(1..n_qubits)) % n_qubits;
    match rng.random_range(0..7) {
        0 => Gate::Identity(q),
        1 => Gate::Hadamard(q),
        2 => Gate::rx(q, random_angle(rng, n_features)),
        3 => Gate::ry(q, random_angle(rng, n_features)),
        4 => Gate::rz(q, random_angle(rng, n_features)),
        5 if n_qubits > 1 => Gate::cnot(q, other(rng)),
        6 if n_qubits > 1 => Gate::cz(q, other(rng)),
        _ => Gate::Hadamard(q),
    }
}

pub fn random_circuit<R: Rng>(rng: &mut R, n_qubits: usize, n_features: usize, len: usize) -> Circuit {
    let gates = (0..len).map(|_| random_gate(rng, n_qubits, n_features)).collect();
    Circuit::from_gates(n_qubits, gates).unwrap()
}

/// Random circuit seeded with cancelling pairs, zero rotations and an idle
/// wire so that the structural passes have work to do.
pub fn reducible_circuit<R: Rng>(rng: &mut R, n_features: usize) -> Circuit {
    let n_qubits = rng.random_range(2..=4);
    let active = n_qubits - 1;
    let mut gates = Vec::new();
    for _ in 0..rng.random_range(4..14) {
        match rng.random_range(0..5) {
            0 => {
                let q = rng.random_range(0..active);
                gates.push(Gate::Hadamard(q));
                gates.push(Gate::Hadamard(q));
            }
            1 if active > 1 => {
                let c = rng.random_range(0..active);
                let t = (c + 1) % active;
                gates.push(Gate::cnot(c, t));
                gates.push(Gate::cnot(c, t));
            }
            2 => gates.push(Gate::rz(rng.random_range(0..active), AngleExpr::zero())),
            _ => gates.push(random_gate(rng, active, n_features)),
        }
    }
    if rng.random_bool(0.5) {
        gates.push(Gate::Hadamard(active));
    }
    Circuit::from_gates(n_qubits, gates).unwrap()
}

// ---------------------------------------------------------------- decomposition

fn haar(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    haar_unitary(dim, rng)
}

pub fn decomposition_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec0);

    let (mut csd_err, mut cs_err) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let u = haar(&mut rng, 4);
        let r = csd(&u).unwrap();
        let h = r.c.len();
        let c = CMatrix::from_diagonal(&DVector::from_iterator(h, r.c.iter().map(|&v| C64::new(v, 0.0))));
        let s = CMatrix::from_diagonal(&DVector::from_iterator(h, r.s.iter().map(|&v| C64::new(v, 0.0))));
        let mut mid = CMatrix::zeros(2 * h, 2 * h);
        mid.view_mut((0, 0), (h, h)).copy_from(&c);
        mid.view_mut((0, h), (h, h)).copy_from(&(-&s));
        mid.view_mut((h, 0), (h, h)).copy_from(&s);
        mid.view_mut((h, h), (h, h)).copy_from(&c);
        let rebuilt = direct_sum(&r.l1, &r.l2) * mid * direct_sum(&r.r1, &r.r2);
        csd_err = csd_err.max((rebuilt - &u).norm());
        cs_err = cs_err.max((&c * &c + &s * &s - CMatrix::identity(h, h)).norm());
    }

    let mut demux_err = 0.0f64;
    for k in 0..50 {
        let dim = if k % 2 == 0 { 2 } else { 4 };
        let (x1, x2) = (haar(&mut rng, dim), haar(&mut rng, dim));
        let r = demultiplex(&x1, &x2).unwrap();
        let d = CMatrix::from_diagonal(&DVector::from_vec(r.d.clone()));
        let e1 = (&r.v * &d * &r.w - &x1).norm();
        let e2 = (&r.v * d.adjoint() * &r.w - &x2).norm();
        demux_err = demux_err.max(e1).max(e2);
    }

    let mut zyz_err = 0.0f64;
    for _ in 0..100 {
        let u = haar(&mut rng, 2);
        let a = zyz(&u).unwrap();
        let circuit = Circuit::from_gates(1, a.gates(0).to_vec()).unwrap();
        let v = unitary_of(&circuit, &[]).unwrap() * C64::from_polar(1.0, a.phase);
        zyz_err = zyz_err.max((v - &u).norm());
    }

    let mut qsd_err = 0.0f64;
    for _ in 0..20 {
        let u = haar(&mut rng, 4);
        let c = qsd(&u).unwrap();
        qsd_err = qsd_err.max(phase_aligned_distance(&unitary_of(&c, &[]).unwrap(), &u));
    }

    Check::all(vec![
        Check::new(csd_err <= 1e-9, format!("csd {csd_err:.1e}")),
        Check::new(cs_err <= 1e-10, format!("c^2+s^2 {cs_err:.1e}")),
        Check::new(demux_err <= 1e-9, format!("demux {demux_err:.1e}")),
        Check::new(zyz_err <= 1e-10, format!("zyz {zyz_err:.1e}")),
        Check::new(qsd_err <= 1e-8, format!("qsd {qsd_err:.1e}")),
    ])
}

// ---------------------------------------------------------------- kernels

fn kernel_maps(rng: &mut ChaCha8Rng) -> Vec<FeatureMap> {
    let mut maps = vec![zz_feature_map()];
    let he: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    maps.push(build_he(4, &he).unwrap().into());
    let ud: Vec<f64> = (0..2 * UD_ANGLES).map(|_| rng.random_range(-1.0..1.0)).collect();
    maps.push(build_ud(&ud).unwrap().into());
    for _ in 0..5 {
        let nq = rng.random_range(1..=3);
        let len = rng.random_range(3..16);
        maps.push(random_circuit(rng, nq, 2, len).into());
    }
    maps
}

/// Exact-mode diagonal, symmetry and PSD checks on 40-sample sets, and
/// binomial 3-sigma bounds for sampled entries at 1e5 shots.
pub fn kernel_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e41);
    let (mut diag, mut asym, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for map in kernel_maps(&mut rng) {
        let xs: Vec<Vec<f64>> = (0..40).map(|_| random_x(&mut rng, 2)).collect();
        for x in &xs {
            diag = diag.max((quantum_kernel_exact(&map, x, x).unwrap() - 1.0).abs());
        }
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len().min(i + 6) {
                let kij = quantum_kernel_exact(&map, &xs[i], &xs[j]).unwrap();
                let kji = quantum_kernel_exact(&map, &xs[j], &xs[i]).unwrap();
                asym = asym.max((kij - kji).abs());
            }
        }
        let k = kernel_matrix(&QuantumKernel::exact(map.clone()), &xs, &xs).unwrap();
        min_eig = min_eig.min(k.min_eigenvalue());
    }

    let shots = 100_000u64;
    let map = zz_feature_map();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
        .map(|_| (random_x(&mut rng, 2), random_x(&mut rng, 2)))
        .collect();
    let mut within = 0;
    for trial in 0..100u64 {
        let (xi, xj) = &pairs[trial as usize % pairs.len()];
        let p = quantum_kernel_exact(&map, xi, xj).unwrap();
        let mut trng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let est = quantum_kernel_sampled(&map, xi, xj, shots, &mut trng).unwrap();
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        if (est - p).abs() <= 3.0 * sigma {
            within += 1;
        }
    }

    Check::all(vec![
        Check::new(diag <= 1e-10, format!("|K(x,x)-1| {diag:.1e}")),
        Check::new(asym <= 1e-10, format!("asymmetry {asym:.1e}")),
        Check::new(min_eig >= -1e-8, format!("min eigenvalue {min_eig:.1e}")),
        Check::new(within >= 99, format!("sampled within 3 sigma {within}/100")),
    ])
}

// ---------------------------------------------------------------- SVM oracle

pub struct SmallProblem {
    pub name: String,
    pub k: KernelMatrix,
    pub y: Vec<f64>,
    pub c: f64,
}

/// Fixed set of datasets with at most six points, each paired with a kernel
/// and a box constraint.
pub fn svm_fixtures() -> Vec<SmallProblem> {
    let mut out = Vec::new();
    let two = vec![vec![0.0], vec![2.0]];
    out.push(SmallProblem {
        name: "two-point line".into(),
        k: kernel_matrix(&LinearKernel, &two, &two).unwrap(),
        y: vec![1.0, -1.0],
        c: 1000.0,
    });
    let zz = QuantumKernel::exact(zz_feature_map());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5u64);
    for idx in 0..45 {
        let n = 2 + idx % 5;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| random_x(&mut rng, 2)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[n - 1] = -1.0;
        let (kname, kernel): (&str, &dyn Kernel) = match idx % 3 {
            0 => ("linear", &LinearKernel),
            1 => ("rbf", &RbfKernel { gamma: 0.5 }),
            _ => ("zz", &zz),
        };
        let c = [1000.0, 10.0, 1.0][(idx / 3) % 3];
        out.push(SmallProblem {
            name: format!("{kname} n={n} C={c} #{idx}"),
            k: kernel_matrix(kernel, &xs, &xs).unwrap(),
            y,
            c,
        });
    }
    out
}

/// Exact dual maximum by enumerating each multiplier's status (zero, at the
/// box bound, free) and solving the stationarity system on the free set.
pub fn brute_force_dual(k: &KernelMatrix, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k.get(i, j));
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let status: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let mut alpha: Vec<f64> = status.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let m = free.len();
        // Unknowns: free alphas then the multiplier of sum(alpha y) = 0.
        let mut a = DMatrix::zeros(m + 1, m + 1);
        let mut b = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = q[(i, j)];
            }
            a[(r, m)] = -y[i];
            let fixed: f64 = (0..n).filter(|&j| status[j] == 1).map(|j| q[(i, j)] * c).sum();
            b[r] = 1.0 - fixed;
        }
        for (s, &j) in free.iter().enumerate() {
            a[(m, s)] = y[j];
        }
        b[m] = -(0..n).filter(|&j| status[j] == 1).map(|j| y[j] * c).sum::<f64>();
        let sol = match a.clone().svd(true, true).solve(&b, 1e-12) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if (&a * &sol - &b).norm() > 1e-8 * (1.0 + b.norm()) {
            continue;
        }
        for (r, &i) in free.iter().enumerate() {
            alpha[i] = sol[r];
        }
        let feasible = free.iter().all(|&i| alpha[i] >= -1e-9 && alpha[i] <= c + 1e-9);
        let balanced = alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-8 * (1.0 + c);
        if feasible && balanced {
            best = best.max(dual_objective(&alpha, k, y));
        }
    }
    best
}

pub fn svm_oracle_suite() -> Check {
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut failures = Vec::new();
    let fixtures = svm_fixtures();
    for p in &fixtures {
        let cfg = SvmConfig {
            c: p.c,
            ..SvmConfig::default()
        };
        let model = train_smo(&p.k, &p.y, &cfg).unwrap();
        let gap = (dual_objective(&model.alphas, &p.k, &p.y) - brute_force_dual(&p.k, &p.y, p.c)).abs();
        let kkt = kkt_violation(&model, &p.k);
        worst_gap = worst_gap.max(gap);
        worst_kkt = worst_kkt.max(kkt);
        if gap > 1e-4 || kkt > cfg.tol {
            failures.push(format!("{} (gap {gap:.1e}, kkt {kkt:.1e})", p.name));
        }
    }
    Check::new(
        failures.is_empty(),
        format!(
            "{} problems, max objective gap {worst_gap:.1e}, max KKT residual {worst_kkt:.1e}{}",
            fixtures.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", failures.join(", "))
            }
        ),
    )
}

// ---------------------------------------------------------------- simplify

fn max_kernel_change(a: &Circuit, b: &Circuit, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let (fa, fb) = (FeatureMap::from(a.clone()), FeatureMap::from(b.clone()));
    pairs
        .iter()
        .map(|(xi, xj)| (quantum_kernel_exact(&fa, xi, xj).unwrap() - quantum_kernel_exact(&fb, xi, xj).unwrap()).abs())
        .fold(0.0, f64::max)
}

pub fn simplify_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5111);
    let mut worst = 0.0f64;
    let mut removed = 0usize;
    for _ in 0..50 {
        let c = reducible_circuit(&mut rng, 2);
        let pairs: Vec<_> = (0..10)
            .map(|_| (random_x(&mut rng, 2), random_x(&mut rng, 2)))
            .collect();
        let p = peephole(&c);
        let pr = prune_qubits(&c);
        let both = prune_qubits(&p);
        removed += c.len() - both.len();
        worst = worst
            .max(max_kernel_change(&c, &p, &pairs))
            .max(max_kernel_change(&c, &pr, &pairs))
            .max(max_kernel_change(&c, &both, &pairs));
    }

    let bundled = covariant_style_circuit();
    let (out, report) = simplify(&bundled);
    let h_before = bundled.counts().hadamard;
    let h_after = out.counts().hadamard;
    Check::all(vec![
        Check::new(
            worst <= 1e-12 && removed > 0,
            format!("50 random circuits: max |dK| {worst:.1e}, {removed} gates removed"),
        ),
        Check::new(
            report.cost_before == 41 && report.cost_after <= 33 && h_before - h_after == 4,
            format!(
                "bundled circuit cost {} -> {}, {} Hadamards removed",
                report.cost_before,
                report.cost_after,
                h_before - h_after
            ),
        ),
    ])
}
