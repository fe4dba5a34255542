//! Unitary-to-circuit compilation.
//!
//! A `2^n x 2^n` unitary is split by the cosine-sine decomposition into
//! block-diagonal factors around a multiplexed `RY`. Each block-diagonal
//! factor `X1 (+) X2` is demultiplexed into `(I (x) V)(D (+) D^dagger)(I (x) W)`,
//! where the middle factor is a multiplexed `RZ`. Recursing on `V` and `W`
//! until single-qubit blocks remain, which are emitted as `RZ RY RZ`, gives
//! the quantum Shannon decomposition.
//!
//! Blocks are indexed by the most significant qubit, so multiplexed
//! rotations target qubit `m - 1` and are selected by qubits `0..m-1`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::circuit::{AngleExpr, Axis, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{diagonal, direct_sum, unitarity_error, CMatrix};
use crate::C64;

/// Largest register `qsd` accepts.
pub const MAX_QSD_QUBITS: usize = 4;

const UNITARY_TOL: f64 = 1e-8;
/// Columns of the lower-left block below this norm carry no direction.
const NULL_COLUMN: f64 = 1e-12;

fn require_unitary(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = unitarity_error(m);
    if deviation > tol {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// `M = (L1 (+) L2) [[C, -S], [S, C]] (R1 (+) R2)` with real diagonal
/// `C = diag(cos theta)`, `S = diag(sin theta)`, `theta` non-decreasing in
/// `[0, pi/2]`.
#[derive(Debug, Clone)]
pub struct CsdResult {
    pub l1: CMatrix,
    pub l2: CMatrix,
    pub r1: CMatrix,
    pub r2: CMatrix,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
}

impl CsdResult {
    pub fn thetas(&self) -> Vec<f64> {
        self.c.iter().zip(&self.s).map(|(c, s)| s.atan2(*c)).collect()
    }

    /// The middle cosine-sine factor.
    pub fn cs_matrix(&self) -> CMatrix {
        let n = self.c.len();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let (c, s) = (C64::new(self.c[k], 0.0), C64::new(self.s[k], 0.0));
            m[(k, k)] = c;
            m[(k, k + n)] = -s;
            m[(k + n, k)] = s;
            m[(k + n, k + n)] = c;
        }
        m
    }

    pub fn reconstruct(&self) -> CMatrix {
        direct_sum(&self.l1, &self.l2) * self.cs_matrix() * direct_sum(&self.r1, &self.r2)
    }
}

/// Cosine-sine decomposition of an even-dimensional unitary.
///
/// `L1, C, R1` come from an SVD of the upper-left block with singular values
/// in non-increasing order. `L2` is obtained by normalizing the columns of
/// `M10 R1^dagger` in order of decreasing sine and Gram-Schmidt
/// orthogonalizing them, completing any null columns from the standard
/// basis. `R2` is solved row by row from whichever of `M01`, `M11` has the
/// larger coefficient.
pub fn csd(m: &CMatrix) -> Result<CsdResult> {
    require_unitary(m, UNITARY_TOL)?;
    let dim = m.nrows();
    if !dim.is_multiple_of(2) || dim == 0 {
        return Err(Error::Shape(format!(
            "cosine-sine decomposition needs an even dimension, got {dim}"
        )));
    }
    let n = dim / 2;
    let m00 = m.view((0, 0), (n, n)).into_owned();
    let m01 = m.view((0, n), (n, n)).into_owned();
    let m10 = m.view((n, 0), (n, n)).into_owned();
    let m11 = m.view((n, n), (n, n)).into_owned();

    let svd = m00.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut l1 = CMatrix::zeros(n, n);
    let mut r1 = CMatrix::zeros(n, n);
    let mut c = vec![0.0; n];
    for (k, &src) in order.iter().enumerate() {
        // Fix the phase freedom of each singular pair: largest entry of the
        // left vector real and positive.
        let col = u.column(src);
        let pivot = col.iter().fold(
            C64::new(0.0, 0.0),
            |best, z| if z.norm() > best.norm() { *z } else { best },
        );
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        l1.set_column(k, &(col * phase));
        r1.set_row(k, &(v_t.row(src) * phase.conj()));
        c[k] = svd.singular_values[src].min(1.0);
    }

    // Columns of Y = M10 R1^dagger are orthogonal with norms sin(theta_k).
    let y = &m10 * r1.adjoint();
    let mut l2 = CMatrix::zeros(n, n);
    let mut s = vec![0.0; n];
    let mut by_sine: Vec<usize> = (0..n).collect();
    by_sine.sort_by(|&a, &b| {
        y.column(b)
            .norm()
            .partial_cmp(&y.column(a).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut null_slots = Vec::new();
    for &k in &by_sine {
        let yk = y.column(k).into_owned();
        if yk.norm() <= NULL_COLUMN {
            null_slots.push(k);
            continue;
        }
        match orthonormalize(&yk, &basis) {
            Some(q) => {
                s[k] = q.dotc(&yk).re.max(0.0);
                l2.set_column(k, &q);
                basis.push(q);
            }
            None => null_slots.push(k),
        }
    }
    null_slots.sort_unstable();
    let mut candidates = (0..n).map(|j| {
        let mut e = DVector::<C64>::zeros(n);
        e[j] = C64::new(1.0, 0.0);
        e
    });
    for k in null_slots {
        let q = loop {
            let e = candidates
                .next()
                .ok_or_else(|| Error::Shape("basis completion failed".into()))?;
            if let Some(q) = orthonormalize(&e, &basis) {
                break q;
            }
        };
        s[k] = q.dotc(&y.column(k).into_owned()).re.max(0.0);
        l2.set_column(k, &q);
        basis.push(q);
    }

    let a = l1.adjoint() * &m01;
    let b = l2.adjoint() * &m11;
    let mut r2 = CMatrix::zeros(n, n);
    for k in 0..n {
        let row = if s[k] > c[k] {
            a.row(k) * C64::new(-1.0 / s[k], 0.0)
        } else {
            b.row(k) * C64::new(1.0 / c[k], 0.0)
        };
        r2.set_row(k, &row);
    }
    for k in 0..n {
        let theta = s[k].atan2(c[k]);
        c[k] = theta.cos();
        s[k] = theta.sin();
    }
    Ok(CsdResult { l1, l2, r1, r2, c, s })
}

/// Twice-iterated Gram-Schmidt of `v` against an orthonormal set.
fn orthonormalize(v: &DVector<C64>, basis: &[DVector<C64>]) -> Option<DVector<C64>> {
    let norm0 = v.norm();
    let mut w = v.clone();
    for _ in 0..2 {
        for q in basis {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
    }
    let norm = w.norm();
    if norm <= 1e-6 * norm0 || norm == 0.0 {
        None
    } else {
        Some(w / C64::new(norm, 0.0))
    }
}

/// `X1 = V D W`, `X2 = V D^dagger W`.
#[derive(Debug, Clone)]
pub struct DemuxResult {
    pub v: CMatrix,
    /// Unit-modulus diagonal of `D`.
    pub d: Vec<C64>,
    pub w: CMatrix,
}

impl DemuxResult {
    pub fn d_matrix(&self) -> CMatrix {
        diagonal(&self.d)
    }

    pub fn reconstruct(&self) -> (CMatrix, CMatrix) {
        let d = self.d_matrix();
        (&self.v * &d * &self.w, &self.v * d.adjoint() * &self.w)
    }
}

/// Demultiplexes `X1 (+) X2`. `V` holds the Schur vectors of `X1 X2^dagger`,
/// which form a unitary basis even when eigenvalues repeat, and `D` is the
/// principal square root of its eigenvalues.
pub fn demultiplex(x1: &CMatrix, x2: &CMatrix) -> Result<DemuxResult> {
    require_unitary(x1, UNITARY_TOL)?;
    require_unitary(x2, UNITARY_TOL)?;
    if x1.shape() != x2.shape() {
        return Err(Error::Shape(format!(
            "demultiplex blocks differ in size: {:?} vs {:?}",
            x1.shape(),
            x2.shape()
        )));
    }
    let a = x1 * x2.adjoint();
    let (v, t) = a
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Shape("Schur iteration did not converge".into()))?
        .unpack();
    let d: Vec<C64> = t
        .diagonal()
        .iter()
        .map(|lambda| {
            let unit = if lambda.norm() > 0.0 {
                lambda / lambda.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            C64::from_polar(1.0, unit.arg() / 2.0)
        })
        .collect();
    let w = diagonal(&d).adjoint() * v.adjoint() * x1;
    Ok(DemuxResult { v, d, w })
}

/// `U = e^{i phase} RZ(alpha) RY(beta) RZ(gamma)`, `beta` in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phase: f64,
}

impl ZyzAngles {
    pub fn matrix(&self) -> CMatrix {
        use crate::linalg::from_2x2;
        use crate::statevector::rotation_matrix;
        let rz_a = from_2x2(&rotation_matrix(Axis::Z, self.alpha));
        let ry = from_2x2(&rotation_matrix(Axis::Y, self.beta));
        let rz_g = from_2x2(&rotation_matrix(Axis::Z, self.gamma));
        rz_a * ry * rz_g * C64::from_polar(1.0, self.phase)
    }

    /// Gates in circuit order: `RZ(gamma)`, `RY(beta)`, `RZ(alpha)` on `qubit`.
    pub fn gates(&self, qubit: usize) -> [Gate; 3] {
        [
            Gate::rz(qubit, AngleExpr::constant(self.gamma)),
            Gate::ry(qubit, AngleExpr::constant(self.beta)),
            Gate::rz(qubit, AngleExpr::constant(self.alpha)),
        ]
    }
}

/// Euler ZYZ angles of a 2x2 unitary, phase included.
pub fn zyz(u: &CMatrix) -> Result<ZyzAngles> {
    if u.shape() != (2, 2) {
        return Err(Error::Shape(format!(
            "ZYZ needs a 2x2 matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    require_unitary(u, 1e-10)?;
    Ok(zyz_unchecked(u))
}

fn zyz_unchecked(u: &CMatrix) -> ZyzAngles {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.arg() / 2.0;
    let rot = C64::from_polar(1.0, -phase);
    // SU(2) part: [[a, -b*], [b, a*]].
    let a = u[(0, 0)] * rot;
    let b = u[(1, 0)] * rot;
    let beta = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-14 { -2.0 * a.arg() } else { 0.0 };
    let diff = if b.norm() > 1e-14 { 2.0 * b.arg() } else { 0.0 };
    ZyzAngles {
        alpha: (sum + diff) / 2.0,
        beta,
        gamma: (sum - diff) / 2.0,
        phase,
    }
}

/// Multiplexed rotation about `axis` on `target`: when the select qubits
/// hold the value `k` (bit `b` of `k` is qubit `selects[b]`), the target
/// receives `RotA(angles[k])`. Compiled recursively into rotations and
/// CNOTs: `mux(sum/2) CNOT mux(diff/2) CNOT` on the highest select.
pub fn compile_multiplexed_rotation(
    axis: Axis,
    target: usize,
    selects: &[usize],
    angles: &[AngleExpr],
) -> Result<Vec<Gate>> {
    if angles.len() != 1usize << selects.len() {
        return Err(Error::DimensionMismatch {
            expected: 1usize << selects.len(),
            got: angles.len(),
        });
    }
    if selects.contains(&target) {
        return Err(Error::InvalidCircuit("target qubit is also a select qubit".into()));
    }
    let mut gates = Vec::new();
    mux_rec(axis, target, selects, angles, &mut gates);
    Ok(gates)
}

fn mux_rec(axis: Axis, target: usize, selects: &[usize], angles: &[AngleExpr], out: &mut Vec<Gate>) {
    let Some((&top, rest)) = selects.split_last() else {
        out.push(Gate::Rot(axis, target, angles[0].clone()));
        return;
    };
    let half = angles.len() / 2;
    let (lo, hi) = angles.split_at(half);
    let sum: Vec<AngleExpr> = lo.iter().zip(hi).map(|(a, b)| (a + b).scale(0.5)).collect();
    let diff: Vec<AngleExpr> = lo.iter().zip(hi).map(|(a, b)| (a - b).scale(0.5)).collect();
    mux_rec(axis, target, rest, &sum, out);
    out.push(Gate::cnot(top, target));
    mux_rec(axis, target, rest, &diff, out);
    out.push(Gate::cnot(top, target));
}

/// Two-qubit multiplexor: `RotA(theta0)` on `target` when `select` is 0,
/// `RotA(theta1)` when it is 1. Four gates, cost 12.
pub fn multiplexed_pair(axis: Axis, select: usize, target: usize, theta0: AngleExpr, theta1: AngleExpr) -> Vec<Gate> {
    let mut out = Vec::with_capacity(4);
    mux_rec(axis, target, &[select], &[theta0, theta1], &mut out);
    out
}

/// Dense matrix of a multiplexed rotation on the top qubit of an
/// `(m+1)`-qubit block selected by the lower `m` qubits, for testing.
pub fn multiplexed_matrix(axis: Axis, angles: &[f64]) -> CMatrix {
    use crate::statevector::rotation_matrix;
    let n = angles.len();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for (k, &theta) in angles.iter().enumerate() {
        let r = rotation_matrix(axis, theta);
        for (i, row) in r.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(k + i * n, k + j * n)] = *v;
            }
        }
    }
    m
}

/// Quantum Shannon decomposition of a unitary on up to four qubits. The
/// returned circuit equals `U` up to global phase.
pub fn qsd(u: &CMatrix) -> Result<Circuit> {
    require_unitary(u, UNITARY_TOL)?;
    let dim = u.nrows();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Shape(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QSD_QUBITS {
        return Err(Error::Capacity {
            what: "decomposition qubits",
            got: n,
            max: MAX_QSD_QUBITS,
        });
    }
    let mut gates = Vec::new();
    qsd_rec(u, n, &mut gates)?;
    Circuit::from_gates(n, gates)
}

fn qsd_rec(u: &CMatrix, m: usize, out: &mut Vec<Gate>) -> Result<()> {
    if m == 1 {
        out.extend(zyz_unchecked(u).gates(0));
        return Ok(());
    }
    let target = m - 1;
    let selects: Vec<usize> = (0..target).collect();
    let cs = csd(u)?;

    let emit_block_diag = |x1: &CMatrix, x2: &CMatrix, out: &mut Vec<Gate>| -> Result<()> {
        let dm = demultiplex(x1, x2)?;
        qsd_rec(&dm.w, m - 1, out)?;
        // diag(d, d*) on the target is RZ(-2 arg d).
        let angles: Vec<AngleExpr> = dm.d.iter().map(|d| AngleExpr::constant(-2.0 * d.arg())).collect();
        out.extend(compile_multiplexed_rotation(Axis::Z, target, &selects, &angles)?);
        qsd_rec(&dm.v, m - 1, out)
    };

    emit_block_diag(&cs.r1, &cs.r2, out)?;
    let ry: Vec<AngleExpr> = cs.thetas().iter().map(|t| AngleExpr::constant(2.0 * t)).collect();
    out.extend(compile_multiplexed_rotation(Axis::Y, target, &selects, &ry)?);
    emit_block_diag(&cs.l1, &cs.l2, out)
}

/// Reads a square complex matrix from header-free CSV. A row is either `2N`
/// numbers read as `re, im` pairs, or `N` quoted cells of the form `"re,im"`.
pub fn read_unitary_csv<R: std::io::Read>(r: R) -> Result<CMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: line + 1,
            msg: e.to_string(),
        })?;
        let parse = |text: &str| -> Result<f64> {
            text.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line + 1,
                msg: format!("not a number: {text:?}"),
            })
        };
        let cells: Vec<&str> = record.iter().collect();
        let row = if cells.iter().all(|c| c.contains(',')) {
            cells
                .iter()
                .map(|c| {
                    let (re, im) = c.split_once(',').expect("checked above");
                    Ok(C64::new(parse(re)?, parse(im)?))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            if !cells.len().is_multiple_of(2) {
                return Err(Error::Parse {
                    line: line + 1,
                    msg: format!("expected re,im pairs, got {} numbers", cells.len()),
                });
            }
            cells
                .chunks(2)
                .map(|p| Ok(C64::new(parse(p[0])?, parse(p[1])?)))
                .collect::<Result<Vec<_>>>()?
        };
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some((line, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse {
            line: line + 1,
            msg: format!("expected {n} entries, got {}", row.len()),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Writes `2N` numbers per row as `re, im` pairs.
pub fn write_unitary_csv<W: std::io::Write>(m: &CMatrix, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()])
            .collect();
        out.write_record(&row).map_err(std::io::Error::other)?;
    }
    out.flush()?;
    Ok(())
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}
