//! Small dense complex linear-algebra helpers shared by the simulator,
//! the decomposition engine and the tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::statevector::Matrix2;
use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// `||U^dagger U - I||_F`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// `||e^{i phi} a - b||_F` with `phi` taken from the largest-magnitude entry of `b`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let (k, _) = b.iter().enumerate().fold(
        (0, -1.0),
        |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best },
    );
    let (ak, bk) = (a.as_slice()[k], b.as_slice()[k]);
    let phase = if ak.norm() > 0.0 {
        C64::from_polar(1.0, bk.arg() - ak.arg())
    } else {
        C64::new(1.0, 0.0)
    };
    (a * phase - b).norm()
}

pub fn from_2x2(m: &Matrix2) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

pub fn to_2x2(m: &CMatrix) -> Matrix2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `diag(a, b)` block-diagonal direct sum.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMatrix::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

pub fn diagonal(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Haar-distributed `dim x dim` unitary: QR of a complex Ginibre matrix with
/// the phases of `R`'s diagonal pushed back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [1, 2, 4, 8] {
            let u = haar_unitary(dim, &mut rng);
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn phase_alignment_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(4, &mut rng);
        let v = &u * C64::from_polar(1.0, 0.77);
        assert!(phase_aligned_distance(&v, &u) < 1e-12);
        assert!(phase_aligned_distance(&CMatrix::identity(4, 4), &u) > 0.1);
    }

    #[test]
    fn direct_sum_layout() {
        let a = CMatrix::identity(1, 1);
        let b = CMatrix::from_element(2, 2, C64::new(2.0, 0.0));
        let m = direct_sum(&a, &b);
        assert_eq!(m.shape(), (3, 3));
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(m[(2, 2)], C64::new(2.0, 0.0));
    }
}
