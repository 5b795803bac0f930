//! Special-unitary matrix arithmetic: Haar sampling, center elements, the
//! Lie algebra su(n) with the invariant form `B(X, Y) = -Re tr(XY)`, and
//! the adjoint action.
//!
//! Matrices are dense complex `DMatrix`; dimensions stay small (n <= 8),
//! so everything runs on plain double precision.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub type CMatrix = DMatrix<Complex64>;

/// Default tolerance for the unitarity and determinant invariants.
pub const UNITARY_TOL: f64 = 1e-12;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Conjugate transpose; the exact inverse of a unitary matrix.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Frobenius norm of `U U* - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u * u.adjoint() - identity(n)).norm()
}

/// `|det U - 1|`.
pub fn determinant_defect(u: &CMatrix) -> f64 {
    (u.determinant() - Complex64::new(1.0, 0.0)).norm()
}

pub fn is_special_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol && determinant_defect(u) <= tol
}

/// Frobenius distance `sqrt(sum |A_ij - B_ij|^2)`; invariant under joint
/// unitary translation and under inversion of both arguments.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(
        (a.nrows(), a.ncols()),
        (b.nrows(), b.ncols()),
        "frobenius_distance: dimension mismatch"
    );
    (a - b).norm()
}

fn snap_axis(x: f64) -> f64 {
    if x.abs() < 4.0 * f64::EPSILON {
        0.0
    } else if (x - 1.0).abs() < 4.0 * f64::EPSILON {
        1.0
    } else if (x + 1.0).abs() < 4.0 * f64::EPSILON {
        -1.0
    } else {
        x
    }
}

/// The primitive n-th root of unity to the k-th power, with axis values
/// (`1, -1, i, -i`) returned exactly.
pub fn unit_root(n: u32, k: u32) -> Complex64 {
    let k = k % n;
    let angle = 2.0 * PI * (k as f64) / (n as f64);
    Complex64::new(snap_axis(angle.cos()), snap_axis(angle.sin()))
}

/// The center element `exp(2 pi i k / n) I` of SU(n).
pub fn center_root(n: u32, k: u32) -> CMatrix {
    identity(n as usize) * unit_root(n, k)
}

/// Haar-distributed special-unitary matrix.
///
/// A complex Ginibre matrix is orthonormalized by QR with the diagonal of
/// R rotated to positive reals (Haar on U(n)), the determinant phase is
/// removed by its principal n-th root, and the residual center bias is
/// killed by a uniformly random central multiplication.
pub fn haar_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    assert!(n >= 2, "haar_sample requires n >= 2");
    let ginibre = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Column phases: q <- q * diag(r_ii / |r_ii|) makes the factorization
    // unique and q exactly Haar on U(n).
    for i in 0..n {
        let rii = r[(i, i)];
        let norm = rii.norm();
        let phase = if norm > 0.0 {
            rii / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, i)] *= phase;
        }
    }
    // Principal n-th root of the determinant phase.
    let det = q.determinant();
    let root = Complex64::from_polar(1.0, det.arg() / n as f64);
    q /= root;
    let k = rng.gen_range(0..n as u32);
    q * unit_root(n as u32, k)
}

/// `U X U^-1`; preserves the form B.
pub fn adjoint_action(u: &CMatrix, x: &CMatrix) -> CMatrix {
    assert_eq!(u.nrows(), x.nrows(), "adjoint_action: dimension mismatch");
    u * x * u.adjoint()
}

/// The Ad-invariant form `B(X, Y) = -Re tr(XY)`, positive definite on
/// su(n).
pub fn b_form(x: &CMatrix, y: &CMatrix) -> f64 {
    let n = x.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            tr += x[(i, k)] * y[(k, i)];
        }
    }
    -tr.re
}

pub fn b_norm(x: &CMatrix) -> f64 {
    b_form(x, x).max(0.0).sqrt()
}

/// Skew-Hermitian defect `||X + X*||` plus trace defect, for invariant
/// checks on Lie algebra elements.
pub fn su_defect(x: &CMatrix) -> f64 {
    let skew = (x + x.adjoint()).norm();
    let tr: Complex64 = x.diagonal().iter().sum();
    skew.max(tr.norm())
}

/// B-orthonormal basis of su(n): skew-Hermitian rescalings of the
/// generalized Gell-Mann matrices, `n^2 - 1` elements.
pub fn su_basis(n: usize) -> Vec<CMatrix> {
    assert!(n >= 2, "su_basis requires n >= 2");
    let mut basis = Vec::with_capacity(n * n - 1);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = CMatrix::zeros(n, n);
            sym[(j, k)] = Complex64::new(0.0, inv_sqrt2);
            sym[(k, j)] = Complex64::new(0.0, inv_sqrt2);
            basis.push(sym);
            let mut asym = CMatrix::zeros(n, n);
            asym[(j, k)] = Complex64::new(inv_sqrt2, 0.0);
            asym[(k, j)] = Complex64::new(-inv_sqrt2, 0.0);
            basis.push(asym);
        }
    }
    for l in 1..n {
        let scale = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(n, n);
        for i in 0..l {
            diag[(i, i)] = Complex64::new(0.0, scale);
        }
        diag[(l, l)] = Complex64::new(0.0, -(l as f64) * scale);
        basis.push(diag);
    }
    basis
}

/// Real coordinates of a Lie algebra element in a B-orthonormal basis.
pub fn su_coordinates(basis: &[CMatrix], x: &CMatrix) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|e| b_form(e, x)))
}

pub fn from_su_coordinates(basis: &[CMatrix], coords: &DVector<f64>) -> CMatrix {
    let n = basis[0].nrows();
    let mut x = CMatrix::zeros(n, n);
    for (e, &c) in basis.iter().zip(coords.iter()) {
        x += e * Complex64::new(c, 0.0);
    }
    x
}

/// The matrix of `Ad(U)` in the given B-orthonormal basis of su(n).
pub fn adjoint_matrix(basis: &[CMatrix], u: &CMatrix) -> DMatrix<f64> {
    let d = basis.len();
    let mut out = DMatrix::zeros(d, d);
    for (col, e) in basis.iter().enumerate() {
        let image = adjoint_action(u, e);
        for (row, f) in basis.iter().enumerate() {
            out[(row, col)] = b_form(f, &image);
        }
    }
    out
}

/// Exponential of a skew-Hermitian matrix through the eigendecomposition
/// of the Hermitian matrix `-iX`; the result is unitary to rounding.
pub fn exp_skew(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let minus_i = Complex64::new(0.0, -1.0);
    let herm = x * minus_i;
    let eig = SymmetricEigen::new(herm);
    let mut out = CMatrix::zeros(n, n);
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, l))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..n {
                sum += eig.eigenvectors[(i, k)] * phases[k] * eig.eigenvectors[(j, k)].conj();
            }
            out[(i, j)] = sum;
        }
    }
    out
}

/// Projects a near-unitary matrix back onto SU(n): Newton-Schulz steps
/// toward the unitary polar factor, then the determinant phase is divided
/// out by its principal n-th root.
pub fn project_special_unitary(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut y = m.clone();
    for _ in 0..4 {
        let gram = y.adjoint() * &y;
        let defect = (&gram - identity(n)).norm();
        if defect < 1e-15 {
            break;
        }
        // y <- y (3 I - y* y) / 2, quadratically convergent for near-unitary y.
        y = &y * (identity(n) * Complex64::new(1.5, 0.0) - gram * Complex64::new(0.5, 0.0));
    }
    let det = y.determinant();
    let root = Complex64::from_polar(det.norm().powf(1.0 / n as f64), det.arg() / n as f64);
    y / root
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn haar_samples_are_special_unitary() {
        let mut r = rng(1);
        for n in 2..=5 {
            for _ in 0..200 {
                let u = haar_sample(n, &mut r);
                assert!(unitarity_defect(&u) <= UNITARY_TOL);
                assert!(determinant_defect(&u) <= UNITARY_TOL);
            }
        }
    }

    // Character-orthogonality oracle: the fundamental character of SU(n)
    // is irreducible, so tr integrates to 0 and |tr|^2 to 1 over Haar.
    #[test]
    fn haar_trace_moments_match_character_orthogonality() {
        let mut r = rng(2);
        let n_samples = 200_000usize;
        for n in [2usize, 3] {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sum_sq = 0.0;
            for _ in 0..n_samples {
                let tr: Complex64 = haar_sample(n, &mut r).diagonal().iter().sum();
                sum += tr;
                sum_sq += tr.norm_sqr();
            }
            let mean = sum / n_samples as f64;
            let mean_sq = sum_sq / n_samples as f64;
            // sigma ~ 1 per complex component; 4 sigma / sqrt(N) bounds.
            let bound = 4.0 / (n_samples as f64).sqrt();
            assert!(
                mean.norm() <= 2.0 * bound,
                "n={n}: mean tr = {mean} exceeds {bound}"
            );
            assert!(
                (mean_sq - 1.0).abs() <= 2.0 * bound,
                "n={n}: mean |tr|^2 = {mean_sq}"
            );
        }
    }

    #[test]
    fn center_root_values() {
        let minus_i2 = center_root(2, 1);
        assert_eq!(minus_i2[(0, 0)], Complex64::new(-1.0, 0.0));
        assert_eq!(minus_i2[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(center_root(3, 0), identity(3));
        let c42 = center_root(4, 2);
        for i in 0..4 {
            assert_eq!(c42[(i, i)], Complex64::new(-1.0, 0.0));
        }
    }

    #[test]
    fn center_root_is_a_homomorphism() {
        for n in [2u32, 3, 4, 5, 6] {
            for j in 0..n {
                for k in 0..n {
                    let lhs = center_root(n, j) * center_root(n, k);
                    let rhs = center_root(n, (j + k) % n);
                    let err = (lhs - &rhs).norm();
                    if n == 2 || n == 4 {
                        assert_eq!(err, 0.0, "axis roots must compose exactly");
                    } else {
                        assert!(err <= 4.0 * f64::EPSILON * n as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn frobenius_distance_examples() {
        let i2 = identity(2);
        assert_eq!(frobenius_distance(&i2, &i2), 0.0);
        let minus = center_root(2, 1);
        let d = frobenius_distance(&minus, &i2);
        assert!((d - 2.0 * 2.0_f64.sqrt()).abs() < 1e-15);
        let mut r = rng(3);
        let a = haar_sample(3, &mut r);
        let b = haar_sample(3, &mut r);
        let u = haar_sample(3, &mut r);
        let v = haar_sample(3, &mut r);
        let translated = frobenius_distance(&(&u * &a * &v), &(&u * &b * &v));
        assert!((translated - frobenius_distance(&a, &b)).abs() <= 1e-12);
        let inv = frobenius_distance(&dagger(&a), &identity(3));
        assert!((inv - frobenius_distance(&a, &identity(3))).abs() <= 1e-12);
    }

    #[test]
    fn su_basis_is_orthonormal() {
        for n in 2..=4 {
            let basis = su_basis(n);
            assert_eq!(basis.len(), n * n - 1);
            for x in &basis {
                assert!(su_defect(x) <= 1e-12);
            }
            for (i, x) in basis.iter().enumerate() {
                for (j, y) in basis.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (b_form(x, y) - expected).abs() <= 1e-12,
                        "gram defect at ({i},{j}) for n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn coordinates_roundtrip() {
        let mut r = rng(4);
        let basis = su_basis(3);
        let coords = DVector::from_fn(8, |i, _| (i as f64 - 3.5) * 0.3);
        let x = from_su_coordinates(&basis, &coords);
        assert!(su_defect(&x) <= 1e-12);
        let back = su_coordinates(&basis, &x);
        assert!((back - &coords).norm() <= 1e-12);
        // Ad preserves coordinates norms.
        let u = haar_sample(3, &mut r);
        let adx = adjoint_action(&u, &x);
        let ad_coords = su_coordinates(&basis, &adx);
        assert!((ad_coords.norm() - coords.norm()).abs() <= 1e-10);
    }

    #[test]
    fn adjoint_action_properties() {
        let mut r = rng(5);
        let basis = su_basis(3);
        let x = &basis[2];
        let y = &basis[5];
        assert_eq!(adjoint_action(&identity(3), x), x.clone());
        // Central elements act trivially.
        let central = center_root(3, 2);
        let moved = adjoint_action(&central, x);
        assert!((moved - x).norm() <= 1e-15);
        for _ in 0..20 {
            let u = haar_sample(3, &mut r);
            let bx = adjoint_action(&u, x);
            let by = adjoint_action(&u, y);
            assert!((b_form(&bx, &by) - b_form(x, y)).abs() <= 1e-10);
        }
        // Left action: Ad(UV) = Ad(U) Ad(V) on basis elements.
        let u = haar_sample(3, &mut r);
        let v = haar_sample(3, &mut r);
        for e in &basis {
            let lhs = adjoint_action(&(&u * &v), e);
            let rhs = adjoint_action(&u, &adjoint_action(&v, e));
            assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn adjoint_matrix_is_orthogonal() {
        let mut r = rng(6);
        let basis = su_basis(2);
        let u = haar_sample(2, &mut r);
        let m = adjoint_matrix(&basis, &u);
        let gram = &m * m.transpose();
        assert!((gram - DMatrix::<f64>::identity(3, 3)).norm() <= 1e-10);
    }

    #[test]
    fn exp_skew_is_unitary_and_matches_series() {
        let mut r = rng(7);
        let basis = su_basis(3);
        let coords = DVector::from_fn(8, |i, _| ((i * 13 % 7) as f64 - 3.0) * 0.05);
        let x = from_su_coordinates(&basis, &coords);
        let e = exp_skew(&x);
        assert!(is_special_unitary(&e, 1e-12));
        // Compare against the truncated power series for a small argument.
        let mut series = identity(3);
        let mut term = identity(3);
        for k in 1..20 {
            term = &term * &x / Complex64::new(k as f64, 0.0);
            series += &term;
        }
        assert!((e - series).norm() <= 1e-12);
        let _ = haar_sample(2, &mut r);
    }

    #[test]
    fn projection_restores_special_unitarity() {
        let mut r = rng(8);
        for n in [2usize, 3] {
            let u = haar_sample(n, &mut r);
            // Perturb off the group.
            let noise = CMatrix::from_fn(n, n, |i, j| {
                Complex64::new(
                    0.01 * ((i + 2 * j) as f64).sin(),
                    0.01 * ((3 * i + j) as f64).cos(),
                )
            });
            let perturbed = &u + noise;
            let projected = project_special_unitary(&perturbed);
            assert!(is_special_unitary(&projected, 1e-12));
            assert!(frobenius_distance(&projected, &u) <= 0.1);
        }
    }
}
