//! Weil tangent spaces at a polished representation: the cocycle space
//! Z^1, the coboundaries B^1, representatives of H^1 = Z^1/B^1, and the
//! cup-product symplectic pairing evaluated on the fundamental 2-cycle
//! built from the relator.
//!
//! All linear algebra runs over the real coordinates induced by the
//! B-orthonormal su(n) basis; ranks and null spaces come from singular
//! value decompositions with a relative threshold.
//!
//! Everything here reads only the base matrices of a representation.
//! Center twists leave those untouched and Ad kills central factors, so
//! the identification of tangent spaces along a twist is literally the
//! identity on coordinates.

use crate::rep::{commutant_dimension, Representation, COMMUTANT_TOL};
use crate::unitary::{
    adjoint_matrix, b_form, exp_skew, from_su_coordinates, identity, su_basis, CMatrix,
};
use crate::words::Word;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Maximum relator defect admitted by the cohomology routines; the
/// coboundary-in-cocycle containment degrades linearly in the defect.
pub const POLISHED_TOL: f64 = 1e-12;

/// Relative singular-value threshold for rank and null-space decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Absolute floor under the relative threshold; operators here are
/// O(1)-normalized, so anything below this is rounding noise even when
/// the true operator is zero and the largest singular value is itself
/// noise.
pub const RANK_FLOOR: f64 = 1e-13;

fn rank_cut(sigma_max: f64) -> f64 {
    (RANK_TOL * sigma_max).max(RANK_FLOOR)
}

#[derive(Debug, Error)]
pub enum CohomError {
    #[error("cohomology requires a surface presentation")]
    NotSurface,
    #[error("relator defect {defect:.3e} exceeds the polished tolerance {required:.3e}")]
    DefectTooLarge { defect: f64, required: f64 },
    #[error("base point is reducible (commutant dimension {commutant_dim})")]
    ReducibleBasePoint { commutant_dim: usize },
    #[error("cocycle is based at a different representation")]
    BaseMismatch,
    #[error(transparent)]
    Rep(#[from] crate::rep::RepError),
}

/// An element of Z^1(pi, su(n)_Ad rho): one Lie algebra vector per
/// generator, extended to words by the cocycle rule, vanishing on the
/// relator.
#[derive(Clone, Debug)]
pub struct TangentCocycle {
    base: Representation,
    vectors: Vec<CMatrix>,
}

/// The two base points carry the same tangent computation iff their base
/// matrices agree; center offsets are invisible to Ad.
fn base_compatible(a: &Representation, b: &Representation) -> bool {
    a.presentation() == b.presentation()
        && a.dimension() == b.dimension()
        && (0..a.generator_count()).all(|j| a.base_matrix(j) == b.base_matrix(j))
}

impl TangentCocycle {
    pub fn vectors(&self) -> &[CMatrix] {
        &self.vectors
    }

    pub fn base(&self) -> &Representation {
        &self.base
    }

    /// Value of the extended cocycle on a word:
    /// `u(vw) = u(v) + Ad(rho(v)) u(w)`, `u(x^-1) = -Ad(rho(x))^-1 u(x)`.
    pub fn evaluate(&self, word: &Word) -> CMatrix {
        crate::rep::cocycle_extension(self.base.base_matrices(), &self.vectors, word)
    }

    /// Coordinates in su(n)^k under the given basis, slot by slot.
    pub fn coordinates(&self, basis: &[CMatrix]) -> DVector<f64> {
        let d = basis.len();
        let mut coords = DVector::zeros(d * self.vectors.len());
        for (j, v) in self.vectors.iter().enumerate() {
            for (a, e) in basis.iter().enumerate() {
                coords[j * d + a] = b_form(e, v);
            }
        }
        coords
    }

    /// `alpha c1 + beta c2` at the shared base point.
    pub fn combine(
        alpha: f64,
        c1: &TangentCocycle,
        beta: f64,
        c2: &TangentCocycle,
    ) -> Result<TangentCocycle, CohomError> {
        if !base_compatible(&c1.base, &c2.base) {
            return Err(CohomError::BaseMismatch);
        }
        let vectors = c1
            .vectors
            .iter()
            .zip(&c2.vectors)
            .map(|(x, y)| x * Complex64::new(alpha, 0.0) + y * Complex64::new(beta, 0.0))
            .collect();
        Ok(TangentCocycle {
            base: c1.base.clone(),
            vectors,
        })
    }

    /// Reinterprets the same vectors at a center twist of the base; this
    /// is the identity on coordinates because Ad is blind to the center.
    pub fn reinterpret_at(&self, rho: &Representation) -> Result<TangentCocycle, CohomError> {
        if !base_compatible(&self.base, rho) {
            return Err(CohomError::BaseMismatch);
        }
        Ok(TangentCocycle {
            base: rho.clone(),
            vectors: self.vectors.clone(),
        })
    }
}

struct Workspace {
    relator: Word,
    basis: Vec<CMatrix>,
    dim_lie: usize,
    generators: usize,
}

fn workspace(rho: &Representation) -> Result<Workspace, CohomError> {
    let relator = rho.presentation().relator().ok_or(CohomError::NotSurface)?;
    let defect = rho.relator_defect()?;
    if defect > POLISHED_TOL {
        return Err(CohomError::DefectTooLarge {
            defect,
            required: POLISHED_TOL,
        });
    }
    let basis = su_basis(rho.dimension());
    let dim_lie = basis.len();
    Ok(Workspace {
        relator,
        basis,
        dim_lie,
        generators: rho.generator_count(),
    })
}

/// Matrix of the relator traversal `X -> u_X(R)` in su coordinates,
/// shaped `d x (k d)`: letter-by-letter accumulation of signed adjoint
/// blocks of the relator prefixes (the numerical Fox derivative).
fn relator_traversal_matrix(rho: &Representation, ws: &Workspace) -> DMatrix<f64> {
    let n = rho.dimension();
    let d = ws.dim_lie;
    let mut a = DMatrix::<f64>::zeros(d, ws.generators * d);
    let mut prefix = identity(n);
    for l in ws.relator.letters() {
        let (block, col0) = if l.inverse {
            prefix = prefix * rho.base_matrix(l.index).adjoint();
            (-adjoint_matrix(&ws.basis, &prefix), l.index * d)
        } else {
            let b = adjoint_matrix(&ws.basis, &prefix);
            prefix = prefix * rho.base_matrix(l.index);
            (b, l.index * d)
        };
        for r in 0..d {
            for c in 0..d {
                a[(r, col0 + c)] += block[(r, c)];
            }
        }
    }
    a
}

fn cocycle_from_coords(
    rho: &Representation,
    ws: &Workspace,
    coords: &DVector<f64>,
) -> TangentCocycle {
    let d = ws.dim_lie;
    let vectors = (0..ws.generators)
        .map(|j| {
            let slot = DVector::from_fn(d, |a, _| coords[j * d + a]);
            from_su_coordinates(&ws.basis, &slot)
        })
        .collect();
    TangentCocycle {
        base: rho.clone(),
        vectors,
    }
}

/// Orthonormal basis of Z^1: the null space of the relator traversal
/// map. At an irreducible point the map has full rank d, so
/// `dim Z^1 = (2g - 1)(n^2 - 1)`.
pub fn cocycle_space(rho: &Representation) -> Result<Vec<TangentCocycle>, CohomError> {
    let ws = workspace(rho)?;
    let a = relator_traversal_matrix(rho, &ws);
    let total = ws.generators * ws.dim_lie;
    // Pad with zero rows so the SVD returns a full set of right singular
    // vectors; the spectrum is unchanged.
    let mut padded = DMatrix::<f64>::zeros(total, total);
    padded.view_mut((0, 0), (ws.dim_lie, total)).copy_from(&a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v requested");
    let cut = rank_cut(svd.singular_values.max());
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut {
            let coords = DVector::from_fn(total, |c, _| v_t[(i, c)]);
            out.push(cocycle_from_coords(rho, &ws, &coords));
        }
    }
    Ok(out)
}

/// Orthonormal basis of B^1, the image of `X -> (X - Ad(rho(x_j)) X)_j`;
/// at an irreducible point the centralizer is trivial and
/// `dim B^1 = n^2 - 1`.
pub fn coboundary_space(rho: &Representation) -> Result<Vec<TangentCocycle>, CohomError> {
    let ws = workspace(rho)?;
    let d = ws.dim_lie;
    let mut map = DMatrix::<f64>::zeros(ws.generators * d, d);
    for j in 0..ws.generators {
        let block = DMatrix::<f64>::identity(d, d) - adjoint_matrix(&ws.basis, &rho.base_matrix(j));
        for r in 0..d {
            for c in 0..d {
                map[(j * d + r, c)] = block[(r, c)];
            }
        }
    }
    let svd = map.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let cut = rank_cut(svd.singular_values.max());
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            let coords = DVector::from_fn(ws.generators * d, |r, _| u[(r, i)]);
            out.push(cocycle_from_coords(rho, &ws, &coords));
        }
    }
    Ok(out)
}

/// Orthonormal representatives of H^1: the orthogonal complement of B^1
/// inside Z^1. At an irreducible point `dim H^1 = (2g - 2)(n^2 - 1)`.
pub fn h1_representatives(rho: &Representation) -> Result<Vec<TangentCocycle>, CohomError> {
    let ws = workspace(rho)?;
    let z = cocycle_space(rho)?;
    let b = coboundary_space(rho)?;
    let total = ws.generators * ws.dim_lie;
    let z_mat = DMatrix::<f64>::from_columns(
        &z.iter().map(|c| c.coordinates(&ws.basis)).collect::<Vec<_>>(),
    );
    if b.is_empty() {
        return Ok(z);
    }
    let b_mat = DMatrix::<f64>::from_columns(
        &b.iter().map(|c| c.coordinates(&ws.basis)).collect::<Vec<_>>(),
    );
    let residual = &z_mat - &b_mat * (b_mat.transpose() * &z_mat);
    let svd = residual.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let cut = rank_cut(svd.singular_values.max());
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            let coords = DVector::from_fn(total, |r, _| u[(r, i)]);
            out.push(cocycle_from_coords(rho, &ws, &coords));
        }
    }
    Ok(out)
}

/// Cup-product pairing `omega(c1, c2)` evaluated on the canonical
/// 2-cycle of the relator: with `R = y_1 ... y_m` and prefixes
/// `p_k = y_1 ... y_k`,
///
/// ```text
/// omega = sum_k B(c1(p_{k-1}), Ad(rho(p_{k-1})) c2(y_k))
///       - sum_j B(c1(x_j),     Ad(rho(x_j))     c2(x_j^-1))
/// ```
///
/// The degenerate corrections of the 2-cycle evaluate to zero because
/// cocycles kill the identity. Skew-symmetry and degeneracy on B^1 are
/// consequences tested elsewhere, not assumptions; the overall sign is a
/// convention.
pub fn cup_symplectic(
    rho: &Representation,
    c1: &TangentCocycle,
    c2: &TangentCocycle,
) -> Result<f64, CohomError> {
    if !base_compatible(&c1.base, rho) || !base_compatible(&c2.base, rho) {
        return Err(CohomError::BaseMismatch);
    }
    let ws = workspace(rho)?;
    let n = rho.dimension();
    let mut omega = 0.0;
    let mut prefix = identity(n);
    let mut c1_prefix = CMatrix::zeros(n, n);
    for l in ws.relator.letters() {
        let m = rho.base_matrix(l.index);
        let c2_letter = if l.inverse {
            -(m.adjoint() * &c2.vectors[l.index] * m)
        } else {
            c2.vectors[l.index].clone()
        };
        omega += b_form(&c1_prefix, &(&prefix * c2_letter * prefix.adjoint()));
        if l.inverse {
            prefix = prefix * m.adjoint();
            c1_prefix -= &prefix * &c1.vectors[l.index] * prefix.adjoint();
        } else {
            c1_prefix += &prefix * &c1.vectors[l.index] * prefix.adjoint();
            prefix = prefix * m;
        }
    }
    for j in 0..ws.generators {
        let m = rho.base_matrix(j);
        let c2_inv = -(m.adjoint() * &c2.vectors[j] * m);
        omega -= b_form(&c1.vectors[j], &(m * c2_inv * m.adjoint()));
    }
    Ok(omega)
}

/// The pairing matrix of H^1 representatives together with its base data.
#[derive(Clone, Debug)]
pub struct SymplecticMatrix {
    pub base: Representation,
    pub basis: Vec<TangentCocycle>,
    pub entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    /// `||M + M^T|| / ||M||`.
    pub fn skew_residual(&self) -> f64 {
        let norm = self.entries.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.entries + self.entries.transpose()).norm() / norm
    }

    /// Smallest and largest singular values.
    pub fn singular_value_range(&self) -> (f64, f64) {
        let svd = self.entries.clone().svd(false, false);
        (svd.singular_values.min(), svd.singular_values.max())
    }
}

/// Pairs all H^1 representatives at an irreducible polished point. The
/// numerical surrogate for "omega is symplectic" is skewness plus a
/// bounded singular value ratio, both checked by the caller.
pub fn symplectic_matrix(rho: &Representation) -> Result<SymplecticMatrix, CohomError> {
    let commutant = commutant_dimension(rho, COMMUTANT_TOL);
    if commutant != 1 {
        return Err(CohomError::ReducibleBasePoint {
            commutant_dim: commutant,
        });
    }
    let basis = h1_representatives(rho)?;
    let m = basis.len();
    let mut entries = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            entries[(i, j)] = cup_symplectic(rho, &basis[i], &basis[j])?;
        }
    }
    Ok(SymplecticMatrix {
        base: rho.clone(),
        basis,
        entries,
    })
}

/// Finite-difference check of the traversal derivative: moving generator
/// `slot` along `exp(t X)` changes the relator matrix by
/// `t u_X(R) rho(R) + O(t^2)`. Returns the discrepancy at the given step.
pub fn relator_derivative_error(
    rho: &Representation,
    slot: usize,
    direction: &CMatrix,
    t: f64,
) -> Result<f64, CohomError> {
    let relator = rho.presentation().relator().ok_or(CohomError::NotSurface)?;
    let n = rho.dimension();
    let matrices: Vec<CMatrix> = rho.base_matrices().to_vec();
    let mut assignment: Vec<CMatrix> = (0..matrices.len()).map(|_| CMatrix::zeros(n, n)).collect();
    assignment[slot] = direction.clone();
    let w0 = {
        let mut acc = identity(n);
        for l in relator.letters() {
            acc = if l.inverse {
                acc * matrices[l.index].adjoint()
            } else {
                acc * &matrices[l.index]
            };
        }
        acc
    };
    let derivative = crate::rep::cocycle_extension(&matrices, &assignment, &relator) * &w0;
    let mut moved = matrices.clone();
    moved[slot] = exp_skew(&(direction * Complex64::new(t, 0.0))) * &moved[slot];
    let mut wt = identity(n);
    for l in relator.letters() {
        wt = if l.inverse {
            wt * moved[l.index].adjoint()
        } else {
            wt * &moved[l.index]
        };
    }
    Ok((&wt - &w0 - derivative * Complex64::new(t, 0.0)).norm())
}
