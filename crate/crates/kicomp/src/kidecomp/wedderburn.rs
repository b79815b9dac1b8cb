//! Wedderburn block extraction for a matrix *-algebra given by an
//! orthonormal basis.
//!
//! Pipeline: (1) the center is the null space of the commutation system
//! `[X, B_s] = 0` over all basis elements, solved for X inside the span of
//! the algebra (the span intersection with the commutant taken implicitly);
//! (2) minimal central projectors come from eigenvalue grouping of a
//! random Hermitian center element; (3) inside each central block a random
//! Hermitian algebra element has dim_J distinct eigenvalues of multiplicity
//! dim_K, whose eigenspaces are the K fibers; (4) a generic algebra element
//! maps the first fiber onto each other fiber, and polar orthonormalization
//! aligns the fiber frames, yielding an isometry in which every algebra
//! element restricted to the block is X_J ⊗ 1_K.
//!
//! Unlucky draws (eigenvalue collisions, vanishing fiber couplings) are
//! detected and retried with fresh seed-derived samples.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::matcore::{self, CMatrix};
use crate::tol;

use super::{AlgebraBasis, KiError};

/// A block before per-letter data is attached: the isometry from
/// `C^{dim_j} ⊗ C^{dim_k}` (first factor slowest) into the ambient space.
#[derive(Clone, Debug)]
pub struct RawBlock {
    pub isometry: CMatrix,
    pub dim_j: usize,
    pub dim_k: usize,
}

const DRAW_ATTEMPTS: usize = 8;

pub fn wedderburn(a: &AlgebraBasis, rng: &mut ChaCha8Rng) -> Result<Vec<RawBlock>, KiError> {
    let center = center_basis(a)?;
    for _ in 0..DRAW_ATTEMPTS {
        match try_blocks(a, &center, rng) {
            Ok(blocks) => return Ok(blocks),
            Err(Degenerate) => continue,
        }
    }
    Err(KiError::DegenerateSample { attempts: DRAW_ATTEMPTS })
}

/// Basis of the center `{X in A : [X, B_s] = 0 for all s}`. X is
/// parameterized in the algebra basis, so the commutation system is an
/// m x m Hermitian Gram matrix whose null space gives the coefficients.
fn center_basis(a: &AlgebraBasis) -> Result<Vec<CMatrix>, KiError> {
    let m = a.basis.len();
    let mut gram = CMatrix::zeros(m, m);
    let mut column: Vec<CMatrix> = Vec::with_capacity(m);
    for u in &a.basis {
        column.clear();
        column.extend(a.basis.iter().map(|b| b.commutator(u)));
        for s in 0..m {
            for t in s..m {
                let inner = column[s].hs_inner(&column[t]);
                let cur = gram.get(s, t);
                gram.set(s, t, cur + inner);
                if t != s {
                    let cur = gram.get(t, s);
                    gram.set(t, s, cur + inner.conj());
                }
            }
        }
    }
    let eig = matcore::herm_eig(&gram.hermitize())?;
    let lam_max = eig.values.first().cloned().unwrap_or(0.0).max(0.0);
    let sigma_cut = tol::P3_RANK * f64::max(1.0, lam_max.sqrt());
    let cutoff = sigma_cut * sigma_cut;
    let mut center = Vec::new();
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= cutoff {
            let mut z = CMatrix::zeros(a.dim, a.dim);
            for (s, b) in a.basis.iter().enumerate() {
                z = z.add(&b.scale(eig.vectors.get(s, k)));
            }
            center.push(z);
        }
    }
    debug_assert!(!center.is_empty(), "the identity always lies in the center");
    Ok(center)
}

struct Degenerate;

fn try_blocks(
    a: &AlgebraBasis,
    center: &[CMatrix],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RawBlock>, Degenerate> {
    let d = a.dim;
    // Ranges of the minimal central projectors, from a generic center element.
    let subspaces: Vec<CMatrix> = if center.len() == 1 {
        vec![CMatrix::identity(d)]
    } else {
        let h = random_hermitian_combo(center, rng);
        let eig = matcore::herm_eig(&h).map_err(|_| Degenerate)?;
        let clusters = cluster_descending(&eig.values);
        if clusters.len() != center.len() {
            return Err(Degenerate);
        }
        clusters
            .iter()
            .map(|idx| CMatrix::from_fn(d, idx.len(), |i, j| eig.vectors.get(i, idx[j])))
            .collect()
    };

    let h_alg = random_hermitian_combo(&a.basis, rng);
    let generic = random_combo(&a.basis, rng);
    let mut blocks = Vec::with_capacity(subspaces.len());
    for q in &subspaces {
        let n_block = q.cols();
        let restricted = matcore::restrict(q, &h_alg).hermitize();
        let eig = matcore::herm_eig(&restricted).map_err(|_| Degenerate)?;
        let clusters = cluster_descending(&eig.values);
        let dim_k = clusters[0].len();
        if clusters.iter().any(|c| c.len() != dim_k) {
            return Err(Degenerate);
        }
        let dim_j = clusters.len();
        debug_assert_eq!(dim_j * dim_k, n_block);

        // K fibers in the ambient space, one per distinct eigenvalue.
        let fibers: Vec<CMatrix> = clusters
            .iter()
            .map(|idx| {
                let g = CMatrix::from_fn(n_block, idx.len(), |i, j| eig.vectors.get(i, idx[j]));
                q.mul(&g)
            })
            .collect();

        let mut isometry = CMatrix::zeros(d, n_block);
        for (j, fiber) in fibers.iter().enumerate() {
            let aligned = if j == 0 {
                fiber.clone()
            } else {
                // F_j^dag T F_1 is proportional to a unitary precisely when
                // the fiber structure is right; its polar part aligns the
                // internal frame of fiber j with fiber 1.
                let coupling = fiber.dagger().mul(&generic).mul(&fibers[0]);
                let u = polar_unitary(&coupling).ok_or(Degenerate)?;
                fiber.mul(&u)
            };
            for k in 0..dim_k {
                for i in 0..d {
                    isometry.set(i, j * dim_k + k, aligned.get(i, k));
                }
            }
        }
        let gram_err = isometry
            .dagger()
            .mul(&isometry)
            .sub(&CMatrix::identity(n_block))
            .max_norm();
        if gram_err > 1e-9 {
            return Err(Degenerate);
        }
        blocks.push(RawBlock { isometry, dim_j, dim_k });
    }
    Ok(blocks)
}

/// Unitary polar factor, provided the input is proportional to a unitary
/// (all singular values equal); `None` flags a degenerate coupling.
fn polar_unitary(m: &CMatrix) -> Option<CMatrix> {
    let svd = m.to_na().svd(true, true);
    let sigma: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let (&hi, &lo) = (
        sigma.iter().max_by(|x, y| x.partial_cmp(y).unwrap())?,
        sigma.iter().min_by(|x, y| x.partial_cmp(y).unwrap())?,
    );
    if hi < 1e-12 || lo < 1e-6 * hi || hi / lo > 1.0 + 1e-3 {
        return None;
    }
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    Some(CMatrix::from_na(&(u * v_t)))
}

fn random_hermitian_combo(set: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    random_combo_impl(set, rng, false).hermitize()
}

fn random_combo(set: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    random_combo_impl(set, rng, true)
}

fn random_combo_impl(set: &[CMatrix], rng: &mut ChaCha8Rng, complex: bool) -> CMatrix {
    let d = set[0].rows();
    let mut out = CMatrix::zeros(d, d);
    for b in set {
        let coeff = Complex64::new(
            matcore::sample_standard_normal(rng),
            if complex { matcore::sample_standard_normal(rng) } else { 0.0 },
        );
        out = out.add(&b.scale(coeff));
    }
    out
}

/// Groups descending eigenvalues; adjacent values closer than the grouping
/// tolerance share a cluster. A floor keeps a fully degenerate spectrum
/// (range ~ 0) in a single cluster instead of splitting on bit noise.
pub(crate) fn cluster_descending(values: &[f64]) -> Vec<Vec<usize>> {
    if values.is_empty() {
        return Vec::new();
    }
    let range = values[0] - values[values.len() - 1];
    let scale = 1.0 + values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let gap_tol = f64::max(tol::EIG_GROUP_REL * range, 1e-12 * scale);
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..values.len() {
        if values[k - 1] - values[k] > gap_tol {
            clusters.push(vec![k]);
        } else {
            clusters.last_mut().unwrap().push(k);
        }
    }
    clusters
}
