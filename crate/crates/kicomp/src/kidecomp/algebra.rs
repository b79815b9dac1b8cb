//! Numerical *-algebra generation.
//!
//! The target algebra is the span of all operators of the form
//! `⊕_l X_J^(l) ⊗ 1_K^(l)`. It is generated from the support projector and
//! the conjugated letters `avg^{-1/2} rho_i avg^{-1/2}` by closing under
//! adjoints, pairwise products and the modular conjugations
//! `X -> avg^{it} X avg^{-it}` at sampled t. All three operations map the
//! target algebra into itself, so the generated span can never exceed it;
//! finitely many t samples may undershoot, which the verification layer
//! detects.

use crate::ensemble::Ensemble;
use crate::matcore::{self, CMatrix};
use crate::tol;

use super::KiError;

/// Hilbert-Schmidt-orthonormal basis of a matrix *-algebra on a
/// d-dimensional space.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    pub dim: usize,
    pub basis: Vec<CMatrix>,
}

impl AlgebraBasis {
    /// Max residual of projecting `x/|x|` onto the span; ~0 for members.
    pub fn span_residual(&self, x: &CMatrix) -> f64 {
        let norm = x.hs_norm();
        if norm < 1e-300 {
            return 0.0;
        }
        let mut r = x.scale_re(1.0 / norm);
        for b in &self.basis {
            let coeff = b.hs_inner(&r);
            r = r.sub(&b.scale(coeff));
        }
        r.hs_norm()
    }
}

/// Generates the algebra of a support-restricted ensemble (its average
/// state must be faithful). `residual_tol` is the threshold for accepting
/// a new unit-normalized direction into the basis; at the fixpoint every
/// product projects back onto the span within it.
pub fn generate_algebra(
    restricted: &Ensemble,
    t_samples: &[f64],
    residual_tol: f64,
) -> Result<AlgebraBasis, KiError> {
    let d = restricted.dim;
    let max_dim = d * d;
    let mut avg = CMatrix::zeros(d, d);
    for (p, s) in restricted.probs.iter().zip(&restricted.states) {
        avg = avg.add(&s.scale_re(*p));
    }
    let inv_sqrt = matcore::mat_power(&avg, -0.5)?;
    let modular_unitaries: Vec<CMatrix> = t_samples
        .iter()
        .map(|&t| matcore::mat_power_it(&avg, t))
        .collect::<Result<_, _>>()?;

    let mut basis: Vec<CMatrix> = Vec::new();
    let add = |basis: &mut Vec<CMatrix>, x: &CMatrix| -> Result<bool, KiError> {
        let norm = x.hs_norm();
        if norm < 1e-13 {
            return Ok(false);
        }
        let mut r = x.scale_re(1.0 / norm);
        // Two projection passes keep the basis orthonormal to ~1e-15.
        for _ in 0..2 {
            for b in basis.iter() {
                let coeff = b.hs_inner(&r);
                r = r.sub(&b.scale(coeff));
            }
        }
        let res = r.hs_norm();
        if res <= residual_tol {
            return Ok(false);
        }
        if basis.len() == max_dim {
            return Err(KiError::ClosureDiverged { dim: basis.len() + 1, max: max_dim });
        }
        basis.push(r.scale_re(1.0 / res));
        Ok(true)
    };

    add(&mut basis, &CMatrix::identity(d))?;
    for state in &restricted.states {
        let conj = inv_sqrt.mul(state).mul(&inv_sqrt).hermitize();
        add(&mut basis, &conj)?;
    }

    // Frontier closure: when element `idx` is processed, it is paired with
    // every element present at that moment; later additions pair with it
    // when they are processed themselves, so all ordered pairs get covered.
    let mut processed = 0;
    while processed < basis.len() {
        let idx = processed;
        processed += 1;
        let cur = basis[idx].clone();
        add(&mut basis, &cur.dagger())?;
        for u in &modular_unitaries {
            add(&mut basis, &u.mul(&cur).mul(&u.dagger()))?;
        }
        let snapshot = basis.len();
        for j in 0..snapshot {
            let other = basis[j].clone();
            add(&mut basis, &cur.mul(&other))?;
            add(&mut basis, &other.mul(&cur))?;
        }
    }

    debug_assert!(gram_error(&basis) < tol::PROB_SUM, "basis drifted from orthonormality");
    Ok(AlgebraBasis { dim: d, basis })
}

fn gram_error(basis: &[CMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g = a.hs_inner(b);
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - num_complex::Complex64::new(expected, 0.0)).norm());
        }
    }
    worst
}
