//! Independent decomposition oracle for commuting ensembles.
//!
//! All letters commute, so a common eigenbasis exists; basis vectors with
//! equal likelihood-ratio vectors `r_i(k) = <k|rho_i|k> / <k|avg|k>` are
//! indistinguishable to the source and merge into one redundant block.
//! Every block has a one-dimensional J factor.

use num_complex::Complex64;

use crate::ensemble::Ensemble;
use crate::matcore::{self, CMatrix};
use crate::tol;

use super::wedderburn::cluster_descending;
use super::{
    sort_blocks_canonically, support_restrict, verify_with, DecompConfig, KiBlock,
    KiDecomposition, KiError, VerifyReport,
};

const RATIO_GROUP_TOL: f64 = 1e-7;

pub fn classical_oracle(e: &Ensemble, config: &DecompConfig) -> Result<KiDecomposition, KiError> {
    let report = e.validate();
    if !report.is_valid() {
        return Err(KiError::InvalidEnsemble(report));
    }
    for i in 0..e.len() {
        for j in (i + 1)..e.len() {
            let violation = e.states[i].commutator(&e.states[j]).max_norm();
            let allowed = tol::COMMUTING
                * f64::max(1.0, e.states[i].max_norm() * e.states[j].max_norm());
            if violation > allowed {
                return Err(KiError::NotCommuting { violation });
            }
        }
    }
    let (restricted, support_iso) = support_restrict(e)?;
    let d = restricted.dim;
    let avg = {
        let mut m = CMatrix::zeros(d, d);
        for (p, s) in restricted.probs.iter().zip(&restricted.states) {
            m = m.add(&s.scale_re(*p));
        }
        m
    };

    // Common eigenbasis: refine eigenspaces state by state.
    let mut subspaces = vec![CMatrix::identity(d)];
    for state in &restricted.states {
        let mut next = Vec::new();
        for v in &subspaces {
            if v.cols() == 1 {
                next.push(v.clone());
                continue;
            }
            let h = matcore::restrict(v, state).hermitize();
            let eig = matcore::herm_eig(&h)?;
            for cluster in cluster_descending(&eig.values) {
                let g = CMatrix::from_fn(v.cols(), cluster.len(), |i, j| {
                    eig.vectors.get(i, cluster[j])
                });
                next.push(v.mul(&g));
            }
        }
        subspaces = next;
    }
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for v in &subspaces {
        for j in 0..v.cols() {
            let mut col: Vec<Complex64> = (0..d).map(|i| v.get(i, j)).collect();
            // Deterministic phase: largest-magnitude component real positive.
            let (mut best, mut mag) = (0usize, 0.0f64);
            for (i, z) in col.iter().enumerate() {
                if z.norm() > mag {
                    mag = z.norm();
                    best = i;
                }
            }
            let phase = if mag > 0.0 { col[best].conj() / mag } else { Complex64::new(1.0, 0.0) };
            for z in &mut col {
                *z *= phase;
            }
            columns.push(col);
        }
    }
    debug_assert_eq!(columns.len(), d);

    // Likelihood-ratio vector per basis vector.
    let expectation = |col: &[Complex64], m: &CMatrix| -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (i, ci) in col.iter().enumerate() {
            for (j, cj) in col.iter().enumerate() {
                s += ci.conj() * m.get(i, j) * cj;
            }
        }
        s.re
    };
    let weights_avg: Vec<f64> = columns.iter().map(|c| expectation(c, &avg).max(0.0)).collect();
    let ratios: Vec<Vec<f64>> = columns
        .iter()
        .enumerate()
        .map(|(k, col)| {
            restricted
                .states
                .iter()
                .map(|s| expectation(col, s).max(0.0) / weights_avg[k])
                .collect()
        })
        .collect();

    // Group equal ratio vectors.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    'next_vec: for k in 0..d {
        for group in groups.iter_mut() {
            let rep = group[0];
            let close = ratios[k]
                .iter()
                .zip(&ratios[rep])
                .all(|(a, b)| (a - b).abs() <= RATIO_GROUP_TOL);
            if close {
                group.push(k);
                continue 'next_vec;
            }
        }
        groups.push(vec![k]);
    }

    let mut blocks = Vec::with_capacity(groups.len());
    for group in &mut groups {
        // Canonical K frame: descending average weight.
        group.sort_by(|&a, &b| weights_avg[b].partial_cmp(&weights_avg[a]).unwrap());
        let dim_k = group.len();
        let isometry = CMatrix::from_fn(d, dim_k, |i, j| columns[group[j]][i]);
        let prob: f64 = group.iter().map(|&k| weights_avg[k]).sum();
        let rho_k = {
            let r = matcore::restrict(&isometry, &avg).hermitize();
            r.scale_re(1.0 / r.trace().re)
        };
        let mut cond_probs = Vec::with_capacity(restricted.len());
        let mut rho_j: Vec<Option<CMatrix>> = Vec::with_capacity(restricted.len());
        for state in &restricted.states {
            let p_cond: f64 = matcore::restrict(&isometry, state).trace().re.max(0.0);
            if p_cond <= config.presence_threshold {
                cond_probs.push(0.0);
                rho_j.push(None);
            } else {
                cond_probs.push(p_cond);
                rho_j.push(Some(CMatrix::identity(1)));
            }
        }
        blocks.push(KiBlock {
            dim_j: 1,
            dim_k,
            isometry,
            prob,
            cond_probs,
            rho_j,
            rho_j_avg: CMatrix::identity(1),
            rho_k,
        });
    }
    sort_blocks_canonically(&mut blocks);
    let mut decomposition = KiDecomposition {
        source_dim: e.dim,
        support_dim: d,
        support_isometry: support_iso,
        blocks,
        verification: VerifyReport::pending(),
    };
    let report = verify_with(&decomposition, e, config);
    if !report.passed() {
        return Err(KiError::DecompositionFailed {
            attempts: 1,
            detail: "classical oracle result failed verification".into(),
            last_report: Some(report),
        });
    }
    decomposition.verification = report;
    Ok(decomposition)
}
