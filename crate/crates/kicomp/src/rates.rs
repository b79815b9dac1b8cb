//! Scalar rate quantities and gaps derived from a decomposition.
//!
//! With block weights `p^(l)`, J dimensions and block-averaged J states in
//! hand, the variable-length faithful optimum is `I_C + D_NC` and the
//! fixed-length asymptotically-faithful optimum is `I_C + I_NC`; their gap
//! `D_NC - I_NC` is the price of exactness. The Levitin-Holevo function
//! lower-bounds the visible-scenario rate, whose exact value is open: it is
//! reported only as the interval `[I_LH, I_C + I_NC]`, never as a number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError};
use crate::kidecomp::{ki_decompose, DecompConfig, KiDecomposition, KiError};
use crate::matcore::{self, CMatrix, MatError};
use crate::tol;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("defect bound routes disagree: {direct:.3e} vs {entropy_difference:.3e}")]
    InconsistentBound { direct: f64, entropy_difference: f64 },
    #[error("internal consistency violation: {0}")]
    Internal(String),
    #[error(transparent)]
    Ki(#[from] KiError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Table-1 style classification of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "classical-pure")]
    ClassicalPure,
    #[serde(rename = "classical-mixed")]
    ClassicalMixed,
    #[serde(rename = "quantum-pure")]
    QuantumPure,
    #[serde(rename = "quantum-mixed")]
    QuantumMixed,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::ClassicalPure => "classical-pure",
            Classification::ClassicalMixed => "classical-mixed",
            Classification::QuantumPure => "quantum-pure",
            Classification::QuantumMixed => "quantum-mixed",
        };
        write!(f, "{s}")
    }
}

impl Classification {
    pub fn is_classical(&self) -> bool {
        matches!(self, Classification::ClassicalPure | Classification::ClassicalMixed)
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Classification::ClassicalPure | Classification::QuantumPure)
    }

    /// The ordering of the three scenario rates for this class.
    pub fn gap_pattern(&self) -> &'static str {
        match self {
            Classification::ClassicalPure => "R_vlf_opt = R_flaf_opt = I_eff",
            Classification::QuantumPure => "R_vlf_opt >= R_flaf_opt = I_eff",
            Classification::ClassicalMixed => "R_vlf_opt = R_flaf_opt >= I_eff",
            Classification::QuantumMixed => "R_vlf_opt >= R_flaf_opt >= I_eff",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSummary {
    pub dim_j: usize,
    pub dim_k: usize,
    pub prob: f64,
}

/// Every scalar quantity of interest, in bits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    /// Classical part: Shannon entropy of the block distribution.
    pub i_c: f64,
    /// Nonclassical dimension part: average log2 dim of the J factors.
    pub d_nc: f64,
    /// Nonclassical entropy part: average entropy of the averaged J states.
    pub i_nc: f64,
    /// Levitin-Holevo function of the source.
    pub i_lh: f64,
    /// Optimal variable-length faithful rate, i_c + d_nc.
    pub r_vlf_opt: f64,
    /// Optimal fixed-length asymptotically faithful rate, i_c + i_nc.
    pub r_flaf_opt: f64,
    /// d_nc - i_nc: the incompressible genuinely quantum part.
    pub gap_f_af: f64,
    /// Upper bound on the blind-visible defect.
    pub defect_upper: f64,
    pub classification: Classification,
    /// The visible-scenario rate is open; only this interval is reported.
    pub i_eff_interval: [f64; 2],
    pub blocks: Vec<BlockSummary>,
}

/// Classical part `-sum_l p^(l) log2 p^(l)`.
pub fn i_c(d: &KiDecomposition) -> f64 {
    matcore::shannon_entropy(&d.blocks.iter().map(|b| b.prob).collect::<Vec<_>>())
}

/// Nonclassical dimension part `sum_l p^(l) log2 dim_J^(l)`.
pub fn d_nc(d: &KiDecomposition) -> f64 {
    d.blocks.iter().map(|b| b.prob * (b.dim_j as f64).log2()).sum()
}

/// Nonclassical entropy part `sum_l p^(l) S(rho_J^(l))`.
pub fn i_nc(d: &KiDecomposition) -> Result<f64, RateError> {
    let mut total = 0.0;
    for b in &d.blocks {
        total += b.prob * matcore::vn_entropy(&b.rho_j_avg)?;
    }
    Ok(total)
}

/// Levitin-Holevo function `S(avg) - sum_i p_i S(rho_i)`.
pub fn levitin_holevo(e: &Ensemble) -> Result<f64, RateError> {
    let avg = e.average_state()?;
    let mut value = matcore::vn_entropy(&avg)?;
    for (p, s) in e.probs.iter().zip(&e.states) {
        value -= p * matcore::vn_entropy(s)?;
    }
    clamp_entropy(value, "levitin_holevo")
}

/// Letter state with the redundant K factors removed: the direct sum over
/// blocks of `p^(i,l) rho_J^(i,l)` on the reduced space `⊕_l H_J^(l)`
/// (blocks in canonical order, each in its canonical J basis). Absent
/// letters contribute a zero block of size dim_J.
pub fn reduced_state(d: &KiDecomposition, letter: usize) -> CMatrix {
    let parts: Vec<CMatrix> = d
        .blocks
        .iter()
        .map(|b| match (&b.rho_j[letter], b.cond_probs[letter]) {
            (Some(j), p) if p > 0.0 => j.scale_re(p),
            _ => CMatrix::zeros(b.dim_j, b.dim_j),
        })
        .collect();
    matcore::direct_sum(&parts)
}

/// Upper bound on the blind-visible information defect:
/// `sum_i p_i S(rho_i^R)`, cross-checked against
/// `sum_i p_i S(rho_i) - sum_l p^(l) S(rho_K^(l))`.
pub fn defect_upper_bound(e: &Ensemble, d: &KiDecomposition) -> Result<f64, RateError> {
    let mut direct = 0.0;
    for (i, p) in e.probs.iter().enumerate() {
        direct += p * matcore::vn_entropy(&reduced_state(d, i))?;
    }
    let mut entropy_difference = 0.0;
    for (p, s) in e.probs.iter().zip(&e.states) {
        entropy_difference += p * matcore::vn_entropy(s)?;
    }
    for b in &d.blocks {
        entropy_difference -= b.prob * matcore::vn_entropy(&b.rho_k)?;
    }
    if (direct - entropy_difference).abs() > 1e-7 {
        return Err(RateError::InconsistentBound { direct, entropy_difference });
    }
    clamp_entropy(direct, "defect_upper_bound")
}

/// classical iff all letters commute; pure iff every reduced letter state
/// is pure.
pub fn classify(e: &Ensemble, d: &KiDecomposition) -> Result<Classification, RateError> {
    let mut commuting = true;
    'outer: for i in 0..e.len() {
        for j in (i + 1)..e.len() {
            let violation = e.states[i].commutator(&e.states[j]).max_norm();
            let allowed = tol::COMMUTING
                * f64::max(1.0, e.states[i].max_norm() * e.states[j].max_norm());
            if violation > allowed {
                commuting = false;
                break 'outer;
            }
        }
    }
    let mut max_reduced_entropy = 0.0f64;
    for i in 0..e.len() {
        max_reduced_entropy =
            max_reduced_entropy.max(matcore::vn_entropy(&reduced_state(d, i))?);
    }
    let pure = max_reduced_entropy <= tol::PURE_ENTROPY;
    Ok(match (commuting, pure) {
        (true, true) => Classification::ClassicalPure,
        (true, false) => Classification::ClassicalMixed,
        (false, true) => Classification::QuantumPure,
        (false, false) => Classification::QuantumMixed,
    })
}

/// The orthogonal ensemble `{q_(l,j), sigma_(l,j)}` built from the
/// decomposition: one letter per canonical J basis vector of each block,
/// with weight `p^(l) / dim_J^(l)` and state `|a_j><a_j| ⊗ rho_K^(l)`
/// embedded back in the source space.
pub fn shadow_ensemble(d: &KiDecomposition) -> Ensemble {
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut states = Vec::new();
    for (l, b) in d.blocks.iter().enumerate() {
        let full_iso = d.block_isometry(l);
        for j in 0..b.dim_j {
            let mut basis_state = CMatrix::zeros(b.dim_j, b.dim_j);
            basis_state.set(j, j, num_complex::Complex64::new(1.0, 0.0));
            let sigma = matcore::embed(&full_iso, &matcore::tensor(&basis_state, &b.rho_k));
            labels.push(format!("b{}a{}", l + 1, j + 1));
            probs.push(b.prob / b.dim_j as f64);
            states.push(sigma);
        }
    }
    Ensemble::from_parts_unchecked(d.source_dim, labels, probs, states)
}

/// Decomposes the ensemble and assembles the full report.
pub fn full_report(e: &Ensemble, config: &DecompConfig) -> Result<RateReport, RateError> {
    let d = ki_decompose(e, config)?;
    report_from(e, &d)
}

/// Report for an already-computed decomposition.
pub fn report_from(e: &Ensemble, d: &KiDecomposition) -> Result<RateReport, RateError> {
    let i_c_v = clamp_entropy(i_c(d), "i_c")?;
    let d_nc_v = clamp_entropy(d_nc(d), "d_nc")?;
    let i_nc_v = clamp_entropy(i_nc(d)?, "i_nc")?;
    let i_lh_v = levitin_holevo(e)?;
    let r_vlf = i_c_v + d_nc_v;
    let r_flaf = i_c_v + i_nc_v;
    let gap = d_nc_v - i_nc_v;
    if gap < -tol::ENTROPY_CLAMP {
        return Err(RateError::Internal(format!("negative gap_f_af {gap:.3e}")));
    }
    if r_flaf < i_lh_v - 1e-7 {
        return Err(RateError::Internal(format!(
            "Holevo bound violated: r_flaf_opt {r_flaf} < i_lh {i_lh_v}"
        )));
    }
    let defect = defect_upper_bound(e, d)?;
    let classification = classify(e, d)?;
    Ok(RateReport {
        i_c: i_c_v,
        d_nc: d_nc_v,
        i_nc: i_nc_v,
        i_lh: i_lh_v,
        r_vlf_opt: r_vlf,
        r_flaf_opt: r_flaf,
        gap_f_af: gap.max(0.0),
        defect_upper: defect,
        classification,
        i_eff_interval: [i_lh_v, r_flaf],
        blocks: d
            .blocks
            .iter()
            .map(|b| BlockSummary { dim_j: b.dim_j, dim_k: b.dim_k, prob: b.prob })
            .collect(),
    })
}

fn clamp_entropy(value: f64, name: &str) -> Result<f64, RateError> {
    if value < -tol::ENTROPY_CLAMP {
        return Err(RateError::Internal(format!("{name} = {value:.3e} is negative")));
    }
    Ok(value.max(0.0))
}
