//! The block-decomposition engine.
//!
//! For an ensemble `{p_i, rho_i}` this module computes the unique splitting
//! of the support of the average state into blocks `H_J^(l) ⊗ H_K^(l)` such
//! that every letter is block-diagonal with an i-independent K factor per
//! block and maximally irreducible J factors (the Koashi-Imoto
//! decomposition). The route is numerical *-algebra generation
//! ([`algebra`]) followed by Wedderburn block extraction ([`wedderburn`]),
//! with a post-hoc verification suite ([`verify`]) and a simultaneous-
//! diagonalization oracle for commuting ensembles ([`classical_oracle`]).
//!
//! Every generator fed to the algebra provably lies inside the target
//! algebra, so a decomposition that passes verification is never finer than
//! the true one; wrong or incomplete algebras surface as P1/P2/P3 failures
//! and drive seeded retries with more modular samples.

mod algebra;
mod oracle;
mod wedderburn;

pub use algebra::{generate_algebra, AlgebraBasis};
pub use oracle::classical_oracle;
pub use wedderburn::{wedderburn, RawBlock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError, ValidationReport};
use crate::matcore::{self, CMatrix, Keep, MatError};
use crate::tol;

#[derive(Debug, Error)]
pub enum KiError {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(ValidationReport),
    #[error("algebra closure diverged: span dimension {dim} exceeds {max}; tolerances are misconfigured")]
    ClosureDiverged { dim: usize, max: usize },
    #[error("randomized samples stayed degenerate after {attempts} draws")]
    DegenerateSample { attempts: usize },
    #[error("rotated block restriction is not a product of its marginals (residual {residual:.3e})")]
    NonProductResidual { residual: f64 },
    #[error("states do not commute (max commutator entry {violation:.3e})")]
    NotCommuting { violation: f64 },
    #[error("decomposition failed after {attempts} attempts: {detail}")]
    DecompositionFailed {
        attempts: usize,
        detail: String,
        last_report: Option<VerifyReport>,
    },
    #[error("verification failed (P1 {:.3e}, P2 {:.3e})", .0.p1_reconstruction.residual, .0.p2_product_form.residual)]
    VerifyFailed(VerifyReport),
    #[error("malformed decomposition data: {0}")]
    BadData(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Knobs for [`ki_decompose`]; defaults mirror the crate-wide tolerances.
#[derive(Clone, Debug)]
pub struct DecompConfig {
    pub tol_p1: f64,
    pub tol_p2: f64,
    pub p3_rank_tol: f64,
    pub presence_threshold: f64,
    pub basis_residual_tol: f64,
    /// Number of modular-flow samples on the first attempt.
    pub t_sample_count: usize,
    /// Extra outer attempts after the first, each with more t samples.
    pub max_retries: usize,
    pub seed: u64,
    pub max_dim: usize,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig {
            tol_p1: tol::P1,
            tol_p2: tol::P2,
            p3_rank_tol: tol::P3_RANK,
            presence_threshold: tol::PRESENCE,
            basis_residual_tol: tol::BASIS_RESIDUAL,
            t_sample_count: 5,
            max_retries: 4,
            seed: 7,
            max_dim: tol::MAX_DIM_DEFAULT,
        }
    }
}

/// Deterministic first batch of modular-flow parameters; retries append
/// seeded uniform draws from [-2, 2].
const DEFAULT_T_SAMPLES: [f64; 5] = [
    std::f64::consts::FRAC_1_SQRT_2,
    -std::f64::consts::FRAC_1_SQRT_2,
    1.7320508075688772,
    -1.7320508075688772,
    std::f64::consts::FRAC_PI_3,
];

/// One block of the decomposition. The isometry maps
/// `H_J^(l) ⊗ H_K^(l)` (J index slowest) into the support space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KiBlock {
    pub dim_j: usize,
    pub dim_k: usize,
    /// support_dim x (dim_j * dim_k), orthonormal columns.
    pub isometry: CMatrix,
    /// Block weight p^(l) = sum_i p_i p^(i,l).
    pub prob: f64,
    /// Conditional probabilities p^(i,l) per letter.
    pub cond_probs: Vec<f64>,
    /// Per-letter J states; `None` marks an absent letter (p^(i,l) = 0),
    /// never a zero matrix.
    pub rho_j: Vec<Option<CMatrix>>,
    /// Block-averaged J state (sum_i p_i p^(i,l) rho_J^(i,l)) / p^(l).
    pub rho_j_avg: CMatrix,
    /// The i-independent redundant factor, taken from the average state.
    pub rho_k: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of the three-part verification: P1 reconstruction, P2 product
/// form with an i-independent K factor, P3 per-block irreducibility
/// (trivial commutant).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub p1_reconstruction: CheckResult,
    pub p2_product_form: CheckResult,
    pub p3_commutant_dims: Vec<usize>,
    pub p3_passed: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.p1_reconstruction.passed && self.p2_product_form.passed && self.p3_passed
    }

    /// Placeholder for hand-assembled decompositions awaiting [`verify`].
    pub fn pending() -> Self {
        VerifyReport {
            p1_reconstruction: CheckResult { residual: f64::NAN, tolerance: tol::P1, passed: false },
            p2_product_form: CheckResult { residual: f64::NAN, tolerance: tol::P2, passed: false },
            p3_commutant_dims: Vec::new(),
            p3_passed: false,
        }
    }
}

/// The full decomposition: a support isometry from the ambient space and
/// the ordered list of blocks, with the verification report of the
/// returned structure attached.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KiDecomposition {
    pub source_dim: usize,
    pub support_dim: usize,
    /// source_dim x support_dim isometry onto the support of the average
    /// state.
    pub support_isometry: CMatrix,
    pub blocks: Vec<KiBlock>,
    pub verification: VerifyReport,
}

impl KiDecomposition {
    /// Ambient-space isometry of one block: support isometry composed with
    /// the block isometry.
    pub fn block_isometry(&self, l: usize) -> CMatrix {
        self.support_isometry.mul(&self.blocks[l].isometry)
    }

    pub fn to_json(&self) -> String {
        let mut s = crate::ensemble::to_json_17sig(self);
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, KiError> {
        let d: KiDecomposition =
            serde_json::from_str(text).map_err(|e| KiError::BadData(e.to_string()))?;
        if d.support_isometry.rows() != d.source_dim
            || d.support_isometry.cols() != d.support_dim
        {
            return Err(KiError::BadData("support isometry shape mismatch".into()));
        }
        let total: usize = d.blocks.iter().map(|b| b.dim_j * b.dim_k).sum();
        if total != d.support_dim {
            return Err(KiError::BadData(format!(
                "blocks cover dimension {total}, support is {}",
                d.support_dim
            )));
        }
        for b in &d.blocks {
            if b.isometry.rows() != d.support_dim || b.isometry.cols() != b.dim_j * b.dim_k {
                return Err(KiError::BadData("block isometry shape mismatch".into()));
            }
            if b.rho_j.len() != b.cond_probs.len() {
                return Err(KiError::BadData("per-letter data length mismatch".into()));
            }
        }
        Ok(d)
    }
}

// ---------------------------------------------------------------------------
// Support restriction
// ---------------------------------------------------------------------------

/// Restricts an ensemble to the support of its average state. Returns the
/// restricted ensemble (trace renormalized; no trace is actually lost) and
/// the isometry whose columns span the kept eigenvectors.
pub fn support_restrict(e: &Ensemble) -> Result<(Ensemble, CMatrix), KiError> {
    let report = e.validate();
    if !report.is_valid() {
        return Err(KiError::InvalidEnsemble(report));
    }
    let avg = e.average_state()?;
    let eig = matcore::herm_eig(&avg)?;
    let cutoff = tol::SUPPORT_CUTOFF_REL * eig.values.first().cloned().unwrap_or(0.0).max(0.0);
    let kept: Vec<usize> =
        (0..e.dim).filter(|&k| eig.values[k] > cutoff).collect();
    let d = kept.len();
    let iso = CMatrix::from_fn(e.dim, d, |i, j| eig.vectors.get(i, kept[j]));
    let mut states = Vec::with_capacity(e.len());
    for s in &e.states {
        let r = matcore::restrict(&iso, s).hermitize();
        let tr = r.trace().re;
        debug_assert!((tr - 1.0).abs() < 1e-6, "letter leaks outside the average support");
        states.push(r.scale_re(1.0 / tr));
    }
    Ok((
        Ensemble::from_parts_unchecked(d, e.labels.clone(), e.probs.clone(), states),
        iso,
    ))
}

// ---------------------------------------------------------------------------
// Block data extraction
// ---------------------------------------------------------------------------

/// Fills in per-block, per-letter data given the raw Wedderburn blocks and
/// rotates each block to its canonical internal basis (eigenbasis of the
/// averaged J and K states, descending). Blocks come out in canonical
/// order: descending block weight, ascending dim_J, then by rounded
/// isometry entries.
pub fn extract_block_data(
    restricted: &Ensemble,
    support_isometry: &CMatrix,
    source_dim: usize,
    raw_blocks: &[RawBlock],
    config: &DecompConfig,
) -> Result<KiDecomposition, KiError> {
    let avg = {
        let mut m = CMatrix::zeros(restricted.dim, restricted.dim);
        for (p, s) in restricted.probs.iter().zip(&restricted.states) {
            m = m.add(&s.scale_re(*p));
        }
        m
    };
    let mut blocks = Vec::with_capacity(raw_blocks.len());
    for raw in raw_blocks {
        let (dj, dk) = (raw.dim_j, raw.dim_k);
        // Canonical internal frame from the averaged block state.
        let avg_block = matcore::restrict(&raw.isometry, &avg).hermitize();
        let avg_tr = avg_block.trace().re;
        let avg_block_n = avg_block.scale_re(1.0 / avg_tr);
        let rho_j_marginal = matcore::partial_trace(&avg_block_n, (dj, dk), Keep::First)?;
        let rho_k_marginal = matcore::partial_trace(&avg_block_n, (dj, dk), Keep::Second)?;
        let uj = matcore::herm_eig(&rho_j_marginal.hermitize())?.vectors;
        let uk = matcore::herm_eig(&rho_k_marginal.hermitize())?.vectors;
        let isometry = raw.isometry.mul(&matcore::tensor(&uj, &uk));

        // Per-letter data in the canonical frame.
        let mut cond_probs = Vec::with_capacity(restricted.len());
        let mut rho_j: Vec<Option<CMatrix>> = Vec::with_capacity(restricted.len());
        let rho_k = {
            let b = matcore::restrict(&isometry, &avg).hermitize();
            let k = matcore::partial_trace(&b.scale_re(1.0 / b.trace().re), (dj, dk), Keep::Second)?
                .hermitize();
            k.scale_re(1.0 / k.trace().re)
        };
        for state in &restricted.states {
            let block = matcore::restrict(&isometry, state);
            let p_cond = block.trace().re.max(0.0);
            if p_cond <= config.presence_threshold {
                cond_probs.push(0.0);
                rho_j.push(None);
                continue;
            }
            let block_n = block.scale_re(1.0 / p_cond).hermitize();
            let j_state = {
                let j = matcore::partial_trace(&block_n, (dj, dk), Keep::First)?.hermitize();
                j.scale_re(1.0 / j.trace().re)
            };
            // The rotated restriction must factor as (J marginal) x (common K).
            let residual =
                matcore::trace_distance(&block_n, &matcore::tensor(&j_state, &rho_k))?;
            if residual > config.tol_p2 {
                return Err(KiError::NonProductResidual { residual });
            }
            cond_probs.push(p_cond);
            rho_j.push(Some(j_state));
        }
        let prob: f64 = restricted
            .probs
            .iter()
            .zip(&cond_probs)
            .map(|(p, pc)| p * pc)
            .sum();
        let mut rho_j_avg = CMatrix::zeros(dj, dj);
        for ((p, pc), j) in restricted.probs.iter().zip(&cond_probs).zip(&rho_j) {
            if let Some(j) = j {
                rho_j_avg = rho_j_avg.add(&j.scale_re(p * pc / prob));
            }
        }
        blocks.push(KiBlock {
            dim_j: dj,
            dim_k: dk,
            isometry,
            prob,
            cond_probs,
            rho_j,
            rho_j_avg,
            rho_k,
        });
    }
    sort_blocks_canonically(&mut blocks);
    Ok(KiDecomposition {
        source_dim,
        support_dim: restricted.dim,
        support_isometry: support_isometry.clone(),
        blocks,
        verification: VerifyReport::pending(),
    })
}

/// Descending weight, then ascending dim_J, then isometry entries rounded
/// to 1e-6 (larger leading entries first). Weights are rounded before
/// comparison so that exact ties break on structure, not on bit noise.
pub(crate) fn sort_blocks_canonically(blocks: &mut [KiBlock]) {
    fn weight_key(p: f64) -> i64 {
        (p * 1e12).round() as i64
    }
    fn iso_key(m: &CMatrix) -> Vec<(i64, i64)> {
        m.entries()
            .iter()
            .map(|z| (((z.re * 1e6).round()) as i64, ((z.im * 1e6).round()) as i64))
            .collect()
    }
    blocks.sort_by(|a, b| {
        weight_key(b.prob)
            .cmp(&weight_key(a.prob))
            .then(a.dim_j.cmp(&b.dim_j))
            .then_with(|| iso_key(&b.isometry).cmp(&iso_key(&a.isometry)))
    });
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Runs the three checks against the original ensemble:
/// P1 reconstruction, P2 product form with the common K factor, and P3
/// maximality (the per-block letter set has a trivial commutant). Any
/// failed check means the structure is not the decomposition.
pub fn verify(d: &KiDecomposition, e: &Ensemble) -> VerifyReport {
    verify_with(d, e, &DecompConfig::default())
}

pub fn verify_with(d: &KiDecomposition, e: &Ensemble, config: &DecompConfig) -> VerifyReport {
    let mut p1_worst = 0.0f64;
    let mut p2_worst = 0.0f64;
    for (i, state) in e.states.iter().enumerate() {
        let mut recon = CMatrix::zeros(e.dim, e.dim);
        for (l, block) in d.blocks.iter().enumerate() {
            let p_cond = block.cond_probs.get(i).cloned().unwrap_or(0.0);
            if p_cond <= config.presence_threshold {
                continue;
            }
            let full_iso = d.block_isometry(l);
            if let Some(j_state) = block.rho_j.get(i).and_then(|x| x.as_ref()) {
                let product = matcore::tensor(j_state, &block.rho_k);
                recon = recon.add(&matcore::embed(&full_iso, &product).scale_re(p_cond));

                let rotated = matcore::restrict(&full_iso, state)
                    .scale_re(1.0 / p_cond)
                    .hermitize();
                if let Ok(dist) = matcore::trace_distance(&rotated, &product) {
                    p2_worst = p2_worst.max(dist);
                } else {
                    p2_worst = f64::INFINITY;
                }
            }
        }
        match matcore::trace_distance(state, &recon) {
            Ok(dist) => p1_worst = p1_worst.max(dist),
            Err(_) => p1_worst = f64::INFINITY,
        }
    }

    let mut p3_dims = Vec::with_capacity(d.blocks.len());
    for block in &d.blocks {
        let present: Vec<&CMatrix> =
            block.rho_j.iter().flatten().collect();
        p3_dims.push(commutant_dimension(&present, block.dim_j, config.p3_rank_tol));
    }
    let p3_passed = p3_dims.iter().all(|&dim| dim == 1);

    VerifyReport {
        p1_reconstruction: CheckResult {
            residual: p1_worst,
            tolerance: config.tol_p1,
            passed: p1_worst <= config.tol_p1,
        },
        p2_product_form: CheckResult {
            residual: p2_worst,
            tolerance: config.tol_p2,
            passed: p2_worst <= config.tol_p2,
        },
        p3_commutant_dims: p3_dims,
        p3_passed,
    }
}

/// Dimension of `{X : [X, m] = 0 for all m}` inside the dim x dim matrices,
/// via SVD of the stacked commutation system; singular values below the
/// rank tolerance count as zero.
pub fn commutant_dimension(matrices: &[&CMatrix], dim: usize, rank_tol: f64) -> usize {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    let unknowns = dim * dim;
    if matrices.is_empty() {
        return unknowns;
    }
    let mut rows = Vec::with_capacity(matrices.len() * unknowns * unknowns);
    // Row-major vec: [X, B] = 0 reads (I ⊗ B^T - B ⊗ I) vec(X) = 0.
    for b in matrices {
        let bt = CMatrix::from_fn(dim, dim, |i, j| b.get(j, i));
        let lhs = matcore::tensor(&CMatrix::identity(dim), &bt)
            .sub(&matcore::tensor(b, &CMatrix::identity(dim)));
        rows.extend(lhs.entries().iter().cloned());
    }
    let system = DMatrix::<Complex64>::from_row_iterator(
        matrices.len() * unknowns,
        unknowns,
        rows.into_iter(),
    );
    let svd = system.svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rank_tol * f64::max(1.0, sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    unknowns - rank
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Computes the decomposition end to end: support restriction, algebra
/// generation, Wedderburn extraction, block data and verification. On a
/// failed verification the modular sample set is enlarged with seeded
/// draws and the whole pipeline retries; the returned decomposition always
/// carries a passing report.
pub fn ki_decompose(e: &Ensemble, config: &DecompConfig) -> Result<KiDecomposition, KiError> {
    let report = e.validate();
    if !report.is_valid() {
        return Err(KiError::InvalidEnsemble(report));
    }
    let (restricted, support_iso) = support_restrict(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t_samples: Vec<f64> = DEFAULT_T_SAMPLES
        .iter()
        .cloned()
        .take(config.t_sample_count.max(1))
        .collect();
    while t_samples.len() < config.t_sample_count {
        t_samples.push(rng.gen_range(-2.0..2.0));
    }

    let mut last_failure = String::new();
    let mut last_report = None;
    let attempts = config.max_retries + 1;
    for _attempt in 0..attempts {
        let outcome = attempt_decomposition(
            &restricted,
            &support_iso,
            e,
            &t_samples,
            config,
            &mut rng,
        );
        match outcome {
            Ok(d) => return Ok(d),
            Err(KiError::ClosureDiverged { dim, max }) => {
                return Err(KiError::ClosureDiverged { dim, max })
            }
            Err(KiError::VerifyFailed(report)) => {
                last_failure = format!(
                    "verification failed (P1 {:.3e}, P2 {:.3e}, P3 dims {:?})",
                    report.p1_reconstruction.residual,
                    report.p2_product_form.residual,
                    report.p3_commutant_dims
                );
                last_report = Some(report);
            }
            Err(err) => last_failure = err.to_string(),
        }
        for _ in 0..3 {
            t_samples.push(rng.gen_range(-2.0..2.0));
        }
    }
    Err(KiError::DecompositionFailed { attempts, detail: last_failure, last_report })
}

fn attempt_decomposition(
    restricted: &Ensemble,
    support_iso: &CMatrix,
    original: &Ensemble,
    t_samples: &[f64],
    config: &DecompConfig,
    rng: &mut ChaCha8Rng,
) -> Result<KiDecomposition, KiError> {
    let algebra = generate_algebra(restricted, t_samples, config.basis_residual_tol)?;
    let raw = wedderburn(&algebra, rng)?;
    let mut d = extract_block_data(restricted, support_iso, original.dim, &raw, config)?;
    let report = verify_with(&d, original, config);
    if report.passed() {
        d.verification = report;
        Ok(d)
    } else {
        Err(KiError::VerifyFailed(report))
    }
}

#[cfg(test)]
mod tests;
