//! Quantum source ensembles `{p_i, rho_i}`: data model, validation,
//! JSON file format, built-in fixtures, generators and tensor powers.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{self, CMatrix, MatError};
use crate::tol;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(ValidationReport),
    #[error("composite dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("unknown field `{0}` in ensemble file (pass --lenient to ignore)")]
    UnknownField(String),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// A finite quantum source: letter `i` is the density matrix `states[i]`
/// emitted with probability `probs[i]`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub dim: usize,
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
    pub states: Vec<CMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    LengthMismatch,
    ProbSum,
    NonPositiveProb,
    DuplicateLabel,
    WrongDimension,
    NonFinite,
    NotHermitian,
    NotPsd,
    TraceNotOne,
}

/// One violated invariant: which rule, the offending letter (if any) and the
/// magnitude of the violation.
#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: Option<usize>,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::LengthMismatch => "labels/probs/states lengths differ",
            ViolationKind::ProbSum => "probabilities do not sum to 1",
            ViolationKind::NonPositiveProb => "probability not positive",
            ViolationKind::DuplicateLabel => "duplicate label",
            ViolationKind::WrongDimension => "state dimension differs from `dim`",
            ViolationKind::NonFinite => "state has non-finite entries",
            ViolationKind::NotHermitian => "state not Hermitian",
            ViolationKind::NotPsd => "state not positive semidefinite",
            ViolationKind::TraceNotOne => "state trace differs from 1",
        };
        match self.index {
            Some(i) => write!(f, "{what} (letter {i}, magnitude {:.3e})", self.magnitude),
            None => write!(f, "{what} (magnitude {:.3e})", self.magnitude),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", lines.join("; "))
    }
}

impl Ensemble {
    /// Validating constructor.
    pub fn new(
        dim: usize,
        labels: Vec<String>,
        probs: Vec<f64>,
        states: Vec<CMatrix>,
    ) -> Result<Self, EnsembleError> {
        let e = Ensemble { dim, labels, probs, states };
        let report = e.validate();
        if report.is_valid() {
            Ok(e)
        } else {
            Err(EnsembleError::InvalidEnsemble(report))
        }
    }

    /// Builds without validating; for tests and internal callers that check
    /// separately.
    pub fn from_parts_unchecked(
        dim: usize,
        labels: Vec<String>,
        probs: Vec<f64>,
        states: Vec<CMatrix>,
    ) -> Self {
        Ensemble { dim, labels, probs, states }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Checks every invariant and reports all violations with the offending
    /// index and magnitude; the report is empty iff the ensemble is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.probs.len();
        if self.labels.len() != n || self.states.len() != n || n == 0 {
            report.violations.push(Violation {
                kind: ViolationKind::LengthMismatch,
                index: None,
                magnitude: (self.labels.len() as f64 - n as f64).abs()
                    + (self.states.len() as f64 - n as f64).abs(),
            });
            return report;
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > tol::PROB_SUM {
            report.violations.push(Violation {
                kind: ViolationKind::ProbSum,
                index: None,
                magnitude: (sum - 1.0).abs(),
            });
        }
        for (i, &p) in self.probs.iter().enumerate() {
            if !(p > 0.0) {
                report.violations.push(Violation {
                    kind: ViolationKind::NonPositiveProb,
                    index: Some(i),
                    magnitude: p.abs(),
                });
            }
        }
        for i in 0..n {
            if self.labels[i + 1..].contains(&self.labels[i]) {
                report.violations.push(Violation {
                    kind: ViolationKind::DuplicateLabel,
                    index: Some(i),
                    magnitude: 0.0,
                });
            }
        }
        for (i, state) in self.states.iter().enumerate() {
            if !state.is_square() || state.rows() != self.dim {
                report.violations.push(Violation {
                    kind: ViolationKind::WrongDimension,
                    index: Some(i),
                    magnitude: (state.rows() as f64 - self.dim as f64).abs(),
                });
                continue;
            }
            if !state.is_finite() {
                report.violations.push(Violation {
                    kind: ViolationKind::NonFinite,
                    index: Some(i),
                    magnitude: f64::INFINITY,
                });
                continue;
            }
            let herm = state.hermiticity_violation();
            if herm > tol::HERMITICITY {
                report.violations.push(Violation {
                    kind: ViolationKind::NotHermitian,
                    index: Some(i),
                    magnitude: herm,
                });
                continue;
            }
            let tr = state.trace().re;
            if (tr - 1.0).abs() > tol::DENSITY_TRACE {
                report.violations.push(Violation {
                    kind: ViolationKind::TraceNotOne,
                    index: Some(i),
                    magnitude: (tr - 1.0).abs(),
                });
            }
            match matcore::herm_eig(state) {
                Ok(eig) => {
                    let min = eig.values.last().cloned().unwrap_or(0.0);
                    if min < -tol::PSD {
                        report.violations.push(Violation {
                            kind: ViolationKind::NotPsd,
                            index: Some(i),
                            magnitude: -min,
                        });
                    }
                }
                Err(_) => report.violations.push(Violation {
                    kind: ViolationKind::NotHermitian,
                    index: Some(i),
                    magnitude: herm,
                }),
            }
        }
        report
    }

    fn require_valid(&self) -> Result<(), EnsembleError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(EnsembleError::InvalidEnsemble(report))
        }
    }

    /// Average state `sum_i p_i rho_i`.
    pub fn average_state(&self) -> Result<CMatrix, EnsembleError> {
        self.require_valid()?;
        let mut avg = CMatrix::zeros(self.dim, self.dim);
        for (p, state) in self.probs.iter().zip(&self.states) {
            avg = avg.add(&state.scale_re(*p));
        }
        Ok(avg)
    }

    /// n independent copies of the source as one composite ensemble: letters
    /// are ordered n-tuples (first position slowest), probabilities multiply
    /// and states tensor.
    pub fn tensor_power(&self, n: usize, max_dim: usize) -> Result<Ensemble, EnsembleError> {
        assert!(n >= 1, "tensor_power requires n >= 1");
        self.require_valid()?;
        let mut dim = 1usize;
        for _ in 0..n {
            dim = dim.checked_mul(self.dim).unwrap_or(usize::MAX);
            if dim > max_dim {
                return Err(EnsembleError::DimensionTooLarge { dim, max: max_dim });
            }
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let count = self.len().pow(n as u32);
        let mut labels = Vec::with_capacity(count);
        let mut probs = Vec::with_capacity(count);
        let mut states = Vec::with_capacity(count);
        for idx in 0..count {
            // Decode idx as an n-digit number base |letters|, first digit slowest.
            let mut digits = vec![0usize; n];
            let mut rem = idx;
            for pos in (0..n).rev() {
                digits[pos] = rem % self.len();
                rem /= self.len();
            }
            let mut label = self.labels[digits[0]].clone();
            let mut prob = self.probs[digits[0]];
            let mut state = self.states[digits[0]].clone();
            for &d in &digits[1..] {
                label.push('*');
                label.push_str(&self.labels[d]);
                prob *= self.probs[d];
                state = matcore::tensor(&state, &self.states[d]);
            }
            labels.push(label);
            probs.push(prob);
            states.push(state);
        }
        Ok(Ensemble { dim, labels, probs, states })
    }

    /// Tensors a fixed state onto every letter; probabilities unchanged.
    pub fn attach_redundancy(&self, rho_k: &CMatrix) -> Result<Ensemble, EnsembleError> {
        self.require_valid()?;
        matcore::vn_entropy(rho_k)?; // density-matrix check
        let states = self.states.iter().map(|s| matcore::tensor(s, rho_k)).collect();
        Ok(Ensemble {
            dim: self.dim * rho_k.rows(),
            labels: self.labels.clone(),
            probs: self.probs.clone(),
            states,
        })
    }

    /// Conjugates every letter by the same unitary.
    pub fn conjugated(&self, u: &CMatrix) -> Ensemble {
        Ensemble {
            dim: self.dim,
            labels: self.labels.clone(),
            probs: self.probs.clone(),
            states: self.states.iter().map(|s| matcore::embed(u, s)).collect(),
        }
    }

    /// Reorders letters by `perm` (new position k takes old letter perm[k]).
    pub fn permuted(&self, perm: &[usize]) -> Ensemble {
        assert_eq!(perm.len(), self.len());
        Ensemble {
            dim: self.dim,
            labels: perm.iter().map(|&i| self.labels[i].clone()).collect(),
            probs: perm.iter().map(|&i| self.probs[i]).collect(),
            states: perm.iter().map(|&i| self.states[i].clone()).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Deterministic ensemble of Haar-random pure states with uniform
/// probabilities.
pub fn random_pure(dim: usize, count: usize, seed: u64) -> Ensemble {
    assert!(count >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..count)
        .map(|_| {
            let u = matcore::haar_unitary(dim, &mut rng);
            let v: Vec<Complex64> = (0..dim).map(|i| u.get(i, 0)).collect();
            CMatrix::projector(&v)
        })
        .collect();
    Ensemble {
        dim,
        labels: (1..=count).map(|i| format!("s{i}")).collect(),
        probs: vec![1.0 / count as f64; count],
        states,
    }
}

/// Deterministic ensemble of rank-`rank` mixed states (Wishart-style
/// G G^dag normalized) with uniform probabilities.
pub fn random_mixed(dim: usize, count: usize, rank: usize, seed: u64) -> Ensemble {
    assert!(count >= 1 && rank >= 1 && rank <= dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..count)
        .map(|_| {
            let g = CMatrix::from_fn(dim, rank, |_, _| {
                Complex64::new(
                    matcore::sample_standard_normal(&mut rng),
                    matcore::sample_standard_normal(&mut rng),
                )
            });
            let w = g.mul(&g.dagger());
            w.scale_re(1.0 / w.trace().re).hermitize()
        })
        .collect();
    Ensemble {
        dim,
        labels: (1..=count).map(|i| format!("s{i}")).collect(),
        probs: vec![1.0 / count as f64; count],
        states,
    }
}

/// Commuting (diagonal) ensemble from nonnegative rows, each normalized to
/// trace 1, with uniform probabilities.
pub fn classical(rows: &[Vec<f64>]) -> Result<Ensemble, EnsembleError> {
    let count = rows.len();
    classical_weighted(rows, &vec![1.0 / count as f64; count.max(1)])
}

/// Commuting ensemble with explicit letter probabilities.
pub fn classical_weighted(rows: &[Vec<f64>], probs: &[f64]) -> Result<Ensemble, EnsembleError> {
    if rows.is_empty() {
        return Err(EnsembleError::BadShape("no rows".into()));
    }
    if probs.len() != rows.len() {
        return Err(EnsembleError::BadShape("probs length differs from row count".into()));
    }
    let dim = rows[0].len();
    let mut states = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(EnsembleError::BadShape(format!("row {i} has length {}", row.len())));
        }
        if row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(EnsembleError::BadShape(format!("row {i} has a negative entry")));
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(EnsembleError::BadShape(format!("row {i} sums to zero")));
        }
        states.push(CMatrix::diag(&row.iter().map(|x| x / total).collect::<Vec<_>>()));
    }
    Ensemble::new(
        dim,
        (1..=rows.len()).map(|i| format!("s{i}")).collect(),
        probs.to_vec(),
        states,
    )
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

pub const FIXTURE_NAMES: [&str; 7] = ["E1", "E2", "E3", "E4", "E5", "E6", "E7"];

/// Canonical named fixtures shared by tests and the CLI.
///
/// E1 single pure letter; E2 orthogonal pure qubits; E3 nonorthogonal pure
/// qubits (|0> and |+>); E4 a single mixed letter; E5 a three-level
/// commuting pair; E6 = E3 with a redundant diag(0.7, 0.3) factor attached;
/// E7 a mixed/pure noncommuting pair.
pub fn fixture(name: &str) -> Option<Ensemble> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ket0 = [one, zero];
    let ket1 = [zero, one];
    let plus = [h, h];
    match name.to_ascii_uppercase().as_str() {
        "E1" => Some(Ensemble {
            dim: 2,
            labels: vec!["s1".into()],
            probs: vec![1.0],
            states: vec![CMatrix::projector(&ket0)],
        }),
        "E2" => Some(Ensemble {
            dim: 2,
            labels: vec!["s1".into(), "s2".into()],
            probs: vec![0.5, 0.5],
            states: vec![CMatrix::projector(&ket0), CMatrix::projector(&ket1)],
        }),
        "E3" => Some(Ensemble {
            dim: 2,
            labels: vec!["s1".into(), "s2".into()],
            probs: vec![0.5, 0.5],
            states: vec![CMatrix::projector(&ket0), CMatrix::projector(&plus)],
        }),
        "E4" => Some(Ensemble {
            dim: 2,
            labels: vec!["s1".into()],
            probs: vec![1.0],
            states: vec![CMatrix::diag(&[0.7, 0.3])],
        }),
        "E5" => classical(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]]).ok(),
        "E6" => fixture("E3")?.attach_redundancy(&CMatrix::diag(&[0.7, 0.3])).ok(),
        "E7" => Some(Ensemble {
            dim: 2,
            labels: vec!["s1".into(), "s2".into()],
            probs: vec![0.5, 0.5],
            states: vec![CMatrix::diag(&[0.75, 0.25]), CMatrix::projector(&plus)],
        }),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LetterFile {
    label: String,
    prob: f64,
    state: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    dim: usize,
    letters: Vec<LetterFile>,
}

/// Serializes any serde value as JSON with every float printed with 17
/// significant digits (exact f64 round-trip).
pub fn to_json_17sig<T: Serialize>(value: &T) -> String {
    struct SigFormatter;
    impl serde_json::ser::Formatter for SigFormatter {
        fn write_f64<W: ?Sized + std::io::Write>(
            &mut self,
            writer: &mut W,
            value: f64,
        ) -> std::io::Result<()> {
            write!(writer, "{value:.16e}")
        }
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter);
    value.serialize(&mut ser).expect("JSON serialization cannot fail for these types");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

impl Ensemble {
    pub fn to_json(&self) -> String {
        let file = EnsembleFile {
            dim: self.dim,
            letters: self
                .labels
                .iter()
                .zip(&self.probs)
                .zip(&self.states)
                .map(|((label, prob), state)| LetterFile {
                    label: label.clone(),
                    prob: *prob,
                    state: state.clone(),
                })
                .collect(),
        };
        let mut s = to_json_17sig(&file);
        s.push('\n');
        s
    }

    /// Parses and validates an ensemble. In strict mode (the default) any
    /// unknown field is rejected.
    pub fn from_json(text: &str, lenient: bool) -> Result<Ensemble, EnsembleError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if !lenient {
            reject_unknown_fields(&value)?;
        }
        let file: EnsembleFile = serde_json::from_value(value)?;
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        let mut states = Vec::new();
        for letter in file.letters {
            labels.push(letter.label);
            probs.push(letter.prob);
            states.push(letter.state);
        }
        Ensemble::new(file.dim, labels, probs, states)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), EnsembleError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &Path, lenient: bool) -> Result<Ensemble, EnsembleError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, lenient)
    }
}

fn reject_unknown_fields(value: &serde_json::Value) -> Result<(), EnsembleError> {
    let top = value.as_object().ok_or_else(|| {
        EnsembleError::BadShape("ensemble file must be a JSON object".into())
    })?;
    for key in top.keys() {
        if key != "dim" && key != "letters" {
            return Err(EnsembleError::UnknownField(key.clone()));
        }
    }
    if let Some(letters) = top.get("letters").and_then(|l| l.as_array()) {
        for (i, letter) in letters.iter().enumerate() {
            if let Some(obj) = letter.as_object() {
                for key in obj.keys() {
                    if key != "label" && key != "prob" && key != "state" {
                        return Err(EnsembleError::UnknownField(format!("letters[{i}].{key}")));
                    }
                }
            }
        }
    }
    Ok(())
}
