//! The explicit variable-length faithful compression scheme, simulated at
//! the density-operator level.
//!
//! Encoding a letter: a projective measurement picks a block `l` (branch
//! probability `p^(i,l)`); the block index is written with an instantaneous
//! (Huffman) code; the J-factor state rides in `ceil(log2 dim_J)` qubits;
//! the K factor is discarded. Decoding parses the codeword, extracts the J
//! corner and regenerates the known `rho_K^(l)`. Averaged over branches the
//! letter is reproduced exactly, and expected lengths always land in the
//! `[I_C + D_NC, I_C + D_NC + 2]` window (per letter: `+2/n` for n-blocks).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError};
use crate::kidecomp::{ki_decompose, DecompConfig, KiDecomposition, KiError};
use crate::matcore::{self, CMatrix, MatError};
use crate::rates;
use crate::tol;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("no probabilities given")]
    EmptyInput,
    #[error("no codeword for block {block}")]
    MissingCodeword { block: usize },
    #[error("bits `{bits}` do not parse to a codeword")]
    UnparseableCodeword { bits: String },
    #[error("payload mass {mass:.3e} outside the leading dim_J corner")]
    PayloadLeakage { mass: f64 },
    #[error("expected length {value} outside the asserted window [{lo}, {hi}]; this is a bug")]
    WindowViolation { value: f64, lo: f64, hi: f64 },
    #[error("prefix property violated: codeword {a} prefixes {b}")]
    NotPrefixFree { a: String, b: String },
    #[error("Kraft sum {sum} exceeds 1")]
    KraftViolation { sum: f64 },
    #[error(transparent)]
    Ki(#[from] KiError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Rate(#[from] rates::RateError),
}

/// Binary codewords for block indices, prefix-free with Kraft sum <= 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrefixCode {
    codewords: Vec<String>,
}

impl PrefixCode {
    /// Validating constructor for hand-built codes.
    pub fn new(codewords: Vec<String>) -> Result<Self, CodecError> {
        let code = PrefixCode { codewords };
        code.check_prefix_free()?;
        if !code.kraft_ok() {
            return Err(CodecError::KraftViolation { sum: code.kraft_sum() });
        }
        Ok(code)
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, block: usize) -> Option<&str> {
        self.codewords.get(block).map(|s| s.as_str())
    }

    pub fn kraft_sum(&self) -> f64 {
        self.codewords.iter().map(|c| 2.0f64.powi(-(c.len() as i32))).sum()
    }

    pub fn kraft_ok(&self) -> bool {
        self.kraft_sum() <= 1.0 + tol::KRAFT_SLACK
    }

    pub fn check_prefix_free(&self) -> Result<(), CodecError> {
        for (i, a) in self.codewords.iter().enumerate() {
            for (j, b) in self.codewords.iter().enumerate() {
                if i != j && b.starts_with(a.as_str()) {
                    return Err(CodecError::NotPrefixFree { a: a.clone(), b: b.clone() });
                }
            }
        }
        Ok(())
    }

    /// Index of the codeword that the bit string is, exactly; `None` if the
    /// bits are not a codeword.
    pub fn parse_exact(&self, bits: &str) -> Option<usize> {
        self.codewords.iter().position(|c| c == bits)
    }

    pub fn expected_bits(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(&self.codewords).map(|(p, c)| p * c.len() as f64).sum()
    }
}

/// Optimal prefix code by iterative pairing of the two smallest masses.
/// Deterministic tie-breaking: the queue is ordered by (mass, earliest
/// constituent block index); on a merge the lower-index node becomes bit 0.
/// A single symbol gets the empty codeword.
pub fn huffman(probs: &[f64]) -> Result<PrefixCode, CodecError> {
    if probs.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    debug_assert!(probs.iter().all(|&p| p > 0.0));
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    if probs.len() == 1 {
        return Ok(PrefixCode { codewords: vec![String::new()] });
    }

    enum Node {
        Leaf(usize),
        Internal(Box<Active>, Box<Active>), // (bit 0, bit 1)
    }
    struct Active {
        mass: f64,
        min_block: usize,
        node: Node,
    }
    let mut active: Vec<Active> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| Active { mass: p, min_block: i, node: Node::Leaf(i) })
        .collect();
    while active.len() > 1 {
        active.sort_by(|a, b| {
            a.mass
                .partial_cmp(&b.mass)
                .unwrap()
                .then(a.min_block.cmp(&b.min_block))
        });
        let first = active.remove(0);
        let second = active.remove(0);
        let (zero, one) =
            if first.min_block < second.min_block { (first, second) } else { (second, first) };
        active.push(Active {
            mass: zero.mass + one.mass,
            min_block: zero.min_block.min(one.min_block),
            node: Node::Internal(Box::new(zero), Box::new(one)),
        });
    }
    let mut codewords = vec![String::new(); probs.len()];
    fn assign(a: &Active, prefix: String, out: &mut [String]) {
        match &a.node {
            Node::Leaf(i) => out[*i] = prefix,
            Node::Internal(zero, one) => {
                assign(zero, format!("{prefix}0"), out);
                assign(one, format!("{prefix}1"), out);
            }
        }
    }
    assign(&active.remove(0), String::new(), &mut codewords);
    let code = PrefixCode { codewords };
    debug_assert!(code.check_prefix_free().is_ok());
    debug_assert!(code.kraft_ok());
    Ok(code)
}

/// Qubits needed for a dim-dimensional payload: ceil(log2 dim).
pub fn qubits_for(dim: usize) -> usize {
    debug_assert!(dim >= 1);
    (usize::BITS - (dim - 1).leading_zeros()) as usize
}

/// One measurement branch of the encoder: the classical codeword for the
/// observed block plus the J state packed into a qubit register.
#[derive(Clone, Debug)]
pub struct EncodedBranch {
    pub block: usize,
    /// p^(i,l): probability of this branch given the input letter.
    pub probability: f64,
    pub bits: String,
    /// Density matrix on 2^payload_qubits dims, supported on the first
    /// dim_J computational basis states.
    pub payload: CMatrix,
    pub payload_qubits: usize,
}

impl EncodedBranch {
    /// Classical bits plus payload qubits.
    pub fn total_length(&self) -> usize {
        self.bits.len() + self.payload_qubits
    }
}

/// Encodes one letter: one branch per block the letter touches. The K part
/// is discarded (never represented).
pub fn encode(
    d: &KiDecomposition,
    code: &PrefixCode,
    letter: usize,
) -> Result<Vec<EncodedBranch>, CodecError> {
    let mut branches = Vec::new();
    for (l, block) in d.blocks.iter().enumerate() {
        let p_cond = block.cond_probs[letter];
        if p_cond <= tol::PRESENCE {
            continue;
        }
        let bits = code
            .codeword(l)
            .ok_or(CodecError::MissingCodeword { block: l })?
            .to_string();
        let j_state = block.rho_j[letter]
            .as_ref()
            .expect("present letters carry a J state");
        let q = qubits_for(block.dim_j);
        let dim_payload = 1usize << q;
        let mut payload = CMatrix::zeros(dim_payload, dim_payload);
        for i in 0..block.dim_j {
            for j in 0..block.dim_j {
                payload.set(i, j, j_state.get(i, j));
            }
        }
        branches.push(EncodedBranch {
            block: l,
            probability: p_cond,
            bits,
            payload,
            payload_qubits: q,
        });
    }
    Ok(branches)
}

/// Decodes one branch back to a density matrix on the source space: parses
/// the codeword, takes the leading dim_J corner of the payload and tensors
/// the known rho_K^(l) back on.
pub fn decode(
    d: &KiDecomposition,
    code: &PrefixCode,
    branch: &EncodedBranch,
) -> Result<CMatrix, CodecError> {
    let l = code
        .parse_exact(&branch.bits)
        .ok_or_else(|| CodecError::UnparseableCodeword { bits: branch.bits.clone() })?;
    let block = &d.blocks[l];
    let dj = block.dim_j;
    let mut corner = CMatrix::zeros(dj, dj);
    for i in 0..dj {
        for j in 0..dj {
            corner.set(i, j, branch.payload.get(i, j));
        }
    }
    let mut leak_sq = 0.0;
    for i in 0..branch.payload.rows() {
        for j in 0..branch.payload.cols() {
            if i >= dj || j >= dj {
                leak_sq += branch.payload.get(i, j).norm_sqr();
            }
        }
    }
    let leak = leak_sq.sqrt();
    if leak > tol::PAYLOAD_LEAK {
        return Err(CodecError::PayloadLeakage { mass: leak });
    }
    let corner = corner.scale_re(1.0 / corner.trace().re);
    let product = matcore::tensor(&corner, &block.rho_k);
    Ok(matcore::embed(&d.block_isometry(l), &product))
}

/// Max over letters of the trace distance between the branch-averaged
/// decode and the original letter; at most ~1e-7 for a verified
/// decomposition.
pub fn roundtrip_check(
    d: &KiDecomposition,
    code: &PrefixCode,
    e: &Ensemble,
) -> Result<f64, CodecError> {
    let mut worst = 0.0f64;
    for (i, state) in e.states.iter().enumerate() {
        let mut recon = CMatrix::zeros(e.dim, e.dim);
        for branch in encode(d, code, i)? {
            let decoded = decode(d, code, &branch)?;
            recon = recon.add(&decoded.scale_re(branch.probability));
        }
        worst = worst.max(matcore::trace_distance(state, &recon)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockLength {
    pub block: usize,
    pub prob: f64,
    pub codeword_len: usize,
    pub payload_qubits: usize,
}

/// Expected-length bookkeeping for one coding experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LengthStats {
    /// sum_l p^(l) (|c_l| + ceil(log2 dim_J^(l))), in qubits.
    pub expected_length: f64,
    pub per_block: Vec<BlockLength>,
    /// Number of source letters coded jointly.
    pub block_len: usize,
    pub per_letter_rate: f64,
}

/// Expected total length of the scheme, asserted against the
/// `[i_c + d_nc, i_c + d_nc + 2]` window of the same decomposition.
pub fn expected_length(d: &KiDecomposition, code: &PrefixCode) -> Result<LengthStats, CodecError> {
    let stats = length_stats(d, code, 1)?;
    let lo = rates::i_c(d) + rates::d_nc(d);
    let hi = lo + 2.0;
    check_window(stats.expected_length, lo, hi)?;
    Ok(stats)
}

fn length_stats(
    d: &KiDecomposition,
    code: &PrefixCode,
    block_len: usize,
) -> Result<LengthStats, CodecError> {
    let mut expected = 0.0;
    let mut per_block = Vec::with_capacity(d.blocks.len());
    for (l, block) in d.blocks.iter().enumerate() {
        let bits = code.codeword(l).ok_or(CodecError::MissingCodeword { block: l })?;
        let q = qubits_for(block.dim_j);
        expected += block.prob * (bits.len() + q) as f64;
        per_block.push(BlockLength {
            block: l,
            prob: block.prob,
            codeword_len: bits.len(),
            payload_qubits: q,
        });
    }
    Ok(LengthStats {
        expected_length: expected,
        per_block,
        block_len,
        per_letter_rate: expected / block_len as f64,
    })
}

fn check_window(value: f64, lo: f64, hi: f64) -> Result<(), CodecError> {
    if value < lo - tol::WINDOW_SLACK || value > hi + tol::WINDOW_SLACK {
        return Err(CodecError::WindowViolation { value, lo, hi });
    }
    Ok(())
}

/// Outcome of coding n-letter blocks of a source.
#[derive(Clone, Debug)]
pub struct NBlockOutcome {
    pub stats: LengthStats,
    /// Per-letter window `[i_c + d_nc, i_c + d_nc + 2/n]` of the base source.
    pub window: [f64; 2],
    pub roundtrip_residual: f64,
    pub code: PrefixCode,
    pub decomposition: KiDecomposition,
    pub power: Ensemble,
}

/// Decomposes the n-fold tensor power, codes its blocks with a Huffman
/// code, verifies faithfulness and asserts the per-letter window against
/// the base source's quantities.
pub fn nblock_experiment(
    e: &Ensemble,
    n: usize,
    config: &DecompConfig,
) -> Result<NBlockOutcome, CodecError> {
    let base = ki_decompose(e, config)?;
    let power = e.tensor_power(n, config.max_dim)?;
    let decomposition =
        if n == 1 { base.clone() } else { ki_decompose(&power, config)? };
    let probs: Vec<f64> = decomposition.blocks.iter().map(|b| b.prob).collect();
    let code = huffman(&probs)?;

    let stats = length_stats(&decomposition, &code, n)?;
    let lo_power = rates::i_c(&decomposition) + rates::d_nc(&decomposition);
    check_window(stats.expected_length, lo_power, lo_power + 2.0)?;
    let lo = rates::i_c(&base) + rates::d_nc(&base);
    let hi = lo + 2.0 / n as f64;
    check_window(stats.per_letter_rate, lo, hi)?;

    let roundtrip_residual = roundtrip_check(&decomposition, &code, &power)?;
    Ok(NBlockOutcome { stats, window: [lo, hi], roundtrip_residual, code, decomposition, power })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleStats {
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo view of the length observable: samples a letter, then a
/// branch, and accumulates total lengths. Each trial reseeds the generator
/// on its own stream (trial index mixed into the master seed), so results
/// do not depend on evaluation order.
pub fn sample_lengths(
    d: &KiDecomposition,
    code: &PrefixCode,
    e: &Ensemble,
    trials: usize,
    seed: u64,
) -> Result<SampleStats, CodecError> {
    assert!(trials >= 1);
    let lengths: Vec<usize> = d
        .blocks
        .iter()
        .enumerate()
        .map(|(l, b)| {
            code.codeword(l)
                .map(|c| c.len() + qubits_for(b.dim_j))
                .ok_or(CodecError::MissingCodeword { block: l })
        })
        .collect::<Result<_, _>>()?;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64 + 1);
        let letter = sample_index(&e.probs, rng.gen::<f64>());
        let cond = &d.blocks.iter().map(|b| b.cond_probs[letter]).collect::<Vec<_>>();
        let block = sample_index(cond, rng.gen::<f64>());
        let len = lengths[block] as f64;
        sum += len;
        sum_sq += len * len;
    }
    let n = trials as f64;
    let mean = sum / n;
    let std_err = if trials > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SampleStats { trials, mean, std_err })
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::fixture;

    fn decompose(name: &str) -> (Ensemble, KiDecomposition) {
        let e = fixture(name).unwrap();
        let d = ki_decompose(&e, &DecompConfig::default()).unwrap();
        (e, d)
    }

    #[test]
    fn huffman_hand_cases() {
        let single = huffman(&[1.0]).unwrap();
        assert_eq!(single.codeword(0), Some(""));
        assert!((single.expected_bits(&[1.0]) - 0.0).abs() < 1e-15);

        let pair = huffman(&[0.5, 0.5]).unwrap();
        assert_eq!(pair.codeword(0).unwrap().len(), 1);
        assert_eq!(pair.codeword(1).unwrap().len(), 1);
        assert!((pair.expected_bits(&[0.5, 0.5]) - 1.0).abs() < 1e-15);

        let triple = huffman(&[0.5, 0.25, 0.25]).unwrap();
        let lens: Vec<usize> = (0..3).map(|i| triple.codeword(i).unwrap().len()).collect();
        assert_eq!(lens, vec![1, 2, 2]);
        assert!((triple.expected_bits(&[0.5, 0.25, 0.25]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn huffman_tie_breaking_is_deterministic() {
        // Blocks 0 and 1 (masses 0.25) merge first; the lower index rides
        // bit 0 throughout.
        let code = huffman(&[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(code.codeword(0), Some("00"));
        assert_eq!(code.codeword(1), Some("01"));
        assert_eq!(code.codeword(2), Some("1"));
        let again = huffman(&[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(code.codewords, again.codewords);
    }

    #[test]
    fn huffman_kraft_and_prefix_hold() {
        for probs in [
            vec![1.0],
            vec![0.5, 0.5],
            vec![0.4, 0.3, 0.2, 0.1],
            vec![0.9, 0.05, 0.03, 0.02],
        ] {
            let code = huffman(&probs).unwrap();
            assert!(code.kraft_ok());
            code.check_prefix_free().unwrap();
            // Within one bit of the entropy.
            let h = crate::matcore::shannon_entropy(&probs);
            let el = code.expected_bits(&probs);
            assert!(el >= h - 1e-12 && el < h + 1.0);
        }
        assert!(matches!(huffman(&[]), Err(CodecError::EmptyInput)));
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(qubits_for(1), 0);
        assert_eq!(qubits_for(2), 1);
        assert_eq!(qubits_for(3), 2);
        assert_eq!(qubits_for(4), 2);
        assert_eq!(qubits_for(5), 3);
    }

    #[test]
    fn encode_e3_single_branch() {
        let (_, d) = decompose("E3");
        let code = huffman(&[1.0]).unwrap();
        let branches = encode(&d, &code, 1).unwrap();
        assert_eq!(branches.len(), 1);
        let b = &branches[0];
        assert_eq!(b.bits, "");
        assert_eq!(b.payload_qubits, 1);
        assert_eq!(b.total_length(), 1);
        assert!((b.probability - 1.0).abs() < 1e-12);
        // The payload carries the letter's J content: still pure.
        assert!(matcore::vn_entropy(&b.payload).unwrap() < 1e-9);
    }

    #[test]
    fn encode_e2_and_e5_branches() {
        let (_, d2) = decompose("E2");
        let code2 = huffman(&d2.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
        let branches = encode(&d2, &code2, 0).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].bits.len(), 1);
        assert_eq!(branches[0].payload_qubits, 0);
        assert_eq!(branches[0].total_length(), 1);

        let (_, d5) = decompose("E5");
        let code5 = huffman(&d5.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
        let mut branches = encode(&d5, &code5, 0).unwrap();
        assert_eq!(branches.len(), 2);
        branches.sort_by_key(|b| b.total_length());
        assert!((branches[0].probability - 0.5).abs() < 1e-9);
        assert!((branches[1].probability - 0.5).abs() < 1e-9);
        assert_eq!(branches[0].total_length(), 1);
        assert_eq!(branches[1].total_length(), 2);
    }

    #[test]
    fn decode_regenerates_redundancy_from_nothing() {
        // E4 sends zero qubits; the decoder rebuilds diag(0.7, 0.3) purely
        // from the stored rho_K.
        let (e4, d) = decompose("E4");
        let code = huffman(&[1.0]).unwrap();
        let branches = encode(&d, &code, 0).unwrap();
        assert_eq!(branches[0].total_length(), 0);
        let out = decode(&d, &code, &branches[0]).unwrap();
        assert!(matcore::trace_distance(&out, &e4.states[0]).unwrap() < 1e-10);
    }

    #[test]
    fn decode_rejects_corrupted_codeword() {
        let (_, d) = decompose("E3");
        let code = PrefixCode::new(vec!["0".into()]).unwrap();
        let mut branches = encode(&d, &code, 0).unwrap();
        branches[0].bits = "1".into();
        assert!(matches!(
            decode(&d, &code, &branches[0]),
            Err(CodecError::UnparseableCodeword { .. })
        ));
    }

    #[test]
    fn decode_rejects_payload_leakage() {
        // dim_J = 3 needs a 4-dim payload register; mass at index 3 leaks.
        let e = crate::ensemble::random_pure(3, 3, 123);
        let d = ki_decompose(&e, &DecompConfig::default()).unwrap();
        assert_eq!(d.blocks[0].dim_j, 3);
        let code = huffman(&[1.0]).unwrap();
        let mut branches = encode(&d, &code, 0).unwrap();
        assert_eq!(branches[0].payload.rows(), 4);
        branches[0].payload.set(3, 3, num_complex::Complex64::new(0.1, 0.0));
        assert!(matches!(
            decode(&d, &code, &branches[0]),
            Err(CodecError::PayloadLeakage { .. })
        ));
    }

    #[test]
    fn decoding_is_linear_in_the_payload() {
        let (_, d) = decompose("E3");
        let code = huffman(&[1.0]).unwrap();
        let b0 = encode(&d, &code, 0).unwrap().remove(0);
        let b1 = encode(&d, &code, 1).unwrap().remove(0);
        let alpha = 0.3;
        let mixed = EncodedBranch {
            block: 0,
            probability: 1.0,
            bits: String::new(),
            payload: b0.payload.scale_re(alpha).add(&b1.payload.scale_re(1.0 - alpha)),
            payload_qubits: 1,
        };
        let lhs = decode(&d, &code, &mixed).unwrap();
        let rhs = decode(&d, &code, &b0)
            .unwrap()
            .scale_re(alpha)
            .add(&decode(&d, &code, &b1).unwrap().scale_re(1.0 - alpha));
        assert!(lhs.sub(&rhs).max_norm() < 1e-10);
    }

    #[test]
    fn roundtrip_on_fixtures() {
        for name in ["E1", "E3", "E5", "E6"] {
            let (e, d) = decompose(name);
            let code = huffman(&d.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
            let residual = roundtrip_check(&d, &code, &e).unwrap();
            assert!(residual <= 1e-7, "{name}: residual {residual:.3e}");
        }
    }

    #[test]
    fn expected_length_windows() {
        let (_, d3) = decompose("E3");
        let code3 = huffman(&d3.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
        let s3 = expected_length(&d3, &code3).unwrap();
        assert!((s3.expected_length - 1.0).abs() < 1e-12);

        let (_, d5) = decompose("E5");
        let code5 = huffman(&d5.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
        let s5 = expected_length(&d5, &code5).unwrap();
        assert!((s5.expected_length - 1.5).abs() < 1e-9);

        let (_, d4) = decompose("E4");
        let code4 = huffman(&[1.0]).unwrap();
        let s4 = expected_length(&d4, &code4).unwrap();
        assert_eq!(s4.expected_length, 0.0);
    }

    #[test]
    fn nblock_windows() {
        let cfg = DecompConfig::default();
        let out = nblock_experiment(&fixture("E3").unwrap(), 2, &cfg).unwrap();
        assert!((out.stats.per_letter_rate - 1.0).abs() < 1e-9);
        assert!((out.window[0] - 1.0).abs() < 1e-9);
        assert!((out.window[1] - 2.0).abs() < 1e-9);
        assert!(out.roundtrip_residual <= 1e-7);

        let out5 = nblock_experiment(&fixture("E5").unwrap(), 2, &cfg).unwrap();
        assert!((out5.stats.per_letter_rate - 1.5).abs() < 1e-9);

        let out7 = nblock_experiment(&fixture("E7").unwrap(), 1, &cfg).unwrap();
        assert!((out7.stats.per_letter_rate - 1.0).abs() < 1e-9);
        assert!((out7.window[0] - 1.0).abs() < 1e-9);
        assert!((out7.window[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_statistics() {
        let (e1, d1) = decompose("E1");
        let code1 = huffman(&[1.0]).unwrap();
        let s = sample_lengths(&d1, &code1, &e1, 100, 5).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.std_err, 0.0);

        let (e5, d5) = decompose("E5");
        let code5 = huffman(&d5.blocks.iter().map(|b| b.prob).collect::<Vec<_>>()).unwrap();
        let s = sample_lengths(&d5, &code5, &e5, 10_000, 5).unwrap();
        assert!((s.mean - 1.5).abs() <= 5.0 * s.std_err.max(1e-12));
        let again = sample_lengths(&d5, &code5, &e5, 10_000, 5).unwrap();
        assert_eq!(s.mean, again.mean);
        assert_eq!(s.std_err, again.std_err);
    }
}
