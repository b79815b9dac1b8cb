//! Dense complex-matrix primitives: Hermitian eigendecomposition, tensor and
//! direct-sum composition, partial traces, operator powers, entropies and
//! distances.
//!
//! Composite-index convention used everywhere in this crate: for a tensor
//! product the first factor varies slowest, i.e. `tensor(a, b)` has row index
//! `i_a * b.rows + i_b`. All modules reuse this convention; do not introduce
//! another one.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |m - m^dag| = {violation:.3e})")]
    NotHermitian { violation: f64 },
    #[error("dimension mismatch: {lhs} vs {rhs}")]
    DimensionMismatch { lhs: usize, rhs: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },
}

/// Dense complex matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, entries: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMatrix { rows: r, cols: c, entries: rows.iter().flatten().cloned().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(*v, 0.0));
        }
        m
    }

    /// Outer product |v><v| of a (not necessarily normalized) column vector.
    pub fn projector(v: &[Complex64]) -> Self {
        let d = v.len();
        Self::from_fn(d, d, |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        // i-k-j order keeps both operands in row-major streaming access.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.entries[k * other.cols..(k + 1) * other.cols];
                let trow = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (t, o) in trow.iter_mut().zip(orow) {
                    *t += a * o;
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt inner product Tr(self^dag other).
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_violation(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.is_square() && self.hermiticity_violation() <= tolerance
    }

    /// (m + m^dag)/2.
    pub fn hermitize(&self) -> Self {
        assert!(self.is_square());
        self.add(&self.dagger()).scale_re(0.5)
    }

    pub(crate) fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.entries.iter().cloned())
    }

    pub(crate) fn from_na(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

// JSON form: nested rows of [re, im] pairs.
impl serde::Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let nested: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect())
            .collect();
        nested.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let nested = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let rows = nested.len();
        let cols = nested.first().map_or(0, |r| r.len());
        if nested.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(CMatrix {
            rows,
            cols,
            entries: nested
                .iter()
                .flatten()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        })
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in descending
/// order, eigenvectors as the columns of a unitary matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEigen {
    /// V diag(f(values)) V^dag.
    pub fn rebuild(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let d = self.vectors.rows();
        let mut out = CMatrix::zeros(d, d);
        for (k, &lam) in self.values.iter().enumerate() {
            let flam = f(lam);
            if flam.re == 0.0 && flam.im == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = self.vectors.get(i, k);
                for j in 0..d {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + flam * vi * self.vectors.get(j, k).conj());
                }
            }
        }
        out
    }
}

/// Hermitian eigendecomposition. The input is checked against the
/// hermiticity tolerance and symmetrized before decomposition. Each
/// eigenvector's phase is fixed by making its largest-magnitude component
/// real positive, so results are reproducible.
pub fn herm_eig(m: &CMatrix) -> Result<HermEigen, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let violation = m.hermiticity_violation();
    if violation > tol::HERMITICITY * f64::max(1.0, m.max_norm()) {
        return Err(MatError::NotHermitian { violation });
    }
    let sym = m.hermitize();
    let se = sym.to_na().symmetric_eigen();
    let d = m.rows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        // Phase fix: rotate so the largest-magnitude component is real positive.
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for i in 0..d {
            let mag = se.eigenvectors[(i, k)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = se.eigenvectors[(best, k)];
        let phase =
            if best_mag > 0.0 { pivot.conj() / best_mag } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            vectors.set(i, col, se.eigenvectors[(i, k)] * phase);
        }
    }
    Ok(HermEigen { values, vectors })
}

/// Kronecker product with the first factor slowest-varying:
/// `tensor(a, b)[(i*b.rows + k, j*b.cols + l)] = a[i,j] * b[k,l]`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a.get(i, j);
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Block-diagonal direct sum, block order preserved.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    assert!(blocks.iter().all(|b| b.is_square()));
    let dim: usize = blocks.iter().map(|b| b.rows()).sum();
    let mut out = CMatrix::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out.set(off + i, off + j, b.get(i, j));
            }
        }
        off += b.rows();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on a bipartite space of dims `(d_a, d_b)`,
/// using the same composite indexing as [`tensor`].
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix, MatError> {
    let (da, db) = dims;
    if !m.is_square() || m.rows() != da * db {
        return Err(MatError::DimensionMismatch { lhs: m.rows(), rhs: da * db });
    }
    match keep {
        Keep::First => {
            let mut out = CMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..db {
                        s += m.get(i * db + k, j * db + k);
                    }
                    out.set(i, j, s);
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = CMatrix::zeros(db, db);
            for k in 0..db {
                for l in 0..db {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..da {
                        s += m.get(i * db + k, i * db + l);
                    }
                    out.set(k, l, s);
                }
            }
            Ok(out)
        }
    }
}

fn psd_eig(rho: &CMatrix) -> Result<HermEigen, MatError> {
    let eig = herm_eig(rho)?;
    let lam_max = eig.values.first().cloned().unwrap_or(0.0);
    let lam_min = eig.values.last().cloned().unwrap_or(0.0);
    if lam_min < -tol::PSD * f64::max(1.0, lam_max) {
        return Err(MatError::NotPsd { min_eigenvalue: lam_min });
    }
    Ok(eig)
}

/// Support cutoff: eigenvalues at or below `SUPPORT_CUTOFF_REL * lambda_max`
/// count as zero.
fn support_cutoff(values: &[f64]) -> f64 {
    let lam_max = values.first().cloned().unwrap_or(0.0).max(0.0);
    tol::SUPPORT_CUTOFF_REL * lam_max
}

/// rho^{it} on the support of rho (zero outside); unitary on the support.
pub fn mat_power_it(rho: &CMatrix, t: f64) -> Result<CMatrix, MatError> {
    let eig = psd_eig(rho)?;
    let cut = support_cutoff(&eig.values);
    Ok(eig.rebuild(|lam| {
        if lam > cut {
            Complex64::new(0.0, t * lam.ln()).exp()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// rho^p on the support of rho (pseudo-power: eigenvalues below the support
/// cutoff map to zero, so negative exponents are well defined).
pub fn mat_power(rho: &CMatrix, p: f64) -> Result<CMatrix, MatError> {
    let eig = psd_eig(rho)?;
    let cut = support_cutoff(&eig.values);
    Ok(eig.rebuild(|lam| {
        if lam > cut {
            Complex64::new(lam.powf(p), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Projector onto the support of a PSD matrix.
pub fn support_projector(rho: &CMatrix) -> Result<CMatrix, MatError> {
    let eig = psd_eig(rho)?;
    let cut = support_cutoff(&eig.values);
    Ok(eig.rebuild(
        |lam| if lam > cut { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) },
    ))
}

fn density_eig(rho: &CMatrix) -> Result<HermEigen, MatError> {
    let eig = psd_eig(rho).map_err(|e| match e {
        MatError::NotPsd { min_eigenvalue } => MatError::NotDensityMatrix {
            reason: format!("negative eigenvalue {min_eigenvalue:.3e}"),
        },
        other => other,
    })?;
    let tr: f64 = eig.values.iter().sum();
    if (tr - 1.0).abs() > tol::DENSITY_TRACE {
        return Err(MatError::NotDensityMatrix { reason: format!("trace {tr} != 1") });
    }
    Ok(eig)
}

/// Von Neumann entropy in bits: -sum lambda log2 lambda over the support.
pub fn vn_entropy(rho: &CMatrix) -> Result<f64, MatError> {
    let eig = density_eig(rho)?;
    let cut = support_cutoff(&eig.values);
    let mut s = 0.0;
    for &lam in &eig.values {
        if lam > cut {
            s -= lam * lam.log2();
        }
    }
    // 1.0 + 1e-16 eigenvalues give a tiny negative sum; clamp it.
    if s < 0.0 {
        debug_assert!(s >= -tol::ENTROPY_CLAMP);
        s = 0.0;
    }
    Ok(s)
}

/// Shannon entropy in bits of a (sub)probability vector, 0 log 0 = 0.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    let mut s = 0.0;
    for &p in probs {
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    s.max(0.0)
}

/// Trace distance (1/2)||rho - sigma||_1 for Hermitian inputs.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64, MatError> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(MatError::DimensionMismatch { lhs: rho.rows(), rhs: sigma.rows() });
    }
    let diff = rho.sub(sigma).hermitize();
    let eig = herm_eig(&diff)?;
    Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
}

/// W x W^dag: push a block operator through an isometry into the big space.
pub fn embed(isometry: &CMatrix, x: &CMatrix) -> CMatrix {
    isometry.mul(x).mul(&isometry.dagger())
}

/// W^dag x W: pull an operator back through an isometry.
pub fn restrict(isometry: &CMatrix, x: &CMatrix) -> CMatrix {
    isometry.dagger().mul(x).mul(isometry)
}

/// Haar-distributed random unitary (QR of a complex Gaussian matrix with the
/// R-diagonal phases absorbed).
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(sample_standard_normal(rng), sample_standard_normal(rng))
    });
    let qr = g.to_na().qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = CMatrix::from_na(&q);
    for j in 0..dim {
        let rjj = r[(j, j)];
        let mag = rjj.norm();
        let phase = if mag > 0.0 { rjj / mag } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            out.set(i, j, out.get(i, j) * phase);
        }
    }
    out
}

/// Box-Muller standard normal; avoids pulling in a distributions crate for
/// the few draws we need.
pub fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn herm_eig_identity() {
        let eig = herm_eig(&CMatrix::identity(2)).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_reorders_diagonal() {
        let eig = herm_eig(&CMatrix::diag(&[0.3, 0.7])).unwrap();
        assert!((eig.values[0] - 0.7).abs() < 1e-12);
        assert!((eig.values[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_2x2_closed_form() {
        // [[5/8, 1/4], [1/4, 3/8]] has eigenvalues 1/2 +- sqrt(1/64 + 1/16).
        let m = CMatrix::from_rows(&[
            vec![c(0.625, 0.0), c(0.25, 0.0)],
            vec![c(0.25, 0.0), c(0.375, 0.0)],
        ]);
        let expected_hi = 0.5 + (1.0 / 64.0 + 1.0 / 16.0f64).sqrt();
        let expected_lo = 0.5 - (1.0 / 64.0 + 1.0 / 16.0f64).sqrt();
        let eig = herm_eig(&m).unwrap();
        assert!((eig.values[0] - expected_hi).abs() < 1e-12);
        assert!((eig.values[1] - expected_lo).abs() < 1e-12);
        // Reconstruction.
        let recon = eig.rebuild(|l| c(l, 0.0));
        assert!(recon.sub(&m).max_norm() < 1e-12);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(matches!(herm_eig(&m), Err(MatError::NotHermitian { .. })));
    }

    #[test]
    fn herm_eig_rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&m), Err(MatError::NotSquare { .. })));
    }

    #[test]
    fn tensor_identities() {
        let t = tensor(&CMatrix::identity(2), &CMatrix::identity(3));
        assert!(t.sub(&CMatrix::identity(6)).max_norm() == 0.0);
    }

    #[test]
    fn tensor_block_placement() {
        let t = tensor(&CMatrix::diag(&[1.0, 0.0]), &CMatrix::diag(&[0.7, 0.3]));
        assert!(t.sub(&CMatrix::diag(&[0.7, 0.3, 0.0, 0.0])).max_norm() == 0.0);
    }

    #[test]
    fn direct_sum_cases() {
        let one = CMatrix::identity(1);
        assert!(direct_sum(&[one.clone(), one]).sub(&CMatrix::identity(2)).max_norm() == 0.0);
        let half = CMatrix::diag(&[0.5, 0.5]);
        assert!(direct_sum(std::slice::from_ref(&half)).sub(&half).max_norm() == 0.0);
    }

    #[test]
    fn direct_sum_trace_is_additive() {
        let m = CMatrix::from_rows(&[vec![c(0.2, 0.0), c(0.1, 0.3)], vec![c(0.1, -0.3), c(0.8, 0.0)]]);
        let s = direct_sum(&[CMatrix::identity(1).scale_re(0.25), m.scale_re(0.75)]);
        let expected = 0.25 + 0.75 * m.trace().re;
        assert!((s.trace().re - expected).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = CMatrix::diag(&[0.2, 0.8]);
        let sigma = CMatrix::diag(&[0.5, 0.25, 0.25]);
        let pt = partial_trace(&tensor(&rho, &sigma), (2, 3), Keep::First).unwrap();
        assert!(pt.sub(&rho).max_norm() < 1e-15);
        let pt2 = partial_trace(&tensor(&rho, &sigma), (2, 3), Keep::Second).unwrap();
        assert!(pt2.sub(&sigma).max_norm() < 1e-15);
    }

    #[test]
    fn partial_trace_identity() {
        let pt = partial_trace(&CMatrix::identity(4), (2, 2), Keep::First).unwrap();
        assert!(pt.sub(&CMatrix::identity(2).scale_re(2.0)).max_norm() < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let m = CMatrix::identity(5);
        assert!(matches!(
            partial_trace(&m, (2, 3), Keep::First),
            Err(MatError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mat_power_it_zero_t_gives_support_projector() {
        let rho = CMatrix::diag(&[0.7, 0.3, 0.0]);
        let p = mat_power_it(&rho, 0.0).unwrap();
        assert!(p.sub(&CMatrix::diag(&[1.0, 1.0, 0.0])).max_norm() < 1e-12);
    }

    #[test]
    fn mat_power_it_maximally_mixed_is_scalar_phase() {
        let d = 3usize;
        let rho = CMatrix::identity(d).scale_re(1.0 / d as f64);
        let t = 0.83;
        let got = mat_power_it(&rho, t).unwrap();
        let phase = Complex64::new(0.0, -t * (d as f64).ln()).exp();
        assert!(got.sub(&CMatrix::identity(d).scale(phase)).max_norm() < 1e-12);
    }

    #[test]
    fn mat_power_it_direct_evaluation() {
        let got = mat_power_it(&CMatrix::diag(&[0.7, 0.3]), 1.0).unwrap();
        let expected = CMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.7f64.ln()).exp(), c(0.0, 0.0)],
            vec![c(0.0, 0.0), Complex64::new(0.0, 0.3f64.ln()).exp()],
        ]);
        assert!(got.sub(&expected).max_norm() < 1e-12);
    }

    #[test]
    fn mat_power_it_rejects_indefinite() {
        let m = CMatrix::diag(&[1.0, -1.0]);
        assert!(matches!(mat_power_it(&m, 1.0), Err(MatError::NotPsd { .. })));
    }

    #[test]
    fn vn_entropy_cases() {
        assert!((vn_entropy(&CMatrix::identity(2).scale_re(0.5)).unwrap() - 1.0).abs() < 1e-12);
        let pure = CMatrix::projector(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(vn_entropy(&pure).unwrap() == 0.0);
        // Hand value: -0.7 log2 0.7 - 0.3 log2 0.3.
        let expected = -(0.7 * 0.7f64.log2() + 0.3 * 0.3f64.log2());
        assert!((vn_entropy(&CMatrix::diag(&[0.7, 0.3])).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.88129).abs() < 1e-5);
    }

    #[test]
    fn vn_entropy_rejects_non_density() {
        assert!(matches!(
            vn_entropy(&CMatrix::diag(&[0.7, 0.2])),
            Err(MatError::NotDensityMatrix { .. })
        ));
        assert!(matches!(
            vn_entropy(&CMatrix::diag(&[1.5, -0.5])),
            Err(MatError::NotDensityMatrix { .. })
        ));
    }

    #[test]
    fn trace_distance_cases() {
        let rho = CMatrix::diag(&[0.7, 0.3]);
        assert!(trace_distance(&rho, &rho).unwrap() == 0.0);
        let a = CMatrix::projector(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let b = CMatrix::projector(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let sigma = CMatrix::diag(&[0.5, 0.5]);
        assert!((trace_distance(&rho, &sigma).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary(4, &mut rng);
        let gram = u.dagger().mul(&u);
        assert!(gram.sub(&CMatrix::identity(4)).max_norm() < 1e-12);
        let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u2 = haar_unitary(4, &mut rng2);
        assert!(u.sub(&u2).max_norm() == 0.0);
    }
}
