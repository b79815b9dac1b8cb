use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ensemble::{self, fixture};
use crate::matcore;

fn config() -> DecompConfig {
    DecompConfig::default()
}

// Independent span-closure oracle: tracks the span as stacked row vectors
// and measures dimension by SVD rank, no Gram-Schmidt involved. Closes
// under adjoints, products and the given modular conjugations.
fn closure_dimension_bruteforce(generators: &[CMatrix], modular: &[CMatrix]) -> usize {
    use nalgebra::DMatrix;
    let d = generators[0].rows();
    let mut mats: Vec<CMatrix> = generators.to_vec();
    let rank_of = |mats: &[CMatrix]| -> usize {
        let stacked = DMatrix::<Complex64>::from_row_iterator(
            mats.len(),
            d * d,
            mats.iter().flat_map(|m| m.entries().iter().cloned()),
        );
        let svd = stacked.svd(false, false);
        let hi = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        svd.singular_values.iter().filter(|&&s| s > 1e-9 * hi.max(1.0)).count()
    };
    loop {
        let before = rank_of(&mats);
        let snapshot = mats.clone();
        for a in &snapshot {
            mats.push(a.dagger());
            for u in modular {
                mats.push(u.mul(a).mul(&u.dagger()));
            }
            for b in &snapshot {
                mats.push(a.mul(b));
            }
        }
        let after = rank_of(&mats);
        if after == before {
            return after;
        }
    }
}

fn conjugated_generators(e: &Ensemble, t_samples: &[f64]) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let avg = e.average_state().unwrap();
    let inv_sqrt = matcore::mat_power(&avg, -0.5).unwrap();
    let mut gens = vec![CMatrix::identity(e.dim)];
    for s in &e.states {
        gens.push(inv_sqrt.mul(s).mul(&inv_sqrt).hermitize());
    }
    let modular =
        t_samples.iter().map(|&t| matcore::mat_power_it(&avg, t).unwrap()).collect();
    (gens, modular)
}

#[test]
fn support_restrict_drops_dead_directions() {
    let e1 = fixture("E1").unwrap();
    let (r, iso) = support_restrict(&e1).unwrap();
    assert_eq!(r.dim, 1);
    assert_eq!(iso.rows(), 2);
    assert_eq!(iso.cols(), 1);

    let e2 = fixture("E2").unwrap();
    let (r, _) = support_restrict(&e2).unwrap();
    assert_eq!(r.dim, 2);
}

#[test]
fn support_restrict_embedded_ensemble() {
    // A dim-3 ensemble planted inside dim 5 by a fixed unitary.
    let base = ensemble::random_mixed(3, 2, 2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u = matcore::haar_unitary(5, &mut rng);
    let states: Vec<CMatrix> = base
        .states
        .iter()
        .map(|s| {
            let padded = matcore::direct_sum(&[s.clone(), CMatrix::zeros(2, 2)]);
            matcore::embed(&u, &padded)
        })
        .collect();
    let e = Ensemble::from_parts_unchecked(5, base.labels.clone(), base.probs.clone(), states);
    let (r, iso) = support_restrict(&e).unwrap();
    assert_eq!(r.dim, 3);
    for s in &r.states {
        assert!((s.trace().re - 1.0).abs() <= 1e-10);
    }
    // Isometry property.
    let gram = iso.dagger().mul(&iso);
    assert!(gram.sub(&CMatrix::identity(3)).max_norm() < 1e-10);
}

#[test]
fn algebra_dimensions_match_bruteforce_closure() {
    // E4: the conjugated single letter is the identity -> dimension 1.
    let (r4, _) = support_restrict(&fixture("E4").unwrap()).unwrap();
    let a4 = generate_algebra(&r4, &[0.5], tol::BASIS_RESIDUAL).unwrap();
    assert_eq!(a4.basis.len(), 1);

    // E2: diagonal algebra on C^2 -> dimension 2.
    let (r2, _) = support_restrict(&fixture("E2").unwrap()).unwrap();
    let a2 = generate_algebra(&r2, &[0.5], tol::BASIS_RESIDUAL).unwrap();
    assert_eq!(a2.basis.len(), 2);
    let (g2, m2) = conjugated_generators(&r2, &[0.5]);
    assert_eq!(closure_dimension_bruteforce(&g2, &m2), 2);

    // E3: two nonorthogonal pure letters produce all of M_2. The product
    // closure alone stalls at the 2-dim span of the (whitened, orthogonal)
    // conjugated letters; the modular conjugation supplies the rest.
    let (r3, _) = support_restrict(&fixture("E3").unwrap()).unwrap();
    let a3 = generate_algebra(&r3, &[0.5], tol::BASIS_RESIDUAL).unwrap();
    assert_eq!(a3.basis.len(), 4);
    let (g3, m3) = conjugated_generators(&r3, &[0.5]);
    assert_eq!(closure_dimension_bruteforce(&g3, &m3), 4);
    assert_eq!(closure_dimension_bruteforce(&g3, &[]), 2);
}

#[test]
fn algebra_basis_is_orthonormal_and_closed() {
    let (r, _) = support_restrict(&fixture("E6").unwrap()).unwrap();
    let a = generate_algebra(&r, &[0.3, -1.1], tol::BASIS_RESIDUAL).unwrap();
    // Gram matrix identity.
    for (i, x) in a.basis.iter().enumerate() {
        for (j, y) in a.basis.iter().enumerate() {
            let g = x.hs_inner(y);
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((g - Complex64::new(expected, 0.0)).norm() < 1e-9);
        }
    }
    // Closed under products and adjoints; contains the support projector.
    for x in &a.basis {
        assert!(a.span_residual(&x.dagger()) <= 1e-8);
        for y in &a.basis {
            assert!(a.span_residual(&x.mul(y)) <= 1e-8);
        }
    }
    assert!(a.span_residual(&CMatrix::identity(r.dim)) <= 1e-8);
}

#[test]
fn extract_block_data_e2_and_e5() {
    let cfg = config();
    let e2 = fixture("E2").unwrap();
    let d2 = ki_decompose(&e2, &cfg).unwrap();
    assert_eq!(d2.blocks.len(), 2);
    let mut rows: Vec<Vec<f64>> = d2.blocks.iter().map(|b| b.cond_probs.clone()).collect();
    rows.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap());
    assert!((rows[0][0] - 1.0).abs() < 1e-9 && rows[0][1].abs() < 1e-9);
    assert!(rows[1][0].abs() < 1e-9 && (rows[1][1] - 1.0).abs() < 1e-9);

    let e5 = fixture("E5").unwrap();
    let d5 = ki_decompose(&e5, &cfg).unwrap();
    assert_eq!(d5.blocks.len(), 3);
    let probs: Vec<f64> = d5.blocks.iter().map(|b| b.prob).collect();
    assert!((probs[0] - 0.5).abs() < 1e-9);
    assert!((probs[1] - 0.25).abs() < 1e-9);
    assert!((probs[2] - 0.25).abs() < 1e-9);
    // Shared block first: both letters weight 1/2 there.
    assert!((d5.blocks[0].cond_probs[0] - 0.5).abs() < 1e-9);
    assert!((d5.blocks[0].cond_probs[1] - 0.5).abs() < 1e-9);
    // The two exclusive blocks split the letters.
    let rows: Vec<Vec<f64>> = d5.blocks[1..].iter().map(|b| b.cond_probs.clone()).collect();
    let mut firsts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    firsts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!((firsts[0] - 0.5).abs() < 1e-9 && firsts[1].abs() < 1e-9);
}

#[test]
fn extract_block_data_e4_single_redundant_block() {
    let d = ki_decompose(&fixture("E4").unwrap(), &config()).unwrap();
    assert_eq!(d.blocks.len(), 1);
    let b = &d.blocks[0];
    assert_eq!((b.dim_j, b.dim_k), (1, 2));
    assert!((b.prob - 1.0).abs() < 1e-12);
    assert!((b.cond_probs[0] - 1.0).abs() < 1e-12);
    assert!(b.rho_k.sub(&CMatrix::diag(&[0.7, 0.3])).max_norm() < 1e-9);
}

#[test]
fn verify_passes_on_correct_e3() {
    let e3 = fixture("E3").unwrap();
    let d = ki_decompose(&e3, &config()).unwrap();
    assert_eq!(d.blocks.len(), 1);
    assert_eq!((d.blocks[0].dim_j, d.blocks[0].dim_k), (2, 1));
    let report = verify(&d, &e3);
    assert!(report.passed());
    assert!(report.p1_reconstruction.residual <= 1e-9);
    assert!(report.p2_product_form.residual <= 1e-9);
    assert_eq!(report.p3_commutant_dims, vec![1]);
}

#[test]
fn verify_rejects_overcoarse_e2() {
    // One block, dJ=1, dK=2: the normalized restrictions diag(1,0) and
    // diag(0,1) cannot both match [1] (x) rho_k.
    let e2 = fixture("E2").unwrap();
    let bad = KiDecomposition {
        source_dim: 2,
        support_dim: 2,
        support_isometry: CMatrix::identity(2),
        blocks: vec![KiBlock {
            dim_j: 1,
            dim_k: 2,
            isometry: CMatrix::identity(2),
            prob: 1.0,
            cond_probs: vec![1.0, 1.0],
            rho_j: vec![Some(CMatrix::identity(1)), Some(CMatrix::identity(1))],
            rho_j_avg: CMatrix::identity(1),
            rho_k: CMatrix::identity(2).scale_re(0.5),
        }],
        verification: VerifyReport::pending(),
    };
    let report = verify(&bad, &e2);
    assert!(!report.p2_product_form.passed);
}

#[test]
fn verify_rejects_merged_j_e5() {
    // One block with dJ=3, dK=1: commuting diagonal letters leave a
    // commutant of dimension >= 3, so maximality fails.
    let e5 = fixture("E5").unwrap();
    let bad = KiDecomposition {
        source_dim: 3,
        support_dim: 3,
        support_isometry: CMatrix::identity(3),
        blocks: vec![KiBlock {
            dim_j: 3,
            dim_k: 1,
            isometry: CMatrix::identity(3),
            prob: 1.0,
            cond_probs: vec![1.0, 1.0],
            rho_j: vec![Some(e5.states[0].clone()), Some(e5.states[1].clone())],
            rho_j_avg: e5.average_state().unwrap(),
            rho_k: CMatrix::identity(1),
        }],
        verification: VerifyReport::pending(),
    };
    let report = verify(&bad, &e5);
    assert!(!report.p3_passed);
    assert!(report.p3_commutant_dims[0] >= 3);
    // P1 and P2 hold for this coarse structure; only P3 catches it.
    assert!(report.p1_reconstruction.passed);
    assert!(report.p2_product_form.passed);
}

#[test]
fn ki_decompose_fixture_structures() {
    let cfg = config();
    let d1 = ki_decompose(&fixture("E1").unwrap(), &cfg).unwrap();
    assert_eq!(d1.blocks.len(), 1);
    assert_eq!((d1.blocks[0].dim_j, d1.blocks[0].dim_k), (1, 1));
    assert!((d1.blocks[0].prob - 1.0).abs() < 1e-12);

    let d6 = ki_decompose(&fixture("E6").unwrap(), &cfg).unwrap();
    assert_eq!(d6.blocks.len(), 1);
    assert_eq!((d6.blocks[0].dim_j, d6.blocks[0].dim_k), (2, 2));
    assert!(d6.blocks[0].rho_k.sub(&CMatrix::diag(&[0.7, 0.3])).max_norm() < 1e-8);

    let d7 = ki_decompose(&fixture("E7").unwrap(), &cfg).unwrap();
    assert_eq!(d7.blocks.len(), 1);
    assert_eq!((d7.blocks[0].dim_j, d7.blocks[0].dim_k), (2, 1));
}

#[test]
fn classical_oracle_matches_spec_examples() {
    let cfg = config();
    let d5 = classical_oracle(&fixture("E5").unwrap(), &cfg).unwrap();
    assert_eq!(d5.blocks.len(), 3);
    for b in &d5.blocks {
        assert_eq!(b.dim_j, 1);
        assert_eq!(b.dim_k, 1);
    }
    let probs: Vec<f64> = d5.blocks.iter().map(|b| b.prob).collect();
    assert!((probs[0] - 0.5).abs() < 1e-12);
    assert!((probs[1] - 0.25).abs() < 1e-12);
    assert!((probs[2] - 0.25).abs() < 1e-12);

    let d4 = classical_oracle(&fixture("E4").unwrap(), &cfg).unwrap();
    assert_eq!(d4.blocks.len(), 1);
    assert_eq!(d4.blocks[0].dim_k, 2);

    let d2 = classical_oracle(&fixture("E2").unwrap(), &cfg).unwrap();
    assert_eq!(d2.blocks.len(), 2);
    for b in &d2.blocks {
        assert_eq!(b.dim_k, 1);
    }

    assert!(matches!(
        classical_oracle(&fixture("E3").unwrap(), &cfg),
        Err(KiError::NotCommuting { .. })
    ));
}

#[test]
fn decomposition_is_deterministic_and_roundtrips() {
    let e = fixture("E6").unwrap();
    let cfg = config();
    let a = ki_decompose(&e, &cfg).unwrap();
    let b = ki_decompose(&e, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json(), "identical inputs and seed must be bit-identical");

    let back = KiDecomposition::from_json(&a.to_json()).unwrap();
    assert_eq!(back.blocks.len(), a.blocks.len());
    for (x, y) in back.blocks.iter().zip(&a.blocks) {
        assert!(x.isometry.sub(&y.isometry).max_norm() == 0.0);
        assert!(x.rho_k.sub(&y.rho_k).max_norm() == 0.0);
    }
    let report = verify(&back, &e);
    assert!(report.passed());
}

#[test]
fn from_json_rejects_malformed() {
    assert!(KiDecomposition::from_json("{").is_err());
    let e = fixture("E1").unwrap();
    let d = ki_decompose(&e, &config()).unwrap();
    let json = d.to_json();
    let broken = json.replace("\"support_dim\":1", "\"support_dim\":2");
    assert!(KiDecomposition::from_json(&broken).is_err());
}
