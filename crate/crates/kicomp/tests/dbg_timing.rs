use std::time::Instant;

#[test]
fn dbg_stages() {
    use kicomp::ensemble::fixture;
    use kicomp::kidecomp::*;
    use rand::SeedableRng;
    for n in [2usize, 3] {
        let e6 = fixture("E6").unwrap();
        let p = e6.tensor_power(n, 256).unwrap();
        eprintln!("=== E6^{n}: dim {}", p.dim);
        let t = Instant::now();
        let (r, iso) = support_restrict(&p).unwrap();
        eprintln!("restrict -> dim {} in {:?}", r.dim, t.elapsed());
        let ts = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 1.7320508075688772, -1.7320508075688772, std::f64::consts::FRAC_PI_3];
        let t = Instant::now();
        let a = generate_algebra(&r, &ts, 1e-8).unwrap();
        eprintln!("algebra dim {} in {:?}", a.basis.len(), t.elapsed());
        let t = Instant::now();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let raw = wedderburn(&a, &mut rng).unwrap();
        eprintln!("wedderburn {} blocks in {:?}", raw.len(), t.elapsed());
        let t = Instant::now();
        let d = extract_block_data(&r, &iso, p.dim, &raw, &DecompConfig::default()).unwrap();
        eprintln!("extract in {:?}", t.elapsed());
        let t = Instant::now();
        let rep = verify(&d, &p);
        eprintln!("verify passed={} in {:?}", rep.passed(), t.elapsed());
    }
}
