use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use powerspec::anm::{build_anm, ProteinStructure};
use powerspec::eigengap::{dk_bound, sin_angle};
use powerspec::lanczos::{lanczos_topk, LanczosConfig};
use powerspec::linalg::{dense_eigh, dense_eigh_pairs, operator_norm_sym};
use powerspec::powerlaw::{fit_and_test, mle_fit};
use powerspec::spectrum::{read_spectrum, write_spectrum, Source};
use powerspec::{make_spectrum, Spectrum, Spectrum32};

#[test]
fn lanczos_matches_dense_on_protein_hessian() {
    let coords: Vec<[f64; 3]> = (0..80)
        .map(|i| {
            let t = i as f64 * 100f64.to_radians();
            [2.3 * t.cos(), 2.3 * t.sin(), 1.5 * i as f64]
        })
        .collect();
    let p = ProteinStructure::from_coords("helix", &coords).unwrap();
    let h = build_anm(&p, 9.0, 1.0).unwrap().hessian;
    let dense = dense_eigh(&h).unwrap();
    let top: Spectrum = lanczos_topk(&h, &LanczosConfig::new(15).seed(4)).unwrap();
    for (a, b) in top.values().iter().zip(dense.values()) {
        assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn spectrum_file_round_trip_preserves_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let values: Vec<f64> = (0..500)
        .map(|_| {
            let u: f64 = rand::Rng::random(&mut rng);
            (1.0 - u).powf(-1.0 / 1.5)
        })
        .collect();
    let s = make_spectrum(&values, Source::Ingested).unwrap().with_n_total(1000).with_trace_hint(1234.5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    write_spectrum(&s, &path).unwrap();
    let back: Spectrum = read_spectrum(&path).unwrap();
    assert_eq!(back, s);
    assert_eq!(mle_fit(&back, 300).unwrap(), mle_fit(&s, 300).unwrap());
}

#[test]
fn single_precision_pipeline() {
    let v: Vec<f32> = (1..=2000).map(|k| 1.0 / k as f32).collect();
    let s: Spectrum32 = make_spectrum(&v, Source::Ingested).unwrap();
    let (fit, ks) = fit_and_test(&s, 1000, 0.05).unwrap();
    assert!((fit.s_hat - 1.0).abs() < 0.02);
    assert!(ks.is_power_law);
}

#[test]
fn davis_kahan_holds_on_random_matrices() {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut gauss = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    for _ in 0..20 {
        let b = gauss(n, n);
        let h = (&b + b.transpose()) * 0.5;
        let e = gauss(n, n);
        let m = (&e + e.transpose()) * 0.5;
        let eps = 1e-3 / operator_norm_sym(&m).unwrap();
        let perturbed = &h + &m * eps;
        let base = dense_eigh_pairs(&h).unwrap();
        let moved = dense_eigh_pairs(&perturbed).unwrap();
        let s = make_spectrum(&base.values, Source::Dense).unwrap();
        for k in 2..n {
            let bound = dk_bound(&s, k, 1e-3).unwrap();
            let u: Vec<f64> = base.vectors.column(k - 1).iter().copied().collect();
            let w: Vec<f64> = moved.vectors.column(k - 1).iter().copied().collect();
            assert!(sin_angle(&u, &w) <= bound.bound, "rank {k}");
        }
    }
}
