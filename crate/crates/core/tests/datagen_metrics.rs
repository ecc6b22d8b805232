use std::fs::File;
use std::io::BufReader;

use approx::assert_relative_eq;
use qrm::datagen::{add_noise, gen_gaussian_matrix, gen_sparse_signal, shepp_logan, ExperimentRng};
use qrm::field::DenseVector;
use qrm::io::{read_pbm, read_pgm, write_pbm, write_pgm, PgmFormat};
use qrm::metrics::{mse, oracle_mse, re_psnr};
use qrm::operators::{LinearOperator, SamplingMask};

fn load_fixture(name: &str) -> (usize, usize, Vec<f64>) {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let mut tokens = text.split_whitespace();
    let h: usize = tokens.next().unwrap().parse().unwrap();
    let w: usize = tokens.next().unwrap().parse().unwrap();
    let data: Vec<f64> = tokens.map(|t| t.parse().unwrap()).collect();
    assert_eq!(data.len(), h * w);
    (h, w, data)
}

#[test]
fn phantom_matches_python_renderer() {
    let (h, w, want) = load_fixture("shepp_logan_64.txt");
    let got = shepp_logan(h, w).unwrap();
    let mismatched = got
        .as_slice()
        .iter()
        .zip(&want)
        .filter(|(a, b)| (*a - *b).abs() > 1e-12)
        .count();
    assert_eq!(mismatched, 0);
}

#[test]
fn noise_standard_deviation() {
    let n = 1_000_000;
    let sigma = 0.1;
    let noisy = add_noise(&DenseVector::zeros(n), sigma, 99).unwrap();
    let mean = noisy.sum() / n as f64;
    let var = noisy.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 5.0 * sigma / (n as f64).sqrt());
    assert_relative_eq!(var.sqrt(), sigma, max_relative = 0.01);
}

#[test]
fn oracle_mse_matches_monte_carlo() {
    let (m, n, s, sigma) = (40, 60, 8, 0.1);
    let a = gen_gaussian_matrix(m, n, 5).unwrap();
    let (u_true, support) = gen_sparse_signal(n, s, 6).unwrap();
    let sub = a.columns(&support);
    let pinv = sub.clone().pseudo_inverse(1e-12).unwrap();
    let clean = a.apply(&u_true).unwrap();
    let trials = 20_000;
    let mut total = 0.0;
    for t in 0..trials {
        let f = add_noise(&clean, sigma, 1000 + t).unwrap();
        let coef = &pinv * &f;
        let mut u_hat = DenseVector::zeros(n);
        for (c, &i) in coef.iter().zip(&support) {
            u_hat[i] = *c;
        }
        total += mse(&u_hat, &u_true).unwrap();
    }
    let empirical = total / trials as f64;
    let expected = oracle_mse(&a, &support, sigma).unwrap();
    assert_relative_eq!(empirical, expected, max_relative = 0.03);
}

#[test]
fn gaussian_matrix_columns() {
    let a = gen_gaussian_matrix(30, 50, 17).unwrap();
    for col in a.matrix().column_iter() {
        assert_relative_eq!(col.norm(), 1.0, epsilon = 1e-12);
        assert!(col.sum().abs() < 1e-12);
    }
    assert_eq!(a.matrix(), gen_gaussian_matrix(30, 50, 17).unwrap().matrix());
}

#[test]
fn sparse_signal_support_is_sorted_and_exact() {
    let (u, support) = gen_sparse_signal(512, 130, 3).unwrap();
    assert_eq!(support.len(), 130);
    assert!(support.windows(2).all(|p| p[0] < p[1]));
    let nonzero: Vec<usize> = (0..512).filter(|&i| u[i] != 0.0).collect();
    assert_eq!(nonzero, support);
}

#[test]
fn mask_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for lines in [7, 10, 13] {
        let mask = SamplingMask::radial(64, 64, lines).unwrap();
        let path = dir.path().join(format!("mask{lines}.pbm"));
        write_pbm(File::create(&path).unwrap(), &mask).unwrap();
        let back = read_pbm(BufReader::new(File::open(&path).unwrap())).unwrap();
        assert_eq!(back, mask);
        assert!(back.is_symmetric());
    }
}

#[test]
fn phantom_pgm_round_trip_is_within_quantization() {
    let img = shepp_logan(48, 40).unwrap();
    let mut buf = Vec::new();
    write_pgm(&mut buf, &img, 0.0, 1.0, 65535, PgmFormat::Binary).unwrap();
    let back = read_pgm(buf.as_slice()).unwrap();
    assert_eq!(back.shape(), img.shape());
    let worst = back
        .as_slice()
        .iter()
        .zip(img.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.5 / 65535.0 + 1e-15);
}

#[test]
fn re_psnr_by_hand() {
    let mut rng = ExperimentRng::new(4);
    let truth = DenseVector::from_fn(100, |_, _| rng.uniform());
    let mut recon = truth.clone();
    recon[3] += 0.2;
    let (re, psnr) = re_psnr(&recon, &truth).unwrap();
    assert_relative_eq!(re, 0.2 / truth.norm(), max_relative = 1e-12);
    let peak = truth.max();
    assert_relative_eq!(psnr, 10.0 * (100.0 * peak * peak / 0.04).log10(), max_relative = 1e-12);
}
