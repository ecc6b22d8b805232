use nalgebra::{Complex, DMatrix, DVector};
use qrm::admm::{shrink_scalar, signal_kkt_residual, ImageAdmm, InnerSolver, SignalAdmm, Subproblem};
use qrm::datagen::{gen_gaussian_matrix, ExperimentRng};
use qrm::field::{DenseVector, Field, ImageGrid};
use qrm::operators::{KSpace, RadialFourierOperator};

fn rand_vec(rng: &mut ExperimentRng, n: usize) -> DenseVector {
    DenseVector::from_fn(n, |_, _| rng.normal())
}

/// Proximal gradient on `(β/2)‖u−c‖² − ⟨h,u⟩ + λ/2‖Au−f‖²` plus `w‖u‖₁`,
/// run until the iterate stops moving.
fn prox_gradient(
    a: &DMatrix<f64>,
    f: &DVector<f64>,
    beta: f64,
    lambda: f64,
    c: &DVector<f64>,
    h: &DVector<f64>,
    w: f64,
) -> DVector<f64> {
    let ata = a.transpose() * a;
    let lip = beta + lambda * ata.symmetric_eigenvalues().max();
    let atf = a.transpose() * f;
    let mut u = DVector::zeros(a.ncols());
    for _ in 0..200_000 {
        let g = (&u - c) * beta - h + (&ata * &u - &atf) * lambda;
        let next = (&u - g / lip).map(|x| shrink_scalar(x, w / lip));
        let moved = (&next - &u).norm();
        u = next;
        if moved < 1e-16 {
            break;
        }
    }
    u
}

#[test]
fn signal_admm_matches_proximal_gradient() {
    let (beta, rho, lambda, w) = (1.0, 1.0, 2.0, 0.5);
    for inst in 0..20u64 {
        let mut rng = ExperimentRng::new(700 + inst);
        let a = gen_gaussian_matrix(5, 12, 900 + inst).unwrap();
        let f = rand_vec(&mut rng, 5);
        let c = rand_vec(&mut rng, 12);
        let h = rand_vec(&mut rng, 12) * 0.3;
        let sub = Subproblem {
            center: &c,
            linear: &h,
            weight: w,
        };
        let mut admm = SignalAdmm::new(&a, &f, beta, rho, lambda, 1e-14, 200_000).unwrap();
        admm.reset(&c);
        let out = admm.solve(&sub).unwrap();
        let want = prox_gradient(a.matrix(), &f, beta, lambda, &c, &h, w);
        let err = (&out.u - &want).norm();
        assert!(err <= 1e-6, "instance {inst}: |u_admm - u_oracle| = {err:e}");
        let kkt = signal_kkt_residual(&a, &f, lambda, beta, &sub, &out.u).unwrap();
        assert!(kkt <= 1e-6, "instance {inst}: kkt {kkt:e}");
    }
}

/// Periodic forward differences on an `h × w` grid as a `2hw × hw` matrix,
/// horizontal block first.
fn difference_matrix(h: usize, w: usize) -> DMatrix<f64> {
    let n = h * w;
    let mut d = DMatrix::zeros(2 * n, n);
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            d[(p, p)] = -1.0;
            d[(p, i * w + (j + 1) % w)] += 1.0;
            d[(n + p, p)] = -1.0;
            d[(n + p, ((i + 1) % h) * w + j)] += 1.0;
        }
    }
    d
}

fn unitary_dft(h: usize, w: usize) -> DMatrix<Complex<f64>> {
    let n = h * w;
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, c| {
        let (k1, k2) = (r / w, r % w);
        let (i, j) = (c / w, c % w);
        let t = -2.0 * std::f64::consts::PI * ((k1 * i) as f64 / h as f64 + (k2 * j) as f64 / w as f64);
        Complex::new(t.cos(), t.sin()) * s
    })
}

#[test]
fn image_admm_matches_dense_dual_solve() {
    let (hh, ww) = (8, 8);
    let n = hh * ww;
    let (beta, rho, lambda, weight) = (1.0, 1.0, 4.0, 0.3);
    let op = RadialFourierOperator::radial(hh, ww, 3).unwrap();
    let mut rng = ExperimentRng::new(31);
    let data: Vec<Complex<f64>> = op
        .mask()
        .as_slice()
        .iter()
        .map(|&keep| {
            if keep {
                Complex::new(rng.normal(), rng.normal())
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    let f = KSpace::new(hh, ww, data.clone()).unwrap();
    let c = ImageGrid::from_fn(hh, ww, |_, _| rng.normal());
    let lin = ImageGrid::from_fn(hh, ww, |_, _| 0.2 * rng.normal());

    let fm = unitary_dft(hh, ww);
    let p = DMatrix::from_fn(n, n, |r, s| {
        if r == s && op.mask().as_slice()[r] {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let ata = (fm.adjoint() * &p * &fm).map(|z| z.re);
    let fvec = DVector::from_vec(data);
    let atf = (fm.adjoint() * &p * fvec).map(|z| z.re);
    let m = DMatrix::identity(n, n) * beta + ata * lambda;
    let m_inv = m.try_inverse().unwrap();
    let cv = DVector::from_column_slice(c.as_slice());
    let hv = DVector::from_column_slice(lin.as_slice());
    let b = &cv * beta + &hv + atf * lambda;
    let d = difference_matrix(hh, ww);

    // max over |z| ≤ w of −½(b − Dᵀz)ᵀM⁻¹(b − Dᵀz), u = M⁻¹(b − Dᵀz)
    let k = &d * &m_inv * d.transpose();
    let lip = k.symmetric_eigenvalues().max();
    let dmb = &d * &m_inv * &b;
    let mut z = DVector::zeros(2 * n);
    for _ in 0..400_000 {
        let grad = &k * &z - &dmb;
        let next = (&z - grad / lip).map(|v: f64| v.clamp(-weight, weight));
        let moved = (&next - &z).norm();
        z = next;
        if moved < 1e-17 {
            break;
        }
    }
    let want = &m_inv * (&b - d.transpose() * &z);

    let mut admm = ImageAdmm::new(&op, &f, beta, rho, lambda, 1e-14, 400_000).unwrap();
    admm.reset(&c);
    let sub = Subproblem {
        center: &c,
        linear: &lin,
        weight,
    };
    let out = admm.solve(&sub).unwrap();
    let err = out
        .u
        .values()
        .iter()
        .zip(want.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(err <= 1e-8, "|u_admm - u_oracle| = {err:e}");
    let kkt = admm.kkt_residual(&sub, &out.u).unwrap();
    assert!(kkt <= 1e-6, "kkt {kkt:e}");
}
