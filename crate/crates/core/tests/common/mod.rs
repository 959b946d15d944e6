//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use curvspec_core::expr::{parse, Expression};
use curvspec_core::geometry::RiemannTensor;
use curvspec_core::meig::ElasticityTensor;
use curvspec_core::nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Spectrum of `x^{ij} ↦ g^{im} g^{jn} R_mnkl x^{kl}` on antisymmetric
/// tensors, built on all of ℝ^{n²} and restricted with an orthonormal basis
/// of antisymmetric matrices. Sorted by `(Re, Im)`.
pub fn brute_force_pair_spectrum(rt: &RiemannTensor) -> Vec<Complex<f64>> {
    let n = rt.dim();
    let gi = rt.g_inv();
    let idx = |i: usize, j: usize| i * n + j;
    let mut l = DMatrix::<f64>::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for q in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        for p in 0..n {
                            s += gi[(i, m)] * gi[(j, p)] * rt.r_down[[m, p, k, q]];
                        }
                    }
                    l[(idx(i, j), idx(k, q))] = s;
                }
            }
        }
    }
    let mut cols = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut c = DVector::<f64>::zeros(n * n);
            c[idx(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
            c[idx(j, i)] = -std::f64::consts::FRAC_1_SQRT_2;
            cols.push(c);
        }
    }
    let q = DMatrix::from_columns(&cols);
    let b = q.transpose() * l * &q;
    let mut ev: Vec<Complex<f64>> = b.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

// Squared norm of the sphere-projected gradients of Q(x, y) = E(x, y, x, y).
fn kkt_defect(e: &ElasticityTensor, x: &[f64; 3], y: &[f64; 3]) -> f64 {
    let t = e.tensor();
    let gx = t.contract_first_free(y, x, y);
    let mut gy = vec![0.0; 3];
    for (l, o) in gy.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    *o += t[[i, j, k, l]] * x[i] * y[j] * x[k];
                }
            }
        }
    }
    let proj = |g: &[f64], a: &[f64; 3]| {
        let d: f64 = g.iter().zip(a).map(|(p, q)| p * q).sum();
        g.iter().zip(a).map(|(p, q)| (p - d * q).powi(2)).sum::<f64>()
    };
    proj(&gx, x) + proj(&gy, y)
}

/// Minimal Nelder–Mead with the standard coefficients.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|k| {
            let mut p = x0.to_vec();
            if k > 0 {
                p[k - 1] += step;
            }
            let v = f(&p);
            (p, v)
        })
        .collect();
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64)
            .collect();
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
        let worst = simplex[n].clone();
        let refl = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[n] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (refl, fr);
        } else {
            let con = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&con);
            if fc < worst.1 {
                simplex[n] = (con, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = lerp(&best, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// KKT values of `E(x, y, x, y)` on the product of unit spheres: grid over
/// spherical angles, Nelder–Mead on the projected-gradient defect from the
/// best grid points, then clustering of the polished values.
pub fn elasticity_grid_oracle(e: &ElasticityTensor, grid: usize, seeds: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let defect = |a: &[f64]| kkt_defect(e, &unit(a[0], a[1]), &unit(a[2], a[3]));
    let mut cands: Vec<(f64, [f64; 4])> = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                for l in 0..grid {
                    let a = [
                        pi * (i as f64 + 0.5) / grid as f64,
                        2.0 * pi * j as f64 / grid as f64,
                        pi * (k as f64 + 0.5) / grid as f64,
                        2.0 * pi * l as f64 / grid as f64,
                    ];
                    cands.push((defect(&a), a));
                }
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = Vec::new();
    for (_, a) in cands.into_iter().take(seeds) {
        let (mut p, mut v) = nelder_mead(&defect, &a, 0.1, 400);
        for _ in 0..4 {
            (p, v) = nelder_mead(&defect, &p, 1e-3, 400);
        }
        if v < 1e-18 {
            values.push(e.quartic(&unit(p[0], p[1]), &unit(p[2], p[3])));
        }
    }
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if out.last().is_none_or(|l| (v - l).abs() > 1e-6) {
            out.push(v);
        }
    }
    out
}

pub const COORDS: [&str; 3] = ["x", "y", "z"];

fn leaf(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.6) {
        COORDS[rng.random_range(0..3)].to_string()
    } else {
        let c: f64 = rng.random_range(-2.0..2.0);
        format!("{:?}", (c * 100.0).round() / 100.0)
    }
}

/// Random DSL source of depth at most `depth` over `x, y, z`.
pub fn random_source(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_source(rng, depth - 1);
    match rng.random_range(0..10) {
        0 => format!("({} + {})", sub(rng), sub(rng)),
        1 => format!("({} - {})", sub(rng), sub(rng)),
        2 | 3 => format!("({} * {})", sub(rng), sub(rng)),
        4 => format!("({} / (1.5 + {}^2))", sub(rng), sub(rng)),
        5 => format!("({})^{}", sub(rng), rng.random_range(2..4)),
        6 => format!("(1 + ({})^2)^({})", sub(rng), sub(rng)),
        7 => format!("-{}", sub(rng)),
        _ => {
            let f = ["sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs"][rng.random_range(0..10)];
            format!("{f}({})", sub(rng))
        }
    }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub enum FdOutcome {
    /// largest relative deviation of gradient and Hessian
    Checked(f64),
    /// domain error, huge values, or finite differences that disagree with
    /// themselves under step halving (kinks, poles)
    Skipped,
}

/// Compares exact gradient and Hessian with central differences of step
/// `h`: the gradient against differences of values, the Hessian against
/// differences of exact gradients.
pub fn fd_compare(e: &Expression, p: &[f64], h: f64) -> FdOutcome {
    let n = p.len();
    let Ok(jet) = e.eval_jet2(p) else {
        return FdOutcome::Skipped;
    };
    let big = 1e6;
    if !(jet.value.abs() < big && jet.grad.amax() < big && jet.hess.amax() < big) {
        return FdOutcome::Skipped;
    }
    let shifted = |k: usize, s: f64| -> Vec<f64> {
        let mut q = p.to_vec();
        q[k] += s;
        q
    };
    let fd_grad = |k: usize, step: f64| -> Option<f64> {
        Some((e.eval(&shifted(k, step)).ok()? - e.eval(&shifted(k, -step)).ok()?) / (2.0 * step))
    };
    let fd_hess_col = |k: usize, step: f64| -> Option<DVector<f64>> {
        let a = e.eval_grad(&shifted(k, step)).ok()?.1;
        let b = e.eval_grad(&shifted(k, -step)).ok()?.1;
        Some((a - b) / (2.0 * step))
    };
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let (Some(g1), Some(g2)) = (fd_grad(k, h), fd_grad(k, h / 2.0)) else {
            return FdOutcome::Skipped;
        };
        let (Some(c1), Some(c2)) = (fd_hess_col(k, h), fd_hess_col(k, h / 2.0)) else {
            return FdOutcome::Skipped;
        };
        if rel(g1, g2) > 1e-7 || (0..n).any(|m| rel(c1[m], c2[m]) > 1e-7) {
            return FdOutcome::Skipped;
        }
        worst = worst.max(rel(jet.grad[k], g1));
        for m in 0..n {
            worst = worst.max(rel(jet.hess[(m, k)], c1[m]));
        }
    }
    FdOutcome::Checked(worst)
}

/// Runs the finite-difference comparison on `count` well-conditioned random
/// expressions; returns (worst deviation, number skipped).
pub fn random_fd_sweep(seed: u64, count: usize, depth: usize) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    while checked < count {
        let src = random_source(&mut rng, depth);
        let e = parse(&src, &COORDS, &[]).expect("generated sources parse");
        let p = random_point(&mut rng);
        match fd_compare(&e, &p, 1e-5) {
            FdOutcome::Checked(w) => {
                worst = worst.max(w);
                checked += 1;
            }
            FdOutcome::Skipped => skipped += 1,
        }
        assert!(skipped < 50 * count, "too many ill-conditioned samples");
    }
    (worst, skipped)
}
