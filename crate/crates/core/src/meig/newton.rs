//! Damped Newton on the square system in `z = (u, v, λ, μ)`:
//!
//! ```text
//! F_u = T(·, v, u, v) − μ g u
//! F_v = T(u, v, u, ·) − λ g v
//! g(u, u) − σ_u,  g(v, v) − σ_v
//! ```

use nalgebra::{DMatrix, DVector};

use super::last_free;
use crate::geometry::{inner, lower};
use crate::tensor::Tensor4;

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Residual vector and Jacobian at `z`.
pub fn eval_system(t: &Tensor4, g: &DMatrix<f64>, sigma: [f64; 2], z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = g.nrows();
    let u: Vec<f64> = z.rows(0, n).iter().copied().collect();
    let v: Vec<f64> = z.rows(n, n).iter().copied().collect();
    let (lambda, mu) = (z[2 * n], z[2 * n + 1]);
    let gu = lower(g, &u);
    let gv = lower(g, &v);
    let a = t.contract_first_free(&v, &u, &v);
    let b = last_free(t, &u, &v, &u);

    let m = 2 * n + 2;
    let mut f = DVector::zeros(m);
    for h in 0..n {
        f[h] = a[h] - mu * gu[h];
        f[n + h] = b[h] - lambda * gv[h];
    }
    f[2 * n] = inner(g, &u, &u) - sigma[0];
    f[2 * n + 1] = inner(g, &v, &v) - sigma[1];

    let mut j = DMatrix::zeros(m, m);
    for h in 0..n {
        for k in 0..n {
            let mut uu = 0.0;
            let mut uv = 0.0;
            let mut vu = 0.0;
            let mut vv = 0.0;
            for p in 0..n {
                for q in 0..n {
                    uu += t[[h, p, k, q]] * v[p] * v[q];
                    uv += t[[h, k, p, q]] * u[p] * v[q] + t[[h, p, q, k]] * v[p] * u[q];
                    vu += t[[k, p, q, h]] * v[p] * u[q] + t[[p, q, k, h]] * u[p] * v[q];
                    vv += t[[p, k, q, h]] * u[p] * u[q];
                }
            }
            j[(h, k)] = uu - mu * g[(h, k)];
            j[(h, n + k)] = uv;
            j[(n + h, k)] = vu;
            j[(n + h, n + k)] = vv - lambda * g[(h, k)];
        }
        j[(h, 2 * n + 1)] = -gu[h];
        j[(n + h, 2 * n)] = -gv[h];
        j[(2 * n, h)] = 2.0 * gu[h];
        j[(2 * n + 1, n + h)] = 2.0 * gv[h];
    }
    (f, j)
}

fn residual_norm(t: &Tensor4, g: &DMatrix<f64>, sigma: [f64; 2], z: &DVector<f64>) -> f64 {
    eval_system(t, g, sigma, z).0.norm()
}

// Levenberg-regularized step −Σ vᵢ σᵢ/(σᵢ² + δ²) (uᵢᵀ F).
fn regularized_step(f: &DVector<f64>, j: &DMatrix<f64>) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let smax = svd.singular_values.max();
    let delta = 1e-10 * smax;
    let mut step = DVector::zeros(j.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let denom = s * s + delta * delta;
        if denom == 0.0 {
            continue;
        }
        let coef = s / denom * u.column(i).dot(f);
        step -= vt.row(i).transpose() * coef;
    }
    step
}

/// Runs Newton from `(u0, v0)` with multipliers from the Rayleigh quotients.
pub fn newton_solve(
    t: &Tensor4,
    g: &DMatrix<f64>,
    sigma: [f64; 2],
    u0: &[f64],
    v0: &[f64],
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let n = g.nrows();
    let q = t.contract4(u0, v0, u0, v0);
    let mut z = DVector::zeros(2 * n + 2);
    z.rows_mut(0, n).copy_from_slice(u0);
    z.rows_mut(n, n).copy_from_slice(v0);
    z[2 * n] = q * sigma[1];
    z[2 * n + 1] = q * sigma[0];

    let (mut f, mut j) = eval_system(t, g, sigma, &z);
    let mut norm = f.norm();
    let mut iterations = 0;
    while norm > tol && iterations < max_iter && norm.is_finite() {
        iterations += 1;
        let step = regularized_step(&f, &j);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial = &z + &step * alpha;
            let r = residual_norm(t, g, sigma, &trial);
            if r < norm {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else { break };
        z = next;
        (f, j) = eval_system(t, g, sigma, &z);
        norm = f.norm();
    }
    NewtonOutcome {
        u: z.rows(0, n).iter().copied().collect(),
        v: z.rows(n, n).iter().copied().collect(),
        lambda: z[2 * n],
        mu: z[2 * n + 1],
        residual: norm,
        iterations,
        converged: norm <= tol,
    }
}
