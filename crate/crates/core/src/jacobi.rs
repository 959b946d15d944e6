//! Geodesics and Jacobi fields by fixed-step RK4.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::geometry::{christoffel_at, inner, riemann, MetricSpec};
use crate::tensor::{Tensor3, Tensor4};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Deviation `v` and its covariant derivative `w = Dv/dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiState {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiSample {
    pub geodesic: GeodesicState,
    pub jacobi: JacobiState,
    /// `√|g(v, v)|` at the current point
    pub norm_v: f64,
}

fn check_inputs(spec: &MetricSpec, vectors: &[&[f64]], steps: usize, t_max: f64) -> Result<()> {
    let n = spec.dim();
    for v in vectors {
        if v.len() != n {
            return Err(Error::WrongDimension {
                expected: n,
                got: v.len(),
            });
        }
    }
    if steps == 0 {
        return Err(Error::Options("steps must be at least 1".into()));
    }
    if !t_max.is_finite() {
        return Err(Error::Options("t_max must be finite".into()));
    }
    Ok(())
}

fn gamma_uv(gamma: &Tensor3, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|m| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gamma[[m, i, j]] * a[i] * b[j];
                }
            }
            s
        })
        .collect()
}

// R^μ_νρσ aᵛ bᵖ cˢ
fn curvature_term(r_up: &Tensor4, a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    r_up.contract_first_free(a, b, c)
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

// One RK4 step of a first-order system on a flat state vector.
fn rk4<F>(y: &[f64], h: f64, f: &mut F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// `ẍ^μ = −Γ^μ_νρ ẋ^ν ẋ^ρ` on `[0, t_max]`; returns `steps + 1` states.
pub fn integrate_geodesic(
    spec: &MetricSpec,
    x0: &[f64],
    u0: &[f64],
    t_max: f64,
    steps: usize,
) -> Result<Vec<GeodesicState>> {
    check_inputs(spec, &[x0, u0], steps, t_max)?;
    let n = spec.dim();
    let h = t_max / steps as f64;
    let mut rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let (x, u) = y.split_at(n);
        let (_, gamma) = christoffel_at(spec, x)?;
        let acc = gamma_uv(&gamma, u, u);
        Ok(u.iter().copied().chain(acc.into_iter().map(|a| -a)).collect())
    };
    let mut y: Vec<f64> = x0.iter().chain(u0).copied().collect();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(GeodesicState {
        t: 0.0,
        x: x0.to_vec(),
        u: u0.to_vec(),
    });
    for k in 1..=steps {
        y = rk4(&y, h, &mut rhs)?;
        out.push(GeodesicState {
            t: k as f64 * h,
            x: y[..n].to_vec(),
            u: y[n..].to_vec(),
        });
    }
    Ok(out)
}

/// Integrates the geodesic together with
/// `v̇ = w − Γ(u, v)`, `ẇ = −Γ(u, w) − R(v, u)u`; returns `steps + 1` samples.
#[allow(clippy::too_many_arguments)]
pub fn integrate_jacobi(
    spec: &MetricSpec,
    x0: &[f64],
    u0: &[f64],
    v0: &[f64],
    w0: &[f64],
    t_max: f64,
    steps: usize,
) -> Result<Vec<JacobiSample>> {
    check_inputs(spec, &[x0, u0, v0, w0], steps, t_max)?;
    let n = spec.dim();
    let h = t_max / steps as f64;
    let mut rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let (x, rest) = y.split_at(n);
        let (u, rest) = rest.split_at(n);
        let (v, w) = rest.split_at(n);
        let rt = riemann(spec, x)?;
        let gamma = &rt.christoffel.gamma;
        let mut d = Vec::with_capacity(4 * n);
        d.extend_from_slice(u);
        d.extend(gamma_uv(gamma, u, u).into_iter().map(|a| -a));
        let guv = gamma_uv(gamma, u, v);
        d.extend(w.iter().zip(&guv).map(|(wi, gi)| wi - gi));
        let guw = gamma_uv(gamma, u, w);
        let r = curvature_term(&rt.r_up, u, v, u);
        d.extend(guw.iter().zip(&r).map(|(a, b)| -a - b));
        Ok(d)
    };
    let sample = |t: f64, y: &[f64]| -> Result<JacobiSample> {
        let x = &y[..n];
        let v = &y[2 * n..3 * n];
        let (g, _) = christoffel_at(spec, x)?;
        Ok(JacobiSample {
            geodesic: GeodesicState {
                t,
                x: x.to_vec(),
                u: y[n..2 * n].to_vec(),
            },
            jacobi: JacobiState {
                v: v.to_vec(),
                w: y[3 * n..].to_vec(),
            },
            norm_v: norm(&g, v),
        })
    };
    let mut y: Vec<f64> = [x0, u0, v0, w0].concat();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(sample(0.0, &y)?);
    for k in 1..=steps {
        y = rk4(&y, h, &mut rhs)?;
        out.push(sample(k as f64 * h, &y)?);
    }
    Ok(out)
}

fn norm(g: &DMatrix<f64>, v: &[f64]) -> f64 {
    inner(g, v, v).abs().sqrt()
}

/// Solution of `ÿ + θ y = 0` with `y(0) = v0`, `ẏ(0) = w0`, as `(y(t), ẏ(t))`.
pub fn decoupled_solution(theta: f64, v0: f64, w0: f64, t: f64) -> (f64, f64) {
    if theta > 0.0 {
        let k = theta.sqrt();
        let (s, c) = (k * t).sin_cos();
        (v0 * c + w0 * s / k, -v0 * k * s + w0 * c)
    } else if theta < 0.0 {
        let k = (-theta).sqrt();
        let (s, c) = ((k * t).sinh(), (k * t).cosh());
        (v0 * c + w0 * s / k, v0 * k * s + w0 * c)
    } else {
        (v0 + w0 * t, w0)
    }
}

/// CSV with columns `t, x0.., u0.., v0.., norm_v`.
pub fn write_csv<W: Write>(samples: &[JacobiSample], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let n = samples.first().map_or(0, |s| s.geodesic.x.len());
    let mut header = vec!["t".to_string()];
    for prefix in ["x", "u", "v"] {
        header.extend((0..n).map(|i| format!("{prefix}{i}")));
    }
    header.push("norm_v".into());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(&header).map_err(csv_err)?;
    for s in samples {
        let mut row = vec![s.geodesic.t];
        row.extend(&s.geodesic.x);
        row.extend(&s.geodesic.u);
        row.extend(&s.jacobi.v);
        row.push(s.norm_v);
        wr.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}
