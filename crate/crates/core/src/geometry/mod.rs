//! Metric jets, Christoffel symbols and curvature at a point.
//!
//! Index conventions (0-based, coordinate order as declared):
//! - `dg[[i, j, k]] = ∂ₖ g_ij`, `d2g[[i, j, k, m]] = ∂ₖ∂ₘ g_ij`
//! - `gamma[[i, j, k]] = Γⁱ_jk`, `dgamma[[i, j, k, m]] = ∂ₘ Γⁱ_jk`
//! - `r_up[[l, k, i, j]] = Rˡ_kij = ∂ᵢΓˡ_jk − ∂ⱼΓˡ_ik + Γʰ_jk Γˡ_ih − Γʰ_ik Γˡ_jh`
//! - `r_down[[i, j, k, l]] = R_ijkl = g_ih Rʰ_jkl`
//!
//! With these conventions the round sphere has `R(u, v, u, v) > 0`.

mod spec_file;

use nalgebra::{DMatrix, DVector};

use crate::expr::{self, Expression, Node};
use crate::tensor::{Tensor3, Tensor4};
use crate::{Error, Result};

pub use spec_file::MetricFile;

/// Threshold on `|det g| / scaleⁿ` below which a point is singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
/// Threshold on `|u∧v|²` for [`sectional`].
pub const PLANE_THRESHOLD: f64 = 1e-12;

/// A metric field `g_ij(x)` given by expressions; only the lower triangle
/// is stored.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    name: String,
    coords: Vec<String>,
    params: Vec<(String, f64)>,
    lower: Vec<Expression>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl MetricSpec {
    /// `entries` lists `((i, j), source)`; either triangle is accepted but an
    /// unordered pair may appear once. Missing entries are zero.
    pub fn new<S: AsRef<str>>(
        name: &str,
        coords: &[S],
        params: &[(String, f64)],
        entries: &[((usize, usize), &str)],
    ) -> Result<MetricSpec> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        let n = coords.len();
        if n < 2 {
            return Err(Error::MetricSpec(format!(
                "a metric needs at least 2 coordinates, got {n}"
            )));
        }
        let zero = Expression::from_node(Node::Num(0.0), &coords, params)?;
        let mut lower = vec![zero; n * (n + 1) / 2];
        let mut seen = vec![false; lower.len()];
        for &((i, j), src) in entries {
            if i >= n || j >= n {
                return Err(Error::MetricSpec(format!(
                    "component ({i},{j}) out of range for {n} coordinates"
                )));
            }
            let slot = tri(i, j);
            if seen[slot] {
                return Err(Error::MetricSpec(format!("component ({i},{j}) given twice")));
            }
            seen[slot] = true;
            lower[slot] = expr::parse(src, &coords, params)?;
        }
        Ok(MetricSpec {
            name: name.to_string(),
            coords,
            params: params.to_vec(),
            lower,
        })
    }

    /// Diagonal metric from one expression per coordinate.
    pub fn diagonal<S: AsRef<str>>(
        name: &str,
        coords: &[S],
        params: &[(String, f64)],
        diag: &[&str],
    ) -> Result<MetricSpec> {
        let entries: Vec<((usize, usize), &str)> =
            diag.iter().enumerate().map(|(i, s)| ((i, i), *s)).collect();
        Self::new(name, coords, params, &entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn component(&self, i: usize, j: usize) -> &Expression {
        &self.lower[tri(i, j)]
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::WrongDimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }
}

/// Metric with first and second derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det: f64,
    pub dg: Tensor3,
    pub d2g: Tensor4,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `g(u, v)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        inner(&self.g, u, v)
    }

    /// `g_ij vʲ`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        lower(&self.g, v)
    }
}

pub fn inner(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = g.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * u[i] * v[j];
        }
    }
    s
}

pub fn lower(g: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = g.nrows();
    (0..n).map(|i| (0..n).map(|j| g[(i, j)] * v[j]).sum()).collect()
}

fn finalize_metric(point: &[f64], g: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = g.nrows();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularPoint(format!(
            "metric has non-finite components at {point:?}"
        )));
    }
    let scale = g
        .row_iter()
        .map(|r| r.norm())
        .fold(0.0_f64, f64::max);
    let det = g.determinant();
    if !(det.abs() >= DEGENERACY_THRESHOLD * scale.powi(n as i32)) || scale == 0.0 {
        return Err(Error::SingularPoint(format!(
            "metric is degenerate at {point:?} (det = {det:e})"
        )));
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularPoint(format!("metric not invertible at {point:?}")))?;
    Ok((g_inv, det))
}

/// Metric, inverse, determinant and exact first/second derivatives.
pub fn metric_at(spec: &MetricSpec, point: &[f64]) -> Result<MetricJet> {
    spec.check_point(point)?;
    let n = spec.dim();
    let mut g = DMatrix::zeros(n, n);
    let mut dg = Tensor3::zeros(n);
    let mut d2g = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let jet = spec.component(i, j).eval_jet2(point)?;
            g[(i, j)] = jet.value;
            g[(j, i)] = jet.value;
            for k in 0..n {
                dg[[i, j, k]] = jet.grad[k];
                dg[[j, i, k]] = jet.grad[k];
                for m in 0..n {
                    d2g[[i, j, k, m]] = jet.hess[(k, m)];
                    d2g[[j, i, k, m]] = jet.hess[(k, m)];
                }
            }
        }
    }
    let (g_inv, det) = finalize_metric(point, g.clone())?;
    if !dg.as_slice().iter().chain(d2g.as_slice()).all(|v| v.is_finite()) {
        return Err(Error::SingularPoint(format!(
            "metric derivatives are non-finite at {point:?}"
        )));
    }
    Ok(MetricJet {
        point: point.to_vec(),
        g,
        g_inv,
        det,
        dg,
        d2g,
    })
}

/// Metric and Christoffel symbols only, skipping second derivatives.
pub fn christoffel_at(spec: &MetricSpec, point: &[f64]) -> Result<(DMatrix<f64>, Tensor3)> {
    spec.check_point(point)?;
    let n = spec.dim();
    let mut g = DMatrix::zeros(n, n);
    let mut dg = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let (v, grad) = spec.component(i, j).eval_grad(point)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
            for k in 0..n {
                dg[[i, j, k]] = grad[k];
                dg[[j, i, k]] = grad[k];
            }
        }
    }
    let (g_inv, _) = finalize_metric(point, g.clone())?;
    let first = christoffel_first_kind(&dg);
    let gamma = Tensor3::from_fn(n, |i, j, k| (0..n).map(|h| g_inv[(i, h)] * first[[h, j, k]]).sum());
    if !gamma.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::SingularPoint(format!(
            "connection is non-finite at {point:?}"
        )));
    }
    Ok((g, gamma))
}

/// Γ_hjk = ½(∂ₖg_hj + ∂ⱼg_hk − ∂ₕg_jk)
fn christoffel_first_kind(dg: &Tensor3) -> Tensor3 {
    let n = dg.dim();
    Tensor3::from_fn(n, |h, j, k| 0.5 * (dg[[h, j, k]] + dg[[h, k, j]] - dg[[j, k, h]]))
}

#[derive(Debug, Clone)]
pub struct ChristoffelJet {
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
}

pub fn christoffel(jet: &MetricJet) -> ChristoffelJet {
    let n = jet.dim();
    let gi = &jet.g_inv;
    let first = christoffel_first_kind(&jet.dg);
    let dfirst = Tensor4::from_fn(n, |h, j, k, m| {
        0.5 * (jet.d2g[[h, j, k, m]] + jet.d2g[[h, k, j, m]] - jet.d2g[[j, k, h, m]])
    });
    // ∂ₘ gⁱʰ = −gⁱᵃ ∂ₘg_ab gᵇʰ
    let dginv = Tensor3::from_fn(n, |i, h, m| {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += gi[(i, a)] * jet.dg[[a, b, m]] * gi[(b, h)];
            }
        }
        -s
    });
    let gamma = Tensor3::from_fn(n, |i, j, k| (0..n).map(|h| gi[(i, h)] * first[[h, j, k]]).sum());
    let dgamma = Tensor4::from_fn(n, |i, j, k, m| {
        (0..n)
            .map(|h| dginv[[i, h, m]] * first[[h, j, k]] + gi[(i, h)] * dfirst[[h, j, k, m]])
            .sum()
    });
    ChristoffelJet { gamma, dgamma }
}

/// Residuals of the algebraic curvature identities, each divided by
/// `max |R_ijkl|` (or 1 when the tensor vanishes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// R_ijkl + R_jikl
    pub antisym_first: f64,
    /// R_ijkl + R_ijlk
    pub antisym_second: f64,
    /// R_ijkl − R_klij
    pub pair_swap: f64,
    /// R_ijkl − R_jilk
    pub double_swap: f64,
    /// R_ijkl + R_iljk + R_iklj
    pub bianchi: f64,
    pub scale: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        [
            self.antisym_first,
            self.antisym_second,
            self.pair_swap,
            self.double_swap,
            self.bianchi,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("antisym_first", self.antisym_first),
            ("antisym_second", self.antisym_second),
            ("pair_swap", self.pair_swap),
            ("double_swap", self.double_swap),
            ("bianchi", self.bianchi),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RiemannTensor {
    pub r_up: Tensor4,
    pub r_down: Tensor4,
    pub metric_jet: MetricJet,
    pub christoffel: ChristoffelJet,
    pub symmetry: SymmetryReport,
}

impl RiemannTensor {
    /// Assembles the tensor from `Rˡ_kij`, lowering with the jet's metric.
    pub fn from_parts(metric_jet: MetricJet, christoffel: ChristoffelJet, r_up: Tensor4) -> Self {
        let n = metric_jet.dim();
        let g = &metric_jet.g;
        let r_down =
            Tensor4::from_fn(n, |i, j, k, l| (0..n).map(|h| g[(i, h)] * r_up[[h, j, k, l]]).sum());
        let mut rt = RiemannTensor {
            r_up,
            r_down,
            metric_jet,
            christoffel,
            symmetry: SymmetryReport {
                antisym_first: 0.0,
                antisym_second: 0.0,
                pair_swap: 0.0,
                double_swap: 0.0,
                bianchi: 0.0,
                scale: 0.0,
            },
        };
        rt.symmetry = check_symmetries(&rt);
        rt
    }

    pub fn dim(&self) -> usize {
        self.metric_jet.dim()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.metric_jet.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.metric_jet.g_inv
    }

    /// `R(a, b, c, d) = R_ijkl aⁱ bʲ cᵏ dˡ`.
    pub fn quadrilinear(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        self.r_down.contract4(a, b, c, d)
    }
}

pub fn riemann(spec: &MetricSpec, point: &[f64]) -> Result<RiemannTensor> {
    let jet = metric_at(spec, point)?;
    Ok(riemann_from_jet(jet))
}

pub fn riemann_from_jet(jet: MetricJet) -> RiemannTensor {
    let n = jet.dim();
    let ch = christoffel(&jet);
    let (gm, dgm) = (&ch.gamma, &ch.dgamma);
    let r_up = Tensor4::from_fn(n, |l, k, i, j| {
        let mut s = dgm[[l, j, k, i]] - dgm[[l, i, k, j]];
        for h in 0..n {
            s += gm[[h, j, k]] * gm[[l, i, h]] - gm[[h, i, k]] * gm[[l, j, h]];
        }
        s
    });
    RiemannTensor::from_parts(jet, ch, r_up)
}

/// Raises one slot of a fully covariant 4-tensor with `g_inv`.
pub fn raise_slot(t: &Tensor4, g_inv: &DMatrix<f64>, slot: usize) -> Tensor4 {
    let n = t.dim();
    Tensor4::from_fn(n, |a, b, c, d| {
        let idx = [a, b, c, d];
        (0..n)
            .map(|h| {
                let mut j = idx;
                j[slot] = h;
                g_inv[(idx[slot], h)] * t[j]
            })
            .sum()
    })
}

#[derive(Debug, Clone)]
pub struct CurvatureInvariants {
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub kretschmann: f64,
}

impl CurvatureInvariants {
    pub fn ricci_max_abs(&self) -> f64 {
        self.ricci.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn invariants(rt: &RiemannTensor) -> CurvatureInvariants {
    let n = rt.dim();
    let gi = rt.g_inv();
    let r = &rt.r_down;
    // R_ik = gʰʲ R_hijk
    let ricci = DMatrix::from_fn(n, n, |i, k| {
        let mut s = 0.0;
        for h in 0..n {
            for j in 0..n {
                s += gi[(h, j)] * r[[h, i, j, k]];
            }
        }
        s
    });
    let scalar = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .map(|(i, k)| gi[(i, k)] * ricci[(i, k)])
        .sum();
    let mut up = r.clone();
    for slot in 0..4 {
        up = raise_slot(&up, gi, slot);
    }
    let kretschmann = r
        .as_slice()
        .iter()
        .zip(up.as_slice())
        .map(|(a, b)| a * b)
        .sum();
    CurvatureInvariants {
        ricci,
        scalar,
        kretschmann,
    }
}

/// `|u∧v|² = g(u,u)g(v,v) − g(u,v)²`
pub fn wedge_norm_sq(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let uu = inner(g, u, u);
    let vv = inner(g, v, v);
    let uv = inner(g, u, v);
    uu * vv - uv * uv
}

/// Sectional curvature `R(u,v,u,v) / |u∧v|²` of `span{u, v}`.
pub fn sectional(rt: &RiemannTensor, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = rt.dim();
    if u.len() != n || v.len() != n {
        return Err(Error::WrongDimension {
            expected: n,
            got: if u.len() != n { u.len() } else { v.len() },
        });
    }
    let area = wedge_norm_sq(rt.g(), u, v);
    if area.abs() <= PLANE_THRESHOLD {
        return Err(Error::DegeneratePlane(area));
    }
    Ok(rt.quadrilinear(u, v, u, v) / area)
}

pub fn check_symmetries(rt: &RiemannTensor) -> SymmetryReport {
    let r = &rt.r_down;
    let n = r.dim();
    let max = r.max_abs();
    let scale = if max > 0.0 && max.is_finite() { max } else { 1.0 };
    let mut rep = SymmetryReport {
        antisym_first: 0.0,
        antisym_second: 0.0,
        pair_swap: 0.0,
        double_swap: 0.0,
        bianchi: 0.0,
        scale,
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let x = r[[i, j, k, l]];
                    rep.antisym_first = rep.antisym_first.max((x + r[[j, i, k, l]]).abs());
                    rep.antisym_second = rep.antisym_second.max((x + r[[i, j, l, k]]).abs());
                    rep.pair_swap = rep.pair_swap.max((x - r[[k, l, i, j]]).abs());
                    rep.double_swap = rep.double_swap.max((x - r[[j, i, l, k]]).abs());
                    rep.bianchi = rep
                        .bianchi
                        .max((x + r[[i, l, j, k]] + r[[i, k, l, j]]).abs());
                }
            }
        }
    }
    rep.antisym_first /= scale;
    rep.antisym_second /= scale;
    rep.pair_swap /= scale;
    rep.double_swap /= scale;
    rep.bianchi /= scale;
    rep
}

/// Mixed Ricci tensor `gⁱʰ R_hk` (its eigenvalues are coordinate invariants).
pub fn ricci_mixed(rt: &RiemannTensor, inv: &CurvatureInvariants) -> DMatrix<f64> {
    rt.g_inv() * &inv.ricci
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
