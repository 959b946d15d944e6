//! Built-in metrics with closed-form curvature values.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::geometry::{check_symmetries, invariants, ricci_mixed, riemann, MetricSpec, RiemannTensor};
use crate::meig::{solve_meig, SolveOptions};
use crate::tensor::Tensor4;
use crate::{Error, Result};

/// Names accepted by [`builtin`], with their parameters and defaults.
pub const CATALOG: &[(&str, &[(&str, f64)])] = &[
    ("euclidean", &[("n", 3.0)]),
    ("sphere2", &[("a", 1.0)]),
    ("hyperbolic2", &[("a", 1.0)]),
    ("sphere3", &[("a", 1.0)]),
    ("constant_curvature_form", &[("n", 3.0), ("kappa", 1.0)]),
    ("schwarzschild", &[("rs", 2.0), ("c", 1.0)]),
    ("reissner_nordstrom", &[("rs", 2.0), ("rQ", 0.5), ("c", 1.0)]),
    ("perturbed_flat3", &[]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Euclidean { n: usize },
    Sphere2 { a: f64 },
    Hyperbolic2 { a: f64 },
    Sphere3 { a: f64 },
    ConstantCurvature { n: usize, kappa: f64 },
    Schwarzschild { rs: f64 },
    ReissnerNordstrom,
    PerturbedFlat3,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub spec: MetricSpec,
    kind: Kind,
}

fn coord_names(n: usize) -> Vec<String> {
    if n <= 4 {
        ["x", "y", "z", "w"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

fn dimension(v: f64) -> Result<usize> {
    if v.fract() != 0.0 || !(2.0..=8.0).contains(&v) {
        return Err(Error::BadParams(format!("n must be an integer in 2..=8, got {v}")));
    }
    Ok(v as usize)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::BadParams(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

/// Looks up a catalog metric; `params` overrides the defaults in [`CATALOG`].
pub fn builtin(name: &str, params: &[(String, f64)]) -> Result<CatalogEntry> {
    let (_, defaults) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownCase(name.to_string()))?;
    for (k, _) in params {
        if !defaults.iter().any(|(d, _)| d == k) {
            return Err(Error::BadParams(format!("'{name}' has no parameter '{k}'")));
        }
    }
    let get = |key: &str| -> f64 {
        params
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .or_else(|| defaults.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .expect("every parameter has a default")
    };
    let p = |names: &[&str]| -> Vec<(String, f64)> { names.iter().map(|k| (k.to_string(), get(k))).collect() };

    let (spec, kind) = match name {
        "euclidean" => {
            let n = dimension(get("n"))?;
            let ones = vec!["1"; n];
            (MetricSpec::diagonal(name, &coord_names(n), &[], &ones)?, Kind::Euclidean { n })
        }
        "sphere2" => {
            let a = positive("a", get("a"))?;
            let spec = MetricSpec::diagonal(name, &["theta", "phi"], &p(&["a"]), &["a^2", "a^2*sin(theta)^2"])?;
            (spec, Kind::Sphere2 { a })
        }
        "hyperbolic2" => {
            let a = positive("a", get("a"))?;
            let spec = MetricSpec::diagonal(name, &["x", "y"], &p(&["a"]), &["a^2/y^2", "a^2/y^2"])?;
            (spec, Kind::Hyperbolic2 { a })
        }
        "sphere3" => {
            let a = positive("a", get("a"))?;
            let spec = MetricSpec::diagonal(
                name,
                &["chi", "theta", "phi"],
                &p(&["a"]),
                &["a^2", "a^2*sin(chi)^2", "a^2*sin(chi)^2*sin(theta)^2"],
            )?;
            (spec, Kind::Sphere3 { a })
        }
        "constant_curvature_form" => {
            let n = dimension(get("n"))?;
            let kappa = get("kappa");
            if !kappa.is_finite() {
                return Err(Error::BadParams("kappa must be finite".into()));
            }
            let coords = coord_names(n);
            let sum: Vec<String> = coords.iter().map(|c| format!("{c}^2")).collect();
            let comp = format!("1/(1 + kappa*({})/4)^2", sum.join(" + "));
            let comps = vec![comp.as_str(); n];
            let spec = MetricSpec::diagonal(name, &coords, &[("kappa".to_string(), kappa)], &comps)?;
            (spec, Kind::ConstantCurvature { n, kappa })
        }
        "schwarzschild" => {
            let rs = positive("rs", get("rs"))?;
            positive("c", get("c"))?;
            let spec = MetricSpec::diagonal(
                name,
                &["t", "r", "theta", "phi"],
                &p(&["rs", "c"]),
                &["-(1 - rs/r)*c^2", "1/(1 - rs/r)", "r^2", "r^2*sin(theta)^2"],
            )?;
            (spec, Kind::Schwarzschild { rs })
        }
        "reissner_nordstrom" => {
            positive("rs", get("rs"))?;
            positive("c", get("c"))?;
            if !get("rQ").is_finite() {
                return Err(Error::BadParams("rQ must be finite".into()));
            }
            let spec = MetricSpec::diagonal(
                name,
                &["t", "r", "theta", "phi"],
                &p(&["rs", "rQ", "c"]),
                &[
                    "-(1 - rs/r + rQ^2/r^2)*c^2",
                    "1/(1 - rs/r + rQ^2/r^2)",
                    "r^2",
                    "r^2*sin(theta)^2",
                ],
            )?;
            (spec, Kind::ReissnerNordstrom)
        }
        "perturbed_flat3" => {
            let spec = MetricSpec::diagonal(name, &["r", "theta", "phi"], &[], &["1 + r^2", "r^2", "r^2*sin(theta)^2"])?;
            (spec, Kind::PerturbedFlat3)
        }
        _ => unreachable!("names come from CATALOG"),
    };
    Ok(CatalogEntry { spec, kind })
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        self.spec.name()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Constant sectional curvature, for space forms.
    pub fn constant_kappa(&self) -> Option<f64> {
        match self.kind {
            Kind::Euclidean { .. } => Some(0.0),
            Kind::Sphere2 { a } | Kind::Sphere3 { a } => Some(1.0 / (a * a)),
            Kind::Hyperbolic2 { a } => Some(-1.0 / (a * a)),
            Kind::ConstantCurvature { kappa, .. } => Some(kappa),
            _ => None,
        }
    }

    pub fn gaussian_k(&self, _point: &[f64]) -> Option<f64> {
        if self.dim() == 2 {
            self.constant_kappa()
        } else {
            None
        }
    }

    pub fn scalar_r(&self, _point: &[f64]) -> Option<f64> {
        let n = self.dim() as f64;
        match self.kind {
            Kind::Schwarzschild { .. } | Kind::ReissnerNordstrom => Some(0.0),
            _ => self.constant_kappa().map(|k| n * (n - 1.0) * k),
        }
    }

    pub fn kretschmann(&self, point: &[f64]) -> Option<f64> {
        let n = self.dim() as f64;
        match self.kind {
            Kind::Schwarzschild { rs } => Some(12.0 * (rs / point[1].powi(3)).powi(2)),
            _ => self.constant_kappa().map(|k| 2.0 * n * (n - 1.0) * k * k),
        }
    }

    /// Eigenvalues of `Rⁱ_j`, ascending.
    pub fn ricci_eigenvalues(&self, _point: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        match self.kind {
            Kind::Schwarzschild { .. } => Some(vec![0.0; n]),
            _ => self.constant_kappa().map(|k| vec![(n as f64 - 1.0) * k; n]),
        }
    }

    /// Values that a modified M-eigen solve must contain.
    pub fn meig_values(&self, point: &[f64]) -> Option<Vec<f64>> {
        match self.kind {
            Kind::Schwarzschild { rs } => Some(vec![-rs / (2.0 * point[1].powi(3))]),
            _ => self.constant_kappa().map(|k| vec![k]),
        }
    }
}

/// `R_abcd` rebuilt from Ricci in three dimensions; zero residual for every
/// 3-metric.
pub fn ricci_reconstruction(rt: &RiemannTensor) -> Tensor4 {
    let inv = invariants(rt);
    let (ric, g, s) = (&inv.ricci, rt.g(), inv.scalar);
    Tensor4::from_fn(rt.dim(), |a, b, c, d| {
        ric[(a, c)] * g[(b, d)] - ric[(a, d)] * g[(b, c)] + g[(a, c)] * ric[(b, d)] - g[(a, d)] * ric[(b, c)]
            - 0.5 * s * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)])
    })
}

/// Eigenvalues and g-orthonormal eigenvectors of `Rⁱ_j` for a
/// positive-definite metric, ascending.
pub fn ricci_eigenpairs(rt: &RiemannTensor) -> Result<Vec<(f64, Vec<f64>)>> {
    let g = rt.g();
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric("Ricci eigenvectors need a positive-definite metric".into()))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().expect("Cholesky factor is invertible");
    let ric = invariants(rt).ricci;
    let s = &l_inv * ric * l_inv.transpose();
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    let mut out: Vec<(f64, Vec<f64>)> = (0..g.nrows())
        .map(|k| {
            let x = l_inv.transpose() * eig.eigenvectors.column(k);
            (eig.eigenvalues[k], x.iter().copied().collect())
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn max_abs_dev(&self) -> f64 {
        self.items.iter().fold(0.0, |m, i| m.max(i.abs_dev))
    }

    fn push(&mut self, name: impl Into<String>, expected: f64, computed: f64, tol: f64) {
        let abs_dev = (computed - expected).abs();
        let rel_dev = abs_dev / expected.abs().max(1.0);
        self.items.push(CheckItem {
            name: name.into(),
            expected,
            computed,
            abs_dev,
            rel_dev,
            pass: rel_dev < tol,
        });
    }
}

/// Tolerance used by [`run_checks`] on relative deviations.
pub const CHECK_TOL: f64 = 1e-8;

/// Compares every oracle of `entry` at `point` with the computed value, and
/// adds the symmetry residuals (expected 0, tolerance 1e-10).
pub fn run_checks(entry: &CatalogEntry, point: &[f64], opts: &SolveOptions) -> Result<CheckReport> {
    let rt = riemann(&entry.spec, point)?;
    let inv = invariants(&rt);
    let mut rep = CheckReport { items: Vec::new() };

    for (name, value) in check_symmetries(&rt).entries() {
        rep.push(format!("symmetry.{name}"), 0.0, value, 1e-10);
    }
    if let Some(k) = entry.gaussian_k(point) {
        let g = rt.g();
        rep.push("gaussian_k", k, rt.r_down[[0, 1, 0, 1]] / g.determinant(), CHECK_TOL);
    }
    if let Some(r) = entry.scalar_r(point) {
        rep.push("scalar_r", r, inv.scalar, CHECK_TOL);
    }
    if let Some(k1) = entry.kretschmann(point) {
        rep.push("kretschmann", k1, inv.kretschmann, CHECK_TOL);
    }
    if let Some(kappa) = entry.constant_kappa() {
        // R_abcd = κ (g_ac g_bd − g_ad g_bc)
        let g = rt.g();
        let n = rt.dim();
        let mut dev: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let want = kappa * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)]);
                        dev = dev.max((rt.r_down[[a, b, c, d]] - want).abs());
                    }
                }
            }
        }
        rep.push("constant_kappa.form_residual", 0.0, dev, CHECK_TOL);
    }
    if let Some(expected) = entry.ricci_eigenvalues(point) {
        let mixed = ricci_mixed(&rt, &inv);
        let mut got: Vec<f64> = mixed.complex_eigenvalues().iter().map(|c| c.re).collect();
        got.sort_by(f64::total_cmp);
        for (i, (e, c)) in expected.iter().zip(&got).enumerate() {
            rep.push(format!("ricci_eigenvalues[{i}]"), *e, *c, CHECK_TOL);
        }
    }
    if rt.dim() == 3 {
        let rebuilt = ricci_reconstruction(&rt);
        let dev = rebuilt
            .as_slice()
            .iter()
            .zip(rt.r_down.as_slice())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        rep.push("ricci_reconstruction_3d", 0.0, dev, CHECK_TOL);
    }
    if let Some(values) = entry.meig_values(point) {
        let sol = solve_meig(
            &rt,
            &SolveOptions {
                modified: true,
                sigma_u: 1.0,
                sigma_v: 1.0,
                ..opts.clone()
            },
        )?;
        for (i, want) in values.iter().enumerate() {
            let nearest = sol
                .pairs
                .iter()
                .map(|p| p.theta)
                .min_by(|a, b| (a - want).abs().total_cmp(&(b - want).abs()))
                .unwrap_or(f64::NAN);
            rep.push(format!("meig_values[{i}]"), *want, nearest, CHECK_TOL);
        }
    }
    Ok(rep)
}

/// A regular point in the interior of the entry's coordinate patch.
pub fn sample_point(entry: &CatalogEntry, u: &[f64]) -> Vec<f64> {
    let n = entry.dim();
    let pick = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * u[i % u.len()];
    match entry.kind {
        Kind::PerturbedFlat3 => {
            vec![pick(0, 0.5, 2.0), pick(1, 0.3, 2.8), pick(2, -3.0, 3.0)]
        }
        Kind::Euclidean { .. } => (0..n).map(|i| pick(i, -2.0, 2.0)).collect(),
        Kind::Sphere2 { .. } => vec![pick(0, 0.3, 2.8), pick(1, -3.0, 3.0)],
        Kind::Hyperbolic2 { .. } => vec![pick(0, -2.0, 2.0), pick(1, 0.3, 3.0)],
        Kind::Sphere3 { .. } => vec![pick(0, 0.3, 2.8), pick(1, 0.3, 2.8), pick(2, -3.0, 3.0)],
        Kind::ConstantCurvature { kappa, .. } => {
            // keep 1 + κ|x|²/4 well away from zero
            let r = if kappa < 0.0 { 1.0 / (-kappa).sqrt() } else { 1.0 };
            (0..n).map(|i| pick(i, -0.8, 0.8) * r / (n as f64).sqrt()).collect()
        }
        Kind::Schwarzschild { rs } => vec![pick(0, -1.0, 1.0), pick(1, 1.3 * rs, 4.0 * rs), pick(2, 0.3, 2.8), pick(3, -3.0, 3.0)],
        Kind::ReissnerNordstrom => vec![pick(0, -1.0, 1.0), pick(1, 3.0, 8.0), pick(2, 0.3, 2.8), pick(3, -3.0, 3.0)],
    }
}
