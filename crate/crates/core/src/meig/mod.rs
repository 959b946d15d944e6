//! M-eigenpairs `(θ, u, v)` of a quartic form `T(u, v, u, v)`.
//!
//! For the Riemann tensor the equations are
//!
//! ```text
//! R_hijk uⁱ vʲ uᵏ = θ g_hl vˡ,    R_hijk vⁱ uʲ vᵏ = θ g_hl uˡ,
//! g(u, u) = σ_u,                  g(v, v) = σ_v,
//! ```
//!
//! and the modified problem adds `g(u, v) = 0`. The elasticity tensor uses the
//! same machinery with `g = I`.

mod elasticity;
mod newton;

pub use elasticity::{elasticity_meig, ElasticityTensor, SymmetricEigenpair};
pub use newton::{eval_system, newton_solve, NewtonOutcome};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{inner, RiemannTensor};
use crate::tensor::Tensor4;
use crate::{Error, Result};

/// Tolerance on `|λ − μ|` and, for the modified problem, on `|g(u, v)|`.
pub const CLASSIFY_TOL: f64 = 1e-8;
const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MEigenpair {
    pub theta: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub lambda_mu_gap: f64,
    pub residual: f64,
    /// `g(u, u)`
    pub norm_u: f64,
    /// `g(v, v)`
    pub norm_v: f64,
    /// `g(u, v)`
    pub ortho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub modified: bool,
    pub dedupe_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            starts: 64,
            seed: 0,
            tol: 1e-12,
            max_iter: 100,
            sigma_u: 1.0,
            sigma_v: 1.0,
            modified: false,
            dedupe_tol: 1e-6,
        }
    }
}

impl SolveOptions {
    pub fn modified() -> Self {
        SolveOptions {
            modified: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Options("starts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.dedupe_tol >= 0.0) {
            return Err(Error::Options("dedupe_tol must be non-negative".into()));
        }
        for (name, s) in [("sigma_u", self.sigma_u), ("sigma_v", self.sigma_v)] {
            if s != 1.0 && s != -1.0 {
                return Err(Error::Options(format!("{name} must be +1 or -1, got {s}")));
            }
        }
        Ok(())
    }
}

/// Per-solve bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub starts: usize,
    /// starts for which no initial pair with the requested signs was found
    pub sampling_failures: usize,
    pub converged: usize,
    pub rejected_gap: usize,
    pub rejected_ortho: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeigSolution {
    /// Deduplicated, ascending in θ. Empty when nothing converged.
    pub pairs: Vec<MEigenpair>,
    pub stats: SolveStats,
}

impl MeigSolution {
    pub fn thetas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.theta).collect()
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        self.pairs.iter().any(|p| (p.theta - theta).abs() < tol)
    }
}

/// `θ = R(u, v, u, v)`
pub fn theta_of(rt: &RiemannTensor, u: &[f64], v: &[f64]) -> f64 {
    rt.quadrilinear(u, v, u, v)
}

/// Norm of the stacked residuals of the two component equations.
pub fn meig_residual(rt: &RiemannTensor, u: &[f64], v: &[f64], theta: f64) -> f64 {
    form_residual(&rt.r_down, rt.g(), u, v, theta)
}

// Both equations read off the same form: T(·,v,u,v) = θ g u, T(u,v,u,·) = θ g v.
pub(crate) fn form_residual(t: &Tensor4, g: &DMatrix<f64>, u: &[f64], v: &[f64], theta: f64) -> f64 {
    let n = u.len();
    let a = t.contract_first_free(v, u, v);
    let b = last_free(t, u, v, u);
    let gu = crate::geometry::lower(g, u);
    let gv = crate::geometry::lower(g, v);
    let mut s = 0.0;
    for h in 0..n {
        s += (b[h] - theta * gv[h]).powi(2) + (a[h] - theta * gu[h]).powi(2);
    }
    s.sqrt()
}

/// `out_h = T_{abch} aᵃ bᵇ cᶜ`
pub(crate) fn last_free(t: &Tensor4, a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let ab = a[i] * b[j];
            if ab == 0.0 {
                continue;
            }
            for k in 0..n {
                let abc = ab * c[k];
                for (h, o) in out.iter_mut().enumerate() {
                    *o += abc * t[[i, j, k, h]];
                }
            }
        }
    }
    out
}

pub fn solve_meig(rt: &RiemannTensor, opts: &SolveOptions) -> Result<MeigSolution> {
    solve_form(&rt.r_down, rt.g(), opts)
}

/// Multi-start Newton on the KKT system of `T(u, v, u, v)` under the metric
/// `g`; `t` must satisfy `T_abcd = T_cdab`.
pub fn solve_form(t: &Tensor4, g: &DMatrix<f64>, opts: &SolveOptions) -> Result<MeigSolution> {
    opts.validate()?;
    let n = g.nrows();
    if t.dim() != n {
        return Err(Error::WrongDimension {
            expected: n,
            got: t.dim(),
        });
    }
    let scale = t.max_abs().max(g.amax()).max(1.0);

    let runs: Vec<StartResult> = (0..opts.starts)
        .into_par_iter()
        .map(|k| run_start(t, g, opts, k as u64, scale))
        .collect();

    let mut stats = SolveStats {
        starts: opts.starts,
        ..SolveStats::default()
    };
    let mut found = Vec::new();
    for r in runs {
        match r {
            StartResult::NoStart => stats.sampling_failures += 1,
            StartResult::Diverged => {}
            StartResult::GapTooLarge => {
                stats.converged += 1;
                stats.rejected_gap += 1;
            }
            StartResult::NotOrthogonal => {
                stats.converged += 1;
                stats.rejected_ortho += 1;
            }
            StartResult::Found(p) => {
                stats.converged += 1;
                found.push(p);
            }
        }
    }
    Ok(MeigSolution {
        pairs: dedupe(found, opts.dedupe_tol),
        stats,
    })
}

enum StartResult {
    NoStart,
    Diverged,
    GapTooLarge,
    NotOrthogonal,
    Found(MEigenpair),
}

fn run_start(t: &Tensor4, g: &DMatrix<f64>, opts: &SolveOptions, index: u64, scale: f64) -> StartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index);
    let Some((u0, v0)) = initial_pair(&mut rng, g, opts) else {
        return StartResult::NoStart;
    };
    let sigma = [opts.sigma_u, opts.sigma_v];
    let out = newton_solve(t, g, sigma, &u0, &v0, opts.tol * scale, opts.max_iter);
    if !out.converged {
        return StartResult::Diverged;
    }
    let gap = (out.lambda - out.mu).abs();
    if gap >= CLASSIFY_TOL {
        return StartResult::GapTooLarge;
    }
    let ortho = inner(g, &out.u, &out.v);
    if opts.modified && ortho.abs() >= CLASSIFY_TOL {
        return StartResult::NotOrthogonal;
    }
    let theta = 0.5 * (out.lambda + out.mu);
    StartResult::Found(MEigenpair {
        theta,
        residual: form_residual(t, g, &out.u, &out.v, theta),
        lambda_mu_gap: gap,
        norm_u: inner(g, &out.u, &out.u),
        norm_v: inner(g, &out.v, &out.v),
        ortho,
        u: out.u,
        v: out.v,
    })
}

fn sample_normalized(rng: &mut ChaCha8Rng, g: &DMatrix<f64>, sigma: f64) -> Option<Vec<f64>> {
    let n = g.nrows();
    for _ in 0..MAX_RESAMPLES {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let q = inner(g, &x, &x);
        if q * sigma > 1e-8 {
            let s = q.abs().sqrt();
            return Some(x.into_iter().map(|c| c / s).collect());
        }
    }
    None
}

fn initial_pair(rng: &mut ChaCha8Rng, g: &DMatrix<f64>, opts: &SolveOptions) -> Option<(Vec<f64>, Vec<f64>)> {
    let u = sample_normalized(rng, g, opts.sigma_u)?;
    if !opts.modified {
        let v = sample_normalized(rng, g, opts.sigma_v)?;
        return Some((u, v));
    }
    // project v off u so the start lies on the orthogonal constraint set
    for _ in 0..MAX_RESAMPLES {
        let v = sample_normalized(rng, g, opts.sigma_v)?;
        let c = inner(g, &u, &v) / opts.sigma_u;
        let w: Vec<f64> = v.iter().zip(&u).map(|(vi, ui)| vi - c * ui).collect();
        let q = inner(g, &w, &w);
        if q * opts.sigma_v > 1e-8 {
            let s = q.abs().sqrt();
            return Some((u, w.into_iter().map(|c| c / s).collect()));
        }
    }
    None
}

// Flip signs so the first significant entry is positive.
fn canonical_sign(x: &mut [f64]) {
    let big = x.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if let Some(first) = x.iter().find(|c| c.abs() > 1e-8 * big) {
        if *first < 0.0 {
            x.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}

/// Representative of `(u, v)` under `(±u, ±v)` and `(u, v) ↔ (v, u)`; the
/// swap only applies when both vectors have the same causal sign.
pub fn canonicalize(p: &mut MEigenpair) {
    canonical_sign(&mut p.u);
    canonical_sign(&mut p.v);
    if p.norm_u.signum() == p.norm_v.signum() && lex_less(&p.v, &p.u) {
        std::mem::swap(&mut p.u, &mut p.v);
        std::mem::swap(&mut p.norm_u, &mut p.norm_v);
    }
}

/// Merges pairs whose θ values chain together within `tol`; each cluster
/// keeps its lowest-residual member in canonical form. Sorted by θ.
pub fn dedupe(mut pairs: Vec<MEigenpair>, tol: f64) -> Vec<MEigenpair> {
    pairs.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.residual.total_cmp(&b.residual)));
    let mut out: Vec<MEigenpair> = Vec::new();
    let mut last_theta = f64::NEG_INFINITY;
    for p in pairs {
        let joins = (p.theta - last_theta).abs() < tol;
        last_theta = p.theta;
        if joins {
            let best = out.last_mut().expect("a cluster is open");
            if p.residual < best.residual {
                *best = p;
            }
        } else {
            out.push(p);
        }
    }
    for p in &mut out {
        canonicalize(p);
    }
    out
}
