//! The acceptance suite: twelve checks, one line each, non-zero exit on
//! any failure.
#![allow(clippy::type_complexity)]

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
use std::panic::{catch_unwind, AssertUnwindSafe};

use curvspec_core::cases::{builtin, ricci_eigenpairs, ricci_reconstruction, sample_point, CATALOG};
use curvspec_core::geometry::{check_symmetries, invariants, riemann, sectional, RiemannTensor};
use curvspec_core::jacobi::{decoupled_solution, integrate_jacobi};
use curvspec_core::meig::{meig_residual, newton_solve, solve_meig, ElasticityTensor, MeigSolution, SolveOptions};
use curvspec_core::spectra::{assemble_pencil, classical_eigen, decompose_eigenpairs, vacuum_block_check};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn params(kv: &[(&str, f64)]) -> Vec<(String, f64)> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn rt_of(name: &str, kv: &[(&str, f64)], p: &[f64]) -> Result<RiemannTensor, String> {
    let e = builtin(name, &params(kv)).map_err(|e| e.to_string())?;
    riemann(&e.spec, p).map_err(|e| e.to_string())
}

fn modified(rt: &RiemannTensor) -> Result<MeigSolution, String> {
    solve_meig(rt, &SolveOptions::modified()).map_err(|e| e.to_string())
}

fn nearest(sol: &MeigSolution, target: f64) -> f64 {
    sol.pairs
        .iter()
        .map(|p| p.theta)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(f64::NAN)
}

fn sphere2() -> Check {
    let rt = rt_of("sphere2", &[("a", 1.0)], &[FRAC_PI_3, 0.0])?;
    let inv = invariants(&rt);
    let k = rt.r_down[[0, 1, 0, 1]] / rt.metric_jet.det;
    ensure((inv.scalar - 2.0).abs() < 1e-8, || format!("R = {}", inv.scalar))?;
    ensure((k - 1.0).abs() < 1e-8, || format!("K = {k}"))?;
    let sol = modified(&rt)?;
    let th = nearest(&sol, 1.0);
    ensure((th - 1.0).abs() < 1e-8, || format!("modified θ = {:?}", sol.thetas()))?;
    let plain = solve_meig(&rt, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let zero = plain
        .pairs
        .iter()
        .find(|p| p.theta.abs() < 1e-8)
        .ok_or_else(|| format!("no θ = 0 in unmodified {:?}", plain.thetas()))?;
    let diff = zero
        .u
        .iter()
        .zip(&zero.v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(diff < 1e-6, || format!("θ = 0 pair has u ≠ v: {zero:?}"))?;
    Ok(format!("R = {:.12}, K = {k:.12}, θ = {th:.12}, zero pair |u−v| = {diff:.1e}", inv.scalar))
}

fn hyperbolic() -> Check {
    let rt = rt_of("hyperbolic2", &[("a", 1.0)], &[0.0, 2.0])?;
    let k = rt.r_down[[0, 1, 0, 1]] / rt.metric_jet.det;
    ensure((k + 1.0).abs() < 1e-8, || format!("K = {k}"))?;
    let sol = modified(&rt)?;
    let th = nearest(&sol, -1.0);
    ensure((th + 1.0).abs() < 1e-8, || format!("θ = {:?}", sol.thetas()))?;
    Ok(format!("K = {k:.12}, θ = {th:.12}"))
}

fn three_d() -> Check {
    let cases: [(&str, Vec<(&str, f64)>, Vec<f64>); 4] = [
        ("sphere3", vec![("a", 2.0)], vec![1.1, 0.7, 0.3]),
        ("sphere3", vec![("a", 2.0)], vec![0.4, 2.0, -1.0]),
        ("perturbed_flat3", vec![], vec![0.8, 1.2, 0.5]),
        ("perturbed_flat3", vec![], vec![1.7, 0.6, 2.0]),
    ];
    let mut worst_rebuild: f64 = 0.0;
    let mut worst_triple: f64 = 0.0;
    for (name, kv, p) in &cases {
        let rt = rt_of(name, kv, p)?;
        let rebuilt = ricci_reconstruction(&rt);
        let dev = rebuilt
            .as_slice()
            .iter()
            .zip(rt.r_down.as_slice())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        worst_rebuild = worst_rebuild.max(dev);
        let scalar = invariants(&rt).scalar;
        let eig = ricci_eigenpairs(&rt).map_err(|e| e.to_string())?;
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let theta = eig[a].0 + eig[b].0 - scalar / 2.0;
                worst_triple = worst_triple.max(meig_residual(&rt, &eig[a].1, &eig[b].1, theta));
            }
        }
    }
    ensure(worst_rebuild < 1e-8, || format!("3D reconstruction residual {worst_rebuild:e}"))?;
    ensure(worst_triple < 1e-8, || format!("Ricci triple residual {worst_triple:e}"))?;
    Ok(format!("reconstruction {worst_rebuild:.1e}, Ricci-triple residual {worst_triple:.1e}"))
}

fn constant_curvature() -> Check {
    let mut notes = Vec::new();
    for n in 2..=4 {
        for kappa in [1.0, -0.5] {
            let p: Vec<f64> = (0..n).map(|i| 0.2 + 0.15 * i as f64).collect();
            let rt = rt_of("constant_curvature_form", &[("n", n as f64), ("kappa", kappa)], &p)?;
            let sol = modified(&rt)?;
            let th = nearest(&sol, kappa);
            ensure((th - kappa).abs() < 1e-8, || format!("n = {n}, κ = {kappa}: θ = {:?}", sol.thetas()))?;
            notes.push(format!("n={n},κ={kappa}: {:.1e}", (th - kappa).abs()));
        }
    }
    Ok(notes.join("; "))
}

fn schwarzschild() -> Check {
    let rt = rt_of("schwarzschild", &[("rs", 2.0), ("c", 1.0)], &[0.0, 3.0, FRAC_PI_4, 0.0])?;
    let inv = invariants(&rt);
    let ric = inv.ricci_max_abs();
    ensure(ric < 1e-8, || format!("max |Ricci| = {ric:e}"))?;
    let k1 = inv.kretschmann;
    ensure((k1 - 48.0 / 729.0).abs() < 1e-10, || format!("K1 = {k1}"))?;
    let sol = modified(&rt)?;
    let th = nearest(&sol, -1.0 / 27.0);
    ensure((th + 1.0 / 27.0).abs() < 1e-8, || format!("θ = {:?}", sol.thetas()))?;
    let from_k1 = -(k1 / 48.0).sqrt();
    ensure((th - from_k1).abs() < 1e-10, || format!("θ = {th}, −√(K1/48) = {from_k1}"))?;
    let b = vacuum_block_check(&rt).map_err(|e| e.to_string())?;
    ensure(b.max_structure_residual < 1e-8, || format!("block residual {:e}", b.max_structure_residual))?;
    ensure(b.trace_n.abs() < 1e-8, || format!("tr N = {:e}", b.trace_n))?;
    ensure(b.trace_m.abs() < 1e-8, || format!("tr M = {:e}", b.trace_m))?;
    Ok(format!(
        "|Ric| = {ric:.1e}, K1 = {k1:.12}, θ = {th:.12}, blocks {:.1e}, tr N = {:.1e}, tr M = {:.1e}; θ set {:?}",
        b.max_structure_residual,
        b.trace_n,
        b.trace_m,
        sol.thetas().iter().map(|t| format!("{t:.6}")).collect::<Vec<_>>()
    ))
}

fn bridge_identity() -> Check {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    let cases: [(&str, Vec<(&str, f64)>, Vec<f64>); 4] = [
        ("sphere2", vec![("a", 1.0)], vec![FRAC_PI_3, 0.0]),
        ("sphere2", vec![("a", 1.7)], vec![1.0, 2.0]),
        ("sphere3", vec![("a", 2.0)], vec![1.1, 0.7, 0.3]),
        ("sphere3", vec![("a", 1.0)], vec![0.5, 2.2, -0.4]),
    ];
    for (name, kv, p) in &cases {
        let rt = rt_of(name, kv, p)?;
        let pairs = classical_eigen(&assemble_pencil(&rt)).map_err(|e| e.to_string())?;
        for d in decompose_eigenpairs(&rt, &pairs) {
            if !d.decomposable {
                continue;
            }
            let (theta, res) = (
                d.theta.ok_or("decomposable plane is not spacelike")?,
                d.residual.ok_or("no residual")?,
            );
            let rel = (d.zeta.re - 2.0 * theta).abs() / d.zeta.re.abs().max(f64::MIN_POSITIVE);
            ensure(rel < 1e-8, || format!("{name}: ζ = {}, 2θ = {}", d.zeta.re, 2.0 * theta))?;
            ensure(res < 1e-8, || format!("{name}: modified residual {res:e}"))?;
            worst = worst.max(rel);
            count += 1;
        }
    }
    ensure(count > 0, || "no decomposable eigenpairs".into())?;
    Ok(format!("{count} decomposable eigenpairs, worst |ζ − 2θ|/|ζ| = {worst:.1e}"))
}

fn catalog_points(per_entry: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, _) in CATALOG {
        let e = builtin(name, &[]).unwrap();
        for _ in 0..per_entry {
            let u: Vec<f64> = (0..e.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
            out.push((name.to_string(), sample_point(&e, &u)));
        }
    }
    out
}

fn sectional_values() -> Check {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for (name, p) in catalog_points(2, 11) {
        let rt = rt_of(&name, &[], &p)?;
        for pair in modified(&rt)?.pairs {
            let k = sectional(&rt, &pair.u, &pair.v).map_err(|e| e.to_string())?;
            let d = (pair.theta - k).abs();
            ensure(d < 1e-8, || format!("{name} at {p:?}: θ = {}, K = {k}", pair.theta))?;
            worst = worst.max(d);
            count += 1;
        }
    }
    Ok(format!("{count} modified pairs over the catalog, worst |θ − K| = {worst:.1e}"))
}

fn pencil_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let pts = catalog_points(5, 12);
    for (name, p) in &pts {
        let rt = rt_of(name, &[], p)?;
        let pencil: Vec<_> = classical_eigen(&assemble_pencil(&rt))
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|e| e.zeta)
            .collect();
        let brute = common::brute_force_pair_spectrum(&rt);
        let scale = brute.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        for (a, b) in pencil.iter().zip(&brute) {
            let d = (a - b).norm() / scale;
            ensure(d < 1e-8, || format!("{name} at {p:?}: {a} vs {b}"))?;
            worst = worst.max(d);
        }
        ensure(pencil.len() == brute.len(), || "spectrum sizes differ".into())?;
    }
    Ok(format!("{} points, worst deviation {worst:.1e}", pts.len()))
}

fn symmetry_and_autodiff() -> Check {
    let mut worst_sym: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let pts = catalog_points(20, 13);
    for (name, p) in &pts {
        let e = builtin(name, &[]).unwrap();
        let rt = riemann(&e.spec, p).map_err(|e| e.to_string())?;
        let s = check_symmetries(&rt).max();
        ensure(s < 1e-10, || format!("{name} at {p:?}: symmetry residual {s:e}"))?;
        worst_sym = worst_sym.max(s);
        for i in 0..e.dim() {
            for j in 0..=i {
                match common::fd_compare(e.spec.component(i, j), p, 1e-5) {
                    common::FdOutcome::Checked(w) => worst_fd = worst_fd.max(w),
                    common::FdOutcome::Skipped => return Err(format!("{name} g[{i},{j}] ill-conditioned at {p:?}")),
                }
            }
        }
    }
    let (random_worst, skipped) = common::random_fd_sweep(2024, 1000, 5);
    worst_fd = worst_fd.max(random_worst);
    ensure(worst_fd < 1e-6, || format!("autodiff vs differences {worst_fd:e}"))?;
    Ok(format!(
        "{} catalog points, symmetry {worst_sym:.1e}; autodiff vs FD {worst_fd:.1e} (catalog + 1000 random expressions, {skipped} ill-conditioned draws skipped)",
        pts.len()
    ))
}

fn elasticity() -> Check {
    let e = ElasticityTensor::isotropic(1.0, 0.5);
    let sol = e.meig(&SolveOptions::default()).map_err(|e| e.to_string())?;
    let oracle = common::elasticity_grid_oracle(&e, 8, 60);
    let solver = sol.thetas();
    ensure(oracle.len() == solver.len(), || format!("solver {solver:?} vs oracle {oracle:?}"))?;
    for (a, b) in solver.iter().zip(&oracle) {
        ensure((a - b).abs() < 1e-6, || format!("solver {solver:?} vs oracle {oracle:?}"))?;
    }
    let zetas: Vec<f64> = e.classical_eigen().iter().map(|p| p.zeta).collect();
    let mut bridges = 0;
    for p in &sol.pairs {
        if p.ortho.abs() >= 1e-8 {
            continue;
        }
        let zeta = 2.0 * p.theta;
        let r = e.bridge_residual(&p.u, &p.v, zeta);
        ensure(r < 1e-8, || format!("E z ≠ 2θ z for θ = {}: {r:e}", p.theta))?;
        ensure(zetas.iter().any(|z| (z - zeta).abs() < 1e-8), || format!("2θ = {zeta} not in {zetas:?}"))?;
        bridges += 1;
    }
    ensure(bridges > 0, || "no orthogonal M-eigenpair found".into())?;
    Ok(format!("θ = {solver:?} (oracle {oracle:?}); {bridges} orthogonal pair(s) with ζ = 2θ"))
}

fn jacobi() -> Check {
    let spec = builtin("sphere2", &params(&[("a", 1.0)])).unwrap().spec;
    let run = |steps: usize| {
        integrate_jacobi(&spec, &[FRAC_PI_2, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[1.0, 0.0], FRAC_PI_2, steps)
            .map_err(|e| e.to_string())
    };
    let traj = run(10_000)?;
    let mut sine: f64 = 0.0;
    let mut decoupled: f64 = 0.0;
    for s in &traj {
        sine = sine.max((s.norm_v - s.geodesic.t.sin()).abs());
        decoupled = decoupled.max((s.norm_v - decoupled_solution(1.0, 0.0, 1.0, s.geodesic.t).0).abs());
    }
    ensure(sine < 1e-5 && decoupled < 1e-5, || format!("sin t deviation {sine:e}, decoupled {decoupled:e}"))?;
    let err = |steps: usize| -> Result<f64, String> {
        Ok(run(steps)?
            .iter()
            .map(|s| (s.norm_v - s.geodesic.t.sin()).abs())
            .fold(0.0, f64::max))
    };
    let (coarse, fine) = (err(10)?, err(20)?);
    let factor = coarse / fine;
    ensure((12.0..=20.0).contains(&factor), || format!("RK4 factor {factor}"))?;
    Ok(format!("|v| − sin t {sine:.1e}, vs decoupled {decoupled:.1e}, RK4 factor {factor:.2}"))
}

// With g(u, u) = −1 and g(v, v) = +1 the KKT multipliers satisfy λ = Q and
// μ = −Q, so the filter λ = μ admits only θ = 0. Both the filtered solver
// output and the raw Newton limits are checked.
fn lorentzian_filter() -> Check {
    let mut found = 0;
    let mut kkt = 0;
    let mut worst_theta: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [[0.0, 3.0, FRAC_PI_4, 0.0], [0.5, 5.0, 1.2, 2.0]] {
        let rt = rt_of("schwarzschild", &[("rs", 2.0)], &p)?;
        let opts = SolveOptions {
            sigma_u: -1.0,
            sigma_v: 1.0,
            ..SolveOptions::modified()
        };
        let sol = solve_meig(&rt, &opts).map_err(|e| e.to_string())?;
        for pair in &sol.pairs {
            ensure(pair.theta.abs() < 1e-8, || format!("θ = {} at {p:?}", pair.theta))?;
            worst_theta = worst_theta.max(pair.theta.abs());
            found += 1;
        }
        let g = rt.g();
        let norm = |x: &[f64]| curvspec_core::geometry::inner(g, x, x);
        for _ in 0..32 {
            // timelike u along t, spacelike v orthogonal to it
            let mut u: Vec<f64> = (0..4).map(|_| rng.random_range(-0.3..0.3)).collect();
            u[0] = 2.0 + rng.random_range(0.0..1.0);
            let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (nu, c) = (norm(&u), curvspec_core::geometry::inner(g, &u, &v));
            if nu >= 0.0 {
                continue;
            }
            v.iter_mut().zip(&u).for_each(|(vi, ui)| *vi -= c / nu * ui);
            let nv = norm(&v);
            let u: Vec<f64> = u.iter().map(|x| x / (-nu).sqrt()).collect();
            let v: Vec<f64> = v.iter().map(|x| x / nv.sqrt()).collect();
            let out = newton_solve(&rt.r_down, g, [-1.0, 1.0], &u, &v, 1e-12, 100);
            if out.converged {
                worst_sum = worst_sum.max((out.lambda + out.mu).abs());
                kkt += 1;
            }
        }
    }
    ensure(kkt > 0, || "no KKT point converged".into())?;
    ensure(worst_sum < 1e-8, || format!("|λ + μ| = {worst_sum:e}"))?;
    Ok(format!(
        "{found} pair(s) passed λ = μ (max |θ| = {worst_theta:.1e}); {kkt} raw KKT limits all have |λ + μ| ≤ {worst_sum:.1e}"
    ))
}

fn main() {
    let checks: [(&str, fn() -> Check); 12] = [
        ("2D sphere curvature and M-eigenvalues", sphere2),
        ("hyperbolic plane", hyperbolic),
        ("3D Ricci reconstruction and Ricci triples", three_d),
        ("constant curvature forms n = 2, 3, 4", constant_curvature),
        ("Schwarzschild vacuum, Kretschmann, M-eigenvalue, blocks", schwarzschild),
        ("classical eigenpairs give ζ = 2θ", bridge_identity),
        ("modified M-eigenvalues are sectional curvatures", sectional_values),
        ("pair pencil vs full antisymmetric operator", pencil_oracle),
        ("curvature symmetries and autodiff", symmetry_and_autodiff),
        ("elasticity M-eigenvalues and ζ = 2θ", elasticity),
        ("Jacobi field on the unit sphere", jacobi),
        ("timelike-spacelike pairs have θ = 0", lorentzian_filter),
    ];
    let mut failures = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failures, checks.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
