//! The antisymmetric-pair eigenproblem `R_ijkl xᵏˡ = ζ x_ij`.
//!
//! Antisymmetric tensors are represented in a basis of index pairs, giving
//! the `m × m` pencil `R_AB x^B = ½ζ G_AB x^B` with `m = n(n−1)/2`. For
//! `n = 4` the pair order is `10, 20, 30, 23, 31, 12`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::geometry::{inner, RiemannTensor};
use crate::meig::{meig_residual, theta_of};
use crate::tensor::Tensor4;
use crate::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Threshold on `|det G_AB| / scaleᵐ` below which the pencil is singular.
pub const PENCIL_DEGENERACY: f64 = 1e-12;
/// Third singular value (relative) below which an eigentensor is rank 2.
pub const DECOMPOSABLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairBasis {
    /// Pairs `(i, 0)` first, then the remaining pairs; for `n = 4` the
    /// spatial pairs follow the cyclic order `23, 31, 12`.
    pub fn new(n: usize) -> PairBasis {
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i, 0)).collect();
        if n == 4 {
            pairs.extend([(2, 3), (3, 1), (1, 2)]);
        } else {
            for i in 1..n {
                for j in (i + 1)..n {
                    pairs.push((i, j));
                }
            }
        }
        PairBasis { n, pairs }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Antisymmetric `n × n` matrix with `X[i][j] = x_A` for `A = (i, j)`.
    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (a, &(i, j)) in self.pairs.iter().enumerate() {
            m[(i, j)] = x[a];
            m[(j, i)] = -x[a];
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Pencil {
    pub r_ab: DMatrix<f64>,
    pub g_ab: DMatrix<f64>,
    pub basis: PairBasis,
}

impl Pencil {
    /// Builds the pencil from a covariant curvature tensor and metric.
    pub fn from_tensors(r_down: &Tensor4, g: &DMatrix<f64>) -> Pencil {
        let basis = PairBasis::new(g.nrows());
        let m = basis.len();
        let p = basis.pairs();
        let r_ab = DMatrix::from_fn(m, m, |a, b| {
            let ((i, j), (k, l)) = (p[a], p[b]);
            r_down[[i, j, k, l]]
        });
        let g_ab = DMatrix::from_fn(m, m, |a, b| {
            let ((i, j), (k, l)) = (p[a], p[b]);
            g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]
        });
        Pencil { r_ab, g_ab, basis }
    }
}

pub fn assemble_pencil(rt: &RiemannTensor) -> Pencil {
    Pencil::from_tensors(&rt.r_down, rt.g())
}

#[derive(Debug, Clone)]
pub struct ClassicalEigenpair {
    pub zeta: Complex64,
    /// Unit-norm eigenvector in the pair basis.
    pub x: DVector<Complex64>,
    /// `‖R_AB x − ½ζ G_AB x‖`
    pub residual: f64,
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn pencil_residual(p: &Pencil, zeta: Complex64, x: &DVector<Complex64>) -> f64 {
    let r = to_complex(&p.r_ab);
    let g = to_complex(&p.g_ab);
    (&r * x - (&g * x) * (zeta * 0.5)).norm()
}

/// Solves `R_AB x = ½ζ G_AB x`; pairs are sorted by `(Re ζ, Im ζ)`.
pub fn classical_eigen(p: &Pencil) -> Result<Vec<ClassicalEigenpair>> {
    let m = p.basis.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let scale = p.g_ab.row_iter().map(|r| r.norm()).fold(0.0_f64, f64::max);
    let det = p.g_ab.determinant();
    if scale == 0.0 || !(det.abs() > PENCIL_DEGENERACY * scale.powi(m as i32)) {
        return Err(Error::DegeneratePencil(format!("det G_AB = {det:e}")));
    }
    let mut out = match p.g_ab.clone().cholesky() {
        Some(chol) => definite_eigen(p, &chol),
        None => general_eigen(p)?,
    };
    for pair in &mut out {
        pair.residual = pencil_residual(p, pair.zeta, &pair.x);
    }
    out.sort_by(|a, b| {
        a.zeta
            .re
            .total_cmp(&b.zeta.re)
            .then(a.zeta.im.total_cmp(&b.zeta.im))
    });
    Ok(out)
}

// G = L Lᵀ: eigen of L⁻¹ R L⁻ᵀ, eigenvectors mapped back by L⁻ᵀ.
fn definite_eigen(p: &Pencil, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> Vec<ClassicalEigenpair> {
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor of a nonsingular matrix is invertible");
    let s = &l_inv * &p.r_ab * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let lt_inv = l_inv.transpose();
    (0..eig.eigenvalues.len())
        .map(|k| {
            let y = eig.eigenvectors.column(k).into_owned();
            let x = &lt_inv * y;
            let x = &x / x.norm();
            ClassicalEigenpair {
                zeta: Complex64::new(2.0 * eig.eigenvalues[k], 0.0),
                x: x.map(|v| Complex64::new(v, 0.0)),
                residual: 0.0,
            }
        })
        .collect()
}

fn general_eigen(p: &Pencil) -> Result<Vec<ClassicalEigenpair>> {
    let m = p.basis.len();
    let g_inv = p
        .g_ab
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegeneratePencil("G_AB is not invertible".into()))?;
    let a = &g_inv * &p.r_ab;
    let lambdas: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    let norm = a.norm().max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-8 * norm;

    let mut used = vec![false; m];
    let mut out = Vec::with_capacity(m);
    let ac = to_complex(&a);
    for i in 0..m {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..m)
            .filter(|&j| !used[j] && (lambdas[j] - lambdas[i]).norm() <= cluster_tol)
            .collect();
        for &j in &members {
            used[j] = true;
        }
        let mean = members.iter().map(|&j| lambdas[j]).sum::<Complex64>() / members.len() as f64;
        let shifted = &ac - DMatrix::<Complex64>::identity(m, m) * mean;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        for (slot, &j) in members.iter().enumerate() {
            let row = order[slot];
            let x: DVector<Complex64> = v_t.row(row).transpose().map(|c| c.conj());
            out.push(ClassicalEigenpair {
                zeta: lambdas[j] * 2.0,
                x,
                residual: 0.0,
            });
        }
    }
    Ok(out)
}

/// An orthonormal frame: columns of `e` satisfy `eᵀ g e = diag(signs)`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub e: DMatrix<f64>,
    pub signs: Vec<f64>,
}

/// Frame from the eigen-decomposition of `g`; negative directions come
/// first, then each group is ordered by the coordinate each vector is
/// mostly aligned with. Each vector's dominant component is positive.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<Frame> {
    let n = g.nrows();
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.amax();
    if max == 0.0 || eig.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * max) {
        return Err(Error::DegenerateMetric(format!(
            "metric eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    let dominant = |k: usize| {
        let col = eig.eigenvectors.column(k);
        (0..n)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| (eig.eigenvalues[k] > 0.0, dominant(k)));
    let mut e = DMatrix::zeros(n, n);
    let mut signs = Vec::with_capacity(n);
    for (a, &k) in order.iter().enumerate() {
        let lam = eig.eigenvalues[k];
        let mut col = eig.eigenvectors.column(k) / lam.abs().sqrt();
        if col[dominant(k)] < 0.0 {
            col = -col;
        }
        e.set_column(a, &col);
        signs.push(lam.signum());
    }
    Ok(Frame { e, signs })
}

/// Components of a covariant 4-tensor in the frame `e`.
pub fn frame_components(r_down: &Tensor4, e: &DMatrix<f64>) -> Tensor4 {
    let n = r_down.dim();
    let mut t = r_down.clone();
    for slot in 0..4 {
        t = Tensor4::from_fn(n, |a, b, c, d| {
            let idx = [a, b, c, d];
            (0..n)
                .map(|h| {
                    let mut j = idx;
                    j[slot] = h;
                    e[(h, idx[slot])] * t[j]
                })
                .sum()
        });
    }
    t
}

/// Block structure of `R_AB` in an orthonormal frame, `[[M, N], [Nᵀ, W]]`.
#[derive(Debug, Clone)]
pub struct VacuumBlockReport {
    pub m_block: DMatrix<f64>,
    pub n_block: DMatrix<f64>,
    pub w_block: DMatrix<f64>,
    /// `‖W + M‖`
    pub m_plus_w: f64,
    /// `‖N − Nᵀ‖`
    pub n_asymmetry: f64,
    /// max of the two above (max-abs norms)
    pub max_structure_residual: f64,
    pub trace_n: f64,
    pub trace_m: f64,
    /// Einstein constant estimate `R / n`
    pub kappa: f64,
    pub trace_m_plus_kappa: f64,
    pub frame: Frame,
}

pub fn vacuum_block_check(rt: &RiemannTensor) -> Result<VacuumBlockReport> {
    let n = rt.dim();
    if n != 4 {
        return Err(Error::WrongDimension {
            expected: 4,
            got: n,
        });
    }
    let frame = orthonormal_frame(rt.g())?;
    let r_hat = frame_components(&rt.r_down, &frame.e);
    let eta = DMatrix::from_diagonal(&DVector::from_vec(frame.signs.clone()));
    let pencil = Pencil::from_tensors(&r_hat, &eta);
    let r = &pencil.r_ab;
    let m_block = r.view((0, 0), (3, 3)).into_owned();
    let n_block = r.view((0, 3), (3, 3)).into_owned();
    let w_block = r.view((3, 3), (3, 3)).into_owned();
    let m_plus_w = (&w_block + &m_block).amax();
    let n_asymmetry = (&n_block - n_block.transpose()).amax();
    let inv = crate::geometry::invariants(rt);
    let kappa = inv.scalar / n as f64;
    let trace_m = m_block.trace();
    Ok(VacuumBlockReport {
        max_structure_residual: m_plus_w.max(n_asymmetry),
        trace_n: n_block.trace(),
        trace_m,
        kappa,
        trace_m_plus_kappa: trace_m + kappa,
        m_block,
        n_block,
        w_block,
        m_plus_w,
        n_asymmetry,
        frame,
    })
}

/// Outcome of testing one classical eigenpair against the modified
/// M-eigenproblem.
#[derive(Debug, Clone)]
pub struct DecomposedPair {
    pub zeta: Complex64,
    /// `σ₃ / σ₁` of the eigentensor's matrix form.
    pub rank_ratio: f64,
    pub decomposable: bool,
    /// g-orthonormal basis of the eigentensor's plane, when it is spacelike.
    pub basis: Option<(Vec<f64>, Vec<f64>)>,
    /// `R(u, v, u, v)` for that basis
    pub theta: Option<f64>,
    /// modified M-eigen residual of `(ζ/2, u, v)`
    pub residual: Option<f64>,
}

/// Splits each eigentensor `x = u∧v` when it has rank two, and checks the
/// triple `(ζ/2, u, v)` against the M-eigen equations.
pub fn decompose_eigenpairs(rt: &RiemannTensor, pairs: &[ClassicalEigenpair]) -> Vec<DecomposedPair> {
    let basis = PairBasis::new(rt.dim());
    pairs
        .iter()
        .map(|pair| decompose_one(rt, &basis, pair))
        .collect()
}

fn decompose_one(rt: &RiemannTensor, basis: &PairBasis, pair: &ClassicalEigenpair) -> DecomposedPair {
    let mut out = DecomposedPair {
        zeta: pair.zeta,
        rank_ratio: f64::NAN,
        decomposable: false,
        basis: None,
        theta: None,
        residual: None,
    };
    // rotate the phase so the largest component is real
    let big = pair
        .x
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    if big.norm() == 0.0 {
        return out;
    }
    let phase = big.conj() / big.norm();
    let x = pair.x.map(|c| c * phase);
    let xnorm = x.norm();
    if x.iter().any(|c| c.im.abs() > 1e-8 * xnorm) || pair.zeta.im.abs() > 1e-8 * pair.zeta.norm().max(1.0) {
        return out;
    }
    let xr = x.map(|c| c.re);
    let mat = basis.to_matrix(&xr);
    let svd = mat.clone().svd(true, false);
    let mut sv: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let s1 = sv[0].0;
    out.rank_ratio = if sv.len() > 2 { sv[2].0 / s1 } else { 0.0 };
    out.decomposable = out.rank_ratio < DECOMPOSABLE_TOL;
    if !out.decomposable {
        return out;
    }
    let u_mat = svd.u.expect("requested left singular vectors");
    let a: Vec<f64> = u_mat.column(sv[0].1).iter().copied().collect();
    let b: Vec<f64> = u_mat.column(sv[1].1).iter().copied().collect();
    let g = rt.g();
    let (aa, ab, bb) = (inner(g, &a, &a), inner(g, &a, &b), inner(g, &b, &b));
    if !(aa > 0.0 && aa * bb - ab * ab > 0.0) {
        return out;
    }
    let u: Vec<f64> = a.iter().map(|v| v / aa.sqrt()).collect();
    let c = inner(g, &b, &u);
    let w: Vec<f64> = b.iter().zip(&u).map(|(bi, ui)| bi - c * ui).collect();
    let ww = inner(g, &w, &w).sqrt();
    let v: Vec<f64> = w.iter().map(|x| x / ww).collect();
    let half = pair.zeta.re / 2.0;
    out.theta = Some(theta_of(rt, &u, &v));
    out.residual = Some(meig_residual(rt, &u, &v, half));
    out.basis = Some((u, v));
    out
}
