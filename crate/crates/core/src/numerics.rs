//! Self-contained dense linear algebra and stochastic search kernels.
//!
//! Three building blocks live here:
//!
//! - a cyclic Jacobi eigensolver for dense symmetric matrices,
//! - a one-sided Jacobi SVD (rotations act on the input columns directly,
//!   which avoids the conditioning loss of forming AᵀA),
//! - a seeded multistart maximizer over products of ℓ_p unit spheres and
//!   balls, used by every sup-type norm in the crate. It only ever returns
//!   values it actually evaluated, so its results are valid lower bounds
//!   for suprema.
//!
//! All functions are pure; RNG state is caller-owned and every stream is
//! derived deterministically from a 64-bit seed, so identical seeds give
//! identical results on every platform.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Relative off-diagonal mass at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-14;
/// Maximum number of Jacobi sweeps (eigensolver and SVD).
pub const MAX_SWEEPS: usize = 64;
/// Central-difference step for numerical gradients.
pub const GRAD_STEP: f64 = 1e-6;
/// Iteration cap per multistart restart.
pub const MAX_ASCENT_ITERS: usize = 200;
/// Maximum step halvings in the backtracking line search.
pub const LINE_SEARCH_HALVINGS: usize = 30;

/// Dense real symmetric matrix. Construction symmetrizes via (M + Mᵀ)/2,
/// so `entries[i][j] == entries[j][i]` holds exactly.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    entries: Array2<f64>,
}

impl SymmetricMatrix {
    /// Build from an arbitrary square matrix by exact symmetrization.
    pub fn new(m: Array2<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix entries".into()));
        }
        let mut s = Array2::zeros((m.nrows(), m.ncols()));
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                s[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        Ok(Self { entries: s })
    }

    /// Zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        Ok(Self {
            entries: Array2::zeros((dim, dim)),
        })
    }

    /// Sum of rank-one terms Σ v·vᵀ; positive semidefinite by construction.
    pub fn gram_from_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for v in vectors {
            if v.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: format!("vector of length {dim}"),
                    got: format!("length {}", v.len()),
                });
            }
            for i in 0..dim {
                for j in 0..dim {
                    m.entries[(i, j)] += v[i] * v[j];
                }
            }
        }
        if m.entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gram matrix entries".into()));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }

    /// Entry-wise difference; both operands stay symmetric so no re-symmetrization happens.
    pub fn sub(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("dim {}", self.dim()),
                got: format!("dim {}", other.dim()),
            });
        }
        Ok(SymmetricMatrix {
            entries: &self.entries - &other.entries,
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Deterministic seeded RNG handle.
///
/// The generator is ChaCha8; a 64-bit seed is expanded by `seed_from_u64`,
/// and independent sub-streams are selected with `set_stream`, so restart k
/// always sees the same draws no matter how many restarts run in total.
#[derive(Debug, Clone, Copy)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Base stream for this seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent stream `index` for this seed.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// A decorrelated child seed for a named sub-search.
    pub fn derive(&self, salt: u64) -> SeededRng {
        SeededRng::new(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

fn check_finite_matrix(a: &Array2<f64>, what: &str) -> Result<()> {
    if a.iter().any(|x| !x.is_finite()) {
        Err(Error::NonFinite(what.into()))
    } else {
        Ok(())
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as columns. Sweeps stop when the off-diagonal Frobenius
/// mass drops below `JACOBI_OFF_TOL`·‖S‖_F or after `MAX_SWEEPS` sweeps.
pub fn jacobi_eigh(s: &SymmetricMatrix) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = s.dim();
    let mut a = s.entries.clone();
    check_finite_matrix(&a, "eigensolver input")?;
    let mut v: Array2<f64> = Array2::eye(n);
    let norm = s.frobenius();
    let stop = JACOBI_OFF_TOL * norm;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // Rotate rows/columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[(i, i)]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, i)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Smallest eigenvalue; the last entry of [`jacobi_eigh`]'s spectrum.
pub fn min_eigenvalue(s: &SymmetricMatrix) -> Result<f64> {
    let (vals, _) = jacobi_eigh(s)?;
    Ok(vals[vals.len() - 1])
}

/// Singular value decomposition A = U·diag(σ)·Vᵀ via one-sided Jacobi.
///
/// Returns (U, σ, V) with σ descending, U of shape m×k and V of shape n×k
/// where k = min(m, n). Columns of U for zero singular values are completed
/// to an orthonormal set so the reconstruction identity always holds.
pub fn svd(a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    check_finite_matrix(a, "svd input")?;
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("svd of an empty matrix".into()));
    }
    if m < n {
        let (u, s, v) = svd(&a.t().to_owned())?;
        return Ok((v, s, u));
    }

    let mut b = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..m {
                    aii += b[(r, i)] * b[(r, i)];
                    ajj += b[(r, j)] * b[(r, j)];
                    aij += b[(r, i)] * b[(r, j)];
                }
                if aij.abs() <= 1e-15 * (aii * ajj).sqrt() + 1e-300 {
                    continue;
                }
                rotated = true;
                let tau = (ajj - aii) / (2.0 * aij);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for r in 0..m {
                    let bri = b[(r, i)];
                    let brj = b[(r, j)];
                    b[(r, i)] = c * bri - sn * brj;
                    b[(r, j)] = sn * bri + c * brj;
                }
                for r in 0..n {
                    let vri = v[(r, i)];
                    let vrj = v[(r, j)];
                    v[(r, i)] = c * vri - sn * vrj;
                    v[(r, j)] = sn * vri + c * vrj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|r| b[(r, j)] * b[(r, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = Array2::zeros((m, n));
    let mut vs = Array2::zeros((n, n));
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tiny = 1e-300 + 1e-14 * scale;
    let mut next_sigma = Vec::with_capacity(n);
    for (col, &j) in order.iter().enumerate() {
        next_sigma.push(sigma[j]);
        for r in 0..n {
            vs[(r, col)] = v[(r, j)];
        }
        if sigma[j] > tiny {
            for r in 0..m {
                u[(r, col)] = b[(r, j)] / sigma[j];
            }
        }
    }
    sigma = next_sigma;

    // Complete U where σ vanished: Gram-Schmidt basis vectors against the
    // columns already in place.
    for col in 0..n {
        if sigma[col] > tiny {
            continue;
        }
        sigma[col] = 0.0;
        let mut placed = false;
        for cand in 0..m {
            let mut w = vec![0.0; m];
            w[cand] = 1.0;
            for other in 0..n {
                if other == col {
                    continue;
                }
                let dot: f64 = (0..m).map(|r| w[r] * u[(r, other)]).sum();
                for r in 0..m {
                    w[r] -= dot * u[(r, other)];
                }
            }
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nw > 1e-8 {
                for r in 0..m {
                    u[(r, col)] = w[r] / nw;
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Inconsistency("svd basis completion failed".into()));
        }
    }

    Ok((u, Array1::from(sigma), vs))
}

/// Kind of constraint for one block of the search domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// ℓ_p unit sphere: ‖v‖_p = 1.
    Sphere,
    /// ℓ_p unit ball: ‖v‖_p ≤ 1.
    Ball,
}

/// One block of a product domain: an ℓ_p sphere or ball of given dimension.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub dim: usize,
    /// Exponent p ≥ 1; `f64::INFINITY` for the max norm.
    pub p: f64,
    pub surface: Surface,
}

/// A product of unit spheres/balls, the feasible set of [`multistart_maximize`].
#[derive(Debug, Clone)]
pub struct SearchDomain {
    pub blocks: Vec<Block>,
}

impl SearchDomain {
    pub fn spheres(dims: &[usize], ps: &[f64]) -> Self {
        Self {
            blocks: dims
                .iter()
                .zip(ps)
                .map(|(&dim, &p)| Block {
                    dim,
                    p,
                    surface: Surface::Sphere,
                })
                .collect(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }
}

fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn project_block(block: &Block, v: &mut [f64]) {
    let norm = lp_norm(v, block.p);
    match block.surface {
        Surface::Sphere => {
            if norm < 1e-200 {
                for x in v.iter_mut() {
                    *x = 0.0;
                }
                v[0] = 1.0;
            } else {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
        }
        Surface::Ball => {
            if norm > 1.0 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
        }
    }
}

fn project(domain: &SearchDomain, x: &mut [f64]) {
    let mut offset = 0;
    for block in &domain.blocks {
        project_block(block, &mut x[offset..offset + block.dim]);
        offset += block.dim;
    }
}

fn sample_start(domain: &SearchDomain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(domain.total_dim());
    for block in &domain.blocks {
        for _ in 0..block.dim {
            x.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
    }
    project(domain, &mut x);
    x
}

struct Evaluator<'a> {
    objective: &'a dyn Fn(&[f64]) -> f64,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let f = (self.objective)(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::SearchFailure { point: x.to_vec() })
        }
    }
}

/// Maximize a black-box objective over a product of unit spheres/balls.
///
/// Per restart: projected gradient ascent with central-difference gradients
/// (step [`GRAD_STEP`]) and a backtracking line search, at most
/// [`MAX_ASCENT_ITERS`] iterations. Restart k draws from RNG stream k of the
/// seed, so the result is deterministic in `(seed, restarts)` and monotone
/// nondecreasing in `restarts`.
///
/// The returned value is the objective evaluated at the returned point, which
/// makes it a valid lower bound for the supremum.
pub fn multistart_maximize(
    objective: &dyn Fn(&[f64]) -> f64,
    domain: &SearchDomain,
    restarts: usize,
    rng: &SeededRng,
) -> Result<(Vec<f64>, f64)> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }
    if domain.total_dim() == 0 {
        return Err(Error::InvalidInput("empty search domain".into()));
    }
    let eval = Evaluator { objective };
    let mut best: Option<(Vec<f64>, f64)> = None;

    for restart in 0..restarts {
        let mut stream = rng.stream(restart as u64);
        let start = sample_start(domain, &mut stream);
        let (point, value) = ascend(&eval, domain, start)?;
        match &best {
            Some((_, bv)) if *bv >= value => {}
            _ => best = Some((point, value)),
        }
    }
    Ok(best.unwrap())
}

/// Run the ascent from a caller-chosen start (projected onto the domain first).
pub fn ascend_from(
    objective: &dyn Fn(&[f64]) -> f64,
    domain: &SearchDomain,
    start: Vec<f64>,
) -> Result<(Vec<f64>, f64)> {
    let eval = Evaluator { objective };
    let mut x = start;
    project(domain, &mut x);
    ascend(&eval, domain, x)
}

fn ascend(eval: &Evaluator, domain: &SearchDomain, mut x: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let dim = x.len();
    let mut fx = eval.eval(&x)?;
    let mut stale = 0;
    for _iter in 0..MAX_ASCENT_ITERS {
        // Central differences with projection keep every evaluation feasible.
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut plus = x.clone();
            plus[i] += GRAD_STEP;
            project(domain, &mut plus);
            let mut minus = x.clone();
            minus[i] -= GRAD_STEP;
            project(domain, &mut minus);
            grad[i] = (eval.eval(&plus)? - eval.eval(&minus)?) / (2.0 * GRAD_STEP);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 * (1.0 + fx.abs()) {
            break;
        }

        let mut alpha = 1.0 / gnorm.max(1.0);
        let mut improved = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            let mut cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + alpha * gi).collect();
            project(domain, &mut cand);
            let fc = eval.eval(&cand)?;
            if fc > fx + 1e-18 {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            stale += 1;
            if stale >= 2 {
                break;
            }
        } else {
            stale = 0;
        }
    }
    Ok((x, fx))
}
