//! The tensor norm γ on X₁⊗…⊗Xₙ⊗Y, in duality with the factorization
//! constant Γ.
//!
//! γ(u) is the infimum of ‖(a_i−b_i)‖₂^π · ‖(y_i)‖₂ over representations
//! u = Σ (p_i−q_i)⊗y_i whose pair family (p, q) is dominated by (a, b).
//! The infimum is intractable, so this module reports certified sides:
//!
//! - upper bounds score a concrete representation (caller-supplied or
//!   produced by a greedy splitter), improved by the closed-form optimal
//!   rebalancing of scalar mass between the (a−b) and y blocks;
//! - lower bounds pair u against elementary functionals φ⊗y* (whose γ-dual
//!   norm is at most ‖φ‖·‖y*‖) or against operators with a certified Γ
//!   upper bound (duality: |φ_T(u)| ≤ Γ(T)·γ(u)).

use serde::{Deserialize, Serialize};

use crate::certificates::{check_domination, CertifiedInterval, PSD_TOL_DEFAULT};
use crate::numerics::{svd, SeededRng};
use crate::operators::MultilinearOperator;
use crate::spaces::{dual_space, linear_form_maximizer, norm, SpaceSpec, Vector};
use crate::tensors::{
    functional_norm_upper, pi_distance_bounds_seeded, to_dense, DecomposablePoint, DenseTensor,
};
use crate::{Error, Result};

/// One term (p−q)⊗y of a representation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GammaTerm {
    pub p: DecomposablePoint,
    pub q: DecomposablePoint,
    pub y: Vector,
}

/// A representation of u ∈ X₁⊗…⊗Xₙ⊗Y with its dominating pair family.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GammaRepresentation {
    pub spaces: Vec<SpaceSpec>,
    pub y_space: SpaceSpec,
    pub terms: Vec<GammaTerm>,
    pub dominators: Vec<(DecomposablePoint, DecomposablePoint)>,
}

impl GammaRepresentation {
    /// Representation with equality dominators (a_i, b_i) = (p_i, q_i);
    /// dominated by construction.
    pub fn with_equality_dominators(
        spaces: Vec<SpaceSpec>,
        y_space: SpaceSpec,
        terms: Vec<GammaTerm>,
    ) -> Self {
        let dominators = terms.iter().map(|t| (t.p.clone(), t.q.clone())).collect();
        Self {
            spaces,
            y_space,
            terms,
            dominators,
        }
    }

    /// Shape checks plus the domination Gram comparison. Dominator lists
    /// shorter than the term list are padded with zero pairs.
    pub fn validate(&self, psd_tol: f64) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput("representation needs terms".into()));
        }
        for t in &self.terms {
            t.p.check(&self.spaces)?;
            t.q.check(&self.spaces)?;
            self.y_space.check_len(&t.y)?;
        }
        for (a, b) in &self.dominators {
            a.check(&self.spaces)?;
            b.check(&self.spaces)?;
        }
        if self.dominators.len() > self.terms.len() {
            return Err(Error::InvalidInput(
                "more dominators than terms; drop the extras".into(),
            ));
        }
        let witness = self.as_witness();
        let (accepted, min_eig) = check_domination(&self.spaces, &witness, psd_tol)?;
        if !accepted {
            return Err(Error::Refused(format!(
                "representation pairs are not dominated: min eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    /// The (p, q) vs (a, b) families as a domination witness, dominators
    /// padded with zero pairs to the term count.
    fn as_witness(&self) -> crate::certificates::KwapienWitness {
        let mut st = self.dominators.clone();
        while st.len() < self.terms.len() {
            let zero = DecomposablePoint::zero(&self.spaces);
            st.push((zero.clone(), zero));
        }
        crate::certificates::KwapienWitness {
            xz_pairs: self.terms.iter().map(|t| (t.p.clone(), t.q.clone())).collect(),
            st_pairs: st,
        }
    }

    fn padded_dominators(&self) -> Vec<(DecomposablePoint, DecomposablePoint)> {
        let mut st = self.dominators.clone();
        while st.len() < self.terms.len() {
            let zero = DecomposablePoint::zero(&self.spaces);
            st.push((zero.clone(), zero));
        }
        st
    }

    fn all_spaces(&self) -> Vec<SpaceSpec> {
        let mut s = self.spaces.clone();
        s.push(self.y_space);
        s
    }
}

/// Certificates for the γ bounds.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaNormCertificate {
    Representation {
        pi_uppers: Vec<f64>,
        y_norms: Vec<f64>,
        rebalanced: bool,
    },
    ElementaryFunctional {
        functional: Vec<f64>,
        functional_norm_upper: f64,
        dual_vector: Vector,
        dual_vector_norm: f64,
        pairing: f64,
    },
    ViaOperator {
        gamma_upper: f64,
        pairing: f64,
    },
    TrivialZero,
}

/// Certified two-sided γ bound: the representation upper against the best
/// elementary-functional lower.
#[derive(Debug, Clone, Serialize)]
pub struct GammaValue {
    pub lower: f64,
    pub upper: f64,
    pub lower_cert: GammaNormCertificate,
    pub upper_cert: GammaNormCertificate,
}

/// Both sides of γ for a representation: upper from the representation,
/// lower from the elementary-functional search on the assembled tensor.
/// Fails with an inconsistency if the certified sides cross.
pub fn gamma_value(rep: &GammaRepresentation, budget: usize, seed: u64) -> Result<GammaValue> {
    let rng = SeededRng::new(seed);
    let (upper, upper_cert) = gamma_upper_certified(rep, budget, &rng.derive(1))?;
    let u = assemble(rep)?;
    let (lower, lower_cert) = gamma_lower_elementary_certified(&u, budget, seed)?;
    if lower > upper + 1e-9 * (1.0 + upper) {
        return Err(Error::Inconsistency(format!(
            "gamma lower {lower} exceeds gamma upper {upper}"
        )));
    }
    Ok(GammaValue {
        lower,
        upper,
        lower_cert,
        upper_cert,
    })
}

/// Assemble the dense tensor Σ (p_i − q_i)⊗y_i of a representation.
pub fn assemble(rep: &GammaRepresentation) -> Result<DenseTensor> {
    for t in &rep.terms {
        t.p.check(&rep.spaces)?;
        t.q.check(&rep.spaces)?;
        rep.y_space.check_len(&t.y)?;
    }
    let mut total = DenseTensor::zeros(rep.all_spaces())?;
    for term in &rep.terms {
        let dp = to_dense(&rep.spaces, &term.p)?;
        let dq = to_dense(&rep.spaces, &term.q)?;
        let diff = dp.sub(&dq)?;
        // (p − q) ⊗ y, flattened into the (n+1)-way array.
        let dy = rep.y_space.dim;
        for (idx, &c) in diff.coefficients.iter().enumerate() {
            for (j, &yj) in term.y.iter().enumerate() {
                let flat = idx * dy + j;
                total.coefficients.as_slice_mut().unwrap()[flat] += c * yj;
            }
        }
    }
    Ok(total)
}

/// Certified γ upper bound of a representation:
/// √(Σ π_ub(a_i−b_i)²)·√(Σ‖y_i‖²), improved by the optimal per-term
/// rebalancing t_i = √(‖y_i‖/π_i) whenever the rescaled family still
/// passes the domination check (equality dominators always do).
pub fn gamma_upper(rep: &GammaRepresentation, budget: usize) -> Result<f64> {
    gamma_upper_certified(rep, budget, &SeededRng::new(0)).map(|(v, _)| v)
}

pub fn gamma_upper_certified(
    rep: &GammaRepresentation,
    budget: usize,
    rng: &SeededRng,
) -> Result<(f64, GammaNormCertificate)> {
    rep.validate(PSD_TOL_DEFAULT)?;
    let dominators = rep.padded_dominators();
    let per_pair = (budget / dominators.len().max(1)).max(1);
    let mut pi_uppers = Vec::with_capacity(dominators.len());
    for (a, b) in &dominators {
        let iv = pi_distance_bounds_seeded(&rep.spaces, a, b, per_pair, rng)?;
        pi_uppers.push(iv.upper);
    }
    let y_norms: Vec<f64> = rep
        .terms
        .iter()
        .map(|t| norm(&rep.y_space, &t.y))
        .collect::<Result<_>>()?;

    let raw = pi_uppers.iter().map(|x| x * x).sum::<f64>().sqrt()
        * y_norms.iter().map(|x| x * x).sum::<f64>().sqrt();

    // Optimal rebalancing: scaling the i-th pair (and its dominator) by t_i
    // and y_i by 1/t_i keeps the assembled tensor fixed and turns the
    // product of block norms into Σ π_i‖y_i‖ at t_i = √(‖y_i‖/π_i).
    let rebalanced_value: f64 = pi_uppers.iter().zip(&y_norms).map(|(p, y)| p * y).sum();
    let mut use_rebalanced = false;
    if rebalanced_value < raw {
        let scale_point = |pt: &DecomposablePoint, t: f64| {
            let mut f = pt.factors.clone();
            if let Some(first) = f.first_mut() {
                for x in first.iter_mut() {
                    *x *= t;
                }
            }
            DecomposablePoint::new(f)
        };
        let ts: Vec<f64> = pi_uppers
            .iter()
            .zip(&y_norms)
            .map(|(&p, &y)| if p > 0.0 && y > 0.0 { (y / p).sqrt() } else { 1.0 })
            .collect();
        let scaled = crate::certificates::KwapienWitness {
            xz_pairs: rep
                .terms
                .iter()
                .zip(&ts)
                .map(|(term, &t)| (scale_point(&term.p, t), scale_point(&term.q, t)))
                .collect(),
            st_pairs: dominators
                .iter()
                .zip(&ts)
                .map(|((a, b), &t)| (scale_point(a, t), scale_point(b, t)))
                .collect(),
        };
        let (accepted, _) = check_domination(&rep.spaces, &scaled, PSD_TOL_DEFAULT)?;
        use_rebalanced = accepted;
    }

    let value = if use_rebalanced { rebalanced_value } else { raw };
    Ok((
        value,
        GammaNormCertificate::Representation {
            pi_uppers,
            y_norms,
            rebalanced: use_rebalanced,
        },
    ))
}

/// Certified γ lower bound from elementary functionals:
/// γ(u) ≥ |⟨φ⊗y*, u⟩| / (‖φ‖_ub·‖y*‖) for any functional pair.
pub fn gamma_lower_elementary(u: &DenseTensor, budget: usize, seed: u64) -> Result<f64> {
    gamma_lower_elementary_certified(u, budget, seed).map(|(v, _)| v)
}

pub fn gamma_lower_elementary_certified(
    u: &DenseTensor,
    budget: usize,
    seed: u64,
) -> Result<(f64, GammaNormCertificate)> {
    if u.order() < 2 {
        return Err(Error::InvalidInput(
            "γ needs at least one domain factor plus the codomain slot".into(),
        ));
    }
    if u.is_zero() {
        return Ok((0.0, GammaNormCertificate::TrivialZero));
    }
    let n = u.order() - 1;
    let x_spaces = &u.factor_spaces[..n];
    let y_space = u.factor_spaces[n];
    let y_dual = dual_space(&y_space);
    let dy = y_space.dim;
    let x_total: usize = x_spaces.iter().map(|s| s.dim).product();
    let flat = u.flat();
    let rng = SeededRng::new(seed);

    let contract_last = |ystar: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; x_total];
        for (i, slot) in c.iter_mut().enumerate() {
            for (j, &yj) in ystar.iter().enumerate() {
                *slot += flat[i * dy + j] * yj;
            }
        }
        c
    };
    let contract_front = |phi: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; dy];
        for i in 0..x_total {
            let w = phi[i];
            if w == 0.0 {
                continue;
            }
            for (j, slot) in d.iter_mut().enumerate() {
                *slot += w * flat[i * dy + j];
            }
        }
        d
    };

    // Best φ for a fixed contraction c: the nuclear-duality functional when
    // the X block is a Euclidean matrix space, otherwise c itself.
    let phi_candidates = |c: &[f64]| -> Vec<Vec<f64>> {
        let mut out = vec![c.to_vec()];
        if n == 2 && x_spaces.iter().all(|s| s.is_euclidean()) {
            let dims: Vec<usize> = x_spaces.iter().map(|s| s.dim).collect();
            let m = ndarray::Array2::from_shape_vec((dims[0], dims[1]), c.to_vec()).unwrap();
            if let Ok((uu, _, vv)) = svd(&m) {
                let k = uu.ncols().min(vv.ncols());
                let mut w = vec![0.0; c.len()];
                for i in 0..dims[0] {
                    for j in 0..dims[1] {
                        for r in 0..k {
                            w[i * dims[1] + j] += uu[(i, r)] * vv[(j, r)];
                        }
                    }
                }
                out.push(w);
            }
        }
        out
    };

    let x_dims: Vec<usize> = x_spaces.iter().map(|s| s.dim).collect();
    let score = |phi: &[f64], ystar: &[f64]| -> Result<(f64, f64, f64, f64)> {
        let arr = ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&x_dims), phi.to_vec()).unwrap();
        let phi_ub = functional_norm_upper(x_spaces, &arr)?;
        let ystar_norm = norm(&y_dual, ystar)?;
        if phi_ub <= 0.0 || ystar_norm <= 0.0 {
            return Ok((0.0, phi_ub, ystar_norm, 0.0));
        }
        let d = contract_front(phi);
        let pairing: f64 = d.iter().zip(ystar).map(|(a, b)| a * b).sum();
        Ok((pairing.abs() / (phi_ub * ystar_norm), phi_ub, ystar_norm, pairing))
    };

    let restarts = (budget / 50).clamp(2, 8);
    let mut best: (f64, Vec<f64>, Vector, f64, f64, f64) =
        (0.0, vec![0.0; x_total], vec![0.0; dy], 1.0, 1.0, 0.0);
    for r in 0..restarts {
        let mut stream = rng.stream(r as u64);
        let mut ystar: Vector = if r == 0 {
            let mut v = vec![0.0; dy];
            v[0] = 1.0;
            v
        } else {
            use rand::Rng;
            (0..dy)
                .map(|_| stream.sample::<f64, _>(rand_distr::StandardNormal))
                .collect()
        };
        let ny = norm(&y_dual, &ystar)?;
        if ny > 0.0 {
            for x in &mut ystar {
                *x /= ny;
            }
        } else {
            ystar[0] = 1.0;
        }
        let mut phi = contract_last(&ystar);
        for _sweep in 0..10 {
            let c = contract_last(&ystar);
            let mut best_phi = phi.clone();
            let mut best_val = -1.0;
            for cand in phi_candidates(&c) {
                let (v, ..) = score(&cand, &ystar)?;
                if v > best_val {
                    best_val = v;
                    best_phi = cand;
                }
            }
            phi = best_phi;
            let d = contract_front(&phi);
            let (new_ystar, _) = linear_form_maximizer(&y_dual, &d)?;
            let (v_new, ..) = score(&phi, &new_ystar)?;
            let (v_old, ..) = score(&phi, &ystar)?;
            if v_new >= v_old {
                ystar = new_ystar;
            }
            if (v_new - v_old).abs() <= 1e-13 * (1.0 + v_new.abs()) {
                break;
            }
        }
        let (v, phi_ub, ystar_norm, pairing) = score(&phi, &ystar)?;
        if v > best.0 {
            best = (v, phi, ystar, phi_ub, ystar_norm, pairing);
        }
    }

    let (value, phi, ystar, phi_ub, ystar_norm, pairing) = best;
    Ok((
        value,
        GammaNormCertificate::ElementaryFunctional {
            functional: phi,
            functional_norm_upper: phi_ub,
            dual_vector: ystar,
            dual_vector_norm: ystar_norm,
            pairing,
        },
    ))
}

/// Certified γ lower bound through a dual operator: γ(u) ≥ |φ_T(u)|/Γ_ub(T)
/// for every T into Y* with a finite Γ upper certificate.
pub fn gamma_lower_via_operator(
    u: &DenseTensor,
    t: &MultilinearOperator,
    interval: &CertifiedInterval,
) -> Result<f64> {
    gamma_lower_via_operator_certified(u, t, interval).map(|(v, _)| v)
}

pub fn gamma_lower_via_operator_certified(
    u: &DenseTensor,
    t: &MultilinearOperator,
    interval: &CertifiedInterval,
) -> Result<(f64, GammaNormCertificate)> {
    let n = u.order().saturating_sub(1);
    if t.arity() != n || t.domain != u.factor_spaces[..n] {
        return Err(Error::ShapeMismatch {
            expected: format!("operator over {:?}", &u.factor_spaces[..n]),
            got: format!("{:?}", t.domain),
        });
    }
    if t.codomain_dim() != u.factor_spaces[n].dim {
        return Err(Error::ShapeMismatch {
            expected: format!("codomain dim {}", u.factor_spaces[n].dim),
            got: format!("dim {}", t.codomain_dim()),
        });
    }
    if !interval.upper.is_finite() {
        return Err(Error::Refused("Γ upper certificate is not finite".into()));
    }
    // The duality pairing φ_T(u) is the full coefficient contraction.
    let pairing: f64 = u
        .coefficients
        .iter()
        .zip(t.coefficients.iter())
        .map(|(a, b)| a * b)
        .sum();
    if interval.upper <= 0.0 {
        if pairing.abs() > 1e-12 {
            return Err(Error::Inconsistency(
                "zero Γ upper bound with a nonzero pairing".into(),
            ));
        }
        return Ok((0.0, GammaNormCertificate::TrivialZero));
    }
    Ok((
        pairing.abs() / interval.upper,
        GammaNormCertificate::ViaOperator {
            gamma_upper: interval.upper,
            pairing,
        },
    ))
}

/// Greedy splitter: peel rank-one terms of the (n+1)-way tensor, close the
/// residual with basis terms, and pair every term with itself as dominator.
pub fn representation_from_tensor(
    u: &DenseTensor,
    budget: usize,
    seed: u64,
) -> Result<GammaRepresentation> {
    if u.order() < 2 {
        return Err(Error::InvalidInput(
            "γ representations need at least two tensor slots".into(),
        ));
    }
    let n = u.order() - 1;
    let x_spaces: Vec<SpaceSpec> = u.factor_spaces[..n].to_vec();
    let y_space = u.factor_spaces[n];
    let mut residual = u.clone();
    let mut terms: Vec<GammaTerm> = Vec::new();
    let rank_cap = 2 * u.dims().iter().max().copied().unwrap_or(1);
    let rng = SeededRng::new(seed);

    for round in 0..rank_cap {
        if residual.is_zero() {
            break;
        }
        let Some((factors, weight)) = crate::tensors::best_rank_one(
            &residual.coefficients,
            (budget / 40).clamp(2, 6),
            &rng,
            round as u64,
        ) else {
            break;
        };
        let mut p_factors: Vec<Vector> = factors[..n].to_vec();
        for x in p_factors[0].iter_mut() {
            *x *= weight;
        }
        let y = factors[n].clone();
        let term = GammaTerm {
            p: DecomposablePoint::new(p_factors),
            q: DecomposablePoint::zero(&x_spaces),
            y,
        };
        // Subtract the term from the residual.
        let dp = to_dense(&x_spaces, &term.p)?;
        let dy = y_space.dim;
        let res = residual.coefficients.as_slice_mut().unwrap();
        for (i, &c) in dp.flat().iter().enumerate() {
            for (j, &yj) in term.y.iter().enumerate() {
                res[i * dy + j] -= c * yj;
            }
        }
        terms.push(term);
        let l1 = residual.l1();
        if l1 <= 1e-13 * (1.0 + u.l1()) {
            break;
        }
    }
    // Exact closure: each remaining coefficient becomes a basis term.
    let dims = u.dims();
    for (idx, &c) in residual.coefficients.indexed_iter() {
        if c == 0.0 {
            continue;
        }
        let mut p_factors: Vec<Vector> = Vec::with_capacity(n);
        for k in 0..n {
            let mut e = vec![0.0; dims[k]];
            e[idx[k]] = if k == 0 { c } else { 1.0 };
            p_factors.push(e);
        }
        let mut y = vec![0.0; dims[n]];
        y[idx[n]] = 1.0;
        terms.push(GammaTerm {
            p: DecomposablePoint::new(p_factors),
            q: DecomposablePoint::zero(&x_spaces),
            y,
        });
    }
    if terms.is_empty() {
        // Zero tensor: a single trivial term keeps the representation valid.
        terms.push(GammaTerm {
            p: DecomposablePoint::zero(&x_spaces),
            q: DecomposablePoint::zero(&x_spaces),
            y: vec![0.0; y_space.dim],
        });
    }
    Ok(GammaRepresentation::with_equality_dominators(
        x_spaces, y_space, terms,
    ))
}
