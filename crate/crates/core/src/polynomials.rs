//! Homogeneous polynomials via symmetric coefficient tensors: symmetric
//! projective norm bounds, the polynomial domination certificate, and
//! certified Γ intervals for polynomials.
//!
//! A degree-n homogeneous polynomial P: X → Y is stored as its symmetric
//! coefficient tensor (the coefficients of the associated symmetric
//! multilinear operator T_P with P(x) = T_P(x,…,x)). The polynomial
//! domination order quantifies over scalar n-homogeneous polynomials only,
//! which in coordinates is the space of symmetric coefficient tensors; the
//! monomial vectorization below carries multinomial weights so that the
//! Euclidean pairing of two vectorizations reproduces the full tensor
//! contraction exactly, turning the quantifier into a Gram comparison.

use ndarray::{ArrayD, IxDyn};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::certificates::{
    CertificateKind, CertificatePayload, CertifiedInterval, GammaCertificate, PSD_TOL_DEFAULT,
};
use crate::numerics::{
    min_eigenvalue, multistart_maximize, svd, SearchDomain, SeededRng, SymmetricMatrix,
};
use crate::operators::{Codomain, MultilinearOperator};
use crate::spaces::{norm, norm_unchecked, Exponent, SpaceSpec, Vector};
use crate::tensors::{
    coeffs_to_value, flatten_by_mask, projective_norm_bounds_seeded, value_to_coeffs, DenseTensor,
    NormCertificate, NormInterval,
};
use crate::{Error, Result};

/// Degree cap: permutation symmetrization enumerates n! index orders.
const MAX_DEGREE: usize = 6;

/// A degree-n homogeneous polynomial stored by its symmetric tensor.
#[derive(Debug, Clone)]
pub struct HomogeneousPolynomial {
    pub degree: usize,
    pub space: SpaceSpec,
    pub codomain: SpaceSpec,
    pub coefficients: ArrayD<f64>,
}

impl HomogeneousPolynomial {
    /// Build from an arbitrary coefficient tensor of shape (d,…,d, e);
    /// the domain block is symmetrized on construction.
    pub fn new(
        degree: usize,
        space: SpaceSpec,
        codomain: SpaceSpec,
        coefficients: ArrayD<f64>,
    ) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "degree must be in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        let mut dims = vec![space.dim; degree];
        dims.push(codomain.dim);
        if coefficients.shape() != dims.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: format!("{dims:?}"),
                got: format!("{:?}", coefficients.shape()),
            });
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients".into()));
        }
        let sym = symmetrize_coeffs(&coefficients, degree);
        Ok(Self {
            degree,
            space,
            codomain,
            coefficients: sym,
        })
    }

    pub fn zeros(degree: usize, space: SpaceSpec, codomain: SpaceSpec) -> Result<Self> {
        let mut dims = vec![space.dim; degree];
        dims.push(codomain.dim);
        Self::new(degree, space, codomain, ArrayD::zeros(IxDyn(&dims)))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&x| x == 0.0)
    }
}

impl Serialize for HomogeneousPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("HomogeneousPolynomial", 4)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("space", &self.space)?;
        st.serialize_field("codomain", &self.codomain)?;
        st.serialize_field("coeffs", &coeffs_to_value(&self.coefficients))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for HomogeneousPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            degree: usize,
            space: SpaceSpec,
            codomain: SpaceSpec,
            coeffs: Value,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut dims = vec![raw.space.dim; raw.degree];
        dims.push(raw.codomain.dim);
        let coefficients =
            value_to_coeffs(&raw.coeffs, &dims).map_err(serde::de::Error::custom)?;
        // Loading checks symmetry instead of silently symmetrizing.
        let scale: f64 = coefficients.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        let sym = symmetrize_coeffs(&coefficients, raw.degree);
        let drift: f64 = sym
            .iter()
            .zip(coefficients.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        if drift > 1e-12 * scale {
            return Err(serde::de::Error::custom(
                "polynomial coefficients are not symmetric in the domain indices",
            ));
        }
        HomogeneousPolynomial::new(raw.degree, raw.space, raw.codomain, coefficients)
            .map_err(serde::de::Error::custom)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut items, &mut out);
    out
}

/// Average a coefficient tensor over permutations of its first `n` indices.
fn symmetrize_coeffs(coeffs: &ArrayD<f64>, n: usize) -> ArrayD<f64> {
    let perms = permutations(n);
    let mut out = ArrayD::zeros(IxDyn(coeffs.shape()));
    let k = coeffs.ndim();
    for (idx, slot) in out.indexed_iter_mut() {
        let base: Vec<usize> = (0..k).map(|i| idx[i]).collect();
        let mut acc = 0.0;
        for perm in &perms {
            let mut src = base.clone();
            for (pos, &from) in perm.iter().enumerate() {
                src[pos] = base[from];
            }
            acc += coeffs[IxDyn(&src)];
        }
        *slot = acc / perms.len() as f64;
    }
    out
}

/// P(x): full contraction of the symmetric tensor with n copies of x.
pub fn evaluate_poly(p: &HomogeneousPolynomial, x: &Vector) -> Result<Vector> {
    p.space.check_len(x)?;
    let op = associated_operator(p)?;
    op.evaluate(&vec![x.clone(); p.degree])
}

/// The symmetric multilinear operator T_P with P(x) = T_P(x,…,x).
pub fn associated_operator(p: &HomogeneousPolynomial) -> Result<MultilinearOperator> {
    MultilinearOperator::new(
        vec![p.space; p.degree],
        Codomain::Space(p.codomain),
        p.coefficients.clone(),
    )
}

/// The polynomial of a multilinear operator on identical factors: symmetrize
/// the coefficients. Round-trips exactly with [`associated_operator`].
pub fn symmetrize(t: &MultilinearOperator) -> Result<HomogeneousPolynomial> {
    let degree = t.arity();
    let space = t.domain[0];
    if t.domain.iter().any(|s| *s != space) {
        return Err(Error::InvalidInput(
            "symmetrization needs identical domain factors".into(),
        ));
    }
    let Codomain::Space(codomain) = &t.codomain else {
        return Err(Error::Unsupported(
            "polynomials use plain-space codomains".into(),
        ));
    };
    HomogeneousPolynomial::new(degree, space, *codomain, t.coefficients.clone())
}

/// Sorted index tuples (multisets) of length `n` over `0..d`, in
/// lexicographic order; the monomial basis of symmetric tensors.
fn sorted_tuples(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(d: usize, n: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for i in start..d {
            current.push(i);
            rec(d, n, i, current, out);
            current.pop();
        }
    }
    rec(d, n, 0, &mut current, &mut out);
    out
}

fn multinomial_count(tuple: &[usize]) -> u64 {
    let n = tuple.len() as u64;
    let mut fact = vec![1u64; n as usize + 1];
    for k in 1..=n as usize {
        fact[k] = fact[k - 1] * k as u64;
    }
    let mut denom = 1u64;
    let mut run = 1u64;
    for w in tuple.windows(2) {
        if w[0] == w[1] {
            run += 1;
            denom *= run;
        } else {
            run = 1;
        }
    }
    // denom accumulated ∏ multiplicities! along runs.
    fact[n as usize] / denom.max(1)
}

/// Monomial vectorization with √multinomial weights: the Euclidean pairing
/// of two vectorizations equals the full tensor contraction of the two
/// symmetric tensors.
pub(crate) fn sym_vec(coeffs: &ArrayD<f64>, d: usize, n: usize) -> Vec<f64> {
    sorted_tuples(d, n)
        .iter()
        .map(|t| {
            let c = multinomial_count(t) as f64;
            c.sqrt() * coeffs[IxDyn(t)]
        })
        .collect()
}

/// π_{n,s} upper bound for a symmetrized elementary tensor sym(a¹⊗…⊗aⁿ)
/// via the polarization identity: (1/(2ⁿn!))·Σ_ε ‖Σ_j ε_j a^j‖ⁿ.
fn polarization_cost(space: &SpaceSpec, factors: &[Vector]) -> f64 {
    let n = factors.len();
    let mut fact = 1.0f64;
    for k in 2..=n {
        fact *= k as f64;
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut combo = vec![0.0; space.dim];
        for (j, f) in factors.iter().enumerate() {
            let sign = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
            for (slot, &x) in combo.iter_mut().zip(f) {
                *slot += sign * x;
            }
        }
        total += norm_unchecked(space.p, &combo).powi(n as i32);
    }
    total / (2f64.powi(n as i32) * fact)
}

fn parallel_direction(a: &Vector, b: &Vector) -> bool {
    let na = norm_unchecked(Exponent::TWO, a);
    let nb = norm_unchecked(Exponent::TWO, b);
    if na == 0.0 || nb == 0.0 {
        return true;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot.abs() - na * nb).abs() <= 1e-12 * na * nb
}

/// Cost of one symmetrized elementary tensor: the exact symmetric-power
/// formula when the factors are pairwise parallel, polarization otherwise.
fn sym_elementary_cost(space: &SpaceSpec, factors: &[Vector]) -> f64 {
    let all_parallel = factors
        .windows(2)
        .all(|w| parallel_direction(&w[0], &w[1]));
    if all_parallel {
        factors
            .iter()
            .map(|f| norm_unchecked(space.p, f))
            .product()
    } else {
        polarization_cost(space, factors)
    }
}

/// Certified two-sided bounds on the symmetric projective norm π_{n,s} of a
/// symmetric tensor: upper by greedy symmetric rank-one peeling with an
/// exact symmetrized-basis closure, lower by the plain projective norm
/// (every symmetric decomposition is a decomposition, so π ≤ π_{n,s}).
pub fn sym_projective_bounds(w: &DenseTensor, budget: usize) -> Result<NormInterval> {
    sym_projective_bounds_seeded(w, budget, &SeededRng::new(0))
}

pub fn sym_projective_bounds_seeded(
    w: &DenseTensor,
    budget: usize,
    rng: &SeededRng,
) -> Result<NormInterval> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    let n = w.order();
    let space = w.factor_spaces[0];
    if w.factor_spaces.iter().any(|s| *s != space) {
        return Err(Error::InvalidInput(
            "symmetric tensors need identical factor spaces".into(),
        ));
    }
    let sym = symmetrize_coeffs(&w.coefficients, n);
    let drift: f64 = sym
        .iter()
        .zip(w.coefficients.iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    if drift > 1e-12 * (1.0 + w.l1()) {
        return Err(Error::InvalidInput("tensor is not symmetric".into()));
    }
    if w.is_zero() {
        return NormInterval::new(
            0.0,
            0.0,
            NormCertificate::TrivialZero,
            NormCertificate::TrivialZero,
        );
    }

    // Upper: peel symmetric powers λ·v^{⊗n}, closing with the symmetrized
    // basis. Terms are kept as (unit vector, signed weight) pairs.
    let d = space.dim;
    let rank_cap = d + 2;
    let apply = |residual: &mut ArrayD<f64>, v: &Vector, lambda: f64| {
        for (idx, slot) in residual.indexed_iter_mut() {
            let mut wgt = lambda;
            for k in 0..n {
                wgt *= v[idx[k]];
            }
            *slot -= wgt;
        }
    };
    let total_of = |pairs: &[(Vector, f64)], residual: &ArrayD<f64>| -> f64 {
        pairs
            .iter()
            .map(|(v, l)| l.abs() * norm_unchecked(space.p, v).powi(n as i32))
            .sum::<f64>()
            + sym_basis_closure(&space, n, residual)
    };

    let mut residual = w.coefficients.clone();
    let mut pairs: Vec<(Vector, f64)> = Vec::new();
    let mut best_total = sym_basis_closure(&space, n, &residual);
    let mut best_depth = 0usize;
    for round in 0..rank_cap {
        let Some((v, lambda)) = best_symmetric_rank_one(&residual, n, budget, rng, round as u64)
        else {
            break;
        };
        apply(&mut residual, &v, lambda);
        pairs.push((v, lambda));
        let total = total_of(&pairs, &residual);
        if total < best_total {
            best_total = total;
            best_depth = pairs.len();
        }
        if sym_basis_closure(&space, n, &residual) <= 1e-14 * (1.0 + w.l1()) {
            break;
        }
    }

    // Fixed-rank refinement at the best depth: re-fit each symmetric power
    // against the residual with that term added back.
    pairs.truncate(best_depth);
    let mut residual = w.coefficients.clone();
    for (v, lambda) in &pairs {
        apply(&mut residual, v, *lambda);
    }
    if !pairs.is_empty() {
        let mut refined = pairs.clone();
        let mut refined_residual = residual.clone();
        for pass in 0..2 {
            for k in 0..refined.len() {
                let (v, lambda) = refined[k].clone();
                apply(&mut refined_residual, &v, -lambda);
                if let Some((nv, nl)) = best_symmetric_rank_one(
                    &refined_residual,
                    n,
                    budget / 4 + 1,
                    rng,
                    7000 + (pass * rank_cap + k) as u64,
                ) {
                    apply(&mut refined_residual, &nv, nl);
                    refined[k] = (nv, nl);
                } else {
                    apply(&mut refined_residual, &v, lambda);
                    refined[k] = (v, lambda);
                }
            }
        }
        if total_of(&refined, &refined_residual) < total_of(&pairs, &residual) {
            pairs = refined;
            residual = refined_residual;
        }
    }

    let term_costs: Vec<f64> = pairs
        .iter()
        .map(|(v, l)| l.abs() * norm_unchecked(space.p, v).powi(n as i32))
        .collect();
    let residual_closure = sym_basis_closure(&space, n, &residual);
    let upper = term_costs.iter().sum::<f64>() + residual_closure;
    // Certificate terms list all n factors with the signed weight folded
    // into the first, so λ·v^{⊗n} is reproduced exactly (folding into a
    // single power would lose the sign for even n).
    let cert_terms: Vec<Vec<Vector>> = pairs
        .iter()
        .map(|(v, l)| {
            let mut factors = vec![v.clone(); n];
            for x in factors[0].iter_mut() {
                *x *= l;
            }
            factors
        })
        .collect();
    let upper_cert = NormCertificate::Decomposition {
        terms: cert_terms,
        term_costs,
        residual_l1: residual_closure,
    };

    // Lower: plain π lower bound.
    let plain = projective_norm_bounds_seeded(w, budget, rng)?;
    NormInterval::new(plain.lower.min(upper), upper, plain.lower_certificate, upper_cert)
}

/// Exact closure cost of a symmetric residual: group its coefficients by
/// monomial orbit and charge each symmetrized basis tensor its certified
/// π_{n,s} cost.
fn sym_basis_closure(space: &SpaceSpec, n: usize, residual: &ArrayD<f64>) -> f64 {
    let d = space.dim;
    let mut total = 0.0;
    for tuple in sorted_tuples(d, n) {
        let c = residual[IxDyn(&tuple)];
        if c == 0.0 {
            continue;
        }
        let count = multinomial_count(&tuple) as f64;
        let basis_factors: Vec<Vector> = tuple
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        total += c.abs() * count * sym_elementary_cost(space, &basis_factors);
    }
    total
}

/// Best symmetric rank-one approximation of a symmetric residual: maximize
/// |⟨v^{⊗n}, w⟩| over the Euclidean unit sphere. Starts deterministically
/// from the top singular vector of the first-mode flattening (exact for
/// rank-one symmetric tensors) plus seeded multistart.
fn best_symmetric_rank_one(
    residual: &ArrayD<f64>,
    n: usize,
    budget: usize,
    rng: &SeededRng,
    salt: u64,
) -> Option<(Vector, f64)> {
    let d = residual.shape()[0];
    let fro = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro == 0.0 {
        return None;
    }
    let power_value = |v: &[f64]| -> f64 {
        let mut total = 0.0;
        for (idx, &c) in residual.indexed_iter() {
            let mut w = c;
            for k in 0..n {
                w *= v[idx[k]];
            }
            total += w;
        }
        total
    };

    let mut best: Option<(Vector, f64)> = None;
    let mut starts: Vec<Vector> = Vec::new();
    if let Ok((u, _, _)) = svd(&flatten_by_mask(residual, 0b01)) {
        starts.push((0..d).map(|r| u[(r, 0)]).collect());
    }
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        starts.push(e);
    }

    let objective = move |v: &[f64]| power_value(v).abs();
    let domain = SearchDomain::spheres(&[d], &[2.0]);
    let restarts = (budget / 60).clamp(2, 6);
    for (i, start) in starts.into_iter().enumerate() {
        if let Ok((point, value)) =
            crate::numerics::ascend_from(&objective, &domain, start.clone())
        {
            match &best {
                Some((_, b)) if b.abs() >= value => {}
                _ => best = Some((point, value)),
            }
        }
        let _ = i;
    }
    if let Ok((point, value)) =
        multistart_maximize(&objective, &domain, restarts, &rng.derive(0xb0 + salt))
    {
        match &best {
            Some((_, b)) if b.abs() >= value => {}
            _ => best = Some((point, value)),
        }
    }
    let (v, _) = best?;
    let lambda = power_value(&v);
    if lambda.abs() <= 1e-14 * fro {
        return None;
    }
    Some((v, lambda))
}

/// A polynomial domination witness: vector pairs for the operator side and
/// the symmetric-π side.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyWitness {
    #[serde(rename = "xz")]
    pub xz_pairs: Vec<(Vector, Vector)>,
    #[serde(rename = "st")]
    pub st_pairs: Vec<(Vector, Vector)>,
}

impl PolyWitness {
    pub fn equality(pairs: Vec<(Vector, Vector)>) -> Self {
        Self {
            xz_pairs: pairs.clone(),
            st_pairs: pairs,
        }
    }
}

/// Polynomial domination over scalar n-homogeneous polynomials: a Gram
/// comparison over the monomial vectorizations of ⊗ⁿx − ⊗ⁿz.
pub fn check_poly_domination(
    space: &SpaceSpec,
    degree: usize,
    witness: &PolyWitness,
    tol: f64,
) -> Result<(bool, f64)> {
    if witness.st_pairs.is_empty() {
        return Err(Error::InvalidInput("witness needs st pairs".into()));
    }
    let d = space.dim;
    let dim_sym = sorted_tuples(d, degree).len();
    let vec_of = |x: &Vector| -> Result<Vec<f64>> {
        space.check_len(x)?;
        let power = crate::tensors::outer_product(&vec![x.clone(); degree]);
        Ok(sym_vec(&power, d, degree))
    };
    let diffs = |pairs: &[(Vector, Vector)]| -> Result<Vec<Vec<f64>>> {
        pairs
            .iter()
            .map(|(a, b)| {
                let va = vec_of(a)?;
                let vb = vec_of(b)?;
                Ok(va.iter().zip(&vb).map(|(x, y)| x - y).collect())
            })
            .collect()
    };
    let g_st = SymmetricMatrix::gram_from_vectors(dim_sym, &diffs(&witness.st_pairs)?)?;
    if witness.xz_pairs.is_empty() {
        return Ok((true, 0.0));
    }
    let g_xz = SymmetricMatrix::gram_from_vectors(dim_sym, &diffs(&witness.xz_pairs)?)?;
    let min_eig = min_eigenvalue(&g_st.sub(&g_xz)?)?;
    let accepted = min_eig >= -tol * (1.0 + g_st.trace());
    Ok((accepted, min_eig))
}

fn power_tensor(space: &SpaceSpec, degree: usize, x: &Vector) -> Result<DenseTensor> {
    let coeffs = crate::tensors::outer_product(&vec![x.clone(); degree]);
    DenseTensor::new(vec![*space; degree], coeffs)
}

/// Certified Γ(P) lower bound from a dominated polynomial witness:
/// √(Σ‖P(x_i)−P(z_i)‖² / Σ π_{n,s}-ub(⊗ⁿs_i−⊗ⁿt_i)²).
pub fn poly_lower_bound(
    p: &HomogeneousPolynomial,
    witness: &PolyWitness,
    budget: usize,
) -> Result<GammaCertificate> {
    poly_lower_bound_seeded(p, witness, budget, PSD_TOL_DEFAULT, &SeededRng::new(0))
}

pub fn poly_lower_bound_seeded(
    p: &HomogeneousPolynomial,
    witness: &PolyWitness,
    budget: usize,
    psd_tol: f64,
    rng: &SeededRng,
) -> Result<GammaCertificate> {
    let (accepted, min_eig) = check_poly_domination(&p.space, p.degree, witness, psd_tol)?;
    if !accepted {
        return Err(Error::Refused(format!(
            "polynomial domination rejected: min eigenvalue {min_eig}"
        )));
    }
    let mut numerator_terms = Vec::with_capacity(witness.xz_pairs.len());
    for (x, z) in &witness.xz_pairs {
        let px = evaluate_poly(p, x)?;
        let pz = evaluate_poly(p, z)?;
        let diff: Vector = px.iter().zip(&pz).map(|(a, b)| a - b).collect();
        numerator_terms.push(norm(&p.codomain, &diff)?);
    }
    let per_pair = (budget / witness.st_pairs.len().max(1)).max(1);
    let mut denominator_terms = Vec::with_capacity(witness.st_pairs.len());
    for (s, t) in &witness.st_pairs {
        let ds = power_tensor(&p.space, p.degree, s)?;
        let dt = power_tensor(&p.space, p.degree, t)?;
        let diff = ds.sub(&dt)?;
        let iv = sym_projective_bounds_seeded(&diff, per_pair, rng)?;
        denominator_terms.push(iv.upper);
    }
    let num: f64 = numerator_terms.iter().map(|x| x * x).sum();
    let den: f64 = denominator_terms.iter().map(|x| x * x).sum();
    if den <= 0.0 {
        return Err(Error::Refused(
            "witness denominator is zero; no quotient certificate".into(),
        ));
    }
    Ok(GammaCertificate {
        kind: CertificateKind::WitnessLower,
        value: (num / den).sqrt(),
        payload: CertificatePayload::PolyWitness {
            witness: witness.clone(),
            numerator_terms,
            denominator_terms,
            domination_min_eig: min_eig,
            psd_tolerance: psd_tol,
        },
    })
}

/// Cheap certified witness value for search loops: the telescope of
/// ⊗ⁿs − ⊗ⁿt costed by symmetrized elementary bounds (exact for parallel
/// pairs, polarization otherwise).
fn poly_witness_value_cheap(p: &HomogeneousPolynomial, witness: &PolyWitness) -> Result<f64> {
    let mut num = 0.0;
    for (x, z) in &witness.xz_pairs {
        let px = evaluate_poly(p, x)?;
        let pz = evaluate_poly(p, z)?;
        let diff: Vector = px.iter().zip(&pz).map(|(a, b)| a - b).collect();
        let v = norm(&p.codomain, &diff)?;
        num += v * v;
    }
    let mut den = 0.0;
    for (s, t) in &witness.st_pairs {
        let mut cost = 0.0;
        for k in 0..p.degree {
            let mut factors: Vec<Vector> = Vec::with_capacity(p.degree);
            for j in 0..p.degree {
                factors.push(if j < k {
                    t.clone()
                } else if j == k {
                    s.iter().zip(t).map(|(a, b)| a - b).collect()
                } else {
                    s.clone()
                });
            }
            cost += sym_elementary_cost(&p.space, &factors);
        }
        den += cost * cost;
    }
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

/// Certified interval for Γ(P): the lower bound from the best dominated
/// polynomial witness found; the upper from Γ(T_P) (Γ(P) ≤ Γ(T_P)).
pub fn poly_gamma_interval(
    p: &HomogeneousPolynomial,
    seed: u64,
    budget: usize,
) -> Result<CertifiedInterval> {
    let rng = SeededRng::new(seed);
    let mut best: Option<(PolyWitness, f64)> = None;
    let consider = |w: PolyWitness, v: f64, best: &mut Option<(PolyWitness, f64)>| {
        match best {
            Some((_, b)) if *b >= v => {}
            _ => *best = Some((w, v)),
        }
    };

    // Scaling witnesses (x, 2x) reduce the quotient to ‖P(x)‖/‖x‖ⁿ, so any
    // good point for the polynomial norm feeds directly into a witness.
    let mut norm_points: Vec<Vector> = Vec::new();
    // Per codomain coordinate, the scalar form ⟨P_j, x^{⊗n}⟩ is maximized by
    // the symmetric rank-one search; its flattening-svd start is exact for
    // quadratic forms.
    for j in 0..p.codomain.dim {
        let dims = vec![p.space.dim; p.degree];
        let slice = ArrayD::from_shape_fn(IxDyn(&dims), |idx| {
            let mut full: Vec<usize> = (0..p.degree).map(|k| idx[k]).collect();
            full.push(j);
            p.coefficients[IxDyn(&full)]
        });
        if let Some((v, _)) = best_symmetric_rank_one(&slice, p.degree, budget, &rng, 77 + j as u64)
        {
            norm_points.push(v);
        }
    }
    {
        let d = p.space.dim;
        let pc = p.clone();
        let objective = move |x: &[f64]| {
            let v = evaluate_poly(&pc, &x.to_vec());
            match v {
                Ok(val) => norm_unchecked(pc.codomain.p, &val),
                Err(_) => 0.0,
            }
        };
        let domain = SearchDomain::spheres(&[d], &[p.space.p.as_f64()]);
        let restarts = (budget / 30).clamp(4, 16);
        if let Ok((point, _)) = multistart_maximize(&objective, &domain, restarts, &rng.derive(1))
        {
            norm_points.push(point);
        }
    }
    for point in norm_points {
        let z: Vector = point.iter().map(|v| 2.0 * v).collect();
        let w = PolyWitness::equality(vec![(point, z)]);
        let v = poly_witness_value_cheap(p, &w)?;
        consider(w, v, &mut best);
    }

    // Random vector pairs with scale diversity.
    let rounds = (budget / 10).max(8);
    for k in 0..rounds {
        use rand::Rng;
        let mut stream = rng.derive(2).stream(k as u64);
        let draw = |stream: &mut rand_chacha::ChaCha8Rng| -> Vector {
            let mut v: Vector = (0..p.space.dim)
                .map(|_| stream.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let nv = norm_unchecked(p.space.p, &v);
            let scale = 4f64.powf(stream.gen_range(-1.0..1.0));
            if nv > 0.0 {
                for x in &mut v {
                    *x *= scale / nv;
                }
            }
            v
        };
        let pair = (draw(&mut stream), draw(&mut stream));
        let w = PolyWitness::equality(vec![pair]);
        let v = poly_witness_value_cheap(p, &w)?;
        consider(w, v, &mut best);
    }

    let lower_cert = match best {
        Some((w, _)) => poly_lower_bound_seeded(
            p,
            &w,
            (budget / 4).max(8),
            PSD_TOL_DEFAULT,
            &rng.derive(3),
        )?,
        None => {
            return Err(Error::Inconsistency(
                "polynomial witness search produced no candidate".into(),
            ))
        }
    };

    let op = associated_operator(p)?;
    let op_interval = crate::certificates::gamma_interval(&op, seed ^ 0x90, budget)?;
    let upper_cert = op_interval.upper_cert;
    CertifiedInterval::new(lower_cert, upper_cert)
}

/// S ∘ P ∘ R for linear maps R: Z → X and S: Y → W. The composed
/// coefficients stay symmetric because every domain slot is transformed by
/// the same matrix.
pub fn compose_linear(
    s: &MultilinearOperator,
    p: &HomogeneousPolynomial,
    r: &MultilinearOperator,
) -> Result<HomogeneousPolynomial> {
    let op = associated_operator(p)?;
    let rs = vec![r.clone(); p.degree];
    let pre = crate::operators::precompose_linear(&op, &rs)?;
    let post = crate::operators::postcompose_linear(s, &pre)?;
    symmetrize(&post)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2(dim: usize) -> SpaceSpec {
        SpaceSpec::euclidean(dim)
    }

    fn e(dim: usize, k: usize) -> Vector {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        v
    }

    /// P(x) = x₁² − x₂² on ℓ₂², scalar-valued.
    fn saddle() -> HomogeneousPolynomial {
        let mut coeffs = ArrayD::zeros(IxDyn(&[2, 2, 1]));
        coeffs[[0, 0, 0]] = 1.0;
        coeffs[[1, 1, 0]] = -1.0;
        HomogeneousPolynomial::new(2, l2(2), l2(1), coeffs).unwrap()
    }

    #[test]
    fn evaluate_poly_examples() {
        let mut coeffs = ArrayD::zeros(IxDyn(&[2, 2, 1]));
        coeffs[[0, 0, 0]] = 1.0;
        let p = HomogeneousPolynomial::new(2, l2(2), l2(1), coeffs).unwrap();
        assert_eq!(evaluate_poly(&p, &e(2, 0)).unwrap(), vec![1.0]);
        // Homogeneity of degree 2.
        let x = vec![0.3, -0.8];
        let v1 = evaluate_poly(&p, &x).unwrap()[0];
        let x2: Vector = x.iter().map(|a| 2.0 * a).collect();
        let v2 = evaluate_poly(&p, &x2).unwrap()[0];
        assert!((v2 - 4.0 * v1).abs() < 1e-12);
    }

    #[test]
    fn symmetrization_round_trip_and_kill() {
        use rand::Rng;
        let mut rng = SeededRng::new(3).rng();
        let coeffs =
            ArrayD::from_shape_fn(IxDyn(&[2, 2, 2]), |_| rng.gen_range(-1.0..1.0));
        let t = MultilinearOperator::new(
            vec![l2(2), l2(2)],
            Codomain::Space(l2(2)),
            coeffs,
        )
        .unwrap();
        let p = symmetrize(&t).unwrap();
        let back = associated_operator(&p).unwrap();
        let again = symmetrize(&back).unwrap();
        assert_eq!(p.coefficients, again.coefficients);
        // P(x) = T(x, x) even for asymmetric T.
        let x = vec![0.4, -0.9];
        let tv = t.evaluate(&[x.clone(), x.clone()]).unwrap();
        let pv = evaluate_poly(&p, &x).unwrap();
        for (a, b) in tv.iter().zip(&pv) {
            assert!((a - b).abs() < 1e-12);
        }

        // Antisymmetric bilinear form symmetrizes to zero.
        let mut anti = ArrayD::zeros(IxDyn(&[2, 2, 1]));
        anti[[0, 1, 0]] = 1.0;
        anti[[1, 0, 0]] = -1.0;
        let ta = MultilinearOperator::new(
            vec![l2(2), l2(2)],
            Codomain::Space(l2(1)),
            anti,
        )
        .unwrap();
        assert!(symmetrize(&ta).unwrap().is_zero());
    }

    #[test]
    fn sym_vec_pairing_matches_contraction() {
        use rand::Rng;
        let mut rng = SeededRng::new(8).rng();
        for _ in 0..5 {
            let a = symmetrize_coeffs(
                &ArrayD::from_shape_fn(IxDyn(&[3, 3]), |_| rng.gen_range(-1.0..1.0)),
                2,
            );
            let b = symmetrize_coeffs(
                &ArrayD::from_shape_fn(IxDyn(&[3, 3]), |_| rng.gen_range(-1.0..1.0)),
                2,
            );
            let direct: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            let va = sym_vec(&a, 3, 2);
            let vb = sym_vec(&b, 3, 2);
            let paired: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            assert!((direct - paired).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn sym_projective_exact_cases() {
        // w = e1⊗e1 − e2⊗e2 → [2, 2].
        let mut m = ArrayD::zeros(IxDyn(&[2, 2]));
        m[[0, 0]] = 1.0;
        m[[1, 1]] = -1.0;
        let w = DenseTensor::new(vec![l2(2), l2(2)], m).unwrap();
        let iv = sym_projective_bounds(&w, 60).unwrap();
        assert!((iv.lower - 2.0).abs() < 1e-9, "lower {}", iv.lower);
        assert!((iv.upper - 2.0).abs() < 1e-6, "upper {}", iv.upper);

        // Elementary symmetric power: [‖v‖ⁿ, ‖v‖ⁿ].
        let v = vec![3.0, 4.0];
        let w2 = power_tensor(&l2(2), 2, &v).unwrap();
        let iv2 = sym_projective_bounds(&w2, 60).unwrap();
        assert!((iv2.lower - 25.0).abs() < 1e-6);
        assert!((iv2.upper - 25.0).abs() < 1e-6);

        // Zero tensor.
        let z = DenseTensor::zeros(vec![l2(2), l2(2)]).unwrap();
        let ivz = sym_projective_bounds(&z, 8).unwrap();
        assert_eq!(ivz.lower, 0.0);
        assert_eq!(ivz.upper, 0.0);
    }

    #[test]
    fn sym_decomposition_certificate_reproduces_tensor() {
        // Negative weights at even degree: the certificate factors must
        // reassemble the input exactly (sign folded into the first factor).
        let mut m = ArrayD::zeros(IxDyn(&[2, 2]));
        m[[0, 0]] = 1.0;
        m[[1, 1]] = -1.0;
        let w = DenseTensor::new(vec![l2(2), l2(2)], m.clone()).unwrap();
        let iv = sym_projective_bounds(&w, 60).unwrap();
        let NormCertificate::Decomposition { terms, residual_l1, .. } = &iv.upper_certificate
        else {
            panic!("expected a decomposition certificate");
        };
        let mut rebuilt = ArrayD::zeros(IxDyn(&[2, 2]));
        for factors in terms {
            for i in 0..2 {
                for j in 0..2 {
                    rebuilt[[i, j]] += factors[0][i] * factors[1][j];
                }
            }
        }
        let err: f64 = rebuilt
            .iter()
            .zip(m.iter())
            .map(|(a, b): (&f64, &f64)| (a - b).abs())
            .sum();
        assert!(err <= residual_l1 + 1e-9, "reassembly error {err}");
    }

    #[test]
    fn sym_projective_rejects_asymmetric() {
        let mut m = ArrayD::zeros(IxDyn(&[2, 2]));
        m[[0, 1]] = 1.0;
        let w = DenseTensor::new(vec![l2(2), l2(2)], m).unwrap();
        assert!(matches!(
            sym_projective_bounds(&w, 8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn poly_domination_and_lower_bound() {
        let p = saddle();
        // Witness x = e1, z = e2, st = xz: quotient 2/2 = 1.
        let w = PolyWitness::equality(vec![(e(2, 0), e(2, 1))]);
        let cert = poly_lower_bound(&p, &w, 30).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-6, "value {}", cert.value);

        // Zero polynomial: value 0 for any dominated witness.
        let z = HomogeneousPolynomial::zeros(2, l2(2), l2(1)).unwrap();
        let cert0 = poly_lower_bound(&z, &w, 10).unwrap();
        assert_eq!(cert0.value, 0.0);

        // Rejected domination refuses: xz strictly larger than st.
        let wbad = PolyWitness {
            xz_pairs: vec![(vec![2.0, 0.0], vec![0.0, 0.0])],
            st_pairs: vec![(e(2, 0), vec![0.0, 0.0])],
        };
        assert!(matches!(
            poly_lower_bound(&p, &wbad, 10),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn poly_gamma_interval_saddle() {
        let p = saddle();
        let iv = poly_gamma_interval(&p, 11, 200).unwrap();
        assert!(iv.lower >= 1.0 - 1e-6, "lower {}", iv.lower);
        assert!(iv.lower <= iv.upper + 1e-9);
    }

    #[test]
    fn poly_gamma_interval_square_and_zero() {
        // P(x) = x₁²: witness level reaches 1 = ‖P‖.
        let mut coeffs = ArrayD::zeros(IxDyn(&[2, 2, 1]));
        coeffs[[0, 0, 0]] = 1.0;
        let p = HomogeneousPolynomial::new(2, l2(2), l2(1), coeffs).unwrap();
        let iv = poly_gamma_interval(&p, 2, 150).unwrap();
        assert!(iv.lower >= 1.0 - 1e-6, "lower {}", iv.lower);

        let z = HomogeneousPolynomial::zeros(2, l2(2), l2(1)).unwrap();
        let ivz = poly_gamma_interval(&z, 1, 40).unwrap();
        assert_eq!(ivz.lower, 0.0);
        assert_eq!(ivz.upper, 0.0);
    }

    #[test]
    fn poly_lower_respects_operator_upper() {
        let p = saddle();
        let iv = poly_gamma_interval(&p, 5, 150).unwrap();
        let op = associated_operator(&p).unwrap();
        let op_iv = crate::certificates::gamma_interval(&op, 5, 150).unwrap();
        assert!(iv.lower <= op_iv.upper + 1e-6);
    }

    #[test]
    fn poly_json_round_trip_checks_symmetry() {
        let p = saddle();
        let js = serde_json::to_string(&p).unwrap();
        let back: HomogeneousPolynomial = serde_json::from_str(&js).unwrap();
        assert_eq!(back.coefficients, p.coefficients);
        // An asymmetric payload is rejected on load.
        let bad = r#"{"degree":2,"space":{"dim":2,"p":2.0},"codomain":{"dim":1,"p":2.0},
                      "coeffs":[[[0.0],[1.0]],[[0.0],[0.0]]]}"#;
        assert!(serde_json::from_str::<HomogeneousPolynomial>(bad).is_err());
    }
}
