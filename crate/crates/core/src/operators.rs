//! Multilinear operators T: X₁×…×Xₙ → Y as dense coefficient tensors, with
//! their linearized (Σ-operator) view, certified operator-norm bounds, and
//! the constructions the certification routes compose: coordinate fixing,
//! rank-one operators, products of linear maps, and pre/post composition.
//!
//! Codomains are either a single ℓ_p space or a tensor-product coefficient
//! space carrying an explicit crossnorm tag. Tensor-product norms are not
//! computable exactly in general, so every norm taken in such a codomain
//! records which certified side (π upper / ε lower / Hilbert) was used.

use std::collections::BTreeMap;

use ndarray::{ArrayD, IxDyn};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::numerics::{svd, SeededRng};
use crate::spaces::{
    euclidean_embedding_constant, linear_form_maximizer, norm, norm_unchecked,
    unit_ball_vertices, SpaceSpec, Vector,
};
use crate::tensors::{
    coeffs_to_value, flatten_by_mask, injective_norm_bounds_seeded, projective_norm_bounds_seeded,
    value_to_coeffs, DenseTensor, NormCertificate, NormInterval,
};
use crate::{Error, Result};

/// Which certified side of a tensor-product norm is used when a number is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossnormTag {
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "eps")]
    Eps,
    #[serde(rename = "l2")]
    L2,
}

/// Codomain of a multilinear operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Codomain {
    Space(SpaceSpec),
    Tensor {
        #[serde(rename = "tensor")]
        spaces: Vec<SpaceSpec>,
        norm: CrossnormTag,
    },
}

impl Codomain {
    pub fn scalar() -> Self {
        Codomain::Space(SpaceSpec::scalar())
    }

    pub fn dim(&self) -> usize {
        match self {
            Codomain::Space(s) => s.dim,
            Codomain::Tensor { spaces, .. } => spaces.iter().map(|s| s.dim).product(),
        }
    }

    /// True when values live in a Hilbert space, i.e. the codomain norm is
    /// the Euclidean norm of the coefficient vector.
    pub fn is_euclidean(&self) -> bool {
        match self {
            // A one-dimensional space carries |·| regardless of p.
            Codomain::Space(s) => s.is_euclidean() || s.dim == 1,
            Codomain::Tensor { spaces, norm } => {
                *norm == CrossnormTag::L2 && spaces.iter().all(|s| s.is_euclidean())
            }
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Codomain::Space(s) if s.dim == 1)
    }

    fn validate(&self) -> Result<()> {
        if let Codomain::Tensor { spaces, norm } = self {
            if spaces.is_empty() {
                return Err(Error::InvalidInput("tensor codomain needs factors".into()));
            }
            if *norm == CrossnormTag::L2 && spaces.iter().any(|s| !s.is_euclidean()) {
                return Err(Error::Unsupported(
                    "l2-tagged tensor codomain needs Euclidean factors".into(),
                ));
            }
        }
        Ok(())
    }

    /// Certified (lower, upper) bounds on the codomain norm of a flattened
    /// value vector. Exact (lower == upper) for plain spaces and the
    /// Hilbert crossnorm.
    pub fn norm_bounds(&self, value: &[f64], budget: usize) -> Result<(f64, f64)> {
        match self {
            Codomain::Space(s) => {
                let v = norm(s, value)?;
                Ok((v, v))
            }
            Codomain::Tensor { spaces, norm: tag } => {
                let dims: Vec<usize> = spaces.iter().map(|s| s.dim).collect();
                let coeffs = ArrayD::from_shape_vec(IxDyn(&dims), value.to_vec())
                    .map_err(|e| Error::InvalidInput(format!("codomain value shape: {e}")))?;
                let tensor = DenseTensor::new(spaces.clone(), coeffs)?;
                match tag {
                    CrossnormTag::L2 => {
                        let v = tensor.frobenius();
                        Ok((v, v))
                    }
                    CrossnormTag::Pi => {
                        let iv =
                            projective_norm_bounds_seeded(&tensor, budget.max(1), &SeededRng::new(0))?;
                        Ok((iv.lower, iv.upper))
                    }
                    CrossnormTag::Eps => {
                        let iv =
                            injective_norm_bounds_seeded(&tensor, budget.max(1), &SeededRng::new(0))?;
                        Ok((iv.lower, iv.upper))
                    }
                }
            }
        }
    }

    /// Constant c with ‖v‖_codomain ≤ c·‖v‖₂ for every coefficient vector v.
    fn euclidean_upper_constant(&self) -> f64 {
        match self {
            Codomain::Space(s) => euclidean_embedding_constant(s.dim, s.p.dual()),
            Codomain::Tensor { spaces, norm } => match norm {
                CrossnormTag::L2 => 1.0,
                // π(v) ≤ ‖v‖₁ ≤ √D·‖v‖₂ (basis decomposition of unit-norm
                // elementary tensors).
                CrossnormTag::Pi => (self.dim() as f64).sqrt(),
                // ε ≤ ∏ max(1, d^{1/q − 1/2}) · ‖v‖₂ via the dual balls.
                CrossnormTag::Eps => spaces
                    .iter()
                    .map(|s| euclidean_embedding_constant(s.dim, s.p.dual()))
                    .product(),
            },
        }
    }
}

/// Construction provenance; lets the Γ routes exploit structure that a bare
/// coefficient tensor cannot reveal. Not serialized: operators loaded from
/// JSON are generic.
#[derive(Debug, Clone, Default)]
pub enum OperatorStructure {
    #[default]
    Generic,
    RankOne {
        functional: Box<MultilinearOperator>,
        direction: Vector,
    },
    ProductOfLinear {
        factors: Vec<MultilinearOperator>,
    },
}

/// Bounded multilinear operator realized by a dense coefficient tensor of
/// shape (dim X₁, …, dim Xₙ, dim Y).
#[derive(Debug, Clone)]
pub struct MultilinearOperator {
    pub domain: Vec<SpaceSpec>,
    pub codomain: Codomain,
    pub coefficients: ArrayD<f64>,
    pub structure: OperatorStructure,
}

impl MultilinearOperator {
    pub fn new(
        domain: Vec<SpaceSpec>,
        codomain: Codomain,
        coefficients: ArrayD<f64>,
    ) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidInput("operator needs at least one domain".into()));
        }
        codomain.validate()?;
        let mut dims: Vec<usize> = domain.iter().map(|s| s.dim).collect();
        dims.push(codomain.dim());
        if coefficients.shape() != dims.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: format!("{dims:?}"),
                got: format!("{:?}", coefficients.shape()),
            });
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("operator coefficients".into()));
        }
        Ok(Self {
            domain,
            codomain,
            coefficients: coefficients.as_standard_layout().to_owned(),
            structure: OperatorStructure::Generic,
        })
    }

    pub fn zeros(domain: Vec<SpaceSpec>, codomain: Codomain) -> Result<Self> {
        let mut dims: Vec<usize> = domain.iter().map(|s| s.dim).collect();
        dims.push(codomain.dim());
        Self::new(domain, codomain, ArrayD::zeros(IxDyn(&dims)))
    }

    /// Number of domain coordinates n.
    pub fn arity(&self) -> usize {
        self.domain.len()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&x| x == 0.0)
    }

    pub fn frobenius(&self) -> f64 {
        self.coefficients.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn flat(&self) -> &[f64] {
        self.coefficients
            .as_slice()
            .expect("operator coefficients are standard layout")
    }

    /// T(x¹,…,xⁿ) as a coefficient vector of the codomain.
    pub fn evaluate(&self, args: &[Vector]) -> Result<Vector> {
        if args.len() != self.arity() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} arguments", self.arity()),
                got: format!("{} arguments", args.len()),
            });
        }
        for (x, s) in args.iter().zip(&self.domain) {
            s.check_len(x)?;
        }
        let mut current: Vec<f64> = self.flat().to_vec();
        for x in args {
            let rest = current.len() / x.len();
            let mut next = vec![0.0; rest];
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &current[i * rest..(i + 1) * rest];
                for (slot, &c) in next.iter_mut().zip(row) {
                    *slot += xi * c;
                }
            }
            current = next;
        }
        Ok(current)
    }

    /// The linearization applied to a dense tensor: T̃(u). Linear in u and
    /// agreeing with `evaluate` on decomposable tensors.
    pub fn sigma_apply(&self, u: &DenseTensor) -> Result<Vector> {
        if u.factor_spaces != self.domain {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.domain),
                got: format!("{:?}", u.factor_spaces),
            });
        }
        let dy = self.codomain_dim();
        let t = self.flat();
        let mut out = vec![0.0; dy];
        for (i, &ui) in u.coefficients.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let row = &t[i * dy..(i + 1) * dy];
            for (slot, &c) in out.iter_mut().zip(row) {
                *slot += ui * c;
            }
        }
        Ok(out)
    }

    /// Hilbert-Schmidt norm: Frobenius of the full coefficient array.
    /// Defined when every domain factor and the codomain are Euclidean.
    pub fn hs_norm(&self) -> Result<f64> {
        if self.domain.iter().any(|s| !s.is_euclidean()) {
            return Err(Error::Unsupported(
                "hs norm needs Euclidean domain factors".into(),
            ));
        }
        if !self.codomain.is_euclidean() {
            return Err(Error::Unsupported("hs norm needs a Euclidean codomain".into()));
        }
        Ok(self.frobenius())
    }
}

impl Serialize for MultilinearOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MultilinearOperator", 3)?;
        st.serialize_field("domain", &self.domain)?;
        st.serialize_field("codomain", &self.codomain)?;
        st.serialize_field("coeffs", &coeffs_to_value(&self.coefficients))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for MultilinearOperator {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            domain: Vec<SpaceSpec>,
            codomain: Codomain,
            coeffs: Value,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut dims: Vec<usize> = raw.domain.iter().map(|s| s.dim).collect();
        dims.push(raw.codomain.dim());
        let coefficients = value_to_coeffs(&raw.coeffs, &dims).map_err(serde::de::Error::custom)?;
        MultilinearOperator::new(raw.domain, raw.codomain, coefficients)
            .map_err(serde::de::Error::custom)
    }
}

/// Contract `axis` of `arr` with the vector `v`, dropping that axis.
fn contract_axis(arr: &ArrayD<f64>, axis: usize, v: &[f64]) -> ArrayD<f64> {
    let dims = arr.shape().to_vec();
    let mut out_dims = dims.clone();
    out_dims.remove(axis);
    let mut out = ArrayD::zeros(IxDyn(&out_dims));
    for (idx, &c) in arr.indexed_iter() {
        let w = v[idx[axis]];
        if w == 0.0 {
            continue;
        }
        let reduced: Vec<usize> = (0..dims.len()).filter(|&k| k != axis).map(|k| idx[k]).collect();
        out[IxDyn(&reduced)] += w * c;
    }
    out
}

/// Replace `axis` of `arr` by its image under `mat` (new_dim × old_dim).
fn transform_axis(arr: &ArrayD<f64>, axis: usize, mat: &ArrayD<f64>) -> ArrayD<f64> {
    let dims = arr.shape().to_vec();
    let new_d = mat.shape()[0];
    let mut out_dims = dims.clone();
    out_dims[axis] = new_d;
    let mut out = ArrayD::zeros(IxDyn(&out_dims));
    for (idx, &c) in arr.indexed_iter() {
        if c == 0.0 {
            continue;
        }
        let mut target: Vec<usize> = (0..dims.len()).map(|k| idx[k]).collect();
        for k in 0..new_d {
            let w = mat[[k, idx[axis]]];
            if w == 0.0 {
                continue;
            }
            target[axis] = k;
            out[IxDyn(&target)] += w * c;
        }
    }
    out
}

/// Fix the named coordinates of T to the given vectors, producing an operator
/// in the remaining coordinates. At least one coordinate must stay free.
pub fn fix_coordinates(
    t: &MultilinearOperator,
    fixed: &BTreeMap<usize, Vector>,
) -> Result<MultilinearOperator> {
    if fixed.is_empty() {
        return Ok(t.clone());
    }
    if fixed.len() >= t.arity() {
        return Err(Error::InvalidInput(
            "fixing every coordinate leaves no operator; use evaluate".into(),
        ));
    }
    for (&k, v) in fixed {
        if k >= t.arity() {
            return Err(Error::InvalidInput(format!("coordinate {k} out of range")));
        }
        t.domain[k].check_len(v)?;
    }
    let mut coeffs = t.coefficients.clone();
    for (&k, v) in fixed.iter().rev() {
        coeffs = contract_axis(&coeffs, k, v);
    }
    let domain: Vec<SpaceSpec> = t
        .domain
        .iter()
        .enumerate()
        .filter(|(k, _)| !fixed.contains_key(k))
        .map(|(_, s)| *s)
        .collect();
    MultilinearOperator::new(domain, t.codomain.clone(), coeffs)
}

/// Rank-one operator x ↦ φ(x¹,…,xⁿ)·y for a scalar functional φ.
pub fn rank_one(
    phi: &MultilinearOperator,
    y: &Vector,
    codomain: SpaceSpec,
) -> Result<MultilinearOperator> {
    if !phi.codomain.is_scalar() {
        return Err(Error::InvalidInput("rank_one needs a scalar functional".into()));
    }
    codomain.check_len(y)?;
    let mut dims: Vec<usize> = phi.domain.iter().map(|s| s.dim).collect();
    dims.push(codomain.dim);
    let phi_flat = phi.flat();
    let dy = codomain.dim;
    let mut data = Vec::with_capacity(phi_flat.len() * dy);
    for &p in phi_flat {
        for &yj in y {
            data.push(p * yj);
        }
    }
    let coeffs = ArrayD::from_shape_vec(IxDyn(&dims), data).unwrap();
    let mut op = MultilinearOperator::new(phi.domain.clone(), Codomain::Space(codomain), coeffs)?;
    op.structure = OperatorStructure::RankOne {
        functional: Box::new(phi.clone()),
        direction: y.clone(),
    };
    Ok(op)
}

/// The product operator (x¹,…,xⁿ) ↦ T₁x¹ ⊗ … ⊗ Tₙxⁿ of linear factors,
/// into the tensor codomain with a π norm tag.
pub fn product_of_linear(factors: &[MultilinearOperator]) -> Result<MultilinearOperator> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("product needs at least one factor".into()));
    }
    let mut domain = Vec::with_capacity(factors.len());
    let mut cod_spaces = Vec::with_capacity(factors.len());
    for f in factors {
        if f.arity() != 1 {
            return Err(Error::InvalidInput("product factors must be linear".into()));
        }
        let Codomain::Space(cs) = &f.codomain else {
            return Err(Error::InvalidInput(
                "product factors must map into plain spaces".into(),
            ));
        };
        domain.push(f.domain[0]);
        cod_spaces.push(*cs);
    }
    let codomain = Codomain::Tensor {
        spaces: cod_spaces.clone(),
        norm: CrossnormTag::Pi,
    };
    let mut dims: Vec<usize> = domain.iter().map(|s| s.dim).collect();
    dims.push(codomain.dim());
    let mut coeffs = ArrayD::zeros(IxDyn(&dims));
    let cod_dims: Vec<usize> = cod_spaces.iter().map(|s| s.dim).collect();
    let n = factors.len();
    for (idx, slot) in coeffs.indexed_iter_mut() {
        // Unflatten the codomain index into per-factor indices.
        let mut flat = idx[n];
        let mut js = vec![0usize; n];
        for k in (0..n).rev() {
            js[k] = flat % cod_dims[k];
            flat /= cod_dims[k];
        }
        let mut w = 1.0;
        for k in 0..n {
            w *= factors[k].coefficients[[idx[k], js[k]]];
        }
        *slot = w;
    }
    let mut op = MultilinearOperator::new(domain, codomain, coeffs)?;
    op.structure = OperatorStructure::ProductOfLinear {
        factors: factors.to_vec(),
    };
    Ok(op)
}

/// Precompose each coordinate with a linear map R_i: Z_i → X_i.
pub fn precompose_linear(
    t: &MultilinearOperator,
    rs: &[MultilinearOperator],
) -> Result<MultilinearOperator> {
    if rs.len() != t.arity() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} linear maps", t.arity()),
            got: format!("{}", rs.len()),
        });
    }
    let mut domain = Vec::with_capacity(rs.len());
    let mut coeffs = t.coefficients.clone();
    for (k, r) in rs.iter().enumerate() {
        if r.arity() != 1 {
            return Err(Error::InvalidInput("precompose needs linear maps".into()));
        }
        let Codomain::Space(cs) = &r.codomain else {
            return Err(Error::InvalidInput("precompose maps must land in spaces".into()));
        };
        if *cs != t.domain[k] {
            return Err(Error::ShapeMismatch {
                expected: format!("codomain {:?}", t.domain[k]),
                got: format!("{cs:?}"),
            });
        }
        domain.push(r.domain[0]);
        // evaluate(R, z)[j] = Σ_i z_i R[i, j]: the axis transform is Rᵀ read
        // as (new=z, old=x) ... new[k̂] = Σ_i R[k̂→?]. R has shape (dZ, dX);
        // coefficients of T are contracted along dX with R[z, x].
        coeffs = transform_axis(&coeffs, k, &r.coefficients);
    }
    MultilinearOperator::new(domain, t.codomain.clone(), coeffs)
}

/// Postcompose with a linear map S: Y → W.
pub fn postcompose_linear(
    s: &MultilinearOperator,
    t: &MultilinearOperator,
) -> Result<MultilinearOperator> {
    if s.arity() != 1 {
        return Err(Error::InvalidInput("postcompose needs a linear map".into()));
    }
    if s.domain[0].dim != t.codomain_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("domain dim {}", t.codomain_dim()),
            got: format!("dim {}", s.domain[0].dim),
        });
    }
    let axis = t.arity();
    // S acts on values: out[w] = Σ_y value[y]·S[y, w]; as an axis transform
    // the matrix is Sᵀ with shape (dW, dY).
    let dw = s.codomain_dim();
    let dy = s.domain[0].dim;
    let mut st = ArrayD::zeros(IxDyn(&[dw, dy]));
    for w in 0..dw {
        for y in 0..dy {
            st[[w, y]] = s.coefficients[[y, w]];
        }
    }
    let coeffs = transform_axis(&t.coefficients, axis, &st);
    MultilinearOperator::new(t.domain.clone(), s.codomain.clone(), coeffs)
}

/// Hard cap on vertex products in exact polyhedral operator-norm enumeration.
const MAX_OPERATOR_VERTEX_PRODUCTS: usize = 200_000;

fn polyhedral_vertex_lists(domain: &[SpaceSpec]) -> Result<Option<Vec<Vec<Vector>>>> {
    let mut count: usize = 1;
    for s in domain {
        let c = if s.p.is_one() {
            2 * s.dim
        } else if s.p.is_infinite() {
            if s.dim > 24 {
                return Ok(None);
            }
            1usize << s.dim
        } else {
            return Ok(None);
        };
        count = count.saturating_mul(c);
        if count > MAX_OPERATOR_VERTEX_PRODUCTS {
            return Ok(None);
        }
    }
    Ok(Some(
        domain
            .iter()
            .map(unit_ball_vertices)
            .collect::<Result<_>>()?,
    ))
}

/// Certified two-sided bounds on ‖T‖ = sup ‖T(x¹,…,xⁿ)‖ over the unit balls.
pub fn operator_norm_bounds(t: &MultilinearOperator, budget: usize) -> Result<NormInterval> {
    operator_norm_bounds_seeded(t, budget, &SeededRng::new(0))
}

pub fn operator_norm_bounds_seeded(
    t: &MultilinearOperator,
    budget: usize,
    rng: &SeededRng,
) -> Result<NormInterval> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    if t.is_zero() {
        return NormInterval::new(
            0.0,
            0.0,
            NormCertificate::TrivialZero,
            NormCertificate::TrivialZero,
        );
    }
    let n = t.arity();

    // Exact closed forms: σ_max for linear or scalar bilinear Euclidean maps.
    // The lower certificate carries the attaining arguments (top singular
    // vectors) so downstream witness constructions can reuse the point.
    if n == 1 && t.domain[0].is_euclidean() && t.codomain.is_euclidean() {
        let m = flatten_by_mask(&t.coefficients, 0b01);
        let (u, s, _) = svd(&m)?;
        let arg: Vector = (0..t.domain[0].dim).map(|r| u[(r, 0)]).collect();
        return NormInterval::new(
            s[0],
            s[0],
            NormCertificate::EvaluationPoint {
                functionals: vec![arg],
                value: s[0],
            },
            NormCertificate::Exact {
                method: "svd sigma-max".into(),
            },
        );
    }
    if n == 2 && t.codomain.is_scalar() && t.domain.iter().all(|s| s.is_euclidean()) {
        let m = flatten_by_mask(&t.coefficients, 0b001);
        let (u, s, v) = svd(&m)?;
        let x: Vector = (0..t.domain[0].dim).map(|r| u[(r, 0)]).collect();
        let y: Vector = (0..t.domain[1].dim).map(|r| v[(r, 0)]).collect();
        return NormInterval::new(
            s[0],
            s[0],
            NormCertificate::EvaluationPoint {
                functionals: vec![x, y],
                value: s[0],
            },
            NormCertificate::Exact {
                method: "svd sigma-max".into(),
            },
        );
    }

    // Exact polyhedral route: ‖T(·)‖ is coordinatewise convex, so the sup
    // over a product of polytopes is attained at a vertex product.
    if let Some(vertex_lists) = polyhedral_vertex_lists(&t.domain)? {
        let mut lower = 0.0f64;
        let mut upper = 0.0f64;
        let mut best_point: Vec<Vector> = vertex_lists.iter().map(|l| l[0].clone()).collect();
        let mut scanned = 0usize;
        let mut choice = vec![0usize; n];
        'outer: loop {
            let args: Vec<Vector> = choice
                .iter()
                .enumerate()
                .map(|(k, &i)| vertex_lists[k][i].clone())
                .collect();
            let value = t.evaluate(&args)?;
            let (lo, hi) = t.codomain.norm_bounds(&value, 8)?;
            if lo > lower {
                lower = lo;
                best_point = args;
            }
            upper = upper.max(hi);
            scanned += 1;
            let mut k = 0;
            loop {
                choice[k] += 1;
                if choice[k] < vertex_lists[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
                if k == n {
                    break 'outer;
                }
            }
        }
        return NormInterval::new(
            lower,
            upper,
            NormCertificate::EvaluationPoint {
                functionals: best_point,
                value: lower,
            },
            NormCertificate::VertexEnumeration {
                vertices_scanned: scanned,
            },
        );
    }

    // Lower bound: multistart alternating ascent over the unit balls.
    let restarts = (budget / 8).clamp(2, 64);
    let (best_args, lower) = operator_norm_lower_search(t, restarts, rng)?;

    // Upper bounds.
    let mut upper = f64::INFINITY;
    let mut upper_cert = NormCertificate::Unavailable;
    let all_euclidean_domain = t.domain.iter().all(|s| s.is_euclidean());
    if all_euclidean_domain && t.codomain.is_euclidean() {
        let f = t.frobenius();
        if f < upper {
            upper = f;
            upper_cert = NormCertificate::HilbertSchmidt { frobenius: f };
        }
    }
    {
        let domain_constants: Vec<f64> = t
            .domain
            .iter()
            .map(|s| euclidean_embedding_constant(s.dim, s.p))
            .collect();
        let codomain_constant = t.codomain.euclidean_upper_constant();
        // sup over Euclidean balls of the Euclidean value norm is at most
        // the Frobenius norm of the coefficients.
        let f = t.frobenius();
        let routed = domain_constants.iter().product::<f64>() * codomain_constant * f;
        if routed < upper {
            upper = routed;
            upper_cert = NormCertificate::EmbeddingRoute {
                domain_constants,
                codomain_constant,
                frobenius: f,
            };
        }
    }

    NormInterval::new(
        lower.min(upper),
        upper,
        NormCertificate::EvaluationPoint {
            functionals: best_args,
            value: lower,
        },
        upper_cert,
    )
}

/// Alternating maximization of the codomain-norm lower bound of T(x¹,…,xⁿ)
/// over the product of unit balls. Euclidean coordinates get exact singular
/// vector steps; scalar codomains get exact dual-ball steps; other
/// coordinates fall back to small projected-gradient ascents.
fn operator_norm_lower_search(
    t: &MultilinearOperator,
    restarts: usize,
    rng: &SeededRng,
) -> Result<(Vec<Vector>, f64)> {
    let n = t.arity();
    let mut best_val = 0.0f64;
    let mut best_args: Vec<Vector> = t
        .domain
        .iter()
        .map(|s| {
            let mut v = vec![0.0; s.dim];
            v[0] = 1.0;
            v
        })
        .collect();

    for r in 0..restarts {
        let mut stream = rng.stream(0x0b5e_a4c4 ^ r as u64);
        let mut args: Vec<Vector> = t
            .domain
            .iter()
            .map(|s| {
                let mut v: Vector = (0..s.dim)
                    .map(|_| rand::Rng::sample::<f64, _>(&mut stream, rand_distr::StandardNormal))
                    .collect();
                let nv = norm_unchecked(s.p, &v);
                if nv > 0.0 {
                    for x in &mut v {
                        *x /= nv;
                    }
                } else {
                    v[0] = 1.0;
                }
                v
            })
            .collect();

        let mut val = t.codomain.norm_bounds(&t.evaluate(&args)?, 4)?.0;
        for _sweep in 0..40 {
            let mut improved = false;
            for i in 0..n {
                let cand = improve_coordinate(t, &args, i)?;
                if let Some(better) = cand {
                    args[i] = better;
                    let v = t.codomain.norm_bounds(&t.evaluate(&args)?, 4)?.0;
                    if v > val + 1e-13 * (1.0 + val) {
                        improved = true;
                    }
                    if v > val {
                        val = v;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if val > best_val {
            best_val = val;
            best_args = args;
        }
    }
    Ok((best_args, best_val))
}

/// One exact or approximate coordinate step; returns a replacement for
/// argument `i` if a better one was found.
fn improve_coordinate(
    t: &MultilinearOperator,
    args: &[Vector],
    i: usize,
) -> Result<Option<Vector>> {
    let space = &t.domain[i];
    let di = space.dim;
    let dy = t.codomain_dim();
    // The linear map x_i ↦ T(..., x_i, ...) as a dy × di matrix.
    let mut l = ArrayD::zeros(IxDyn(&[dy, di]));
    for k in 0..di {
        let mut probe = args.to_vec();
        probe[i] = vec![0.0; di];
        probe[i][k] = 1.0;
        let col = t.evaluate(&probe)?;
        for (y, &c) in col.iter().enumerate() {
            l[[y, k]] = c;
        }
    }

    if t.codomain.is_scalar() {
        // Exact: maximize |⟨l, x⟩| over the ball.
        let row: Vector = (0..di).map(|k| l[[0, k]]).collect();
        let (x, _) = linear_form_maximizer(space, &row)?;
        return Ok(Some(x));
    }
    if space.is_euclidean() && t.codomain.is_euclidean() {
        // Exact: top right singular vector of L.
        let m = flatten_by_mask(&l, 0b01);
        let (_, _, v) = svd(&m)?;
        let x: Vector = (0..di).map(|k| v[(k, 0)]).collect();
        return Ok(Some(x));
    }
    if space.p.is_one() || space.p.is_infinite() {
        // Exact over the polytope: scan vertices.
        let mut best: Option<(Vector, f64)> = None;
        for v in unit_ball_vertices(space)? {
            let mut probe = args.to_vec();
            probe[i] = v.clone();
            let lo = t.codomain.norm_bounds(&t.evaluate(&probe)?, 4)?.0;
            match &best {
                Some((_, b)) if *b >= lo => {}
                _ => best = Some((v, lo)),
            }
        }
        return Ok(best.map(|(v, _)| v));
    }
    // Fallback: a short projected-gradient ascent on the l_p sphere.
    let mut x = args[i].clone();
    let mut fx = {
        let mut probe = args.to_vec();
        probe[i] = x.clone();
        t.codomain.norm_bounds(&t.evaluate(&probe)?, 4)?.0
    };
    for _ in 0..20 {
        let mut grad = vec![0.0; di];
        for k in 0..di {
            for sign in [1.0, -1.0] {
                let mut probe_x = x.clone();
                probe_x[k] += sign * 1e-6;
                let nrm = norm_unchecked(space.p, &probe_x);
                if nrm > 0.0 {
                    for entry in &mut probe_x {
                        *entry /= nrm;
                    }
                }
                let mut probe = args.to_vec();
                probe[i] = probe_x;
                let f = t.codomain.norm_bounds(&t.evaluate(&probe)?, 4)?.0;
                grad[k] += sign * f / (2.0 * 1e-6);
            }
        }
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn < 1e-12 {
            break;
        }
        let mut alpha = 0.5 / gn;
        let mut improved = false;
        for _ in 0..20 {
            let mut cand: Vector = x.iter().zip(&grad).map(|(a, g)| a + alpha * g).collect();
            let nrm = norm_unchecked(space.p, &cand);
            if nrm > 0.0 {
                for entry in &mut cand {
                    *entry /= nrm;
                }
            }
            let mut probe = args.to_vec();
            probe[i] = cand.clone();
            let f = t.codomain.norm_bounds(&t.evaluate(&probe)?, 4)?.0;
            if f > fx + 1e-16 {
                x = cand;
                fx = f;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(Some(x))
}

/// Inner-product operator G(x, y) = Σ x_k y_k on a pair of d-dimensional
/// spaces; the running example of the certification routes.
pub fn inner_product_operator(space: SpaceSpec) -> Result<MultilinearOperator> {
    let d = space.dim;
    let mut coeffs = ArrayD::zeros(IxDyn(&[d, d, 1]));
    for k in 0..d {
        coeffs[[k, k, 0]] = 1.0;
    }
    MultilinearOperator::new(vec![space, space], Codomain::scalar(), coeffs)
}

/// Identity as a linear operator on `space`.
pub fn identity_operator(space: SpaceSpec) -> Result<MultilinearOperator> {
    let d = space.dim;
    let mut coeffs = ArrayD::zeros(IxDyn(&[d, d]));
    for k in 0..d {
        coeffs[[k, k]] = 1.0;
    }
    MultilinearOperator::new(vec![space], Codomain::Space(space), coeffs)
}

/// A linear operator from a dense matrix (rows = domain, cols = codomain).
pub fn linear_operator(
    domain: SpaceSpec,
    codomain: SpaceSpec,
    matrix: ArrayD<f64>,
) -> Result<MultilinearOperator> {
    MultilinearOperator::new(vec![domain], Codomain::Space(codomain), matrix)
}
