//! Tensor products of finite-dimensional ℓ_p spaces: dense coefficient
//! tensors, decomposable points, and certified two-sided bounds for the
//! projective norm π, the injective norm ε and the Hilbert crossnorm.
//!
//! Every bound is an interval whose sides carry independent certificates:
//! a lower bound names the evaluation point or dual functional that attains
//! it, an upper bound names the decomposition or closed-form route that
//! proves it. Exact small cases (n = 2 with Euclidean factors, polyhedral
//! vertex enumeration) collapse the interval to a point.

use ndarray::{Array2, ArrayD, IxDyn};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::numerics::{multistart_maximize, svd, SearchDomain, SeededRng, Surface};
use crate::spaces::{
    dual_space, euclidean_embedding_constant, linear_form_maximizer, norm, norm_unchecked,
    unit_ball_vertices, Exponent, SpaceSpec, Vector,
};
use crate::{Error, Result};

/// Slack allowed between a certified lower and upper bound before the
/// interval is declared inconsistent.
pub const INTERVAL_SLACK: f64 = 1e-9;

/// Hard cap on vertex products in exact polyhedral enumeration.
const MAX_VERTEX_PRODUCTS: usize = 100_000;

/// Element of X₁⊗…⊗Xₙ as a dense coefficient array.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    pub factor_spaces: Vec<SpaceSpec>,
    pub coefficients: ArrayD<f64>,
}

impl DenseTensor {
    pub fn new(factor_spaces: Vec<SpaceSpec>, coefficients: ArrayD<f64>) -> Result<Self> {
        if factor_spaces.is_empty() {
            return Err(Error::InvalidInput("tensor needs at least one factor".into()));
        }
        let dims: Vec<usize> = factor_spaces.iter().map(|s| s.dim).collect();
        if coefficients.shape() != dims.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: format!("{dims:?}"),
                got: format!("{:?}", coefficients.shape()),
            });
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tensor coefficients".into()));
        }
        Ok(Self {
            factor_spaces,
            coefficients,
        })
    }

    pub fn zeros(factor_spaces: Vec<SpaceSpec>) -> Result<Self> {
        let dims: Vec<usize> = factor_spaces.iter().map(|s| s.dim).collect();
        Self::new(factor_spaces, ArrayD::zeros(IxDyn(&dims)))
    }

    pub fn order(&self) -> usize {
        self.factor_spaces.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factor_spaces.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&x| x == 0.0)
    }

    pub fn frobenius(&self) -> f64 {
        self.coefficients.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.coefficients.iter().map(|x| x.abs()).sum()
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.factor_spaces != other.factor_spaces {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.factor_spaces),
                got: format!("{:?}", other.factor_spaces),
            });
        }
        DenseTensor::new(
            self.factor_spaces.clone(),
            &self.coefficients - &other.coefficients,
        )
    }

    /// Coefficients flattened in row-major order.
    pub fn flat(&self) -> Vec<f64> {
        self.coefficients.iter().copied().collect()
    }
}

impl Serialize for DenseTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("DenseTensor", 2)?;
        st.serialize_field("spaces", &self.factor_spaces)?;
        st.serialize_field("coeffs", &coeffs_to_value(&self.coefficients))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DenseTensor {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            spaces: Vec<SpaceSpec>,
            coeffs: Value,
        }
        let raw = Raw::deserialize(deserializer)?;
        let dims: Vec<usize> = raw.spaces.iter().map(|s| s.dim).collect();
        let coefficients = value_to_coeffs(&raw.coeffs, &dims).map_err(serde::de::Error::custom)?;
        DenseTensor::new(raw.spaces, coefficients).map_err(serde::de::Error::custom)
    }
}

/// Nested-array JSON encoding of a dense coefficient array.
pub fn coeffs_to_value(arr: &ArrayD<f64>) -> Value {
    fn build(arr: &ArrayD<f64>, prefix: &mut Vec<usize>, depth: usize) -> Value {
        if depth == arr.ndim() {
            let idx = IxDyn(prefix);
            return serde_json::json!(arr[idx]);
        }
        let mut items = Vec::with_capacity(arr.shape()[depth]);
        for i in 0..arr.shape()[depth] {
            prefix.push(i);
            items.push(build(arr, prefix, depth + 1));
            prefix.pop();
        }
        Value::Array(items)
    }
    build(arr, &mut Vec::new(), 0)
}

/// Parse nested JSON arrays into a dense array of the given shape.
pub fn value_to_coeffs(v: &Value, dims: &[usize]) -> Result<ArrayD<f64>> {
    fn collect(v: &Value, dims: &[usize], out: &mut Vec<f64>) -> Result<()> {
        match dims.split_first() {
            None => match v.as_f64() {
                Some(x) => {
                    out.push(x);
                    Ok(())
                }
                None => Err(Error::InvalidInput(format!("expected number, got {v}"))),
            },
            Some((&d, rest)) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput(format!("expected array, got {v}")))?;
                if arr.len() != d {
                    return Err(Error::ShapeMismatch {
                        expected: format!("array of length {d}"),
                        got: format!("length {}", arr.len()),
                    });
                }
                for item in arr {
                    collect(item, rest, out)?;
                }
                Ok(())
            }
        }
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    collect(v, dims, &mut out)?;
    ArrayD::from_shape_vec(IxDyn(dims), out)
        .map_err(|e| Error::InvalidInput(format!("bad coefficient shape: {e}")))
}

/// A decomposable point x¹⊗…⊗xⁿ, stored by its factors.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecomposablePoint {
    pub factors: Vec<Vector>,
}

impl DecomposablePoint {
    pub fn new(factors: Vec<Vector>) -> Self {
        Self { factors }
    }

    pub fn check(&self, spaces: &[SpaceSpec]) -> Result<()> {
        if self.factors.len() != spaces.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} factors", spaces.len()),
                got: format!("{} factors", self.factors.len()),
            });
        }
        for (f, s) in self.factors.iter().zip(spaces) {
            s.check_len(f)?;
        }
        Ok(())
    }

    pub fn zero(spaces: &[SpaceSpec]) -> Self {
        Self {
            factors: spaces.iter().map(|s| vec![0.0; s.dim]).collect(),
        }
    }
}

/// Outer product of the factors of `p` as a dense tensor over `spaces`.
pub fn to_dense(spaces: &[SpaceSpec], p: &DecomposablePoint) -> Result<DenseTensor> {
    p.check(spaces)?;
    let coeffs = outer_product(&p.factors);
    DenseTensor::new(spaces.to_vec(), coeffs)
}

pub(crate) fn outer_product(factors: &[Vector]) -> ArrayD<f64> {
    let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    ArrayD::from_shape_fn(IxDyn(&dims), |idx| {
        factors
            .iter()
            .enumerate()
            .map(|(k, f)| f[idx[k]])
            .product()
    })
}

/// Full contraction ⟨⊗ v_k, u⟩.
pub(crate) fn contract_all(coeffs: &ArrayD<f64>, vectors: &[&[f64]]) -> f64 {
    let mut total = 0.0;
    for (idx, &c) in coeffs.indexed_iter() {
        let mut w = c;
        for (k, v) in vectors.iter().enumerate() {
            w *= v[idx[k]];
        }
        total += w;
    }
    total
}

/// Contraction of all modes except `skip`; returns a vector over mode `skip`.
pub(crate) fn contract_all_except(
    coeffs: &ArrayD<f64>,
    vectors: &[Vector],
    skip: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.shape()[skip]];
    for (idx, &c) in coeffs.indexed_iter() {
        let mut w = c;
        for (k, v) in vectors.iter().enumerate() {
            if k != skip {
                w *= v[idx[k]];
            }
        }
        out[idx[skip]] += w;
    }
    out
}

/// Matricization of `coeffs` with modes in `row_mask` as rows.
pub(crate) fn flatten_by_mask(coeffs: &ArrayD<f64>, row_mask: u32) -> Array2<f64> {
    let dims = coeffs.shape();
    let n = dims.len();
    let rows: usize = (0..n)
        .filter(|k| row_mask >> k & 1 == 1)
        .map(|k| dims[k])
        .product();
    let cols: usize = (0..n)
        .filter(|k| row_mask >> k & 1 == 0)
        .map(|k| dims[k])
        .product();
    let mut out = Array2::zeros((rows, cols));
    for (idx, &c) in coeffs.indexed_iter() {
        let mut r = 0;
        let mut col = 0;
        for k in 0..n {
            if row_mask >> k & 1 == 1 {
                r = r * dims[k] + idx[k];
            } else {
                col = col * dims[k] + idx[k];
            }
        }
        out[(r, col)] = c;
    }
    out
}

/// Provenance record for one side of a norm interval.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "route", rename_all = "kebab-case")]
pub enum NormCertificate {
    /// Closed-form exact value (svd nuclear/spectral, vertex enumeration, single factor).
    Exact { method: String },
    /// Lower bound attained at an explicit evaluation point (dual functionals).
    EvaluationPoint { functionals: Vec<Vector>, value: f64 },
    /// Lower bound from a feasible dual functional: pairing / certified functional norm.
    DualWitness {
        functional: Vec<f64>,
        functional_norm_upper: f64,
        pairing: f64,
    },
    /// Upper bound from an explicit decomposition plus an ℓ1 closure of the residual.
    Decomposition {
        terms: Vec<Vec<Vector>>,
        term_costs: Vec<f64>,
        residual_l1: f64,
    },
    /// Upper bound σ_max(flattening) · ∏ embedding constants.
    Flattening {
        row_mask: u32,
        sigma_max: f64,
        constants: Vec<f64>,
    },
    /// Upper bound from the ℓ1 norm of the coefficients (basis decomposition).
    CoefficientL1,
    /// Upper bound from the telescope decomposition of a difference of
    /// decomposable points.
    Telescope { term_costs: Vec<f64> },
    /// Operator-norm upper bound by the Frobenius norm of the coefficients
    /// (Cauchy-Schwarz over orthonormal bases).
    HilbertSchmidt { frobenius: f64 },
    /// Operator-norm upper bound routed through Euclidean balls:
    /// ∏ domain constants · codomain constant · Frobenius.
    EmbeddingRoute {
        domain_constants: Vec<f64>,
        codomain_constant: f64,
        frobenius: f64,
    },
    /// Exact value by enumeration of vertex products of polyhedral balls.
    VertexEnumeration { vertices_scanned: usize },
    /// The zero tensor.
    TrivialZero,
    /// No certified route applies; the bound is the trivial one.
    Unavailable,
}

/// A certified two-sided bound.
#[derive(Debug, Clone, Serialize)]
pub struct NormInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_certificate: NormCertificate,
    pub upper_certificate: NormCertificate,
}

impl NormInterval {
    pub fn new(
        lower: f64,
        upper: f64,
        lower_certificate: NormCertificate,
        upper_certificate: NormCertificate,
    ) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::NonFinite("norm interval".into()));
        }
        if upper.is_finite() && lower > upper + INTERVAL_SLACK * (1.0 + upper) {
            return Err(Error::Inconsistency(format!(
                "norm interval lower {lower} exceeds upper {upper}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            lower_certificate,
            upper_certificate,
        })
    }

    pub fn exact(value: f64, method: &str) -> Result<Self> {
        Self::new(
            value,
            value,
            NormCertificate::Exact {
                method: method.into(),
            },
            NormCertificate::Exact {
                method: method.into(),
            },
        )
    }

    fn zero() -> Self {
        Self {
            lower: 0.0,
            upper: 0.0,
            lower_certificate: NormCertificate::TrivialZero,
            upper_certificate: NormCertificate::TrivialZero,
        }
    }
}

/// Hilbert crossnorm on a tensor product of Euclidean factors: the Frobenius
/// norm of the coefficients in orthonormal coordinates.
pub fn hilbert_crossnorm(u: &DenseTensor) -> Result<f64> {
    if let Some(bad) = u.factor_spaces.iter().find(|s| !s.is_euclidean()) {
        return Err(Error::Unsupported(format!(
            "hilbert crossnorm needs Euclidean factors, got p = {}",
            bad.p.as_f64()
        )));
    }
    Ok(u.frobenius())
}

/// Embedding constant for functionals on a factor with exponent q:
/// dual vectors satisfy ‖x*‖₂ ≤ max(1, d^{1/q − 1/2}).
fn dual_ball_euclidean_constant(space: &SpaceSpec) -> f64 {
    euclidean_embedding_constant(space.dim, space.p.dual())
}

fn sigma_max(m: &Array2<f64>) -> Result<f64> {
    let (_, s, _) = svd(m)?;
    Ok(s[0])
}

fn nuclear_norm(m: &Array2<f64>) -> Result<f64> {
    let (_, s, _) = svd(m)?;
    Ok(s.iter().sum())
}

/// Upper bound on ε(u) from the best flattening route, with its certificate.
fn injective_upper_flattening(u: &DenseTensor) -> Result<(f64, NormCertificate)> {
    let n = u.order();
    let constants: Vec<f64> = u
        .factor_spaces
        .iter()
        .map(dual_ball_euclidean_constant)
        .collect();
    let prod: f64 = constants.iter().product();
    let mut best = f64::INFINITY;
    let mut best_mask = 1u32;
    // Masks containing mode 0 cover every split once (a split and its
    // complement share singular values).
    for mask in 1u32..(1 << n) {
        if n > 1 && (mask & 1 == 0 || mask == (1 << n) - 1) {
            continue;
        }
        let m = flatten_by_mask(&u.coefficients, mask);
        let s = sigma_max(&m)?;
        if s < best {
            best = s;
            best_mask = mask;
        }
        if n == 1 {
            break;
        }
    }
    Ok((
        prod * best,
        NormCertificate::Flattening {
            row_mask: best_mask,
            sigma_max: best,
            constants,
        },
    ))
}

/// Exact ε by enumerating vertex products of the dual balls, when all duals
/// are polyhedral and small.
fn injective_exact_polyhedral(u: &DenseTensor) -> Result<Option<f64>> {
    let duals: Vec<SpaceSpec> = u.factor_spaces.iter().map(dual_space).collect();
    let mut count: usize = 1;
    for d in &duals {
        let c = if d.p.is_one() {
            2 * d.dim
        } else if d.p.is_infinite() {
            if d.dim > 24 {
                return Ok(None);
            }
            1usize << d.dim
        } else {
            return Ok(None);
        };
        count = count.saturating_mul(c);
        if count > MAX_VERTEX_PRODUCTS {
            return Ok(None);
        }
    }
    let vertex_lists: Vec<Vec<Vector>> = duals
        .iter()
        .map(unit_ball_vertices)
        .collect::<Result<_>>()?;
    let mut best = 0.0f64;
    let mut choice = vec![0usize; duals.len()];
    loop {
        let vecs: Vec<&[f64]> = choice
            .iter()
            .enumerate()
            .map(|(k, &i)| vertex_lists[k][i].as_slice())
            .collect();
        let val = contract_all(&u.coefficients, &vecs).abs();
        best = best.max(val);
        // Odometer increment.
        let mut k = 0;
        loop {
            choice[k] += 1;
            if choice[k] < vertex_lists[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
            if k == choice.len() {
                return Ok(Some(best));
            }
        }
    }
}

/// Alternating maximization of |⟨⊗x*, u⟩| over the dual unit balls: each
/// step fixes all but one functional and solves the induced linear form
/// exactly via the dual-ball argmax. Returns the functionals and the value.
fn injective_lower_alternating(
    u: &DenseTensor,
    restarts: usize,
    rng: &SeededRng,
) -> Result<(Vec<Vector>, f64)> {
    let duals: Vec<SpaceSpec> = u.factor_spaces.iter().map(dual_space).collect();
    let n = u.order();
    let mut best_val = 0.0f64;
    let mut best_fs: Vec<Vector> = duals
        .iter()
        .map(|d| {
            let mut v = vec![0.0; d.dim];
            v[0] = 1.0;
            v
        })
        .collect();

    for r in 0..restarts.max(1) {
        let mut stream = rng.stream(r as u64);
        let mut fs: Vec<Vector> = duals
            .iter()
            .map(|d| {
                let mut v: Vector = (0..d.dim)
                    .map(|_| rand::Rng::sample::<f64, _>(&mut stream, rand_distr::StandardNormal))
                    .collect();
                let nv = norm_unchecked(d.p, &v);
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
        let mut val = 0.0f64;
        for _sweep in 0..40 {
            let mut improved = false;
            for i in 0..n {
                let c = contract_all_except(&u.coefficients, &fs, i);
                let (xi, v) = linear_form_maximizer(&duals[i], &c)?;
                fs[i] = xi;
                if v > val + 1e-14 * (1.0 + val) {
                    improved = true;
                }
                val = v;
            }
            if !improved {
                break;
            }
        }
        if val > best_val {
            best_val = val;
            best_fs = fs;
        }
    }
    Ok((best_fs, best_val))
}

/// Certified two-sided bounds on the injective norm ε(u).
pub fn injective_norm_bounds(u: &DenseTensor, budget: usize) -> Result<NormInterval> {
    injective_norm_bounds_seeded(u, budget, &SeededRng::new(0))
}

/// As [`injective_norm_bounds`] with an explicit seed for the search routes.
pub fn injective_norm_bounds_seeded(
    u: &DenseTensor,
    budget: usize,
    rng: &SeededRng,
) -> Result<NormInterval> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    if u.is_zero() {
        return Ok(NormInterval::zero());
    }
    let n = u.order();

    if n == 1 {
        // ε on a single factor is the norm of the vector itself.
        let v = u.flat();
        let value = norm(&u.factor_spaces[0], &v)?;
        return NormInterval::exact(value, "single-factor norm");
    }

    if n == 2 && u.factor_spaces[0].is_euclidean() && u.factor_spaces[1].is_euclidean() {
        let m = flatten_by_mask(&u.coefficients, 0b01);
        let value = sigma_max(&m)?;
        return NormInterval::exact(value, "svd sigma-max");
    }

    if let Some(value) = injective_exact_polyhedral(u)? {
        return NormInterval::exact(value, "dual vertex enumeration");
    }

    let restarts = budget.clamp(1, 64);
    let (fs, lower) = injective_lower_alternating(u, restarts, rng)?;
    let (upper, upper_cert) = injective_upper_flattening(u)?;
    NormInterval::new(
        lower.min(upper),
        upper,
        NormCertificate::EvaluationPoint {
            functionals: fs,
            value: lower,
        },
        upper_cert,
    )
}

/// Best rank-one fit of `res` (Euclidean sense) by alternating contractions;
/// returns unit factors and the signed weight.
pub(crate) fn best_rank_one(
    res: &ArrayD<f64>,
    tries: usize,
    rng: &SeededRng,
    salt: u64,
) -> Option<(Vec<Vector>, f64)> {
    let dims: Vec<usize> = res.shape().to_vec();
    let n = dims.len();
    let fro = res.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro == 0.0 {
        return None;
    }
    let mut best: Option<(Vec<Vector>, f64)> = None;

    // Deterministic start from the top singular pair of the first-mode
    // flattening; recovers the svd decomposition exactly at n = 2.
    let mut starts: Vec<Vec<Vector>> = Vec::new();
    if let Ok((uu, _, vv)) = svd(&flatten_by_mask(res, 0b01)) {
        let u0: Vector = (0..dims[0]).map(|r| uu[(r, 0)]).collect();
        let rest: Vector = (0..vv.nrows()).map(|r| vv[(r, 0)]).collect();
        if n == 2 {
            starts.push(vec![u0, rest]);
        } else {
            // Spread the flattened right factor over the remaining modes by
            // marginal sums; crude but deterministic.
            let mut factors = vec![u0];
            let tail_dims = &dims[1..];
            let mut carried = rest;
            for (k, &d) in tail_dims.iter().enumerate() {
                if k + 1 == tail_dims.len() {
                    factors.push(carried.clone());
                    break;
                }
                let tail: usize = tail_dims[k + 1..].iter().product();
                let mut v = vec![0.0; d];
                for i in 0..d {
                    for t in 0..tail {
                        v[i] += carried[i * tail + t];
                    }
                }
                factors.push(v);
                let mut next = vec![0.0; tail];
                for (t, slot) in next.iter_mut().enumerate() {
                    for i in 0..d {
                        *slot += carried[i * tail + t];
                    }
                }
                carried = next;
            }
            starts.push(factors);
        }
    }
    for t in 0..tries {
        let mut stream = rng.stream(salt.wrapping_add(t as u64));
        starts.push(
            dims.iter()
                .map(|&d| {
                    (0..d)
                        .map(|_| {
                            rand::Rng::sample::<f64, _>(&mut stream, rand_distr::StandardNormal)
                        })
                        .collect()
                })
                .collect(),
        );
    }

    for mut factors in starts {
        for f in &mut factors {
            let nf = norm_unchecked(Exponent::TWO, f);
            if nf > 0.0 {
                for x in f.iter_mut() {
                    *x /= nf;
                }
            } else {
                f[0] = 1.0;
            }
        }
        let mut lambda = 0.0f64;
        for _sweep in 0..60 {
            let mut new_lambda = lambda;
            let mut dead = false;
            for i in 0..n {
                let c = contract_all_except(res, &factors, i);
                let nc = norm_unchecked(Exponent::TWO, &c);
                if nc < 1e-300 {
                    dead = true;
                    break;
                }
                factors[i] = c.iter().map(|x| x / nc).collect();
                new_lambda = nc;
            }
            if dead {
                break;
            }
            if (new_lambda - lambda).abs() <= 1e-13 * (1.0 + new_lambda.abs()) {
                lambda = new_lambda;
                break;
            }
            lambda = new_lambda;
        }
        let _ = lambda;
        let refs: Vec<&[f64]> = factors.iter().map(|f| f.as_slice()).collect();
        let signed = contract_all(res, &refs);
        match &best {
            Some((_, b)) if b.abs() >= signed.abs() => {}
            _ => best = Some((factors, signed)),
        }
    }
    best.filter(|(_, l)| l.abs() > 1e-14 * fro)
}

fn subtract_rank_one(res: &mut ArrayD<f64>, factors: &[Vector], weight: f64) {
    for (idx, c) in res.indexed_iter_mut() {
        let mut w = weight;
        for (k, f) in factors.iter().enumerate() {
            w *= f[idx[k]];
        }
        *c -= w;
    }
}

fn add_rank_one(res: &mut ArrayD<f64>, factors: &[Vector], weight: f64) {
    for (idx, c) in res.indexed_iter_mut() {
        let mut w = weight;
        for (k, f) in factors.iter().enumerate() {
            w *= f[idx[k]];
        }
        *c += w;
    }
}

/// Fixed-rank refinement: cyclically re-fit each term against the residual
/// with that term added back. Shrinking the residual shrinks the ℓ1
/// closure of the decomposition bound.
fn refine_decomposition(
    residual: &mut ArrayD<f64>,
    terms: &mut [(Vec<Vector>, f64)],
    rng: &SeededRng,
    passes: usize,
) {
    for pass in 0..passes {
        for k in 0..terms.len() {
            let (factors, weight) = terms[k].clone();
            add_rank_one(residual, &factors, weight);
            let salt = 9000 + (pass * terms.len() + k) as u64;
            if let Some((new_factors, new_weight)) = best_rank_one(residual, 1, rng, salt) {
                subtract_rank_one(residual, &new_factors, new_weight);
                terms[k] = (new_factors, new_weight);
            } else {
                subtract_rank_one(residual, &factors, weight);
                terms[k] = (factors, weight);
            }
        }
    }
}

/// Greedy rank-one peeling: the decomposition upper bound Σ|λ_k|·∏‖v_k‖_p
/// plus the ℓ1 closure of whatever residual remains, minimized over the
/// peel depth.
fn projective_upper_peeling(
    u: &DenseTensor,
    budget: usize,
    rng: &SeededRng,
) -> Result<(f64, NormCertificate)> {
    let rank_cap = 2 * u.dims().iter().max().copied().unwrap_or(1);
    let tries = (budget / 40).clamp(2, 8);
    let term_cost = |factors: &[Vector], weight: f64| -> f64 {
        factors
            .iter()
            .zip(&u.factor_spaces)
            .map(|(f, s)| norm_unchecked(s.p, f))
            .product::<f64>()
            * weight.abs()
    };
    let total_of = |terms: &[(Vec<Vector>, f64)], residual: &ArrayD<f64>| -> f64 {
        terms.iter().map(|(f, w)| term_cost(f, *w)).sum::<f64>()
            + residual.iter().map(|x| x.abs()).sum::<f64>()
    };

    let mut residual = u.coefficients.clone();
    let mut terms: Vec<(Vec<Vector>, f64)> = Vec::new();
    let mut best_total = u.l1();
    let mut best_depth = 0usize;
    for r in 0..rank_cap {
        let Some((factors, weight)) = best_rank_one(&residual, tries, rng, 1000 + r as u64) else {
            break;
        };
        subtract_rank_one(&mut residual, &factors, weight);
        terms.push((factors, weight));
        let total = total_of(&terms, &residual);
        if total < best_total {
            best_total = total;
            best_depth = terms.len();
        }
        if residual.iter().map(|x| x.abs()).sum::<f64>() <= 1e-14 * (1.0 + u.l1()) {
            break;
        }
    }

    // Fixed-rank refinement at the best depth.
    terms.truncate(best_depth);
    let mut residual = u.coefficients.clone();
    for (factors, weight) in &terms {
        subtract_rank_one(&mut residual, factors, *weight);
    }
    if !terms.is_empty() {
        let mut refined = terms.clone();
        let mut refined_residual = residual.clone();
        refine_decomposition(&mut refined_residual, &mut refined, rng, 2);
        if total_of(&refined, &refined_residual) < total_of(&terms, &residual) {
            terms = refined;
            residual = refined_residual;
        }
    }

    let term_costs: Vec<f64> = terms.iter().map(|(f, w)| term_cost(f, *w)).collect();
    let residual_l1: f64 = residual.iter().map(|x| x.abs()).sum();
    let total = term_costs.iter().sum::<f64>() + residual_l1;
    // Certificate terms reproduce the tensor exactly: weights folded into
    // the first factor of each term.
    let cert_terms: Vec<Vec<Vector>> = terms
        .iter()
        .map(|(factors, weight)| {
            let mut stored = factors.clone();
            for x in stored[0].iter_mut() {
                *x *= weight;
            }
            stored
        })
        .collect();
    Ok((
        total,
        NormCertificate::Decomposition {
            terms: cert_terms,
            term_costs,
            residual_l1,
        },
    ))
}

/// Cheap certified upper bound on ‖φ‖_{L(X₁,…,Xₙ)} for a functional tensor
/// (flattening route only; no search). Used inside the dual-witness search.
fn functional_norm_upper_cheap(spaces: &[SpaceSpec], phi: &ArrayD<f64>) -> Result<f64> {
    // Arguments are bounded in the primal balls: the relevant embedding
    // constant per factor is max(1, d^{1/2 - 1/p}).
    let constants: Vec<f64> = spaces
        .iter()
        .map(|s| euclidean_embedding_constant(s.dim, s.p))
        .collect();
    let n = spaces.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        if n > 1 && (mask & 1 == 0 || mask == (1 << n) - 1) {
            continue;
        }
        let m = flatten_by_mask(phi, mask);
        best = best.min(sigma_max(&m)?);
        if n == 1 {
            best = best.min(norm_unchecked(Exponent::TWO, &phi.iter().copied().collect::<Vec<_>>()));
            break;
        }
    }
    Ok(constants.iter().product::<f64>() * best)
}

/// Certified upper bound on ‖φ‖_{L(X₁,…,Xₙ)} using the strongest available
/// route: ‖φ‖ equals ε(φ) read in the dual spaces, so the injective
/// machinery (vertex enumeration, σ_max, flattenings) applies directly.
pub(crate) fn functional_norm_upper(spaces: &[SpaceSpec], phi: &ArrayD<f64>) -> Result<f64> {
    let duals: Vec<SpaceSpec> = spaces.iter().map(dual_space).collect();
    let as_tensor = DenseTensor::new(duals, phi.clone())?;
    let interval = injective_norm_bounds_seeded(&as_tensor, 1, &SeededRng::new(0))?;
    Ok(interval.upper)
}

/// Lower bound on π(u) by duality: any functional φ with a certified norm
/// bound gives π(u) ≥ |⟨φ, u⟩| / ‖φ‖_ub.
fn projective_lower_duality(
    u: &DenseTensor,
    budget: usize,
    rng: &SeededRng,
) -> Result<(f64, NormCertificate)> {
    let mut best = (0.0f64, NormCertificate::Unavailable);
    let mut consider = |phi: &ArrayD<f64>| -> Result<()> {
        let ub = functional_norm_upper(&u.factor_spaces, phi)?;
        if ub <= 0.0 {
            return Ok(());
        }
        let pairing: f64 = phi
            .iter()
            .zip(u.coefficients.iter())
            .map(|(a, b)| a * b)
            .sum();
        let value = pairing.abs() / ub;
        if value > best.0 {
            best = (
                value,
                NormCertificate::DualWitness {
                    functional: phi.iter().copied().collect(),
                    functional_norm_upper: ub,
                    pairing,
                },
            );
        }
        Ok(())
    };

    // Candidate: u itself.
    consider(&u.coefficients)?;
    // Candidate: the nuclear-duality functional of the first-mode flattening.
    let m = flatten_by_mask(&u.coefficients, 0b01);
    if let Ok((uu, _, vv)) = svd(&m) {
        let k = uu.ncols().min(vv.ncols());
        let mut w = Array2::zeros((m.nrows(), m.ncols()));
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                for c in 0..k {
                    w[(i, j)] += uu[(i, c)] * vv[(j, c)];
                }
            }
        }
        let phi = w
            .into_shape_with_order(IxDyn(u.coefficients.shape()))
            .unwrap();
        consider(&phi)?;
    }
    // Multistart over functionals on the Frobenius sphere, scored by the
    // cheap flattening norm bound.
    let total = u.total_dim();
    let restarts = (budget / 50).clamp(1, 8);
    let shape = u.coefficients.shape().to_vec();
    let coeffs = u.coefficients.clone();
    let spaces = u.factor_spaces.clone();
    let objective = move |x: &[f64]| {
        let phi = ArrayD::from_shape_vec(IxDyn(&shape), x.to_vec()).unwrap();
        let ub = match functional_norm_upper_cheap(&spaces, &phi) {
            Ok(v) => v,
            Err(_) => return 0.0,
        };
        if ub <= 1e-300 {
            return 0.0;
        }
        let pairing: f64 = phi.iter().zip(coeffs.iter()).map(|(a, b)| a * b).sum();
        pairing.abs() / ub
    };
    let domain = SearchDomain {
        blocks: vec![crate::numerics::Block {
            dim: total,
            p: 2.0,
            surface: Surface::Sphere,
        }],
    };
    if let Ok((point, _)) = multistart_maximize(&objective, &domain, restarts, rng) {
        let phi = ArrayD::from_shape_vec(IxDyn(u.coefficients.shape()), point).unwrap();
        consider(&phi)?;
    }
    Ok(best)
}

/// Certified two-sided bounds on the projective norm π(u).
pub fn projective_norm_bounds(u: &DenseTensor, budget: usize) -> Result<NormInterval> {
    projective_norm_bounds_seeded(u, budget, &SeededRng::new(0))
}

/// As [`projective_norm_bounds`] with an explicit seed for the search routes.
pub fn projective_norm_bounds_seeded(
    u: &DenseTensor,
    budget: usize,
    rng: &SeededRng,
) -> Result<NormInterval> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    if u.is_zero() {
        return Ok(NormInterval::zero());
    }
    let n = u.order();

    if n == 1 {
        let v = u.flat();
        let value = norm(&u.factor_spaces[0], &v)?;
        return NormInterval::exact(value, "single-factor norm");
    }

    if n == 2 && u.factor_spaces[0].is_euclidean() && u.factor_spaces[1].is_euclidean() {
        let m = flatten_by_mask(&u.coefficients, 0b01);
        let value = nuclear_norm(&m)?;
        return NormInterval::exact(value, "svd nuclear");
    }

    // Upper bounds.
    let mut upper = u.l1();
    let mut upper_cert = NormCertificate::CoefficientL1;
    if n == 2 {
        // Exact svd decomposition scored in the factor norms.
        let m = flatten_by_mask(&u.coefficients, 0b01);
        let (uu, s, vv) = svd(&m)?;
        let mut cost = 0.0;
        let mut terms: Vec<Vec<Vector>> = Vec::new();
        let mut term_costs = Vec::new();
        for c in 0..s.len() {
            if s[c] <= 1e-15 * (1.0 + s[0]) {
                continue;
            }
            let a: Vector = (0..uu.nrows()).map(|r| uu[(r, c)] * s[c]).collect();
            let b: Vector = (0..vv.nrows()).map(|r| vv[(r, c)]).collect();
            let tc = norm_unchecked(u.factor_spaces[0].p, &a)
                * norm_unchecked(u.factor_spaces[1].p, &b);
            cost += tc;
            term_costs.push(tc);
            terms.push(vec![a, b]);
        }
        if cost < upper {
            upper = cost;
            upper_cert = NormCertificate::Decomposition {
                terms,
                term_costs,
                residual_l1: 0.0,
            };
        }
    }
    let (peel_upper, peel_cert) = projective_upper_peeling(u, budget, rng)?;
    if peel_upper < upper {
        upper = peel_upper;
        upper_cert = peel_cert;
    }

    // Lower bound by duality.
    let (lower, lower_cert) = projective_lower_duality(u, budget, rng)?;
    NormInterval::new(lower.min(upper), upper, lower_cert, upper_cert)
}

/// π bounds of the difference of two decomposable points, with the telescope
/// decomposition capping the upper bound:
/// x¹⊗…⊗xⁿ − z¹⊗…⊗zⁿ = Σ_k z¹⊗…⊗z^{k−1}⊗(x^k−z^k)⊗x^{k+1}⊗…⊗xⁿ.
pub fn pi_distance_bounds(
    spaces: &[SpaceSpec],
    p: &DecomposablePoint,
    q: &DecomposablePoint,
    budget: usize,
) -> Result<NormInterval> {
    pi_distance_bounds_seeded(spaces, p, q, budget, &SeededRng::new(0))
}

pub fn pi_distance_bounds_seeded(
    spaces: &[SpaceSpec],
    p: &DecomposablePoint,
    q: &DecomposablePoint,
    budget: usize,
    rng: &SeededRng,
) -> Result<NormInterval> {
    p.check(spaces)?;
    q.check(spaces)?;
    let dense = to_dense(spaces, p)?.sub(&to_dense(spaces, q)?)?;
    let base = projective_norm_bounds_seeded(&dense, budget, rng)?;
    let (telescope, term_costs) = telescope_upper(spaces, p, q)?;
    if telescope < base.upper {
        NormInterval::new(
            base.lower.min(telescope),
            telescope,
            base.lower_certificate,
            NormCertificate::Telescope { term_costs },
        )
    } else {
        Ok(base)
    }
}

/// Exact cost of the telescope decomposition of p − q; a certified π upper
/// bound cheap enough for search loops.
pub(crate) fn telescope_upper(
    spaces: &[SpaceSpec],
    p: &DecomposablePoint,
    q: &DecomposablePoint,
) -> Result<(f64, Vec<f64>)> {
    let n = spaces.len();
    let mut total = 0.0;
    let mut costs = Vec::with_capacity(n);
    for k in 0..n {
        let mut term = 1.0;
        for j in 0..n {
            let v: Vector = if j < k {
                q.factors[j].clone()
            } else if j == k {
                p.factors[j]
                    .iter()
                    .zip(&q.factors[j])
                    .map(|(a, b)| a - b)
                    .collect()
            } else {
                p.factors[j].clone()
            };
            term *= norm_unchecked(spaces[j].p, &v);
        }
        costs.push(term);
        total += term;
    }
    Ok((total, costs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn l2(dim: usize) -> SpaceSpec {
        SpaceSpec::euclidean(dim)
    }

    fn e(dim: usize, k: usize) -> Vector {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        v
    }

    fn tensor2(spaces: [SpaceSpec; 2], m: Array2<f64>) -> DenseTensor {
        DenseTensor::new(spaces.to_vec(), m.into_dyn()).unwrap()
    }

    #[test]
    fn to_dense_unit_and_sign_patterns() {
        let spaces = [l2(2), l2(2)];
        let p = DecomposablePoint::new(vec![e(2, 0), e(2, 0)]);
        let t = to_dense(&spaces, &p).unwrap();
        assert_eq!(t.coefficients[[0, 0]], 1.0);
        assert_eq!(t.coefficients[[1, 1]], 0.0);

        let q = DecomposablePoint::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
        let tq = to_dense(&spaces, &q).unwrap();
        assert_eq!(tq.coefficients[[0, 0]], 1.0);
        assert_eq!(tq.coefficients[[0, 1]], -1.0);
        assert_eq!(tq.coefficients[[1, 0]], 1.0);
        assert_eq!(tq.coefficients[[1, 1]], -1.0);

        let z = DecomposablePoint::new(vec![vec![0.0, 0.0], e(2, 1)]);
        assert!(to_dense(&spaces, &z).unwrap().is_zero());
    }

    #[test]
    fn hilbert_crossnorm_cases() {
        let spaces = [l2(2), l2(2)];
        let u = tensor2(spaces, array![[1.0, 0.0], [0.0, 1.0]]);
        assert!((hilbert_crossnorm(&u).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);

        let x = vec![3.0, 4.0];
        let y = vec![1.0, 0.0];
        let p = DecomposablePoint::new(vec![x.clone(), y.clone()]);
        let t = to_dense(&spaces, &p).unwrap();
        assert!((hilbert_crossnorm(&t).unwrap() - 5.0).abs() < 1e-12);

        let linf = SpaceSpec::new(2, Exponent::Infinity).unwrap();
        let bad = DenseTensor::zeros(vec![linf, l2(2)]).unwrap();
        assert!(matches!(hilbert_crossnorm(&bad), Err(Error::Unsupported(_))));
    }

    #[test]
    fn injective_exact_euclidean() {
        let u = tensor2([l2(2), l2(2)], array![[1.0, 0.0], [0.0, 1.0]]);
        let iv = injective_norm_bounds(&u, 8).unwrap();
        assert!((iv.lower - 1.0).abs() < 1e-10);
        assert!((iv.upper - 1.0).abs() < 1e-10);
    }

    #[test]
    fn injective_zero() {
        let u = DenseTensor::zeros(vec![l2(2), l2(3)]).unwrap();
        let iv = injective_norm_bounds(&u, 4).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert_eq!(iv.upper, 0.0);
    }

    #[test]
    fn injective_decomposable_product_of_norms() {
        // Three Euclidean factors: the alternating search must reach
        // ∏‖x^i‖ and the flattening upper must stay consistent.
        let spaces = [l2(2), l2(2), l2(3)];
        let p = DecomposablePoint::new(vec![
            vec![1.0, 2.0],
            vec![0.5, -1.0],
            vec![1.0, 1.0, -2.0],
        ]);
        let t = to_dense(&spaces, &p).unwrap();
        let expect: f64 = [5.0f64.sqrt(), 1.25f64.sqrt(), 6.0f64.sqrt()]
            .iter()
            .product();
        let iv = injective_norm_bounds(&t, 16).unwrap();
        assert!((iv.lower - expect).abs() < 1e-6 * expect);
        assert!(iv.upper >= iv.lower - 1e-12);
    }

    #[test]
    fn injective_budget_zero_rejected() {
        let u = DenseTensor::zeros(vec![l2(2), l2(2)]).unwrap();
        assert!(matches!(
            injective_norm_bounds(&u, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn injective_polyhedral_exact() {
        // ε over l1 × l1 factors: dual balls are sign cubes; for the identity
        // pattern the max of the sign pairing is 2.
        let l1 = SpaceSpec::new(2, Exponent::ONE).unwrap();
        let u = tensor2([l1, l1], array![[1.0, 0.0], [0.0, 1.0]]);
        let iv = injective_norm_bounds(&u, 4).unwrap();
        assert!((iv.lower - 2.0).abs() < 1e-12);
        assert!((iv.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projective_exact_euclidean_nuclear() {
        let u = tensor2([l2(2), l2(2)], array![[1.0, 0.0], [0.0, 1.0]]);
        let iv = projective_norm_bounds(&u, 8).unwrap();
        assert!((iv.lower - 2.0).abs() < 1e-10);
        assert!((iv.upper - 2.0).abs() < 1e-10);
    }

    #[test]
    fn projective_decomposable_equals_product() {
        let spaces = [l2(2), l2(2)];
        let p = DecomposablePoint::new(vec![vec![3.0, 4.0], vec![0.0, 2.0]]);
        let t = to_dense(&spaces, &p).unwrap();
        let iv = projective_norm_bounds(&t, 8).unwrap();
        assert!((iv.lower - 10.0).abs() < 1e-9);
        assert!((iv.upper - 10.0).abs() < 1e-9);
    }

    #[test]
    fn projective_zero_tensor() {
        let u = DenseTensor::zeros(vec![l2(2), l2(2), l2(2)]).unwrap();
        let iv = projective_norm_bounds(&u, 4).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert_eq!(iv.upper, 0.0);
    }

    #[test]
    fn projective_three_way_brackets_decomposable() {
        let spaces = [l2(2), l2(2), l2(2)];
        let p = DecomposablePoint::new(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.0]]);
        let t = to_dense(&spaces, &p).unwrap();
        let expect = 2.0 * 2.0f64.sqrt() * 2.0f64.sqrt();
        let iv = projective_norm_bounds(&t, 80).unwrap();
        assert!(iv.upper >= expect - 1e-9);
        assert!(iv.upper <= expect * 1.05);
        assert!(iv.lower <= expect + 1e-9);
        assert!(iv.lower >= expect * 0.9);
    }

    #[test]
    fn pi_distance_examples() {
        let spaces = [l2(2), l2(2)];
        let e1 = e(2, 0);
        let e2 = e(2, 1);

        let p = DecomposablePoint::new(vec![e1.clone(), e1.clone()]);
        let same = pi_distance_bounds(&spaces, &p, &p, 4).unwrap();
        assert_eq!(same.lower, 0.0);
        assert_eq!(same.upper, 0.0);

        let q = DecomposablePoint::new(vec![e2.clone(), e2.clone()]);
        let iv = pi_distance_bounds(&spaces, &p, &q, 8).unwrap();
        assert!((iv.lower - 2.0).abs() < 1e-10);
        assert!((iv.upper - 2.0).abs() < 1e-10);

        let r = DecomposablePoint::new(vec![e1.clone(), e2.clone()]);
        let iv2 = pi_distance_bounds(&spaces, &p, &r, 8).unwrap();
        let root2 = 2.0f64.sqrt();
        assert!((iv2.lower - root2).abs() < 1e-10);
        assert!((iv2.upper - root2).abs() < 1e-10);
    }

    #[test]
    fn pi_distance_rejects_mismatched_points() {
        let spaces = [l2(2), l2(2)];
        let p = DecomposablePoint::new(vec![e(2, 0), e(2, 0)]);
        let q = DecomposablePoint::new(vec![e(3, 0), e(2, 0)]);
        assert!(pi_distance_bounds(&spaces, &p, &q, 4).is_err());
    }

    #[test]
    fn telescope_matches_exact_on_scaled_pairs() {
        // Parallel points: the telescope has one nonzero term and is exact.
        let spaces = [l2(2), l2(2)];
        let x = DecomposablePoint::new(vec![vec![1.0, 1.0], vec![2.0, 0.0]]);
        let z = DecomposablePoint::new(vec![vec![2.0, 2.0], vec![2.0, 0.0]]);
        let (t, _) = telescope_upper(&spaces, &x, &z).unwrap();
        let iv = pi_distance_bounds(&spaces, &x, &z, 8).unwrap();
        assert!((t - iv.upper).abs() < 1e-12);
        assert!((iv.lower - t).abs() < 1e-9);
    }

    #[test]
    fn dense_tensor_json_round_trip() {
        let spaces = [l2(2), l2(2)];
        let u = tensor2(spaces, array![[1.0, -1.0], [0.5, 0.0]]);
        let js = serde_json::to_string(&u).unwrap();
        let back: DenseTensor = serde_json::from_str(&js).unwrap();
        assert_eq!(back.coefficients, u.coefficients);
        assert_eq!(back.factor_spaces, u.factor_spaces);
        // Shape violations are rejected.
        let bad = r#"{"spaces":[{"dim":2,"p":2.0}],"coeffs":[[1.0,2.0]]}"#;
        assert!(serde_json::from_str::<DenseTensor>(bad).is_err());
    }
}
