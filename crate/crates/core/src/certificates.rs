//! The Γ certification engine.
//!
//! Γ(T) is the least ‖A‖·Lip(B) over factorizations T = B∘A with A
//! multilinear into a Hilbert space and B Lipschitz on A's image. Nothing
//! here computes Γ exactly; instead every bound is a [`GammaCertificate`]
//! that can be re-verified from its payload:
//!
//! - lower bounds come from domination witnesses: families of decomposable
//!   point pairs whose Gram comparison is positive semidefinite, so the
//!   quadratic domination inequality applies and the quotient
//!   √(Σ‖f_T(x)−f_T(z)‖² / Σ π(s−t)²) is a certified lower bound;
//! - upper bounds come from closed-form routes: the Hilbert-Schmidt norm,
//!   the 2^{n−1}·‖T‖ bound for Hilbert domains, rank-one and composition
//!   bounds, and a routing bound through Euclidean balls whose embedding
//!   constants are re-verified by brute force before use.
//!
//! Soundness conventions: denominators always use π *upper* bounds and
//! numerators use codomain-norm *lower* bounds, so a reported lower bound
//! can only err downwards.

use serde::{Deserialize, Serialize};

use crate::numerics::{min_eigenvalue, SeededRng, SymmetricMatrix};
use crate::operators::{
    operator_norm_bounds_seeded, MultilinearOperator, OperatorStructure,
};
use crate::spaces::{norm, verify_embedding_constant, SpaceSpec, Vector};
use crate::tensors::{
    pi_distance_bounds_seeded, telescope_upper, to_dense, DecomposablePoint, NormInterval,
};
use crate::{Error, Result};

/// Default relative PSD tolerance for domination checks:
/// accepted iff min eig ≥ −tol·(1 + trace of the dominating Gram).
pub const PSD_TOL_DEFAULT: f64 = 1e-8;

/// Slack allowed between certified lower and upper Γ bounds.
pub const GAMMA_INTERVAL_SLACK: f64 = 1e-9;

/// Families of decomposable point pairs certifying a Γ lower bound:
/// the (x, z) pairs feed the operator side, the (s, t) pairs the π side,
/// and the certificate is valid when (x, z) is dominated by (s, t).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KwapienWitness {
    #[serde(rename = "xz")]
    pub xz_pairs: Vec<(DecomposablePoint, DecomposablePoint)>,
    #[serde(rename = "st")]
    pub st_pairs: Vec<(DecomposablePoint, DecomposablePoint)>,
}

impl KwapienWitness {
    /// Equality witness: st = xz, dominated by construction.
    pub fn equality(pairs: Vec<(DecomposablePoint, DecomposablePoint)>) -> Self {
        Self {
            xz_pairs: pairs.clone(),
            st_pairs: pairs,
        }
    }

    pub fn check(&self, spaces: &[SpaceSpec]) -> Result<()> {
        if self.st_pairs.is_empty() {
            return Err(Error::InvalidInput("witness needs st pairs".into()));
        }
        for (a, b) in self.xz_pairs.iter().chain(&self.st_pairs) {
            a.check(spaces)?;
            b.check(spaces)?;
        }
        Ok(())
    }
}

/// Which closed-form or witness route produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    WitnessLower,
    HsUpper,
    HilbertDomainUpper,
    RankOneUpper,
    CompositionUpper,
    RoutingUpper,
}

/// Evidence sufficient to re-verify a bound.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificatePayload {
    Witness {
        witness: KwapienWitness,
        numerator_terms: Vec<f64>,
        denominator_terms: Vec<f64>,
        domination_min_eig: f64,
        psd_tolerance: f64,
    },
    PolyWitness {
        witness: crate::polynomials::PolyWitness,
        numerator_terms: Vec<f64>,
        denominator_terms: Vec<f64>,
        domination_min_eig: f64,
        psd_tolerance: f64,
    },
    HilbertSchmidt {
        frobenius: f64,
    },
    HilbertDomain {
        operator_norm_upper: f64,
        lipschitz_factor: f64,
    },
    RankOne {
        functional_norm_upper: f64,
        direction_norm: f64,
    },
    Composition {
        pre_norm_uppers: Vec<f64>,
        inner_upper: f64,
        post_norm_upper: f64,
        route: String,
    },
    Routing {
        embedding_constants: Vec<f64>,
        hilbert_domain_value: f64,
    },
}

/// A certified one-sided bound on Γ.
#[derive(Debug, Clone, Serialize)]
pub struct GammaCertificate {
    pub kind: CertificateKind,
    pub value: f64,
    pub payload: CertificatePayload,
}

/// Certified interval for Γ(T). `upper` is +∞ when no upper route applies,
/// in which case `upper_cert` is absent.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_cert: GammaCertificate,
    pub upper_cert: Option<GammaCertificate>,
}

impl CertifiedInterval {
    pub fn new(
        lower_cert: GammaCertificate,
        upper_cert: Option<GammaCertificate>,
    ) -> Result<Self> {
        let lower = lower_cert.value;
        let upper = upper_cert.as_ref().map_or(f64::INFINITY, |c| c.value);
        if upper.is_finite() && lower > upper + GAMMA_INTERVAL_SLACK * (1.0 + upper) {
            return Err(Error::Inconsistency(format!(
                "certified lower {lower} exceeds certified upper {upper}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            lower_cert,
            upper_cert,
        })
    }
}

/// Gram matrix Σ d·dᵀ of the vectorized pair differences over the flattened
/// tensor coefficient space; positive semidefinite by construction.
pub fn gram_matrix(
    spaces: &[SpaceSpec],
    pairs: &[(DecomposablePoint, DecomposablePoint)],
) -> Result<SymmetricMatrix> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("gram matrix needs at least one pair".into()));
    }
    let total: usize = spaces.iter().map(|s| s.dim).product();
    let mut diffs = Vec::with_capacity(pairs.len());
    for (p, q) in pairs {
        let dp = to_dense(spaces, p)?;
        let dq = to_dense(spaces, q)?;
        let d: Vec<f64> = dp
            .flat()
            .iter()
            .zip(dq.flat())
            .map(|(a, b)| a - b)
            .collect();
        diffs.push(d);
    }
    SymmetricMatrix::gram_from_vectors(total, &diffs)
}

/// Decide the domination order: (x, z) pairs are dominated by (s, t) pairs
/// iff gram(st) − gram(xz) is positive semidefinite. The quantifier over all
/// multilinear functionals φ is the full coefficient space, which is what
/// the Gram comparison ranges over.
pub fn check_domination(
    spaces: &[SpaceSpec],
    witness: &KwapienWitness,
    tol: f64,
) -> Result<(bool, f64)> {
    witness.check(spaces)?;
    let g_st = gram_matrix(spaces, &witness.st_pairs)?;
    if witness.xz_pairs.is_empty() {
        return Ok((true, 0.0));
    }
    let g_xz = gram_matrix(spaces, &witness.xz_pairs)?;
    let diff = g_st.sub(&g_xz)?;
    let min_eig = min_eigenvalue(&diff)?;
    let accepted = min_eig >= -tol * (1.0 + g_st.trace());
    Ok((accepted, min_eig))
}

/// Cheap certified π upper bound for a pair difference: the telescope cost,
/// improved by the exact nuclear value when both factors are Euclidean at
/// n = 2. Used inside search loops; the public certificate path goes through
/// [`pi_distance_bounds_seeded`].
fn pi_distance_upper_cheap(
    spaces: &[SpaceSpec],
    p: &DecomposablePoint,
    q: &DecomposablePoint,
) -> Result<f64> {
    let (tel, _) = telescope_upper(spaces, p, q)?;
    if spaces.len() == 2 && spaces.iter().all(|s| s.is_euclidean()) {
        let d = to_dense(spaces, p)?.sub(&to_dense(spaces, q)?)?;
        let m = crate::tensors::flatten_by_mask(&d.coefficients, 0b01);
        let (_, s, _) = crate::numerics::svd(&m)?;
        let nuclear: f64 = s.iter().sum();
        return Ok(nuclear.min(tel));
    }
    Ok(tel)
}

/// Numerator side of the witness quotient: a certified lower bound on
/// ‖f_T(x) − f_T(z)‖ in the codomain. Exact for plain ℓ_p codomains;
/// the π-lower side for π-tagged tensor codomains.
fn value_difference_norm_lower(
    t: &MultilinearOperator,
    x: &DecomposablePoint,
    z: &DecomposablePoint,
    budget: usize,
) -> Result<f64> {
    let fx = t.evaluate(&x.factors)?;
    let fz = t.evaluate(&z.factors)?;
    let diff: Vec<f64> = fx.iter().zip(&fz).map(|(a, b)| a - b).collect();
    Ok(t.codomain.norm_bounds(&diff, budget)?.0)
}

fn witness_quotient(
    numerator_terms: &[f64],
    denominator_terms: &[f64],
) -> Result<f64> {
    let num: f64 = numerator_terms.iter().map(|x| x * x).sum();
    let den: f64 = denominator_terms.iter().map(|x| x * x).sum();
    if den <= 0.0 {
        return Err(Error::Refused(
            "witness denominator is zero; no quotient certificate".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Certified Γ lower bound from a dominated witness:
/// √(Σ‖f_T(x_i)−f_T(z_i)‖² / Σ π_ub(s_i−t_i)²).
pub fn lower_bound_from_witness(
    t: &MultilinearOperator,
    witness: &KwapienWitness,
    budget: usize,
) -> Result<GammaCertificate> {
    lower_bound_from_witness_tol(t, witness, budget, PSD_TOL_DEFAULT, &SeededRng::new(0))
}

pub fn lower_bound_from_witness_tol(
    t: &MultilinearOperator,
    witness: &KwapienWitness,
    budget: usize,
    psd_tol: f64,
    rng: &SeededRng,
) -> Result<GammaCertificate> {
    witness.check(&t.domain)?;
    let (accepted, min_eig) = check_domination(&t.domain, witness, psd_tol)?;
    if !accepted {
        return Err(Error::Refused(format!(
            "domination rejected: min eigenvalue {min_eig}"
        )));
    }
    let per_pair_budget = (budget / witness.st_pairs.len().max(1)).max(1);
    let mut numerator_terms = Vec::with_capacity(witness.xz_pairs.len());
    for (x, z) in &witness.xz_pairs {
        numerator_terms.push(value_difference_norm_lower(t, x, z, per_pair_budget)?);
    }
    let mut denominator_terms = Vec::with_capacity(witness.st_pairs.len());
    for (s, tt) in &witness.st_pairs {
        let iv = pi_distance_bounds_seeded(&t.domain, s, tt, per_pair_budget, rng)?;
        denominator_terms.push(iv.upper);
    }
    let value = witness_quotient(&numerator_terms, &denominator_terms)?;
    Ok(GammaCertificate {
        kind: CertificateKind::WitnessLower,
        value,
        payload: CertificatePayload::Witness {
            witness: witness.clone(),
            numerator_terms,
            denominator_terms,
            domination_min_eig: min_eig,
            psd_tolerance: psd_tol,
        },
    })
}

/// Fast witness value for search: same quotient with the cheap π upper.
fn witness_value_cheap(t: &MultilinearOperator, witness: &KwapienWitness) -> Result<f64> {
    let mut num = Vec::with_capacity(witness.xz_pairs.len());
    for (x, z) in &witness.xz_pairs {
        num.push(value_difference_norm_lower(t, x, z, 2)?);
    }
    let mut den = Vec::with_capacity(witness.st_pairs.len());
    for (s, tt) in &witness.st_pairs {
        den.push(pi_distance_upper_cheap(&t.domain, s, tt)?);
    }
    match witness_quotient(&num, &den) {
        Ok(v) => Ok(v),
        Err(Error::Refused(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Γ ≤ ‖T‖_HS for Hilbert-Schmidt operators between Euclidean spaces.
pub fn upper_bound_hs(t: &MultilinearOperator) -> Result<GammaCertificate> {
    let value = t.hs_norm().map_err(|_| {
        Error::Refused("hs route needs Euclidean domain and codomain".into())
    })?;
    Ok(GammaCertificate {
        kind: CertificateKind::HsUpper,
        value,
        payload: CertificatePayload::HilbertSchmidt { frobenius: value },
    })
}

/// Γ ≤ 2^{n−1}·‖T‖ when every domain factor is a Hilbert space.
pub fn upper_bound_hilbert_domain(
    t: &MultilinearOperator,
    budget: usize,
) -> Result<GammaCertificate> {
    upper_bound_hilbert_domain_seeded(t, budget, &SeededRng::new(0))
}

pub fn upper_bound_hilbert_domain_seeded(
    t: &MultilinearOperator,
    budget: usize,
    rng: &SeededRng,
) -> Result<GammaCertificate> {
    if t.domain.iter().any(|s| !s.is_euclidean()) {
        return Err(Error::Refused(
            "hilbert-domain route needs Euclidean domain factors".into(),
        ));
    }
    let onb = operator_norm_bounds_seeded(t, budget, rng)?;
    if !onb.upper.is_finite() {
        return Err(Error::Refused("no certified operator norm upper bound".into()));
    }
    let factor = 2f64.powi(t.arity() as i32 - 1);
    Ok(GammaCertificate {
        kind: CertificateKind::HilbertDomainUpper,
        value: factor * onb.upper,
        payload: CertificatePayload::HilbertDomain {
            operator_norm_upper: onb.upper,
            lipschitz_factor: factor,
        },
    })
}

/// Γ(φ·y) ≤ ‖φ‖·‖y‖ for rank-one operators.
pub fn upper_bound_rank_one(
    phi: &MultilinearOperator,
    y: &Vector,
    codomain: &SpaceSpec,
    budget: usize,
) -> Result<GammaCertificate> {
    if !phi.codomain.is_scalar() {
        return Err(Error::Refused("rank-one route needs a scalar functional".into()));
    }
    let onb = operator_norm_bounds_seeded(phi, budget, &SeededRng::new(0))?;
    if !onb.upper.is_finite() {
        return Err(Error::Refused("no certified functional norm upper bound".into()));
    }
    let y_norm = norm(codomain, y)?;
    Ok(GammaCertificate {
        kind: CertificateKind::RankOneUpper,
        value: onb.upper * y_norm,
        payload: CertificatePayload::RankOne {
            functional_norm_upper: onb.upper,
            direction_norm: y_norm,
        },
    })
}

/// Γ(S∘f_T∘R) ≤ ‖R‖·Γ(T)·‖S‖ with R = ⊗∘(R₁,…,Rₙ). With the π norm on the
/// middle tensor space, ‖R‖ = ∏‖R_i‖ exactly (π is multiplicative on
/// elementary tensors), so the bound uses the product of the factor norms.
pub fn upper_bound_composition(
    rs: &[MultilinearOperator],
    inner: &CertifiedInterval,
    s: &MultilinearOperator,
    budget: usize,
) -> Result<GammaCertificate> {
    if !inner.upper.is_finite() {
        return Err(Error::Refused("inner Γ upper bound is not finite".into()));
    }
    let mut pre_norm_uppers = Vec::with_capacity(rs.len());
    for r in rs {
        let onb = operator_norm_bounds_seeded(r, budget, &SeededRng::new(0))?;
        if !onb.upper.is_finite() {
            return Err(Error::Refused("no certified norm for a precomposition map".into()));
        }
        pre_norm_uppers.push(onb.upper);
    }
    let s_onb = operator_norm_bounds_seeded(s, budget, &SeededRng::new(0))?;
    if !s_onb.upper.is_finite() {
        return Err(Error::Refused("no certified norm for the postcomposition map".into()));
    }
    let value = pre_norm_uppers.iter().product::<f64>() * inner.upper * s_onb.upper;
    Ok(GammaCertificate {
        kind: CertificateKind::CompositionUpper,
        value,
        payload: CertificatePayload::Composition {
            pre_norm_uppers,
            inner_upper: inner.upper,
            post_norm_upper: s_onb.upper,
            route: "pi-tagged middle space, ‖R‖ = ∏‖R_i‖".into(),
        },
    })
}

/// Γ ≤ (∏ max(1, d^{1/2−1/p}))·2^{n−1}·‖T viewed with Euclidean domains‖.
/// Every embedding constant is re-verified by brute force before use.
pub fn upper_bound_routing(t: &MultilinearOperator, budget: usize) -> Result<GammaCertificate> {
    upper_bound_routing_seeded(t, budget, &SeededRng::new(0))
}

pub fn upper_bound_routing_seeded(
    t: &MultilinearOperator,
    budget: usize,
    rng: &SeededRng,
) -> Result<GammaCertificate> {
    let mut constants = Vec::with_capacity(t.arity());
    for s in &t.domain {
        let c = verify_embedding_constant(s.dim, s.p)
            .map_err(|e| Error::Refused(format!("embedding verification failed: {e}")))?;
        constants.push(c);
    }
    let euclid_domain: Vec<SpaceSpec> = t
        .domain
        .iter()
        .map(|s| SpaceSpec::euclidean(s.dim))
        .collect();
    let euclid = MultilinearOperator::new(
        euclid_domain,
        t.codomain.clone(),
        t.coefficients.clone(),
    )?;
    let inner = upper_bound_hilbert_domain_seeded(&euclid, budget, rng)?;
    Ok(GammaCertificate {
        kind: CertificateKind::RoutingUpper,
        value: constants.iter().product::<f64>() * inner.value,
        payload: CertificatePayload::Routing {
            embedding_constants: constants,
            hilbert_domain_value: inner.value,
        },
    })
}

/// Γ upper bound for a linear operator: the best of the Hilbert-Schmidt,
/// Hilbert-domain and routing routes that apply.
fn gamma_upper_linear(t: &MultilinearOperator, budget: usize) -> Result<GammaCertificate> {
    let mut best: Option<GammaCertificate> = None;
    let mut consider = |cert: Result<GammaCertificate>| {
        if let Ok(c) = cert {
            match &best {
                Some(b) if b.value <= c.value => {}
                _ => best = Some(c),
            }
        }
    };
    consider(upper_bound_hs(t));
    consider(upper_bound_hilbert_domain(t, budget));
    consider(upper_bound_routing(t, budget));
    best.ok_or_else(|| Error::Refused("no Γ upper route for a linear factor".into()))
}

/// Γ(⊗∘(T₁,…,Tₙ)) ≤ 2^{n−1}·∏Γ(T_i): the product route for operators built
/// from linear factors. Reported as a composition certificate since the
/// product bound is the composition bound applied to ⊗.
fn upper_bound_product(factors: &[MultilinearOperator], budget: usize) -> Result<GammaCertificate> {
    let mut factor_uppers = Vec::with_capacity(factors.len());
    for f in factors {
        factor_uppers.push(gamma_upper_linear(f, budget)?.value);
    }
    let lipschitz = 2f64.powi(factors.len() as i32 - 1);
    let value = lipschitz * factor_uppers.iter().product::<f64>();
    Ok(GammaCertificate {
        kind: CertificateKind::CompositionUpper,
        value,
        payload: CertificatePayload::Composition {
            pre_norm_uppers: factor_uppers,
            inner_upper: lipschitz,
            post_norm_upper: 1.0,
            route: "product of linear factors through the canonical map".into(),
        },
    })
}

/// A scaling witness: z equals x with the first coordinate doubled. The
/// telescope denominator is exact for such parallel pairs, so the certified
/// quotient equals the operator-norm ratio at `args`.
fn scaling_witness(args: &[Vector]) -> KwapienWitness {
    let x = DecomposablePoint::new(args.to_vec());
    let mut z_factors = args.to_vec();
    for v in &mut z_factors[0] {
        *v *= 2.0;
    }
    let z = DecomposablePoint::new(z_factors);
    KwapienWitness::equality(vec![(x, z)])
}

fn random_point(spaces: &[SpaceSpec], rng: &mut rand_chacha::ChaCha8Rng) -> DecomposablePoint {
    use rand::Rng;
    let factors: Vec<Vector> = spaces
        .iter()
        .map(|s| {
            let mut v: Vector = (0..s.dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let nv = crate::spaces::norm_unchecked(s.p, &v);
            // Log-uniform magnitude in [1/4, 4]: the quotient is scale
            // invariant per pair, but scale diversity matters through the
            // cross terms of π.
            let scale = 4f64.powf(rng.gen_range(-1.0..1.0));
            if nv > 0.0 {
                for x in &mut v {
                    *x *= scale / nv;
                }
            } else {
                v[0] = scale;
            }
            v
        })
        .collect();
    DecomposablePoint::new(factors)
}

/// Search for the best dominated witness. Explores, in this order:
/// scaling witnesses derived from the operator-norm ascent (these recover
/// ‖T‖-level quotients exactly), random equality witnesses, and perturbed
/// witnesses re-checked by [`check_domination`]. Deterministic in the seed.
pub fn search_witness(
    t: &MultilinearOperator,
    seed: u64,
    budget: usize,
) -> Result<(KwapienWitness, GammaCertificate)> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be >= 1".into()));
    }
    let rng = SeededRng::new(seed);
    let mut best_witness: Option<(KwapienWitness, f64)> = None;
    fn consider(best: &mut Option<(KwapienWitness, f64)>, w: KwapienWitness, value: f64) {
        match best {
            Some((_, b)) if *b >= value => {}
            _ => *best = Some((w, value)),
        }
    }

    // Phase 1: scaling witnesses from the operator-norm lower search.
    let onb = operator_norm_bounds_seeded(t, (budget / 4).max(8), &rng.derive(1))?;
    if let crate::tensors::NormCertificate::EvaluationPoint { functionals, .. } =
        &onb.lower_certificate
    {
        let w = scaling_witness(functionals);
        let v = witness_value_cheap(t, &w)?;
        consider(&mut best_witness, w, v);
    }

    // Phase 2: random equality witnesses (dominated by construction).
    let random_rounds = (budget / 2).max(4);
    for k in 0..random_rounds {
        let mut stream = rng.derive(2).stream(k as u64);
        let m = 1 + (k % 2);
        let pairs: Vec<(DecomposablePoint, DecomposablePoint)> = (0..m)
            .map(|_| {
                (
                    random_point(&t.domain, &mut stream),
                    random_point(&t.domain, &mut stream),
                )
            })
            .collect();
        let w = KwapienWitness::equality(pairs);
        let v = witness_value_cheap(t, &w)?;
        consider(&mut best_witness, w, v);
    }

    // Phase 3: perturb the best witness; only domination-checked survivors count.
    let perturb_rounds = (budget / 4).max(4);
    for k in 0..perturb_rounds {
        let Some((base, base_val)) = best_witness.clone() else {
            break;
        };
        let mut stream = rng.derive(3).stream(k as u64);
        use rand::Rng;
        let sigma = 0.05 * 0.5f64.powf(4.0 * k as f64 / perturb_rounds as f64);
        let jitter = |pt: &DecomposablePoint, stream: &mut rand_chacha::ChaCha8Rng| {
            DecomposablePoint::new(
                pt.factors
                    .iter()
                    .map(|f| {
                        f.iter()
                            .map(|x| {
                                x + sigma * stream.sample::<f64, _>(rand_distr::StandardNormal)
                            })
                            .collect()
                    })
                    .collect(),
            )
        };
        let cand = KwapienWitness {
            xz_pairs: base
                .xz_pairs
                .iter()
                .map(|(a, b)| (jitter(a, &mut stream), jitter(b, &mut stream)))
                .collect(),
            st_pairs: base.st_pairs.clone(),
        };
        let (accepted, _) = check_domination(&t.domain, &cand, PSD_TOL_DEFAULT)?;
        if !accepted {
            continue;
        }
        let v = witness_value_cheap(t, &cand)?;
        if v > base_val {
            consider(&mut best_witness, cand, v);
        }
    }

    let (witness, _) = best_witness
        .ok_or_else(|| Error::Inconsistency("witness search produced no candidate".into()))?;
    let cert = lower_bound_from_witness_tol(
        t,
        &witness,
        (budget / 4).max(8),
        PSD_TOL_DEFAULT,
        &rng.derive(4),
    )?;
    Ok((witness, cert))
}

/// Certified interval for Γ(T): the lower bound is the best of the witness
/// search and the operator norm (‖T‖ ≤ Γ(T)); the upper bound is the best
/// applicable closed-form route. The interval constructor enforces
/// lower ≤ upper as a runtime assertion.
pub fn gamma_interval(
    t: &MultilinearOperator,
    seed: u64,
    budget: usize,
) -> Result<CertifiedInterval> {
    let rng = SeededRng::new(seed);
    let (_, mut lower_cert) = search_witness(t, seed, budget)?;

    // ‖T‖ ≤ Γ(T): if the direct operator-norm search beats the witness
    // search, convert its evaluation point into a scaling witness so the
    // certificate stays re-verifiable.
    let onb = operator_norm_bounds_seeded(t, budget.max(8), &rng.derive(11))?;
    if onb.lower > lower_cert.value {
        if let crate::tensors::NormCertificate::EvaluationPoint { functionals, .. } =
            &onb.lower_certificate
        {
            let w = scaling_witness(functionals);
            if let Ok(cert) =
                lower_bound_from_witness_tol(t, &w, 8, PSD_TOL_DEFAULT, &rng.derive(12))
            {
                if cert.value > lower_cert.value {
                    lower_cert = cert;
                }
            }
        }
    }

    let mut upper_cert: Option<GammaCertificate> = None;
    let mut consider = |cert: Result<GammaCertificate>| {
        if let Ok(c) = cert {
            match &upper_cert {
                Some(b) if b.value <= c.value => {}
                _ => upper_cert = Some(c),
            }
        }
    };
    consider(upper_bound_hs(t));
    consider(upper_bound_hilbert_domain_seeded(t, budget, &rng.derive(13)));
    consider(upper_bound_routing_seeded(t, budget, &rng.derive(14)));
    match &t.structure {
        OperatorStructure::Generic => {}
        OperatorStructure::RankOne { functional, direction } => {
            if let crate::operators::Codomain::Space(cs) = &t.codomain {
                consider(upper_bound_rank_one(functional, direction, cs, budget));
            }
        }
        OperatorStructure::ProductOfLinear { factors } => {
            consider(upper_bound_product(factors, budget));
        }
    }

    CertifiedInterval::new(lower_cert, upper_cert)
}

/// Convenience: the operator-norm interval of T, re-exported here because
/// Prop-style consistency checks pair it with Γ intervals.
pub fn operator_norm_interval(t: &MultilinearOperator, budget: usize) -> Result<NormInterval> {
    operator_norm_bounds_seeded(t, budget, &SeededRng::new(0))
}
