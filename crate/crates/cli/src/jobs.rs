//! Command implementations: load inputs, run the certification pipelines,
//! assemble deterministic reports.

use serde_json::{json, Map, Value};

use gamma_factor::certificates::{
    check_domination, gamma_interval, lower_bound_from_witness_tol, search_witness,
    upper_bound_hilbert_domain, upper_bound_hs, upper_bound_routing, CertifiedInterval,
    KwapienWitness,
};
use gamma_factor::gamma_norm::{
    assemble, gamma_lower_elementary_certified, gamma_upper_certified,
    representation_from_tensor, GammaRepresentation, GammaTerm,
};
use gamma_factor::numerics::SeededRng;
use gamma_factor::operators::{
    identity_operator, inner_product_operator, operator_norm_bounds, product_of_linear, rank_one,
    Codomain, MultilinearOperator,
};
use gamma_factor::polynomials::{
    associated_operator, poly_gamma_interval, poly_lower_bound_seeded, HomogeneousPolynomial,
    PolyWitness,
};
use gamma_factor::spaces::SpaceSpec;
use gamma_factor::tensors::{
    hilbert_crossnorm, injective_norm_bounds_seeded, projective_norm_bounds_seeded, to_dense,
    DecomposablePoint, DenseTensor, NormInterval,
};
use gamma_factor::Error as CoreError;

use crate::report::{bound_value, to_value, Check, Report};

/// CLI failure classes; mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum JobError {
    /// Malformed inputs or schema violations → exit 2.
    Input(String),
    /// Refused certificates or exhausted budgets → exit 3.
    Certificate(String),
}

impl JobError {
    pub fn exit_code(&self) -> u8 {
        match self {
            JobError::Input(_) => 2,
            JobError::Certificate(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            JobError::Input(m) | JobError::Certificate(m) => m,
        }
    }
}

fn classify(err: CoreError) -> JobError {
    match err {
        CoreError::ShapeMismatch { .. }
        | CoreError::InvalidInput(_)
        | CoreError::NonFinite(_)
        | CoreError::Unsupported(_) => JobError::Input(err.to_string()),
        CoreError::Budget(_)
        | CoreError::SearchFailure { .. }
        | CoreError::Refused(_)
        | CoreError::Inconsistency(_) => JobError::Certificate(err.to_string()),
    }
}

pub struct JobConfig {
    pub seed: u64,
    pub budget: usize,
    pub tol_psd: f64,
    pub tol_norm: f64,
}

fn parse_input<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, JobError> {
    serde_json::from_str(text).map_err(|e| JobError::Input(format!("{path}: {e}")))
}

fn field<'a>(path: &str, v: &'a Value, name: &str) -> Result<&'a Value, JobError> {
    v.get(name)
        .ok_or_else(|| JobError::Input(format!("{path}: missing field `{name}`")))
}

fn from_value<T: serde::de::DeserializeOwned>(
    path: &str,
    name: &str,
    v: &Value,
) -> Result<T, JobError> {
    serde_json::from_value(v.clone())
        .map_err(|e| JobError::Input(format!("{path}: field `{name}`: {e}")))
}

fn norm_interval_value(iv: &NormInterval) -> Value {
    json!({
        "lower": iv.lower,
        "upper": bound_value(iv.upper),
        "lower_certificate": to_value(&iv.lower_certificate),
        "upper_certificate": to_value(&iv.upper_certificate),
    })
}

fn gamma_interval_value(iv: &CertifiedInterval) -> Value {
    json!({
        "lower": iv.lower,
        "upper": bound_value(iv.upper),
        "lower_cert": to_value(&iv.lower_cert),
        "upper_cert": iv.upper_cert.as_ref().map(to_value).unwrap_or(Value::Null),
    })
}

fn base_report(command: &str, cfg: &JobConfig, inputs: Value) -> Report {
    Report {
        command: command.into(),
        seed: cfg.seed,
        budget: cfg.budget,
        tol_psd: cfg.tol_psd,
        tol_norm: cfg.tol_norm,
        inputs,
        results: Value::Object(Map::new()),
        checks: Vec::new(),
        status: "ok".into(),
    }
}

/// `norms`: crossnorm bounds of a dense tensor.
pub fn run_norms(path: &str, text: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let tensor: DenseTensor = parse_input(path, text)?;
    let rng = SeededRng::new(cfg.seed);
    let injective =
        injective_norm_bounds_seeded(&tensor, cfg.budget, &rng.derive(1)).map_err(classify)?;
    let projective =
        projective_norm_bounds_seeded(&tensor, cfg.budget, &rng.derive(2)).map_err(classify)?;
    let hilbert = hilbert_crossnorm(&tensor).ok();

    let mut report = base_report("norms", cfg, json!({ "path": path }));
    let mut results = Map::new();
    results.insert("injective".into(), norm_interval_value(&injective));
    results.insert("projective".into(), norm_interval_value(&projective));
    results.insert(
        "hilbert_crossnorm".into(),
        hilbert.map(Value::from).unwrap_or(Value::Null),
    );
    report.results = Value::Object(results);
    Ok(report)
}

/// `certify`: domination check + witness lower bound + upper routes.
pub fn run_certify(path: &str, text: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let raw: Value = parse_input(path, text)?;
    let operator: MultilinearOperator =
        from_value(path, "operator", field(path, &raw, "operator")?)?;
    let witness: KwapienWitness = from_value(path, "witness", field(path, &raw, "witness")?)?;

    let (accepted, min_eig) =
        check_domination(&operator.domain, &witness, cfg.tol_psd).map_err(classify)?;
    let rng = SeededRng::new(cfg.seed);
    let lower = lower_bound_from_witness_tol(&operator, &witness, cfg.budget, cfg.tol_psd, &rng)
        .map_err(classify)?;

    let mut routes = Map::new();
    let mut best_upper: Option<gamma_factor::certificates::GammaCertificate> = None;
    for (name, cert) in [
        ("hs", upper_bound_hs(&operator)),
        (
            "hilbert_domain",
            upper_bound_hilbert_domain(&operator, cfg.budget),
        ),
        ("routing", upper_bound_routing(&operator, cfg.budget)),
    ] {
        match cert {
            Ok(c) => {
                if best_upper.as_ref().map_or(true, |b| c.value < b.value) {
                    best_upper = Some(c.clone());
                }
                routes.insert(name.into(), to_value(&c));
            }
            Err(e) => {
                routes.insert(name.into(), json!({ "refused": e.to_string() }));
            }
        }
    }

    let interval =
        CertifiedInterval::new(lower.clone(), best_upper).map_err(classify)?;
    let mut report = base_report("certify", cfg, json!({ "path": path }));
    report.results = json!({
        "domination": { "accepted": accepted, "min_eigenvalue": min_eig },
        "witness_lower": to_value(&lower),
        "upper_routes": Value::Object(routes),
        "interval": gamma_interval_value(&interval),
    });
    Ok(report)
}

/// `search-witness`: best dominated witness found under the budget.
pub fn run_search_witness(path: &str, text: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let operator: MultilinearOperator = parse_input(path, text)?;
    let (witness, cert) =
        search_witness(&operator, cfg.seed, cfg.budget).map_err(classify)?;
    let interval = gamma_interval(&operator, cfg.seed, cfg.budget).map_err(classify)?;
    let mut report = base_report("search-witness", cfg, json!({ "path": path }));
    report.results = json!({
        "witness": to_value(&witness),
        "certificate": to_value(&cert),
        "interval": gamma_interval_value(&interval),
    });
    Ok(report)
}

/// `gamma`: γ bounds from a representation (or a tensor via the splitter).
pub fn run_gamma(path: &str, text: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let raw: Value = parse_input(path, text)?;
    let rng = SeededRng::new(cfg.seed);
    let (rep, provenance) = if let Some(rep_v) = raw.get("representation") {
        (
            from_value::<GammaRepresentation>(path, "representation", rep_v)?,
            "caller-supplied",
        )
    } else if let Some(tensor_v) = raw.get("tensor") {
        let tensor: DenseTensor = from_value(path, "tensor", tensor_v)?;
        (
            representation_from_tensor(&tensor, cfg.budget, cfg.seed).map_err(classify)?,
            "greedy-splitter",
        )
    } else {
        return Err(JobError::Input(format!(
            "{path}: expected field `representation` or `tensor`"
        )));
    };

    let (upper, upper_cert) =
        gamma_upper_certified(&rep, cfg.budget, &rng.derive(3)).map_err(classify)?;
    let u = assemble(&rep).map_err(classify)?;
    let (lower, lower_cert) =
        gamma_lower_elementary_certified(&u, cfg.budget, cfg.seed).map_err(classify)?;

    let mut report = base_report("gamma", cfg, json!({ "path": path }));
    report.results = json!({
        "representation_source": provenance,
        "terms": rep.terms.len(),
        "gamma_upper": { "value": upper, "certificate": to_value(&upper_cert) },
        "gamma_lower": { "value": lower, "certificate": to_value(&lower_cert) },
    });
    if lower > upper + cfg.tol_norm * (1.0 + upper) {
        return Err(JobError::Certificate(format!(
            "gamma lower {lower} exceeds upper {upper}"
        )));
    }
    Ok(report)
}

/// `poly`: polynomial Γ interval, plus a witness certificate when supplied.
pub fn run_poly(path: &str, text: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let raw: Value = parse_input(path, text)?;
    let poly: HomogeneousPolynomial =
        from_value(path, "polynomial", field(path, &raw, "polynomial")?)?;
    let witness_cert = match raw.get("witness") {
        Some(wv) => {
            let witness: PolyWitness = from_value(path, "witness", wv)?;
            let cert = poly_lower_bound_seeded(
                &poly,
                &witness,
                cfg.budget,
                cfg.tol_psd,
                &SeededRng::new(cfg.seed),
            )
            .map_err(classify)?;
            Some(cert)
        }
        None => None,
    };
    let interval = poly_gamma_interval(&poly, cfg.seed, cfg.budget).map_err(classify)?;
    let mut report = base_report("poly", cfg, json!({ "path": path }));
    report.results = json!({
        "interval": gamma_interval_value(&interval),
        "witness_lower": witness_cert.as_ref().map(to_value).unwrap_or(Value::Null),
    });
    Ok(report)
}

fn check(name: &str, passed: bool, detail: Value) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn e_k(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

/// `demo`: named presets exercising the headline inequalities.
pub fn run_demo(preset: &str, cfg: &JobConfig) -> Result<Report, JobError> {
    let mut report = base_report("demo", cfg, json!({ "preset": preset }));
    let mut checks: Vec<Check> = Vec::new();
    let mut results = Map::new();
    let tol = cfg.tol_norm;
    let l2 = SpaceSpec::euclidean;

    match preset {
        "inner-product" => {
            let g = inner_product_operator(l2(2)).map_err(classify)?;
            let iv = gamma_interval(&g, cfg.seed, cfg.budget.max(300)).map_err(classify)?;
            let root2 = 2f64.sqrt();
            checks.push(check(
                "lower within 1e-6 of 1",
                iv.lower >= 1.0 - tol,
                json!({ "lower": iv.lower }),
            ));
            checks.push(check(
                "upper at most sqrt(2)",
                iv.upper <= root2 + tol,
                json!({ "upper": bound_value(iv.upper) }),
            ));
            results.insert("interval".into(), gamma_interval_value(&iv));
        }
        "sandwich" => {
            use rand::Rng;
            let rng_src = SeededRng::new(cfg.seed);
            let mut rng = rng_src.rng();
            let mut worst: f64 = 0.0;
            let rounds = cfg.budget.max(200);
            let mut all_ok = true;
            for round in 0..rounds {
                let d = if round % 2 == 0 { 2 } else { 3 };
                let coeffs = ndarray::ArrayD::from_shape_fn(
                    ndarray::IxDyn(&[d, d]),
                    |_| rng.gen_range(-1.0..1.0),
                );
                let u = DenseTensor::new(vec![l2(d), l2(d)], coeffs).map_err(classify)?;
                let eps = injective_norm_bounds_seeded(&u, 4, &rng_src).map_err(classify)?;
                let mid = hilbert_crossnorm(&u).map_err(classify)?;
                let pi = projective_norm_bounds_seeded(&u, 4, &rng_src).map_err(classify)?;
                let slack1 = eps.upper - mid;
                let slack2 = mid - pi.lower;
                worst = worst.max(slack1).max(slack2);
                if slack1 > 1e-9 * (1.0 + mid) || slack2 > 1e-9 * (1.0 + pi.lower) {
                    all_ok = false;
                }
            }
            checks.push(check(
                "injective <= hilbert <= projective",
                all_ok,
                json!({ "rounds": rounds, "worst_violation": worst.max(0.0) }),
            ));
        }
        "metric-equivalence" => {
            use rand::Rng;
            let rng_src = SeededRng::new(cfg.seed);
            let mut rng = rng_src.rng();
            let spaces = [l2(3), l2(3)];
            let rounds = cfg.budget.max(200);
            let mut all_ok = true;
            let mut worst_ratio: f64 = 0.0;
            for _ in 0..rounds {
                let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                    DecomposablePoint::new(vec![
                        (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    ])
                };
                let p = draw(&mut rng);
                let q = draw(&mut rng);
                let diff = to_dense(&spaces, &p)
                    .and_then(|a| to_dense(&spaces, &q).and_then(|b| a.sub(&b)))
                    .map_err(classify)?;
                let nuclear = projective_norm_bounds_seeded(&diff, 4, &rng_src)
                    .map_err(classify)?
                    .upper;
                let spectral = injective_norm_bounds_seeded(&diff, 4, &rng_src)
                    .map_err(classify)?
                    .lower;
                if spectral > 0.0 {
                    worst_ratio = worst_ratio.max(nuclear / spectral);
                }
                if nuclear > 2.0 * spectral + 1e-9 * (1.0 + nuclear) {
                    all_ok = false;
                }
            }
            checks.push(check(
                "projective distance <= 2 x injective distance",
                all_ok,
                json!({ "rounds": rounds, "worst_ratio": worst_ratio }),
            ));
        }
        "canonical-map" => {
            let id = identity_operator(l2(2)).map_err(classify)?;
            let canon = product_of_linear(&[id.clone(), id]).map_err(classify)?;
            let iv = gamma_interval(&canon, cfg.seed, cfg.budget.max(200)).map_err(classify)?;
            checks.push(check(
                "lower at least 1",
                iv.lower >= 1.0 - tol,
                json!({ "lower": iv.lower }),
            ));
            checks.push(check(
                "upper at most 2 (product route)",
                iv.upper <= 2.0 + tol,
                json!({ "upper": bound_value(iv.upper) }),
            ));
            results.insert("interval".into(), gamma_interval_value(&iv));
        }
        "hilbert-schmidt" => {
            use rand::Rng;
            let mut rng = SeededRng::new(cfg.seed).rng();
            let coeffs = ndarray::ArrayD::from_shape_fn(
                ndarray::IxDyn(&[2, 2, 2]),
                |_| rng.gen_range(-1.0..1.0),
            );
            let t = MultilinearOperator::new(
                vec![l2(2), l2(2)],
                Codomain::Space(l2(2)),
                coeffs,
            )
            .map_err(classify)?;
            let hs = upper_bound_hs(&t).map_err(classify)?;
            let iv = gamma_interval(&t, cfg.seed, cfg.budget.max(200)).map_err(classify)?;
            let onb = operator_norm_bounds(&t, cfg.budget.max(64)).map_err(classify)?;
            checks.push(check(
                "gamma upper at most the hs norm",
                iv.upper <= hs.value + tol * (1.0 + hs.value),
                json!({ "gamma_upper": bound_value(iv.upper), "hs": hs.value }),
            ));
            checks.push(check(
                "operator norm lower below gamma upper",
                onb.lower <= iv.upper + tol * (1.0 + iv.upper),
                json!({ "operator_norm_lower": onb.lower }),
            ));
            results.insert("interval".into(), gamma_interval_value(&iv));
            results.insert("hs".into(), to_value(&hs));
        }
        "rank-one" => {
            let g = inner_product_operator(l2(2)).map_err(classify)?;
            let y = e_k(2, 0);
            let op = rank_one(&g, &y, l2(2)).map_err(classify)?;
            let iv = gamma_interval(&op, cfg.seed, cfg.budget.max(200)).map_err(classify)?;
            checks.push(check(
                "gamma upper at most |phi| |y| = 1",
                iv.upper <= 1.0 + tol,
                json!({ "upper": bound_value(iv.upper) }),
            ));
            checks.push(check(
                "witness lower below the rank-one bound",
                iv.lower <= 1.0 + tol,
                json!({ "lower": iv.lower }),
            ));
            results.insert("interval".into(), gamma_interval_value(&iv));
        }
        "kwapien-witness" => {
            let g = inner_product_operator(l2(2)).map_err(classify)?;
            let w = KwapienWitness::equality(vec![(
                DecomposablePoint::new(vec![e_k(2, 0), e_k(2, 0)]),
                DecomposablePoint::new(vec![e_k(2, 1), e_k(2, 0)]),
            )]);
            let (accepted, min_eig) =
                check_domination(&g.domain, &w, cfg.tol_psd).map_err(classify)?;
            let cert = lower_bound_from_witness_tol(
                &g,
                &w,
                cfg.budget.max(8),
                cfg.tol_psd,
                &SeededRng::new(cfg.seed),
            )
            .map_err(classify)?;
            let target = 1.0 / 2f64.sqrt();
            checks.push(check(
                "equality witness accepted",
                accepted,
                json!({ "min_eigenvalue": min_eig }),
            ));
            checks.push(check(
                "witness quotient equals 1/sqrt(2)",
                (cert.value - target).abs() <= tol * (1.0 + target),
                json!({ "value": cert.value }),
            ));
            let (_, best) =
                search_witness(&g, cfg.seed, cfg.budget.max(500)).map_err(classify)?;
            checks.push(check(
                "witness search reaches the norm level 1",
                best.value >= 1.0 - tol,
                json!({ "value": best.value }),
            ));
            results.insert("witness_certificate".into(), to_value(&cert));
            results.insert("search_certificate".into(), to_value(&best));
        }
        "duality" => {
            use rand::Rng;
            let mut rng = SeededRng::new(cfg.seed).rng();
            let rounds = (cfg.budget / 4).clamp(20, 100);
            let mut all_ok = true;
            let mut worst: f64 = f64::NEG_INFINITY;
            for _ in 0..rounds {
                let coeffs = ndarray::ArrayD::from_shape_fn(
                    ndarray::IxDyn(&[2, 2, 2]),
                    |_| rng.gen_range(-1.0..1.0),
                );
                let t = MultilinearOperator::new(
                    vec![l2(2), l2(2)],
                    Codomain::Space(l2(2)),
                    coeffs,
                )
                .map_err(classify)?;
                let hs = upper_bound_hs(&t).map_err(classify)?;
                let terms: Vec<GammaTerm> = (0..2)
                    .map(|_| GammaTerm {
                        p: DecomposablePoint::new(vec![
                            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        ]),
                        q: DecomposablePoint::new(vec![
                            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        ]),
                        y: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    })
                    .collect();
                let rep = GammaRepresentation::with_equality_dominators(
                    vec![l2(2), l2(2)],
                    l2(2),
                    terms,
                );
                let u = assemble(&rep).map_err(classify)?;
                let (g_ub, _) =
                    gamma_upper_certified(&rep, 16, &SeededRng::new(cfg.seed)).map_err(classify)?;
                let pairing: f64 = u
                    .coefficients
                    .iter()
                    .zip(t.coefficients.iter())
                    .map(|(a, b)| a * b)
                    .sum();
                let margin = hs.value * g_ub + tol * (1.0 + hs.value * g_ub) - pairing.abs();
                worst = worst.max(pairing.abs() - hs.value * g_ub);
                if margin < 0.0 {
                    all_ok = false;
                }
            }
            checks.push(check(
                "pairing at most Gamma upper x gamma upper",
                all_ok,
                json!({ "rounds": rounds, "worst_excess": worst.max(0.0) }),
            ));
        }
        "gamma-exact" => {
            let spaces = vec![l2(2), l2(2)];
            let term = GammaTerm {
                p: DecomposablePoint::new(vec![e_k(2, 0), e_k(2, 0)]),
                q: DecomposablePoint::new(vec![e_k(2, 1), e_k(2, 1)]),
                y: vec![0.6, 0.8],
            };
            let rep = GammaRepresentation::with_equality_dominators(spaces, l2(2), vec![term]);
            let (upper, ucert) = gamma_upper_certified(&rep, cfg.budget.max(32), &SeededRng::new(cfg.seed))
                .map_err(classify)?;
            let u = assemble(&rep).map_err(classify)?;
            let (lower, lcert) =
                gamma_lower_elementary_certified(&u, cfg.budget.max(100), cfg.seed)
                    .map_err(classify)?;
            checks.push(check(
                "gamma upper at most 2",
                upper <= 2.0 + tol,
                json!({ "upper": upper }),
            ));
            checks.push(check(
                "gamma lower at least 2",
                lower >= 2.0 - tol,
                json!({ "lower": lower }),
            ));
            results.insert(
                "gamma".into(),
                json!({
                    "lower": lower, "upper": upper,
                    "lower_certificate": to_value(&lcert),
                    "upper_certificate": to_value(&ucert),
                }),
            );
        }
        "kwapien-polynomial" => {
            let mut coeffs = ndarray::ArrayD::zeros(ndarray::IxDyn(&[2, 2, 1]));
            coeffs[[0, 0, 0]] = 1.0;
            coeffs[[1, 1, 0]] = -1.0;
            let p = HomogeneousPolynomial::new(2, l2(2), l2(1), coeffs).map_err(classify)?;
            let iv = poly_gamma_interval(&p, cfg.seed, cfg.budget.max(300)).map_err(classify)?;
            let op_iv = gamma_interval(
                &associated_operator(&p).map_err(classify)?,
                cfg.seed,
                cfg.budget.max(200),
            )
            .map_err(classify)?;
            checks.push(check(
                "polynomial witness level reaches 1",
                iv.lower >= 1.0 - tol,
                json!({ "lower": iv.lower }),
            ));
            checks.push(check(
                "polynomial lower below operator upper",
                iv.lower <= op_iv.upper + tol * (1.0 + op_iv.upper),
                json!({ "poly_lower": iv.lower, "operator_upper": bound_value(op_iv.upper) }),
            ));
            results.insert("interval".into(), gamma_interval_value(&iv));
        }
        other => {
            return Err(JobError::Input(format!(
                "unknown preset `{other}`; available: inner-product, sandwich, \
                 metric-equivalence, canonical-map, hilbert-schmidt, rank-one, \
                 kwapien-witness, duality, gamma-exact, kwapien-polynomial"
            )));
        }
    }

    let all_passed = checks.iter().all(|c| c.passed);
    report.checks = checks;
    report.results = Value::Object(results);
    report.status = if all_passed { "ok" } else { "failed" }.into();
    Ok(report)
}
