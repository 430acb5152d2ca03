//! Finite-dimensional ℓ_p space descriptors and norm evaluation.
//!
//! The exponent is stored as an exact rational (or the infinity tag), so
//! [`dual_space`] is an exact involution with 1 ↔ ∞ and p ↔ p/(p−1); no
//! floating drift can accumulate through repeated dualization.
//!
//! Besides the norms themselves this module owns two exact primitives the
//! rest of the crate leans on:
//!
//! - [`linear_form_maximizer`]: the closed-form argmax of ⟨c, x⟩ over an
//!   ℓ_p unit ball (the dual-norm attainer), used by every alternating
//!   sup-norm search;
//! - [`euclidean_embedding_constant`] together with its brute-force
//!   verifier, used by the routing bounds.

use num_rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::{multistart_maximize, SearchDomain, SeededRng};
use crate::{Error, Result};

/// A vector is a plain coordinate array; lengths are validated against the
/// space they are used with.
pub type Vector = Vec<f64>;

/// ℓ_p exponent: an exact rational ≥ 1, or ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Finite(Ratio<i64>),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(Ratio::new_raw(1, 1));
    pub const TWO: Exponent = Exponent::Finite(Ratio::new_raw(2, 1));

    /// Exact conversion from a finite float (every finite f64 is rational).
    pub fn from_f64(p: f64) -> Result<Self> {
        if p.is_nan() {
            return Err(Error::NonFinite("exponent".into()));
        }
        if p.is_infinite() {
            if p > 0.0 {
                return Ok(Exponent::Infinity);
            }
            return Err(Error::InvalidInput("exponent must be >= 1".into()));
        }
        if p < 1.0 {
            return Err(Error::InvalidInput(format!("exponent must be >= 1, got {p}")));
        }
        let (mantissa, exp2, sign) = integer_decode(p);
        let mut num = mantissa as i128 * sign as i128;
        let mut den: i128 = 1;
        if exp2 >= 0 {
            if exp2 > 30 {
                return Err(Error::InvalidInput(format!("exponent too large: {p}")));
            }
            num <<= exp2 as u32;
        } else {
            den <<= (-exp2) as u32;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs());
        num /= g as i128;
        den /= g as i128;
        if num > i64::MAX as i128 || den > i64::MAX as i128 {
            return Err(Error::InvalidInput(format!("exponent not representable: {p}")));
        }
        Ok(Exponent::Finite(Ratio::new(num as i64, den as i64)))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Exponent::Finite(r) if *r == Ratio::from_integer(1))
    }

    pub fn is_two(&self) -> bool {
        matches!(self, Exponent::Finite(r) if *r == Ratio::from_integer(2))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// Conjugate exponent: 1/p + 1/p* = 1, with 1 ↔ ∞. Exact.
    pub fn dual(&self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(r) => {
                if *r == Ratio::from_integer(1) {
                    Exponent::Infinity
                } else {
                    // p/(p-1)
                    Exponent::Finite(*r / (*r - Ratio::from_integer(1)))
                }
            }
        }
    }
}

fn integer_decode(val: f64) -> (u64, i16, i8) {
    let bits = val.to_bits();
    let sign: i8 = if bits >> 63 == 0 { 1 } else { -1 };
    let mut exponent: i16 = ((bits >> 52) & 0x7ff) as i16;
    let mantissa = if exponent == 0 {
        (bits & 0xfffffffffffff) << 1
    } else {
        (bits & 0xfffffffffffff) | 0x10000000000000
    };
    exponent -= 1075;
    (mantissa, exponent, sign)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Infinity => serializer.serialize_str("inf"),
            Exponent::Finite(_) => serializer.serialize_f64(self.as_f64()),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::from_f64(p).map_err(D::Error::custom),
            Raw::Tag(s) if s == "inf" => Ok(Exponent::Infinity),
            Raw::Tag(s) => Err(D::Error::custom(format!("unknown exponent tag {s:?}"))),
        }
    }
}

/// Descriptor of a finite-dimensional ℓ_p space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub dim: usize,
    pub p: Exponent,
}

impl SpaceSpec {
    pub fn new(dim: usize, p: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("space dimension must be >= 1".into()));
        }
        Ok(Self { dim, p })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            dim,
            p: Exponent::TWO,
        }
    }

    /// The scalar line ℝ; used as the codomain of scalar-valued operators.
    pub fn scalar() -> Self {
        Self::euclidean(1)
    }

    pub fn is_euclidean(&self) -> bool {
        self.p.is_two()
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("vector of length {}", self.dim),
                got: format!("length {}", v.len()),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector entries".into()));
        }
        Ok(())
    }
}

/// ℓ_p norm of `v` in `space`.
pub fn norm(space: &SpaceSpec, v: &[f64]) -> Result<f64> {
    space.check_len(v)?;
    Ok(norm_unchecked(space.p, v))
}

pub(crate) fn norm_unchecked(p: Exponent, v: &[f64]) -> f64 {
    match p {
        Exponent::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        Exponent::Finite(_) if p.is_one() => v.iter().map(|x| x.abs()).sum(),
        Exponent::Finite(_) if p.is_two() => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Exponent::Finite(_) => {
            let pf = p.as_f64();
            v.iter().map(|x| x.abs().powf(pf)).sum::<f64>().powf(1.0 / pf)
        }
    }
}

/// Same dimension, conjugate exponent.
pub fn dual_space(space: &SpaceSpec) -> SpaceSpec {
    SpaceSpec {
        dim: space.dim,
        p: space.p.dual(),
    }
}

/// Enumeration cap for the 2^dim vertices of the ℓ_∞ ball.
pub const MAX_SIGN_VERTEX_DIM: usize = 16;

/// Vertices of the unit ball for polyhedral exponents.
///
/// p = 1 gives {±e_k}; p = ∞ gives all sign vectors (dim ≤ 16).
pub fn unit_ball_vertices(space: &SpaceSpec) -> Result<Vec<Vector>> {
    if space.p.is_one() {
        let mut out = Vec::with_capacity(2 * space.dim);
        for k in 0..space.dim {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; space.dim];
                v[k] = sign;
                out.push(v);
            }
        }
        Ok(out)
    } else if space.p.is_infinite() {
        if space.dim > MAX_SIGN_VERTEX_DIM {
            return Err(Error::Budget(format!(
                "2^{} sign vertices exceed the enumeration budget",
                space.dim
            )));
        }
        let mut out = Vec::with_capacity(1 << space.dim);
        for mask in 0u64..(1u64 << space.dim) {
            let v: Vector = (0..space.dim)
                .map(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            out.push(v);
        }
        Ok(out)
    } else {
        Err(Error::Unsupported(format!(
            "unit ball of l_{} is not polyhedral",
            space.p.as_f64()
        )))
    }
}

/// Maximize the linear form ⟨c, x⟩ over the unit ball of `ball`.
///
/// Returns the maximizer and the value, which equals the dual norm of `c`.
/// Exact for every exponent (Hölder attainers in closed form).
pub fn linear_form_maximizer(ball: &SpaceSpec, c: &[f64]) -> Result<(Vector, f64)> {
    ball.check_len(c)?;
    let d = ball.dim;
    if c.iter().all(|&x| x == 0.0) {
        let mut x = vec![0.0; d];
        x[0] = 1.0;
        return Ok((x, 0.0));
    }
    if ball.p.is_infinite() {
        let x: Vector = c.iter().map(|&ci| if ci >= 0.0 { 1.0 } else { -1.0 }).collect();
        let value = c.iter().map(|x| x.abs()).sum();
        return Ok((x, value));
    }
    if ball.p.is_one() {
        let (k, _) = c
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        let mut x = vec![0.0; d];
        x[k] = c[k].signum();
        return Ok((x, c[k].abs()));
    }
    if ball.p.is_two() {
        let n = norm_unchecked(Exponent::TWO, c);
        let x: Vector = c.iter().map(|ci| ci / n).collect();
        return Ok((x, n));
    }
    let q = ball.p.dual().as_f64();
    let p = ball.p.as_f64();
    let dual_norm = c.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    // |x_i| ∝ |c_i|^{q-1}, normalized to the l_p sphere.
    let mut x: Vector = c
        .iter()
        .map(|&ci| ci.signum() * ci.abs().powf(q - 1.0))
        .collect();
    let nx = x.iter().map(|xi| xi.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    for xi in &mut x {
        *xi /= nx;
    }
    Ok((x, dual_norm))
}

/// The least c with ‖v‖₂ ≤ c·‖v‖_p on a d-dimensional space: max(1, d^{1/2−1/p}).
pub fn euclidean_embedding_constant(dim: usize, p: Exponent) -> f64 {
    let inv_p = match p {
        Exponent::Infinity => 0.0,
        Exponent::Finite(_) => 1.0 / p.as_f64(),
    };
    (dim as f64).powf(0.5 - inv_p).max(1.0)
}

/// Brute-force check of [`euclidean_embedding_constant`].
///
/// Maximizes ‖v‖₂ over the ℓ_p unit sphere with deterministic structured
/// starts (basis vectors, the uniform vector) plus seeded multistart, and
/// demands the claimed constant is attained and never exceeded.
pub fn verify_embedding_constant(dim: usize, p: Exponent) -> Result<f64> {
    if dim > 32 {
        return Err(Error::Budget(format!(
            "embedding verification capped at dim 32, got {dim}"
        )));
    }
    let claimed = euclidean_embedding_constant(dim, p);
    let space = SpaceSpec::new(dim, p)?;
    let objective = move |x: &[f64]| norm_unchecked(Exponent::TWO, x);
    let domain = SearchDomain::spheres(&[dim], &[p.as_f64()]);

    let mut attained: f64 = 0.0;
    // Structured starts: the extrema of ‖·‖₂ on an l_p sphere are at a basis
    // vector or at the uniform sign vector.
    let mut starts: Vec<Vector> = Vec::new();
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        starts.push(e);
    }
    starts.push(vec![1.0; dim]);
    for start in starts {
        let mut s = start;
        let n = norm(&space, &s)?;
        if n > 0.0 {
            for x in &mut s {
                *x /= n;
            }
        }
        attained = attained.max(norm_unchecked(Exponent::TWO, &s));
    }
    let (_, searched) =
        multistart_maximize(&objective, &domain, 8, &SeededRng::new(0x0e_b0_5e_ed))?;
    attained = attained.max(searched);

    if attained > claimed * (1.0 + 1e-9) {
        return Err(Error::Refused(format!(
            "embedding constant violated: found {attained}, claimed {claimed}"
        )));
    }
    if attained < claimed * (1.0 - 1e-6) {
        return Err(Error::Refused(format!(
            "embedding constant not attained: found {attained}, claimed {claimed}"
        )));
    }
    Ok(claimed)
}
