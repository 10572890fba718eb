//! Catalog of analytic volume-preserving vector fields on S³ with closed-form contact data.
//!
//! Conventions, shared by every estimator:
//!
//! * the round volume form at `p` is `vol_p(u, v, w) = det[p, u, v, w]`, total mass `2π²`;
//! * the invariant volume is `Ω = ρ · vol / (2π²)` with density `ρ` normalized to mass 1;
//! * `ω = ι_X Ω`, and the primitive `ν` satisfies `dν = ω`;
//! * covectors are represented by ambient ℝ⁴ vectors acting on tangent vectors by the dot product.
//!
//! With `λ₁ = x₁dx₂ − x₂dx₁` and `λ₂ = x₃dx₄ − x₄dx₃`, the linear field
//! `(−a x₂, a x₁, −b x₄, b x₃)` has `ι_X vol = (b dλ₁ + a dλ₂) / 2`, hence
//! `ν = (b λ₁ + a λ₂) / (4π²)` and `ν(X) ≡ ab / (4π²)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::PointS3;
use crate::num::{self, Real, Vec4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("no closed-form primitive is available for this field")]
    NoPrimitiveAvailable,
    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    InvalidStep(f64),
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown field name `{0}`")]
    UnknownField(String),
}

/// Positive analytic factor `f` of a conformally rescaled Hopf field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConformalFactor<T> {
    /// `f(p) = 2 + x₁`
    Default,
    Constant(T),
}

impl<T: Real> ConformalFactor<T> {
    #[inline]
    pub fn eval(&self, x: &Vec4<T>) -> T {
        match self {
            ConformalFactor::Default => T::lit(2.0) + x[0],
            ConformalFactor::Constant(c) => *c,
        }
    }

    #[inline]
    fn gradient(&self, _x: &Vec4<T>) -> Vec4<T> {
        match self {
            ConformalFactor::Default => [T::one(), T::zero(), T::zero(), T::zero()],
            ConformalFactor::Constant(_) => [T::zero(); 4],
        }
    }

    /// `1 / E[1/f]` under the normalized round measure.
    ///
    /// For `f = 2 + x₁` the marginal of `x₁` is `(2/π)√(1−t²)` and
    /// `∫ √(1−t²)/(2+t) dt = π(2 − √3)`, so `E[1/f] = 2(2 − √3)`.
    pub fn normalization(&self) -> T {
        match self {
            ConformalFactor::Default => T::one() / (T::lit(2.0) * (T::lit(2.0) - T::lit(3.0).sqrt())),
            ConformalFactor::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec<T> {
    /// `(−x₂, x₁, −x₄, x₃)`, generating the Hopf fibration.
    Hopf,
    /// `(−x₂, x₁, x₄, −x₃)`; fibers link `−1`.
    AntiHopf,
    /// `(−a x₂, a x₁, −b x₄, b x₃)` with `a, b > 0`.
    EllipsoidReeb { a: T, b: T },
    /// `f · Hopf`, preserving the volume with density proportional to `1/f`.
    ConformalHopf(ConformalFactor<T>),
}

impl<T: Real> FieldSpec<T> {
    pub fn ellipsoid(a: T, b: T) -> Result<Self, FieldError> {
        if !(a > T::zero() && b > T::zero() && a.is_finite() && b.is_finite()) {
            return Err(FieldError::InvalidParameter(format!(
                "ellipsoid rates must be positive, got a={a}, b={b}"
            )));
        }
        Ok(FieldSpec::EllipsoidReeb { a, b })
    }

    pub fn conformal_default() -> Self {
        FieldSpec::ConformalHopf(ConformalFactor::Default)
    }

    /// Rotation rates `(a, b)` of the two complex planes, for linear fields.
    pub fn rates(&self) -> Option<(T, T)> {
        match *self {
            FieldSpec::Hopf => Some((T::one(), T::one())),
            FieldSpec::AntiHopf => Some((T::one(), -T::one())),
            FieldSpec::EllipsoidReeb { a, b } => Some((a, b)),
            FieldSpec::ConformalHopf(_) => None,
        }
    }

    /// Evaluates the field at an ambient point; on the sphere the result is tangent.
    #[inline]
    pub fn eval_raw(&self, x: &Vec4<T>) -> Vec4<T> {
        let (a, b) = match self {
            FieldSpec::ConformalHopf(f) => {
                let s = f.eval(x);
                (s, s)
            }
            _ => self.rates().expect("linear field"),
        };
        [-a * x[1], a * x[0], -b * x[3], b * x[2]]
    }

    pub fn eval(&self, p: &PointS3<T>) -> Vec4<T> {
        self.eval_raw(&p.coords())
    }

    /// The conformal factor `f`; identically 1 for the linear fields.
    pub fn conformal_factor(&self, p: &PointS3<T>) -> T {
        match self {
            FieldSpec::ConformalHopf(f) => f.eval(&p.coords()),
            _ => T::one(),
        }
    }

    /// Density `ρ` of the invariant volume against the normalized round volume.
    #[inline]
    pub fn density_raw(&self, x: &Vec4<T>) -> T {
        match self {
            FieldSpec::ConformalHopf(f) => f.normalization() / f.eval(x),
            _ => T::one(),
        }
    }

    pub fn density(&self, p: &PointS3<T>) -> T {
        self.density_raw(&p.coords())
    }

    /// Gradient of `ρ · X` components is not needed elsewhere; this exposes `∇ρ` for the
    /// analytic divergence check in tests.
    pub fn density_gradient(&self, p: &PointS3<T>) -> Vec4<T> {
        match self {
            FieldSpec::ConformalHopf(f) => {
                let x = p.coords();
                let v = f.eval(&x);
                num::scale(&f.gradient(&x), -f.normalization() / (v * v))
            }
            _ => [T::zero(); 4],
        }
    }

    /// The canonical primitive `ν` of `ω = ι_X Ω`.
    pub fn primitive(&self) -> Result<CanonicalPrimitive<T>, FieldError> {
        let quarter = T::one() / (T::lit(4.0) * T::PI() * T::PI());
        let (c1, c2) = match self {
            FieldSpec::ConformalHopf(f) => {
                let c = f.normalization();
                (c, c)
            }
            _ => {
                let (a, b) = self.rates().expect("linear field");
                (b, a)
            }
        };
        Ok(CanonicalPrimitive {
            c1: c1 * quarter,
            c2: c2 * quarter,
        })
    }

    /// A contact form whose Reeb field is exactly `X`, when one exists in closed form:
    /// `λ₁/a + λ₂/b` for the linear fields. Conformally rescaled fields have none.
    pub fn contact_form(&self, p: &PointS3<T>) -> Option<Vec4<T>> {
        let (a, b) = self.rates()?;
        let x = p.coords();
        Some([
            -x[1] / a,
            x[0] / a,
            -x[3] / b,
            x[2] / b,
        ])
    }

    /// Minimal period of the orbit through `p`, when it is closed and known in closed
    /// form. Ellipsoid orbits off the core circles close only for rational `a/b`;
    /// ratios with denominators up to 64 are recognized.
    pub fn orbit_period(&self, p: &PointS3<T>) -> Option<T> {
        let x = p.coords();
        let tau = T::lit(std::f64::consts::TAU);
        let (r1, r2) = (x[0] * x[0] + x[1] * x[1], x[2] * x[2] + x[3] * x[3]);
        match *self {
            FieldSpec::Hopf | FieldSpec::AntiHopf => Some(tau),
            FieldSpec::ConformalHopf(ConformalFactor::Constant(c)) => Some(tau / c),
            // Along the fiber x₁ = r cos θ with r² = x₁² + x₂², and ∫dθ/(2 + r cos θ) = 2π/√(4 − r²).
            FieldSpec::ConformalHopf(ConformalFactor::Default) => Some(tau / (T::lit(4.0) - r1).sqrt()),
            FieldSpec::EllipsoidReeb { a, b } => {
                let tiny = T::lit(1e-15);
                if r2 <= tiny {
                    return Some(tau / a);
                }
                if r1 <= tiny {
                    return Some(tau / b);
                }
                let ratio = (a / b).as_f64();
                (1..=64u32).find_map(|q| {
                    let p = (ratio * q as f64).round();
                    ((ratio * q as f64 - p).abs() < 1e-12 * q as f64 && p >= 1.0).then(|| tau * T::lit(p) / a)
                })
            }
        }
    }

    /// `ω(u, v) = Ω(X, u, v)` at `p`.
    pub fn omega(&self, p: &PointS3<T>, u: &Vec4<T>, v: &Vec4<T>) -> T {
        let x = p.coords();
        let two_pi2 = T::lit(2.0) * T::PI() * T::PI();
        self.density_raw(&x) * num::det4(&x, &self.eval_raw(&x), u, v) / two_pi2
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn cast<U: Real>(&self) -> FieldSpec<U> {
        match *self {
            FieldSpec::Hopf => FieldSpec::Hopf,
            FieldSpec::AntiHopf => FieldSpec::AntiHopf,
            FieldSpec::EllipsoidReeb { a, b } => FieldSpec::EllipsoidReeb {
                a: U::lit(a.as_f64()),
                b: U::lit(b.as_f64()),
            },
            FieldSpec::ConformalHopf(ConformalFactor::Default) => {
                FieldSpec::ConformalHopf(ConformalFactor::Default)
            }
            FieldSpec::ConformalHopf(ConformalFactor::Constant(c)) => {
                FieldSpec::ConformalHopf(ConformalFactor::Constant(U::lit(c.as_f64())))
            }
        }
    }
}

impl<T: Real> fmt::Display for FieldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Hopf => write!(f, "hopf"),
            FieldSpec::AntiHopf => write!(f, "antihopf"),
            FieldSpec::EllipsoidReeb { a, b } => write!(f, "ellipsoid:a={a},b={b}"),
            FieldSpec::ConformalHopf(ConformalFactor::Default) => write!(f, "conformal:f=default"),
            FieldSpec::ConformalHopf(ConformalFactor::Constant(c)) => write!(f, "conformal:f={c}"),
        }
    }
}

impl<T: Real> FromStr for FieldSpec<T> {
    type Err = FieldError;

    /// Parses `hopf`, `antihopf`, `ellipsoid:a=1,b=2`, `conformal:f=default` or `conformal:f=<c>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = Vec::new();
        for item in params.split(',').filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| FieldError::InvalidParameter(item.to_string()))?;
            kv.push((k.trim(), v.trim()));
        }
        let number = |v: &str| -> Result<T, FieldError> {
            v.parse::<f64>()
                .map(T::lit)
                .map_err(|_| FieldError::InvalidParameter(format!("`{v}` is not a number")))
        };
        let unexpected = |k: &str| FieldError::InvalidParameter(format!("unexpected key `{k}` for {kind}"));
        match kind {
            "hopf" | "antihopf" => {
                if let Some((k, _)) = kv.first() {
                    return Err(unexpected(k));
                }
                Ok(if kind == "hopf" {
                    FieldSpec::Hopf
                } else {
                    FieldSpec::AntiHopf
                })
            }
            "ellipsoid" => {
                let (mut a, mut b) = (None, None);
                for (k, v) in kv {
                    match k {
                        "a" => a = Some(number(v)?),
                        "b" => b = Some(number(v)?),
                        _ => return Err(unexpected(k)),
                    }
                }
                match (a, b) {
                    (Some(a), Some(b)) => FieldSpec::ellipsoid(a, b),
                    _ => Err(FieldError::InvalidParameter("ellipsoid needs a and b".into())),
                }
            }
            "conformal" => {
                let mut factor = ConformalFactor::Default;
                for (k, v) in kv {
                    match (k, v) {
                        ("f", "default") => factor = ConformalFactor::Default,
                        ("f", v) => {
                            let c = number(v)?;
                            if !(c > T::zero()) {
                                return Err(FieldError::InvalidParameter(format!(
                                    "conformal factor must be positive, got {c}"
                                )));
                            }
                            factor = ConformalFactor::Constant(c);
                        }
                        _ => return Err(unexpected(k)),
                    }
                }
                Ok(FieldSpec::ConformalHopf(factor))
            }
            other => Err(FieldError::UnknownField(other.to_string())),
        }
    }
}

/// A one-form on S³, given by an ambient covector field.
pub trait Primitive<T: Real>: Sync {
    fn covector(&self, x: &Vec4<T>) -> Vec4<T>;

    #[inline]
    fn pair(&self, x: &Vec4<T>, v: &Vec4<T>) -> T {
        num::dot(&self.covector(x), v)
    }
}

/// `ν = c₁ λ₁ + c₂ λ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalPrimitive<T> {
    pub c1: T,
    pub c2: T,
}

impl<T: Real> Primitive<T> for CanonicalPrimitive<T> {
    #[inline]
    fn covector(&self, x: &Vec4<T>) -> Vec4<T> {
        [
            -self.c1 * x[1],
            self.c1 * x[0],
            -self.c2 * x[3],
            self.c2 * x[2],
        ]
    }
}

/// `ν + s · dg` for a function `g` given by its ambient gradient.
#[derive(Debug, Clone, Copy)]
pub struct ExactShift<T, P> {
    pub base: P,
    pub scale: T,
    pub gradient: fn(&Vec4<T>) -> Vec4<T>,
}

impl<T: Real, P: Primitive<T>> Primitive<T> for ExactShift<T, P> {
    fn covector(&self, x: &Vec4<T>) -> Vec4<T> {
        num::axpy(&self.base.covector(x), self.scale, &(self.gradient)(x))
    }
}

/// `c · ν`
#[derive(Debug, Clone, Copy)]
pub struct Scaled<T, P> {
    pub base: P,
    pub factor: T,
}

impl<T: Real, P: Primitive<T>> Primitive<T> for Scaled<T, P> {
    fn covector(&self, x: &Vec4<T>) -> Vec4<T> {
        num::scale(&self.base.covector(x), self.factor)
    }
}

/// Ambient gradient of the test function `g = x₁ x₃`.
pub fn grad_x1x3<T: Real>(x: &Vec4<T>) -> Vec4<T> {
    [x[2], T::zero(), x[0], T::zero()]
}

/// `ν(X)(p)` for the canonical primitive.
pub fn eval_primitive<T: Real>(spec: &FieldSpec<T>, p: &PointS3<T>) -> Result<Vec4<T>, FieldError> {
    Ok(spec.primitive()?.covector(&p.coords()))
}

pub fn eval_field<T: Real>(spec: &FieldSpec<T>, p: &PointS3<T>) -> Vec4<T> {
    spec.eval(p)
}

/// Orthonormal basis of the tangent space at `x`, oriented so that
/// `det[x, e₁, e₂, e₃] = +1`.
pub fn tangent_frame<T: Real>(x: &Vec4<T>) -> [Vec4<T>; 3] {
    let mut basis: Vec<Vec4<T>> = Vec::with_capacity(3);
    // Gram-Schmidt over the coordinate axes, skipping the one most aligned with x.
    let skip = (0..4)
        .max_by(|&i, &j| x[i].abs().partial_cmp(&x[j].abs()).unwrap())
        .unwrap();
    for k in (0..4).filter(|&k| k != skip) {
        let mut e = [T::zero(); 4];
        e[k] = T::one();
        let mut v = num::reject(&e, x);
        for b in &basis {
            v = num::reject(&v, b);
        }
        let n = num::norm(&v);
        basis.push(num::scale(&v, T::one() / n));
    }
    let mut frame = [basis[0], basis[1], basis[2]];
    if num::det4(x, &frame[0], &frame[1], &frame[2]) < T::zero() {
        frame[2] = num::scale(&frame[2], -T::one());
    }
    frame
}

#[inline]
fn great_circle<T: Real>(x: &Vec4<T>, u: &Vec4<T>, s: T) -> Vec4<T> {
    num::axpy(&num::scale(x, s.cos()), s.sin(), u)
}

/// Central-difference divergence of `X` with respect to its invariant volume,
/// `(1/ρ) Σᵢ ⟨∂_{eᵢ}(ρX), eᵢ⟩`, with stencil points on great circles through `p`.
pub fn divergence_defect<T: Real>(spec: &FieldSpec<T>, p: &PointS3<T>, h: T) -> Result<T, FieldError> {
    if !(h >= T::lit(1e-6) && h <= T::lit(1e-2)) {
        return Err(FieldError::InvalidStep(h.as_f64()));
    }
    let x = p.coords();
    let weighted = |y: &Vec4<T>| num::scale(&spec.eval_raw(y), spec.density_raw(y));
    let mut div = T::zero();
    for e in tangent_frame(&x) {
        let fwd = weighted(&great_circle(&x, &e, h));
        let bwd = weighted(&great_circle(&x, &e, -h));
        div = div + num::dot(&num::sub(&fwd, &bwd), &e) / (T::lit(2.0) * h);
    }
    Ok(div / spec.density_raw(&x))
}

/// Central-difference exterior derivative `dν(u, v)` at `p` for unit tangent `u`, `v`:
/// `∂_u ⟨ν, v⟩ − ∂_v ⟨ν, u⟩` with `u`, `v` parallel along the stencil great circles
/// to first order.
pub fn exterior_derivative_fd<T: Real, P: Primitive<T>>(
    nu: &P,
    p: &PointS3<T>,
    u: &Vec4<T>,
    v: &Vec4<T>,
    h: T,
) -> T {
    let x = p.coords();
    let two_h = T::lit(2.0) * h;
    let du = (nu.pair(&great_circle(&x, u, h), v) - nu.pair(&great_circle(&x, u, -h), v)) / two_h;
    let dv = (nu.pair(&great_circle(&x, v, h), u) - nu.pair(&great_circle(&x, v, -h), u)) / two_h;
    du - dv
}

/// `1/(4π²)` as `f64`.
pub const INV_FOUR_PI2: f64 = 1.0 / (4.0 * PI * PI);
