//! Closed-form holomorphic expressions on the closed disk and piecewise
//! closed-form driving coefficients in time.
//!
//! [`HoloExpr`] is a small expression language whose node set is chosen so
//! that every expression is holomorphic on a neighbourhood of the closed unit
//! disk. That buys two things: boundary evaluation is always defined (the
//! characteristic ODE of the chain starts on `|z| = 1`), and by the maximum
//! modulus principle a sup-norm bound only has to be checked on the circle.
//! Bounds are *declared* by the caller and *falsified* by dense sampling;
//! no interval arithmetic is attempted.
//!
//! [`TimeCoefficient`] models bounded measurable driving functions of
//! `t in [0, inf)` as finitely many closed-form pieces. Piece boundaries are
//! the exceptional times that adaptive integrators must not step across, and
//! pieces of the form `c e^{i alpha log t}` oscillate without limit as
//! `t -> 0+`, which is flagged so downstream consumers can cap step sizes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack used when falsifying a declared bound against samples.
/// One part in 1e12 absorbs evaluation roundoff without hiding real
/// violations, which in practice are O(1e-2) or larger.
pub const BOUND_SLACK: f64 = 1e-12;

/// Tolerance on `|z| <= 1` for evaluation points.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Default boundary sample count for bound certification (2^14).
pub const DEFAULT_CERT_SAMPLES: usize = 1 << 14;

/// Sampling window used to falsify bounds on pieces with no finite right
/// endpoint. Exponential pieces have `Re beta <= 0` so nothing grows past
/// this horizon.
const INFINITE_PIECE_WINDOW: f64 = 24.0;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("evaluation point with |z| = {modulus} lies outside the closed disk")]
    Domain { modulus: f64 },
    #[error("declared bound {declared} falsified: |value| = {observed} at boundary angle {theta}")]
    BoundViolation {
        declared: f64,
        observed: f64,
        theta: f64,
    },
    #[error("sup-norm estimation needs at least 1024 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid expression: {0}")]
    Invalid(String),
}

pub(crate) mod cpx {
    //! Complex numbers serialize as `[re, im]` pairs.
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

pub(crate) mod cpx_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// One node of a closed-form bounded holomorphic expression.
///
/// Every variant is holomorphic on a neighbourhood of the closed disk:
/// the Mobius factor requires `|a| < 1` (pole at `1/conj(a)` stays outside),
/// the dilation requires `0 < rho <= 1`, and the cardinal sine is entire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExprNode {
    /// Complex constant.
    Const {
        #[serde(with = "cpx")]
        c: Complex64,
    },
    /// Polynomial `c0 + c1 z + c2 z^2 + ...`.
    Poly {
        #[serde(with = "cpx_vec")]
        coeffs: Vec<Complex64>,
    },
    /// Disk automorphism `(z - a)/(1 - conj(a) z)`, `|a| < 1`. Unimodular on
    /// the unit circle.
    Mobius {
        #[serde(with = "cpx")]
        a: Complex64,
    },
    /// Cardinal sine `sin(z)/z`, value 1 at `z = 0`.
    Sinc,
    /// Squared cardinal sine `(sin(z)/z)^2`.
    Sinc2,
    Sum { terms: Vec<ExprNode> },
    Prod { factors: Vec<ExprNode> },
    /// Scalar multiple `c * inner(z)`.
    Scale {
        #[serde(with = "cpx")]
        c: Complex64,
        inner: Box<ExprNode>,
    },
    /// Integer power `inner(z)^n`, `n >= 1`.
    Pow { n: u32, inner: Box<ExprNode> },
    /// Composition with the dilation `z -> rho z`, `0 < rho <= 1`.
    Dilate { rho: f64, inner: Box<ExprNode> },
}

impl ExprNode {
    /// The identity `z`, expressed as the polynomial `0 + 1*z`.
    pub fn z() -> ExprNode {
        ExprNode::Poly {
            coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn constant(re: f64, im: f64) -> ExprNode {
        ExprNode::Const {
            c: Complex64::new(re, im),
        }
    }

    fn validate(&self) -> Result<(), ExprError> {
        match self {
            ExprNode::Const { .. } | ExprNode::Sinc | ExprNode::Sinc2 => Ok(()),
            ExprNode::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(ExprError::Invalid("empty polynomial".into()));
                }
                Ok(())
            }
            ExprNode::Mobius { a } => {
                if a.norm() < 1.0 {
                    Ok(())
                } else {
                    Err(ExprError::Invalid(format!(
                        "mobius parameter |a| = {} must be < 1",
                        a.norm()
                    )))
                }
            }
            ExprNode::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            ExprNode::Prod { factors } => factors.iter().try_for_each(|f| f.validate()),
            ExprNode::Scale { inner, .. } => inner.validate(),
            ExprNode::Pow { n, inner } => {
                if *n == 0 {
                    return Err(ExprError::Invalid("pow exponent must be >= 1".into()));
                }
                inner.validate()
            }
            ExprNode::Dilate { rho, inner } => {
                if !(*rho > 0.0 && *rho <= 1.0) {
                    return Err(ExprError::Invalid(format!(
                        "dilation factor rho = {rho} must lie in (0, 1]"
                    )));
                }
                inner.validate()
            }
        }
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            ExprNode::Const { c } => *c,
            ExprNode::Poly { coeffs } => {
                // Horner.
                let mut v = Complex64::new(0.0, 0.0);
                for c in coeffs.iter().rev() {
                    v = v * z + c;
                }
                v
            }
            ExprNode::Mobius { a } => (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z),
            ExprNode::Sinc => sinc(z),
            ExprNode::Sinc2 => {
                let s = sinc(z);
                s * s
            }
            ExprNode::Sum { terms } => terms.iter().map(|t| t.eval(z)).sum(),
            ExprNode::Prod { factors } => factors
                .iter()
                .map(|f| f.eval(z))
                .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v),
            ExprNode::Scale { c, inner } => c * inner.eval(z),
            ExprNode::Pow { n, inner } => inner.eval(z).powu(*n),
            ExprNode::Dilate { rho, inner } => inner.eval(rho * z),
        }
    }
}

/// `sin(z)/z` with the removable singularity filled in by its Taylor series.
/// The series through `z^6` keeps the relative error below 1e-17 for
/// `|z| < 1e-2`, beyond the direct quotient's roundoff.
fn sinc(z: Complex64) -> Complex64 {
    if z.norm_sqr() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0
    } else {
        z.sin() / z
    }
}

#[derive(Deserialize)]
struct HoloExprRaw {
    bound: f64,
    expr: ExprNode,
}

/// A closed-form bounded holomorphic function on the closed unit disk,
/// together with a declared sup-norm bound.
///
/// The bound is part of the data: norm budgets of coefficient families are
/// computed from declared bounds, and [`HoloExpr::sup_norm_circle`] falsifies
/// a wrong declaration by dense boundary sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HoloExprRaw")]
pub struct HoloExpr {
    bound: f64,
    expr: ExprNode,
}

impl TryFrom<HoloExprRaw> for HoloExpr {
    type Error = ExprError;
    fn try_from(raw: HoloExprRaw) -> Result<Self, ExprError> {
        HoloExpr::new(raw.expr, raw.bound)
    }
}

/// Result of a boundary sup-norm estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupNormReport {
    /// Maximum of `|expr|` over the sampled circle.
    pub max_observed: f64,
    /// The declared bound the estimate was checked against.
    pub declared_bound: f64,
    pub radius: f64,
    pub samples: usize,
}

impl HoloExpr {
    pub fn new(expr: ExprNode, bound: f64) -> Result<Self, ExprError> {
        expr.validate()?;
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(ExprError::Invalid(format!(
                "declared bound {bound} must be finite and nonnegative"
            )));
        }
        Ok(HoloExpr { bound, expr })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn node(&self) -> &ExprNode {
        &self.expr
    }

    /// Evaluate at a point of the closed disk.
    ///
    /// Points with `|z| > 1 + 1e-12` are rejected; the node set guarantees
    /// no pole can be hit inside the tolerance band.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, ExprError> {
        let m = z.norm();
        if m > 1.0 + DOMAIN_TOL {
            return Err(ExprError::Domain { modulus: m });
        }
        Ok(self.expr.eval(z))
    }

    /// Maximum of `|expr|` over `samples` equispaced points of the circle of
    /// the given radius, checked against the declared bound.
    ///
    /// Errors with [`ExprError::BoundViolation`] if any sample exceeds the
    /// declared bound (beyond roundoff slack): the declaration is wrong and
    /// every budget derived from it is meaningless.
    pub fn sup_norm_circle(&self, radius: f64, samples: usize) -> Result<SupNormReport, ExprError> {
        if samples < 1024 {
            return Err(ExprError::TooFewSamples(samples));
        }
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(ExprError::Invalid(format!(
                "sup-norm radius {radius} must lie in (0, 1]"
            )));
        }
        let mut max_observed = 0.0f64;
        let mut max_theta = 0.0f64;
        for j in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            let v = self.expr.eval(Complex64::from_polar(radius, theta)).norm();
            if v > max_observed {
                max_observed = v;
                max_theta = theta;
            }
        }
        if max_observed > self.bound * (1.0 + BOUND_SLACK) + f64::EPSILON {
            return Err(ExprError::BoundViolation {
                declared: self.bound,
                observed: max_observed,
                theta: max_theta,
            });
        }
        Ok(SupNormReport {
            max_observed,
            declared_bound: self.bound,
            radius,
            samples,
        })
    }
}

/// One closed-form piece of a driving coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoeffForm {
    Const {
        #[serde(with = "cpx")]
        c: Complex64,
    },
    /// `c * e^{i alpha log t}`. Constant modulus, oscillation accumulating
    /// at `t = 0`.
    LogOsc {
        #[serde(with = "cpx")]
        c: Complex64,
        alpha: f64,
    },
    /// `c * e^{beta t}` with `Re beta <= 0`, so boundedness on `[0, inf)` is
    /// structural.
    Exp {
        #[serde(with = "cpx")]
        c: Complex64,
        #[serde(with = "cpx")]
        beta: Complex64,
    },
    Sum { terms: Vec<CoeffForm> },
    Prod { factors: Vec<CoeffForm> },
}

impl CoeffForm {
    fn validate(&self) -> Result<(), ExprError> {
        match self {
            CoeffForm::Const { .. } | CoeffForm::LogOsc { .. } => Ok(()),
            CoeffForm::Exp { beta, .. } => {
                if beta.re <= 0.0 {
                    Ok(())
                } else {
                    Err(ExprError::Invalid(format!(
                        "exponential rate Re beta = {} must be <= 0",
                        beta.re
                    )))
                }
            }
            CoeffForm::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            CoeffForm::Prod { factors } => factors.iter().try_for_each(|f| f.validate()),
        }
    }

    fn contains_log_osc(&self) -> bool {
        match self {
            CoeffForm::LogOsc { alpha, .. } => *alpha != 0.0,
            CoeffForm::Sum { terms } => terms.iter().any(|t| t.contains_log_osc()),
            CoeffForm::Prod { factors } => factors.iter().any(|f| f.contains_log_osc()),
            _ => false,
        }
    }

    /// Evaluate at `t > 0` (also defined at `t = 0` except for `LogOsc`,
    /// where `log 0` produces NaN; such coefficients flag `t = 0` and
    /// integrators stop short of it).
    fn eval(&self, t: f64) -> Complex64 {
        match self {
            CoeffForm::Const { c } => *c,
            CoeffForm::LogOsc { c, alpha } => {
                let phase = alpha * t.ln();
                c * Complex64::from_polar(1.0, phase)
            }
            CoeffForm::Exp { c, beta } => c * (beta * t).exp(),
            CoeffForm::Sum { terms } => terms.iter().map(|f| f.eval(t)).sum(),
            CoeffForm::Prod { factors } => factors
                .iter()
                .map(|f| f.eval(t))
                .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v),
        }
    }
}

/// One interval of a piecewise coefficient: active on `[t_lo, t_hi)`,
/// `t_hi = None` meaning `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t_lo: f64,
    pub t_hi: Option<f64>,
    pub form: CoeffForm,
}

#[derive(Deserialize)]
struct TimeCoefficientRaw {
    bound: f64,
    pieces: Vec<Piece>,
}

/// A bounded measurable driving coefficient `a(t)` on `[0, inf)`, given as
/// finitely many closed-form pieces plus a declared sup bound.
///
/// Pieces tile `[0, inf)` exactly. Evaluation at a piece boundary takes the
/// right-limit piece; any single-point convention is equivalent for the
/// measure-theoretic role these coefficients play, and the right limit
/// matches the forward flow of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeCoefficientRaw")]
pub struct TimeCoefficient {
    bound: f64,
    pieces: Vec<Piece>,
}

impl TryFrom<TimeCoefficientRaw> for TimeCoefficient {
    type Error = ExprError;
    fn try_from(raw: TimeCoefficientRaw) -> Result<Self, ExprError> {
        TimeCoefficient::new(raw.pieces, raw.bound)
    }
}

impl TimeCoefficient {
    pub fn new(pieces: Vec<Piece>, bound: f64) -> Result<Self, ExprError> {
        if pieces.is_empty() {
            return Err(ExprError::Invalid("coefficient needs at least one piece".into()));
        }
        if pieces[0].t_lo != 0.0 {
            return Err(ExprError::Invalid(format!(
                "first piece must start at t = 0, starts at {}",
                pieces[0].t_lo
            )));
        }
        for w in pieces.windows(2) {
            match w[0].t_hi {
                Some(hi) if hi == w[1].t_lo => {}
                _ => {
                    return Err(ExprError::Invalid(
                        "pieces must tile [0, inf) with matching endpoints".into(),
                    ))
                }
            }
            if !(w[1].t_lo > w[0].t_lo) {
                return Err(ExprError::Invalid("piece breakpoints must increase".into()));
            }
        }
        if pieces.last().unwrap().t_hi.is_some() {
            return Err(ExprError::Invalid("last piece must extend to +inf".into()));
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(ExprError::Invalid(format!(
                "declared bound {bound} must be finite and nonnegative"
            )));
        }
        for p in &pieces {
            p.form.validate()?;
        }
        Ok(TimeCoefficient { bound, pieces })
    }

    /// Constant coefficient on all of `[0, inf)`.
    pub fn constant(c: Complex64) -> TimeCoefficient {
        TimeCoefficient {
            bound: c.norm(),
            pieces: vec![Piece {
                t_lo: 0.0,
                t_hi: None,
                form: CoeffForm::Const { c },
            }],
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Value of the active piece at `t >= 0` (right-limit convention at
    /// breakpoints).
    pub fn eval(&self, t: f64) -> Complex64 {
        assert!(t >= 0.0, "driving coefficients are defined for t >= 0");
        let idx = self
            .pieces
            .iter()
            .rposition(|p| p.t_lo <= t)
            .expect("first piece starts at 0");
        self.pieces[idx].form.eval(t)
    }

    /// Interior breakpoints, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.t_lo).collect()
    }

    /// True when some piece carries a `log t` oscillation, so that `t = 0`
    /// is an accumulation point of oscillation and must be approached with
    /// capped steps (and never evaluated exactly).
    pub fn oscillatory_at_zero(&self) -> bool {
        self.pieces.iter().any(|p| p.form.contains_log_osc())
    }

    /// Falsify the declared bound by dense sampling on every piece.
    /// Unbounded pieces are sampled over a fixed window past their left
    /// endpoint; nothing in the node set grows with `t`.
    pub fn certify(&self, samples_per_piece: usize) -> Result<f64, ExprError> {
        let mut max_observed = 0.0f64;
        for p in &self.pieces {
            let hi = p.t_hi.unwrap_or(p.t_lo + INFINITE_PIECE_WINDOW);
            let width = hi - p.t_lo;
            for j in 0..samples_per_piece {
                // Interior sample points: never exactly a breakpoint, never
                // exactly 0 (log-osc pieces are singular there).
                let t = p.t_lo + width * (j as f64 + 0.5) / samples_per_piece as f64;
                let v = p.form.eval(t).norm();
                if v > max_observed {
                    max_observed = v;
                }
            }
        }
        if max_observed > self.bound * (1.0 + BOUND_SLACK) + f64::EPSILON {
            return Err(ExprError::BoundViolation {
                declared: self.bound,
                observed: max_observed,
                theta: f64::NAN,
            });
        }
        Ok(max_observed)
    }
}
