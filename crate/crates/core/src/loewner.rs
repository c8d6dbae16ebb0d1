//! Evaluation of the inverse Loewner chain by backward characteristics.
//!
//! The chain `omega(z, t)` solves
//!
//! ```text
//! d/dt omega(z, t) = -z omega'(z, t) q(z, t),    omega(z, 0) = z,
//! ```
//!
//! where `q = (1 + psi)/(1 - psi)` has positive real part because the
//! driving family satisfies `|psi| <= k < 1`. Along solutions of the
//! characteristic equation `zeta' = zeta q(zeta, s)` the chain is constant,
//! so a point value is obtained by solving the characteristic backward from
//! `zeta(t) = z` to `s = 0` and returning `zeta(0)`. Backward in `s` the
//! modulus can only shrink (`d|zeta|/ds = |zeta| Re q > 0`), which gives the
//! Schwarz bound `|omega(z, t)| <= |z|` and keeps the flow inside the disk,
//! where the driving family is defined.
//!
//! The integrator is an embedded Dormand-Prince 5(4) pair with PI step
//! control. Steps never straddle a driving-coefficient breakpoint: the
//! equation only holds for a.e. `t` and `q` is non-smooth in `t` across
//! them, so the interval is split there.
//!
//! Families flagged as oscillatory at the origin (a `log t` phase in some
//! coefficient) get special treatment on the segment adjacent to `t = 0`.
//! The phase derivative grows like `1/s`, so no step policy in `s` resolves
//! it; in the substituted time `u = log s` the same integrand has a fixed
//! wavelength and an `e^u` damping factor, and the controller meets full
//! tolerance with steps that are automatically proportional to `s`. The
//! sliver `s < 1e-16` is then truncated outright: `|q|` is bounded, so the
//! discarded contribution is below `4e-16` in relative terms, and `q` has
//! no value at `s = 0` anyway.
//!
//! `b(t) = omega'(0, t) = exp(-int_0^t q(0, s) ds)` is computed by the same
//! adaptive machinery applied to the integrand `q(0, s)`, split at
//! breakpoints. It decays at least like `e^{-t (1-k)/(1+k)}`.

use crate::beltrami::{BeltramiSpec, SpecError};
use num_complex::Complex64;
use thiserror::Error;

/// Time below which a flagged oscillatory origin is truncated. The endpoint
/// error committed is bounded by `max|q| * OSC_TIME_FLOOR`, i.e. a few 1e-16,
/// under every tolerance in use.
pub const OSC_TIME_FLOOR: f64 = 1e-16;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("adaptive step failed at s = {at}: normalized local error {err} at minimal step")]
    StepFailure { at: f64, err: f64 },
    #[error("characteristic escaped the disk at s = {at}: |zeta| = {modulus}")]
    Escape { at: f64, modulus: f64 },
    #[error("Herglotz invariant violated at t = {t}: Re q = {re_q} (corrupted family?)")]
    Invariant { t: f64, re_q: f64 },
    #[error("chain evaluation point invalid: {0}")]
    Domain(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Integration statistics for one chain evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: u32,
    pub rejected: u32,
}

impl OdeStats {
    fn absorb(&mut self, other: OdeStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

/// A validated driving family together with the derived Herglotz data.
///
/// Construction certifies the norm budget, so `k < 1` and thus
/// `Re q >= (1-k)/(1+k) > 0` everywhere; the divergence condition
/// `int_0^inf Re q(0, t) dt = +inf` holds automatically.
#[derive(Debug, Clone)]
pub struct HerglotzFamily {
    spec: BeltramiSpec,
    k: f64,
    breakpoints: Vec<f64>,
    oscillatory_at_zero: bool,
}

impl HerglotzFamily {
    pub fn new(spec: BeltramiSpec) -> Result<HerglotzFamily, SpecError> {
        let report = spec.validate_default()?;
        let breakpoints = spec.breakpoints();
        let oscillatory_at_zero = spec.oscillatory_at_zero();
        Ok(HerglotzFamily {
            spec,
            k: report.k,
            breakpoints,
            oscillatory_at_zero,
        })
    }

    pub fn spec(&self) -> &BeltramiSpec {
        &self.spec
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn oscillatory_at_zero(&self) -> bool {
        self.oscillatory_at_zero
    }

    /// Lower bound on `Re q` implied by the budget.
    pub fn herglotz_floor(&self) -> f64 {
        (1.0 - self.k) / (1.0 + self.k)
    }

    /// `q(z, t) = (1 + psi_t(z)) / (1 - psi_t(z))`.
    pub fn q_at(&self, z: Complex64, t: f64) -> Result<Complex64, ChainError> {
        let psi = self.spec.psi_at(z, t)?;
        let q = (Complex64::new(1.0, 0.0) + psi) / (Complex64::new(1.0, 0.0) - psi);
        // Cannot fire while |psi| <= k < 1 holds; also catches NaN from
        // evaluating a log-oscillating coefficient at exactly t = 0.
        if !(q.re > 0.0) {
            return Err(ChainError::Invariant { t, re_q: q.re });
        }
        Ok(q)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Difference between the 5th order and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct StepperOpts {
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    /// Reject states outside this modulus (backward characteristics only).
    escape_radius: Option<f64>,
}

/// One recorded point of a characteristic trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub s: f64,
    pub zeta: Complex64,
    pub step: f64,
}

/// Integrate `y' = f(s, y)` from `s0` to `s1` (either direction) with the
/// embedded pair; returns the endpoint state.
fn dopri5<F>(
    mut f: F,
    s0: f64,
    s1: f64,
    y0: Complex64,
    opts: &StepperOpts,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<(Complex64, OdeStats), ChainError>
where
    F: FnMut(f64, Complex64) -> Result<Complex64, ChainError>,
{
    let span = (s1 - s0).abs();
    let mut stats = OdeStats::default();
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = (s1 - s0).signum();
    let h_floor = 1e-14 * (1.0 + span);

    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, y)?;
    let mut h = (span * 1e-2).min(opts.max_step).min(span);
    let mut facold: f64 = 1e-4;

    // PI controller constants for order 5 (Hairer's dopri5 values).
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let fac_min = 0.2; // strongest shrink per step
    let fac_max = 5.0; // strongest growth per step

    loop {
        let remaining = (s1 - s).abs();
        if remaining <= 1e-15 * (1.0 + span) {
            return Ok((y, stats));
        }
        h = h.min(opts.max_step).min(remaining);
        let hs = dir * h;

        let k2 = f(s + C[1] * hs, y + hs * (A2[0] * k1))?;
        let k3 = f(s + C[2] * hs, y + hs * (A3[0] * k1 + A3[1] * k2))?;
        let k4 = f(s + C[3] * hs, y + hs * (A4[0] * k1 + A4[1] * k2 + A4[2] * k3))?;
        let k5 = f(
            s + C[4] * hs,
            y + hs * (A5[0] * k1 + A5[1] * k2 + A5[2] * k3 + A5[3] * k4),
        )?;
        let k6 = f(
            s + C[5] * hs,
            y + hs * (A6[0] * k1 + A6[1] * k2 + A6[2] * k3 + A6[3] * k4 + A6[4] * k5),
        )?;
        let y_new = y + hs * (B[0] * k1 + B[2] * k3 + B[3] * k4 + B[4] * k5 + B[5] * k6);
        let k7 = f(s + hs, y_new)?;
        let err_vec =
            hs * (E[0] * k1 + E[2] * k3 + E[3] * k4 + E[4] * k5 + E[5] * k6 + E[6] * k7);
        let scale = opts.abs_tol + opts.rel_tol * y.norm().max(y_new.norm());
        let err = (err_vec.norm() / scale).max(1e-30);

        if err <= 1.0 {
            stats.accepted += 1;
            s += hs;
            y = y_new;
            k1 = k7; // first-same-as-last
            if let Some(r) = opts.escape_radius {
                let m = y.norm();
                if m > r {
                    return Err(ChainError::Escape { at: s, modulus: m });
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TracePoint { s, zeta: y, step: h });
            }
            let fac11 = err.powf(expo1);
            let fac = (fac11 / facold.powf(beta) / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
            h /= fac;
            facold = err.max(1e-4);
        } else {
            stats.rejected += 1;
            let fac11 = err.powf(expo1);
            h /= (fac11 / safe).min(1.0 / fac_min);
            if h < h_floor {
                return Err(ChainError::StepFailure { at: s, err });
            }
        }
    }
}

/// Chain evaluator: owns the validated family and the integration controls.
///
/// Immutable after construction; every evaluation owns its integration
/// state, so values are deterministic and calls may run concurrently.
#[derive(Debug, Clone)]
pub struct ChainEvaluator {
    family: HerglotzFamily,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    osc_floor: f64,
}

impl ChainEvaluator {
    pub fn new(family: HerglotzFamily) -> ChainEvaluator {
        ChainEvaluator {
            family,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            osc_floor: OSC_TIME_FLOOR,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> ChainEvaluator {
        assert!(rel_tol > 0.0 && abs_tol >= 0.0);
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> ChainEvaluator {
        assert!(max_step > 0.0);
        self.max_step = max_step;
        self
    }

    /// Truncation time near a flagged oscillatory origin.
    pub fn with_osc_floor(mut self, osc_floor: f64) -> ChainEvaluator {
        assert!(osc_floor > 0.0 && osc_floor < 1e-3);
        self.osc_floor = osc_floor;
        self
    }

    pub fn family(&self) -> &HerglotzFamily {
        &self.family
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    fn opts(&self, escape: bool) -> StepperOpts {
        StepperOpts {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            escape_radius: if escape {
                Some(1.0 + 10.0 * self.rel_tol.max(1e-12))
            } else {
                None
            },
        }
    }

    /// Breakpoints strictly inside `(lo, hi)`, ascending.
    fn cuts(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.family
            .breakpoints()
            .iter()
            .copied()
            .filter(|b| *b > lo && *b < hi)
            .collect()
    }

    /// `omega(z, t) = zeta(0)` for the characteristic through `zeta(t) = z`.
    pub fn omega(&self, z: Complex64, t: f64) -> Result<Complex64, ChainError> {
        Ok(self.omega_detailed(z, t, None)?.0)
    }

    /// As [`ChainEvaluator::omega`], returning integration statistics and
    /// optionally recording the trajectory.
    pub fn omega_detailed(
        &self,
        z: Complex64,
        t: f64,
        trace: Option<&mut Vec<TracePoint>>,
    ) -> Result<(Complex64, OdeStats), ChainError> {
        let m = z.norm();
        if m == 0.0 {
            return Err(ChainError::Domain("omega needs 0 < |z| <= 1".into()));
        }
        if m > 1.0 + 10.0 * self.rel_tol.max(1e-12) {
            return Err(ChainError::Domain(format!(
                "omega start |z| = {m} outside the closed disk"
            )));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ChainError::Domain(format!(
                "omega needs finite t >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok((z, OdeStats::default()));
        }
        self.characteristic(z, t, 0.0, trace)
    }

    /// Integrate the characteristic backward from `zeta(from) = z` to
    /// `s = to`, splitting at breakpoints and switching to logarithmic time
    /// on a flagged segment adjacent to the origin.
    fn characteristic(
        &self,
        z: Complex64,
        from: f64,
        to: f64,
        mut trace: Option<&mut Vec<TracePoint>>,
    ) -> Result<(Complex64, OdeStats), ChainError> {
        debug_assert!(to < from);
        let mut edges = vec![to];
        edges.extend(self.cuts(to, from));
        edges.push(from);

        let mut stats = OdeStats::default();
        let mut y = z;
        for w in edges.windows(2).rev() {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let log_leg = lo == 0.0 && self.family.oscillatory_at_zero();
            let (y2, st) = if log_leg {
                // u = log s: fixed oscillation wavelength, e^u damping.
                let mark = trace.as_deref().map_or(0, |t| t.len());
                let res = dopri5(
                    |u, zeta| {
                        let s = u.exp();
                        Ok(zeta * self.family.q_at(zeta, s)? * s)
                    },
                    hi.ln(),
                    self.osc_floor.ln(),
                    y,
                    &self.opts(true),
                    trace.as_deref_mut(),
                )?;
                if let Some(tr) = trace.as_deref_mut() {
                    for p in tr[mark..].iter_mut() {
                        let u = p.s;
                        p.s = u.exp();
                        p.step *= p.s; // du -> approximate ds
                    }
                }
                res
            } else {
                dopri5(
                    |s, zeta| Ok(zeta * self.family.q_at(zeta, s)?),
                    hi,
                    lo,
                    y,
                    &self.opts(true),
                    trace.as_deref_mut(),
                )?
            };
            y = y2;
            stats.absorb(st);
        }
        Ok((y, stats))
    }

    /// Two-leg evaluation `t -> mid -> 0` of the same characteristic; agrees
    /// with [`ChainEvaluator::omega`] up to tolerance by the semigroup
    /// property of the flow. Exposed for consistency checking.
    pub fn omega_via(&self, z: Complex64, t: f64, mid: f64) -> Result<Complex64, ChainError> {
        assert!(mid >= 0.0 && mid <= t);
        if mid == 0.0 {
            return self.omega(z, t);
        }
        let part = self.characteristic(z, t, mid, None)?.0;
        Ok(self.characteristic(part, mid, 0.0, None)?.0)
    }

    /// `b(t) = omega'(0, t) = exp(-int_0^t q(0, s) ds)` by adaptive
    /// quadrature split at breakpoints.
    pub fn omega_prime_zero(&self, t: f64) -> Result<Complex64, ChainError> {
        Ok(self.omega_prime_zero_detailed(t)?.0)
    }

    pub fn omega_prime_zero_detailed(&self, t: f64) -> Result<(Complex64, OdeStats), ChainError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ChainError::Domain(format!(
                "b(t) needs finite t >= 0, got {t}"
            )));
        }
        let mut stats = OdeStats::default();
        if t == 0.0 {
            return Ok((Complex64::new(1.0, 0.0), stats));
        }
        let mut edges = vec![0.0];
        edges.extend(self.cuts(0.0, t));
        edges.push(t);

        // The integral is O(t); a pure-relative error scale would make the
        // first step from y = 0 unpayable.
        let mut opts = self.opts(false);
        opts.abs_tol = opts.abs_tol.max(1e-14);

        let origin = Complex64::new(0.0, 0.0);
        let mut integral = Complex64::new(0.0, 0.0);
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let log_leg = lo == 0.0 && self.family.oscillatory_at_zero();
            let (val, st) = if log_leg {
                dopri5(
                    |u, _| {
                        let s = u.exp();
                        Ok(self.family.q_at(origin, s)? * s)
                    },
                    self.osc_floor.ln(),
                    hi.ln(),
                    integral,
                    &opts,
                    None,
                )?
            } else {
                dopri5(|s, _| self.family.q_at(origin, s), lo, hi, integral, &opts, None)?
            };
            integral = val;
            stats.absorb(st);
        }
        Ok(((-integral).exp(), stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn evaluator(spec: crate::beltrami::BeltramiSpec) -> ChainEvaluator {
        ChainEvaluator::new(HerglotzFamily::new(spec).unwrap())
    }

    #[test]
    fn q_examples() {
        let id = HerglotzFamily::new(presets::identity()).unwrap();
        assert!((id.q_at(c(0.3, 0.2), 1.0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let f = HerglotzFamily::new(presets::constant_psi(c(0.3, 0.0))).unwrap();
        assert!((f.q_at(c(0.0, 0.0), 0.5).unwrap() - c(13.0 / 7.0, 0.0)).norm() < 1e-15);

        let g = HerglotzFamily::new(presets::constant_psi(c(0.0, 0.5))).unwrap();
        assert!((g.q_at(c(0.1, 0.1), 2.0).unwrap() - c(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn omega_at_time_zero_is_identity() {
        let ev = evaluator(presets::mixed_two_term());
        let z = c(0.3, -0.4);
        assert_eq!(ev.omega(z, 0.0).unwrap(), z);
    }

    #[test]
    fn omega_identity_family_is_exponential_contraction() {
        let ev = evaluator(presets::identity()).with_tolerances(1e-12, 1e-14);
        for &(re, im, t) in &[(0.5, 0.0, std::f64::consts::LN_2), (0.1, 0.7, 3.0), (-0.6, 0.2, 0.17)]
        {
            let z = c(re, im);
            let expected = z * (-t).exp();
            let got = ev.omega(z, t).unwrap();
            assert!((got - expected).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn omega_constant_family_closed_form() {
        // q = 13/7; omega(z, t) = z e^{-q t}.
        let ev = evaluator(presets::constant_psi(c(0.3, 0.0)));
        let got = ev.omega(c(0.5, 0.0), 1.0).unwrap();
        let expected = 0.5 * (-13.0f64 / 7.0).exp();
        assert!((got - c(expected, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn omega_complex_constant_family_closed_form() {
        // psi = 0.5i gives q = 0.6 + 0.8i.
        let ev = evaluator(presets::constant_psi(c(0.0, 0.5)));
        let q = c(0.6, 0.8);
        for &(re, im, t) in &[(0.4, 0.3, 0.9), (0.0, -0.8, 2.4)] {
            let z = c(re, im);
            let expected = z * (-q * t).exp();
            let got = ev.omega(z, t).unwrap();
            assert!((got - expected).norm() < 5e-10);
        }
    }

    #[test]
    fn omega_prime_zero_examples() {
        let ev = evaluator(presets::identity());
        assert!(
            (ev.omega_prime_zero(std::f64::consts::LN_2).unwrap() - c(0.5, 0.0)).norm() < 1e-12
        );

        let ev = evaluator(presets::constant_psi(c(0.3, 0.0)));
        let expected = (-13.0f64 / 7.0).exp();
        assert!((ev.omega_prime_zero(1.0).unwrap() - c(expected, 0.0)).norm() < 1e-11);
        assert_eq!(ev.omega_prime_zero(0.0).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn schwarz_bound_on_seeded_samples() {
        let ev = evaluator(presets::mixed_two_term());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let r = rng.gen_range(0.05..1.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let t = rng.gen_range(0.0..10.0);
            let z = Complex64::from_polar(r, th);
            let w = ev.omega(z, t).unwrap();
            assert!(w.norm() <= z.norm() + 1e-9, "z = {z}, t = {t}");
        }
    }

    #[test]
    fn decay_law_and_monotonicity() {
        let ev = evaluator(presets::mixed_two_term());
        let floor = ev.family().herglotz_floor();
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let t = 0.4 * i as f64;
            let b = ev.omega_prime_zero(t).unwrap().norm();
            assert!(b <= (-t * floor).exp() + 1e-9);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn flow_composition_consistency() {
        let ev = evaluator(presets::mixed_two_term());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..15 {
            let r = rng.gen_range(0.2..1.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let t = rng.gen_range(0.5..6.0);
            let mid = t * rng.gen_range(0.2..0.8);
            let z = Complex64::from_polar(r, th);
            let direct = ev.omega(z, t).unwrap();
            let two_leg = ev.omega_via(z, t, mid).unwrap();
            let tol = 10.0 * (ev.rel_tol() * direct.norm() + ev.abs_tol());
            assert!(
                (direct - two_leg).norm() <= tol.max(1e-11),
                "diff = {}",
                (direct - two_leg).norm()
            );
        }
    }

    #[test]
    fn finite_difference_derivative_matches_quadrature() {
        let spec = presets::mixed_two_term();
        // Pure relative control keeps tiny starting moduli accurate.
        let ev = ChainEvaluator::new(HerglotzFamily::new(spec).unwrap())
            .with_tolerances(1e-10, 1e-300);
        let h = 1e-5;
        for &t in &[0.4f64, 1.0, 2.7] {
            let fd =
                (ev.omega(c(h, 0.0), t).unwrap() - ev.omega(c(-h, 0.0), t).unwrap()) / (2.0 * h);
            let b = ev.omega_prime_zero(t).unwrap();
            assert!((fd - b).norm() < 1e-6, "t = {t}, diff = {}", (fd - b).norm());
        }
    }

    #[test]
    fn tolerance_refinement_consistency() {
        let spec = presets::mixed_two_term();
        let fam = HerglotzFamily::new(spec).unwrap();
        let coarse = ChainEvaluator::new(fam.clone()).with_tolerances(2e-9, 2e-11);
        let fine = ChainEvaluator::new(fam).with_tolerances(1e-9, 1e-11);
        for &(re, im, t) in &[(0.7, 0.1, 1.3), (0.2, -0.5, 4.0)] {
            let a = coarse.omega(c(re, im), t).unwrap();
            let b = fine.omega(c(re, im), t).unwrap();
            assert!((a - b).norm() <= 20.0 * 2e-9);
        }
    }

    #[test]
    fn breakpoint_is_not_straddled() {
        // A coefficient jumping at t = 1 with wildly different values on the
        // two sides still integrates cleanly because segments split there.
        use crate::beltrami::SumTerm;
        use crate::expr::{CoeffForm, ExprNode, HoloExpr, Piece, TimeCoefficient};
        let a = TimeCoefficient::new(
            vec![
                Piece { t_lo: 0.0, t_hi: Some(1.0), form: CoeffForm::Const { c: c(0.6, 0.0) } },
                Piece { t_lo: 1.0, t_hi: None, form: CoeffForm::Const { c: c(-0.6, 0.0) } },
            ],
            0.6,
        )
        .unwrap();
        let spec = crate::beltrami::BeltramiSpec::sum(
            "step",
            vec![SumTerm { a, phi: HoloExpr::new(ExprNode::constant(1.0, 0.0), 1.0).unwrap() }],
        );
        let ev = evaluator(spec);
        // Piecewise-constant q: omega(z, 2) = z e^{-q1} e^{-q2} with
        // q1 = 1.6/0.4 = 4, q2 = 0.4/1.6 = 0.25.
        let got = ev.omega(c(0.5, 0.0), 2.0).unwrap();
        let expected = 0.5 * (-4.0f64).exp() * (-0.25f64).exp();
        assert!((got - c(expected, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn oscillatory_family_reaches_small_times() {
        let ev = evaluator(presets::mixed_two_term());
        // t below the breakpoint: the whole integration runs in log time and
        // must still satisfy Schwarz.
        let (w, stats) = ev.omega_detailed(c(0.9, 0.1), 0.05, None).unwrap();
        assert!(w.norm() <= c(0.9, 0.1).norm() + 1e-12);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn trace_records_monotone_backward_path() {
        let ev = evaluator(presets::constant_psi(c(0.3, 0.0)));
        let mut trace = Vec::new();
        ev.omega_detailed(c(0.8, 0.0), 2.0, Some(&mut trace)).unwrap();
        assert!(!trace.is_empty());
        for w in trace.windows(2) {
            assert!(w[1].s < w[0].s);
            assert!(w[1].zeta.norm() <= w[0].zeta.norm() + 1e-12);
        }
    }

    #[test]
    fn boundary_start_contracts_inward() {
        let ev = evaluator(presets::mixed_two_term());
        let z = Complex64::from_polar(1.0, 0.9);
        let w = ev.omega(z, 0.8).unwrap();
        assert!(w.norm() < 1.0);
        assert!(w.norm() > 0.0);
    }
}
