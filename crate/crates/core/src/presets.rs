//! Ready-made coefficient specifications used by the CLI examples, the
//! guide, and the test suites.

use crate::beltrami::{BeltramiSpec, SumTerm};
use crate::expr::{CoeffForm, ExprNode, HoloExpr, Piece, TimeCoefficient};
use num_complex::Complex64;

/// The zero coefficient: an empty sum, `psi == 0`, `mu == 0`, `K = 0`.
pub fn identity() -> BeltramiSpec {
    let mut s = BeltramiSpec::sum("identity", Vec::new());
    s.description = "zero coefficient; the induced map is the identity".into();
    s
}

/// Constant driving family `psi == c`, `|c| < 1`: the coefficient
/// `mu(z) = c (z/|z|)^2`, whose induced map has the closed form
/// `f(z) = z |z|^(q-1)` with `q = (1+c)/(1-c)`.
pub fn constant_psi(c: Complex64) -> BeltramiSpec {
    assert!(c.norm() < 1.0, "constant family needs |c| < 1");
    let mut s = BeltramiSpec::sum(
        "constant",
        vec![SumTerm {
            a: TimeCoefficient::constant(c),
            phi: HoloExpr::new(ExprNode::constant(1.0, 0.0), 1.0).unwrap(),
        }],
    );
    s.description = "constant driving family with a closed-form induced map".into();
    s
}

/// Dilation-form coefficient `mu(z) = z^2 phi(z)` for a constant `phi == c`.
pub fn dilation_constant(c: Complex64) -> BeltramiSpec {
    assert!(c.norm() < 1.0, "dilation form needs ||phi|| < 1");
    let mut s = BeltramiSpec::dilation(
        "dilation-constant",
        HoloExpr::new(ExprNode::Const { c }, c.norm()).unwrap(),
    );
    s.description = "mu(z) = c z^2".into();
    s
}

/// Two-term reference family mixing a piecewise-constant coefficient with a
/// log-oscillating one:
///
/// * `a_1(t) = (-2+i)/10` for `0 < t < log 2`, `(1+i)/10` afterwards,
///   paired with `phi_1(z) = (sin z / z)^2`;
/// * `a_2(t) = e^{-i log t}/5` paired with the Mobius factor
///   `phi_2(z) = (z - 2/3)/(1 - 2z/3)`.
///
/// Budget: `K = 0.2236068 * 1.381098 + 0.2 = 0.50882...`, comfortably
/// admissible, while exercising a breakpoint, an entire factor, a Blaschke
/// factor, and the oscillation accumulation at `t = 0`.
pub fn mixed_two_term() -> BeltramiSpec {
    let a1 = TimeCoefficient::new(
        vec![
            Piece {
                t_lo: 0.0,
                t_hi: Some(std::f64::consts::LN_2),
                form: CoeffForm::Const {
                    c: Complex64::new(-0.2, 0.1),
                },
            },
            Piece {
                t_lo: std::f64::consts::LN_2,
                t_hi: None,
                form: CoeffForm::Const {
                    c: Complex64::new(0.1, 0.1),
                },
            },
        ],
        0.2236068,
    )
    .unwrap();
    let phi1 = HoloExpr::new(ExprNode::Sinc2, 1.381098).unwrap();
    let a2 = TimeCoefficient::new(
        vec![Piece {
            t_lo: 0.0,
            t_hi: None,
            form: CoeffForm::LogOsc {
                c: Complex64::new(0.2, 0.0),
                alpha: -1.0,
            },
        }],
        0.2,
    )
    .unwrap();
    let phi2 = HoloExpr::new(
        ExprNode::Mobius {
            a: Complex64::new(2.0 / 3.0, 0.0),
        },
        1.0,
    )
    .unwrap();
    let mut s = BeltramiSpec::sum(
        "mixed-two-term",
        vec![SumTerm { a: a1, phi: phi1 }, SumTerm { a: a2, phi: phi2 }],
    );
    s.description =
        "two-term family with a step coefficient, a log-oscillating coefficient, and mixed factors"
            .into();
    s
}

/// Negative-control point sampler `mu(z) = amp (conj z / |z|)^2` on the
/// disk, zero outside. Its slices are `amp * zeta^-4`, a pure negative
/// mode, so every analyticity-based check must reject it; it is not
/// expressible as a driving-family specification.
pub fn negative_mode_sampler(amp: f64) -> impl Fn(Complex64) -> Complex64 + Copy + Sync {
    move |z: Complex64| {
        let r2 = z.norm_sqr();
        if r2 == 0.0 || r2 > 1.0 {
            Complex64::new(0.0, 0.0)
        } else {
            amp * z.conj() * z.conj() / r2
        }
    }
}

/// Closed-form Bergman pairing of the negative-control sampler against
/// `z^n`: zero except `n = 2`, where it equals `amp * pi / 2`.
pub fn negative_mode_pairing(amp: f64, n: usize) -> f64 {
    if n == 2 {
        amp * std::f64::consts::PI / 2.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        identity().validate_default().unwrap();
        constant_psi(Complex64::new(0.3, 0.0)).validate_default().unwrap();
        dilation_constant(Complex64::new(0.9, 0.0)).validate_default().unwrap();
        mixed_two_term().validate_default().unwrap();
    }

    #[test]
    fn negative_sampler_outside_disk_is_zero() {
        let s = negative_mode_sampler(0.2);
        assert_eq!(s(Complex64::new(1.5, 0.2)), Complex64::new(0.0, 0.0));
        let v = s(Complex64::new(0.0, 0.5));
        // (conj z / |z|)^2 at z = i/2 is (-i)^2 = -1.
        assert!((v - Complex64::new(-0.2, 0.0)).norm() < 1e-15);
    }
}
