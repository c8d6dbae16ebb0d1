//! Beltrami coefficients assembled from driving families, their circular
//! slices, and the Fourier-side analyticity test.
//!
//! A driving family `psi_t` of bounded holomorphic functions induces the
//! coefficient
//!
//! ```text
//! mu(z) = (z/|z|)^2 psi_{-log|z|}(z/|z|),    0 < |z| <= 1,
//! ```
//!
//! equivalently `mu(e^-t zeta) = zeta^2 psi_t(zeta)` on every circle. Two
//! constructive shapes are supported. The sum form takes finitely many pairs
//! of a driving coefficient and a holomorphic factor,
//! `psi_t(z) = sum_j a_j(t) phi_j(z)`, admissible when the norm budget
//! `K = sum_j ||a_j|| ||phi_j||` stays below 1. The dilation form takes a
//! single `phi` with `||phi|| < 1` and `psi_t(z) = e^{-2t} phi(e^-t z)`,
//! which makes `mu(z) = z^2 phi(z)`.
//!
//! The slice `U_t(zeta) = zeta^-2 mu(e^-t zeta)` of a general coefficient is
//! merely bounded; the class built here is exactly the one whose slices have
//! vanishing negative Fourier modes. [`slice_fourier`] measures those modes
//! on any point sampler, so counterexamples that are not expressible as a
//! family go through the same code path as the constructive class.

use crate::expr::{ExprError, HoloExpr, TimeCoefficient, DEFAULT_CERT_SAMPLES};
use crate::fft;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("norm budget K = {k} is not below 1")]
    BudgetExceeded { k: f64 },
    #[error(transparent)]
    Bound(#[from] ExprError),
    #[error("mu is an a.e. class: the value at z = 0 is undefined")]
    Origin,
    #[error("invalid specification: {0}")]
    Invalid(String),
}

/// One term `a_j(t) phi_j(z)` of a sum-form family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumTerm {
    pub a: TimeCoefficient,
    pub phi: HoloExpr,
}

/// The driving family `psi_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum PsiFamily {
    Sum { terms: Vec<SumTerm> },
    Dilation { phi: HoloExpr },
}

/// A named Beltrami coefficient given by its driving family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    family: PsiFamily,
}

/// Per-term certified norms making up the budget.
#[derive(Debug, Clone, Serialize)]
pub struct TermNorms {
    pub coeff_bound: f64,
    pub coeff_sample_max: f64,
    pub phi_bound: f64,
    pub phi_sample_max: f64,
    pub product: f64,
}

/// Outcome of validating a specification: the budget `K` and the per-term
/// norms it is made of. `K < 1` is the admissibility condition.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub k: f64,
    pub terms: Vec<TermNorms>,
}

impl BeltramiSpec {
    pub fn sum(name: impl Into<String>, terms: Vec<SumTerm>) -> BeltramiSpec {
        BeltramiSpec {
            name: name.into(),
            description: String::new(),
            family: PsiFamily::Sum { terms },
        }
    }

    pub fn dilation(name: impl Into<String>, phi: HoloExpr) -> BeltramiSpec {
        BeltramiSpec {
            name: name.into(),
            description: String::new(),
            family: PsiFamily::Dilation { phi },
        }
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    /// Global bound `k` on `|psi_t|` and `|mu|`, from declared norms.
    pub fn k(&self) -> f64 {
        match &self.family {
            PsiFamily::Sum { terms } => terms.iter().map(|t| t.a.bound() * t.phi.bound()).sum(),
            PsiFamily::Dilation { phi } => phi.bound(),
        }
    }

    /// Certify all declared bounds by dense sampling and check the budget.
    ///
    /// Succeeds iff `K < 1`; the report carries per-term observed maxima so
    /// a rejected spec shows where the mass sits.
    pub fn validate(&self, samples: usize) -> Result<BudgetReport, SpecError> {
        let mut terms = Vec::new();
        match &self.family {
            PsiFamily::Sum { terms: ts } => {
                for t in ts {
                    let coeff_sample_max = t.a.certify(samples.clamp(1024, 4096))?;
                    let phi_rep = t.phi.sup_norm_circle(1.0, samples)?;
                    terms.push(TermNorms {
                        coeff_bound: t.a.bound(),
                        coeff_sample_max,
                        phi_bound: t.phi.bound(),
                        phi_sample_max: phi_rep.max_observed,
                        product: t.a.bound() * t.phi.bound(),
                    });
                }
            }
            PsiFamily::Dilation { phi } => {
                let rep = phi.sup_norm_circle(1.0, samples)?;
                terms.push(TermNorms {
                    coeff_bound: 1.0,
                    coeff_sample_max: 1.0,
                    phi_bound: phi.bound(),
                    phi_sample_max: rep.max_observed,
                    product: phi.bound(),
                });
            }
        }
        let k = self.k();
        if k < 1.0 {
            Ok(BudgetReport { k, terms })
        } else {
            Err(SpecError::BudgetExceeded { k })
        }
    }

    /// Validate with the default sample count (2^14 on the circle).
    pub fn validate_default(&self) -> Result<BudgetReport, SpecError> {
        self.validate(DEFAULT_CERT_SAMPLES)
    }

    /// The family value `psi_t(z)`, `|z| <= 1`, `t >= 0`.
    pub fn psi_at(&self, z: Complex64, t: f64) -> Result<Complex64, SpecError> {
        match &self.family {
            PsiFamily::Sum { terms } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for term in terms {
                    acc += term.a.eval(t) * term.phi.eval(z)?;
                }
                Ok(acc)
            }
            PsiFamily::Dilation { phi } => {
                let r = (-t).exp();
                Ok(phi.eval(r * z)? * (-2.0 * t).exp())
            }
        }
    }

    /// The coefficient value `mu(z) = (z/|z|)^2 psi_{-log|z|}(z/|z|)`.
    ///
    /// `z = 0` is rejected: mu is an equivalence class modulo null sets and
    /// the point value carries no information.
    pub fn mu_at(&self, z: Complex64) -> Result<Complex64, SpecError> {
        let r = z.norm();
        if r == 0.0 {
            return Err(SpecError::Origin);
        }
        let zeta = z / r;
        // |z| may exceed 1 by roundoff; anything further surfaces as a
        // domain error through psi_at.
        let t = (-r.ln()).max(0.0);
        Ok(zeta * zeta * self.psi_at(zeta, t)?)
    }

    /// Merged interior breakpoints of all driving coefficients, increasing.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = match &self.family {
            PsiFamily::Sum { terms } => terms.iter().flat_map(|t| t.a.breakpoints()).collect(),
            PsiFamily::Dilation { .. } => Vec::new(),
        };
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        bps
    }

    /// True when some driving coefficient oscillates without limit at
    /// `t -> 0+` (a `log t` phase), so integrators must cap steps there.
    pub fn oscillatory_at_zero(&self) -> bool {
        match &self.family {
            PsiFamily::Sum { terms } => terms.iter().any(|t| t.a.oscillatory_at_zero()),
            PsiFamily::Dilation { .. } => false,
        }
    }

    pub fn to_json(&self) -> String {
        crate::canonical_json(self)
    }

    pub fn from_json(s: &str) -> Result<BeltramiSpec, SpecError> {
        serde_json::from_str(s).map_err(|e| SpecError::Invalid(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<BeltramiSpec, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Fourier data of one circular slice `U_t`.
#[derive(Debug, Clone)]
pub struct BoundarySlice {
    pub t: f64,
    m: usize,
    /// Coefficients `c_n` for `n = -m ..= m`, stored at index `n + m`.
    coeffs: Vec<Complex64>,
}

/// Fourier coefficients of `U_t(zeta) = zeta^-2 mu(e^-t zeta)` computed by
/// FFT over equispaced circle samples, for `n = -m ..= m`.
///
/// The transform size is the next power of two at or above `4 m`, so the
/// result is exact (to roundoff) for trigonometric polynomials of degree at
/// most `m`, and aliasing for the smooth slices produced by the constructive
/// node set is far below roundoff.
///
/// The sampler is a plain point evaluator `z -> mu(z)` rather than a
/// specification, so coefficients outside the constructive class (negative
/// control examples) run through the identical code path.
pub fn slice_fourier<F>(sampler: F, t: f64, m: usize) -> Result<BoundarySlice, SpecError>
where
    F: Fn(Complex64) -> Result<Complex64, SpecError>,
{
    if m == 0 {
        return Err(SpecError::Invalid("mode count must be >= 1".into()));
    }
    let len = (4 * m).next_power_of_two().max(8);
    let r = (-t).exp();
    let mut data = Vec::with_capacity(len);
    for j in 0..len {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / len as f64;
        let zeta = Complex64::from_polar(1.0, theta);
        let u = sampler(r * zeta)? / (zeta * zeta);
        data.push(u);
    }
    fft::forward(&mut data);
    let scale = 1.0 / len as f64;
    let coeffs = (-(m as i64)..=m as i64)
        .map(|n| data[n.rem_euclid(len as i64) as usize] * scale)
        .collect();
    Ok(BoundarySlice { t, m, coeffs })
}

/// Slice of a specification's own coefficient at time `t`.
pub fn slice_of_spec(spec: &BeltramiSpec, t: f64, m: usize) -> Result<BoundarySlice, SpecError> {
    slice_fourier(|z| spec.mu_at(z), t, m)
}

/// Holomorphic and harmonic reconstructions from slice modes at a point.
#[derive(Debug, Clone, Copy)]
pub struct Extension {
    /// `sum_{n>=0} c_n z^n`.
    pub analytic: Complex64,
    /// Analytic part plus `sum_{n<0} c_n conj(z)^|n|`; the Fourier form of
    /// the Poisson integral of the slice.
    pub harmonic: Complex64,
    /// Geometric bound on the discarded tail `|n| > m`.
    pub truncation_bound: f64,
}

impl BoundarySlice {
    pub fn mode_count(&self) -> usize {
        self.m
    }

    /// Coefficient `c_n`, `|n| <= m`.
    pub fn c(&self, n: i64) -> Complex64 {
        let idx = n + self.m as i64;
        assert!(
            (0..self.coeffs.len() as i64).contains(&idx),
            "mode {n} outside computed range"
        );
        self.coeffs[idx as usize]
    }

    /// Largest modulus among strictly negative modes. Zero (to roundoff)
    /// exactly when the slice extends holomorphically.
    pub fn analyticity_defect(&self) -> f64 {
        (1..=self.m as i64)
            .map(|n| self.c(-n).norm())
            .fold(0.0, f64::max)
    }

    /// Total mode energy; bounded by `||U_t||_inf^2` via Parseval.
    pub fn mode_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Evaluate the analytic part and full harmonic extension at `|z| < 1`.
    pub fn extend(&self, z: Complex64) -> Extension {
        let r = z.norm();
        assert!(r < 1.0, "extension is defined inside the open disk");
        let mut analytic = Complex64::new(0.0, 0.0);
        for n in (0..=self.m as i64).rev() {
            analytic = analytic * z + self.c(n);
        }
        // anti = sum_{n >= 1} c_{-n} conj(z)^n, innermost term first.
        let zb = z.conj();
        let mut anti = Complex64::new(0.0, 0.0);
        for n in (1..=self.m as i64).rev() {
            anti = (anti + self.c(-n)) * zb;
        }
        let coeff_cap = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tail = if r > 0.0 {
            2.0 * coeff_cap * r.powi(self.m as i32 + 1) / (1.0 - r)
        } else {
            0.0
        };
        Extension {
            analytic,
            harmonic: analytic + anti,
            truncation_bound: tail,
        }
    }

    /// CSV rows `n,re_c,im_c` in increasing `n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,re_c,im_c")?;
        for n in -(self.m as i64)..=self.m as i64 {
            let c = self.c(n);
            writeln!(w, "{},{},{}", n, c.re, c.im)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
