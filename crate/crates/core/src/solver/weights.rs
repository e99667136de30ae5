use crate::curvature::CurvatureField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightVariant {
    /// `w = |K|_ε^γ`.
    Exponential,
    /// Linear interpolant in γ of the exponential weight between 0 and γ_f.
    Secant,
    /// Caller-supplied values.
    Explicit,
}

/// Positive per-vertex weights for one exaggeration level.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub gamma: f64,
    pub w: Vec<f64>,
    pub variant: WeightVariant,
}

impl WeightField {
    pub fn exponential(curv: &CurvatureField, gamma: f64) -> Self {
        WeightField {
            gamma,
            w: curv.log_k.iter().map(|l| (gamma * l).exp()).collect(),
            variant: WeightVariant::Exponential,
        }
    }

    /// `w_sec = 1 + (γ/γ_f)(|K|_ε^{γ_f} − 1)`.
    pub fn secant(curv: &CurvatureField, gamma: f64, gamma_f: f64) -> Result<Self> {
        if !(gamma_f > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_f must be positive, got {gamma_f}")));
        }
        let alpha = gamma / gamma_f;
        Ok(WeightField {
            gamma,
            w: curv
                .log_k
                .iter()
                .map(|l| 1.0 + alpha * (gamma_f * l).exp_m1())
                .collect(),
            variant: WeightVariant::Secant,
        })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        WeightField {
            gamma: 0.0,
            w: vec![value; n],
            variant: WeightVariant::Explicit,
        }
    }

    pub fn explicit(w: Vec<f64>) -> Result<Self> {
        let field = WeightField {
            gamma: 0.0,
            w,
            variant: WeightVariant::Explicit,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        match self.w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            Some(i) => Err(Error::InvalidParameter(format!(
                "weight at vertex {i} is not a positive finite number ({})",
                self.w[i]
            ))),
            None => Ok(()),
        }
    }

    /// Arithmetic mean of the corner weights of one face.
    #[inline]
    pub fn face_weight(&self, face: &[usize; 3]) -> f64 {
        (self.w[face[0]] + self.w[face[1]] + self.w[face[2]]) / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_exact_power() {
        let c = CurvatureField::from_magnitudes(vec![0.5, 1.0, 4.0, 1e4], 1e-6);
        let w = WeightField::exponential(&c, 0.25);
        for (wi, k) in w.w.iter().zip(&c.k_stab) {
            assert_eq!(*wi, (0.25 * k.ln()).exp());
            assert!((wi - k.powf(0.25)).abs() < 1e-12 * wi);
        }
    }

    #[test]
    fn secant_matches_endpoints() {
        let c = CurvatureField::from_magnitudes(vec![0.01, 2.0, 300.0], 1e-6);
        let gf = 0.25;
        let s0 = WeightField::secant(&c, 0.0, gf).unwrap();
        assert!(s0.w.iter().all(|&v| v == 1.0));
        let s1 = WeightField::secant(&c, gf, gf).unwrap();
        let e1 = WeightField::exponential(&c, gf);
        for (a, b) in s1.w.iter().zip(&e1.w) {
            assert!((a - b).abs() < 1e-14 * b);
        }
        assert!(WeightField::secant(&c, 0.1, 0.0).is_err());
    }

    #[test]
    fn explicit_rejects_non_positive() {
        assert!(WeightField::explicit(vec![1.0, 0.0]).is_err());
        assert!(WeightField::explicit(vec![1.0, f64::NAN]).is_err());
        assert!(WeightField::explicit(vec![1.0, 2.0]).is_ok());
    }
}
