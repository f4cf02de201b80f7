use num_complex::Complex64;

use crate::error::{Error, Result};

/// A sampled 1-D signal on the unit-spaced grid `t_k = k`.
///
/// Real inputs are promoted to complex and tagged, so synthesis can hand back
/// a real signal when the imaginary residual is negligible.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    pub samples: Vec<Complex64>,
    /// Metadata only; transforms never look at it.
    pub sample_rate: Option<f64>,
    pub real: bool,
}

impl Signal1D {
    pub fn from_real(values: &[f64]) -> Self {
        Signal1D {
            samples: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            sample_rate: None,
            real: true,
        }
    }

    pub fn from_complex(samples: Vec<Complex64>) -> Self {
        Signal1D { samples, sample_rate: None, real: false }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.sample_rate = Some(rate);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2(&self.samples)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }

    /// `‖Im x‖ / ‖x‖`, zero for the zero signal.
    pub fn imag_residual(&self) -> f64 {
        let total = self.norm();
        if total == 0.0 {
            return 0.0;
        }
        self.samples.iter().map(|c| c.im * c.im).sum::<f64>().sqrt() / total
    }

    /// Drop the imaginary part if it is below `tol` relative to the signal norm.
    pub fn into_real_checked(mut self, tol: f64) -> Result<Self> {
        let residual = self.imag_residual();
        if residual > tol {
            return Err(Error::invalid(format!(
                "imaginary residual {residual:.3e} exceeds {tol:.1e} of the signal norm"
            )));
        }
        self.samples.iter_mut().for_each(|c| c.im = 0.0);
        self.real = true;
        Ok(self)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.samples.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("signal contains non-finite samples"));
        }
        Ok(())
    }
}

pub(crate) fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
