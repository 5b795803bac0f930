//! Trace-function observables and Monte Carlo estimators on sample
//! batches: plain means, twist-averaged means (exact vanishing on
//! nonzero homology classes), normalized traces, inner products, and
//! variances.
//!
//! Batch reductions use pairwise summation so results do not depend on
//! how samples were produced or scheduled.

use crate::rep::{Representation, SampleBatch};
use crate::words::{total_homology_class, HomologyClass, Presentation, Word, WordError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObsError {
    #[error("estimator needs a nonempty batch")]
    EmptyBatch,
    #[error("loop tuple must contain at least one loop")]
    EmptyTuple,
    #[error("tuple was built mod {tuple} but the batch has center order {batch}")]
    ModulusMismatch { tuple: u32, batch: u32 },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A tuple of loops with its total mod-n homology class cached; the
/// argument of a trace function `t_gamma = t_{gamma_1} ... t_{gamma_s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopTuple {
    loops: Vec<Word>,
    class: HomologyClass,
}

impl LoopTuple {
    pub fn new(
        loops: Vec<Word>,
        presentation: &Presentation,
        modulus: u32,
    ) -> Result<Self, ObsError> {
        if loops.is_empty() {
            return Err(ObsError::EmptyTuple);
        }
        let class = total_homology_class(&loops, presentation.generator_count(), modulus)?;
        Ok(LoopTuple { loops, class })
    }

    pub fn single(
        word: Word,
        presentation: &Presentation,
        modulus: u32,
    ) -> Result<Self, ObsError> {
        Self::new(vec![word], presentation, modulus)
    }

    pub fn loops(&self) -> &[Word] {
        &self.loops
    }

    pub fn class(&self) -> &HomologyClass {
        &self.class
    }

    /// The eta-tuple `(gamma_1, ..., gamma_s, alpha^-1)` whose mean
    /// estimates the inner product against `t_alpha`.
    pub fn with_appended(
        &self,
        word: Word,
        presentation: &Presentation,
    ) -> Result<Self, ObsError> {
        let mut loops = self.loops.clone();
        loops.push(word);
        LoopTuple::new(loops, presentation, self.class.modulus)
    }

    /// Canonical text form: loop words joined by commas.
    pub fn canonical_string(&self, presentation: &Presentation) -> String {
        self.loops
            .iter()
            .map(|w| presentation.format_word(w))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Pairwise (cascade) summation; deterministic and accurate regardless of
/// worker count upstream.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// A Monte Carlo estimate: complex mean, standard error, sample count.
/// The error combines per-component standard errors in quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub std_error: f64,
    pub count: usize,
}

impl Estimate {
    pub fn exact_zero(count: usize) -> Self {
        Estimate {
            value: Complex64::new(0.0, 0.0),
            std_error: 0.0,
            count,
        }
    }

    pub fn from_values(values: &[Complex64]) -> Result<Self, ObsError> {
        if values.is_empty() {
            return Err(ObsError::EmptyBatch);
        }
        let count = values.len();
        let mean = pairwise_sum_complex(values) / count as f64;
        if count == 1 {
            return Ok(Estimate {
                value: mean,
                std_error: 0.0,
                count,
            });
        }
        let dev_re: Vec<f64> = values.iter().map(|v| (v.re - mean.re).powi(2)).collect();
        let dev_im: Vec<f64> = values.iter().map(|v| (v.im - mean.im).powi(2)).collect();
        let var_re = pairwise_sum(&dev_re) / (count - 1) as f64;
        let var_im = pairwise_sum(&dev_im) / (count - 1) as f64;
        Ok(Estimate {
            value: mean,
            std_error: ((var_re + var_im) / count as f64).sqrt(),
            count,
        })
    }

    /// `|value| > k * std_error`, the detection criterion used by the
    /// verification suites.
    pub fn exceeds_sigma(&self, k: f64) -> bool {
        self.value.norm() > k * self.std_error
    }
}

/// `t_gamma(rho)`: the product of traces of the evaluated loops.
/// Conjugation invariant; for a single unitary loop,
/// `conj(t_alpha) = t_{alpha^-1}`.
pub fn trace_function(rho: &Representation, gamma: &LoopTuple) -> Complex64 {
    gamma
        .loops
        .iter()
        .map(|w| {
            let m = rho.evaluate_word(w);
            m.diagonal().iter().sum::<Complex64>()
        })
        .product()
}

fn check_batch(batch: &SampleBatch, gamma: &LoopTuple) -> Result<(), ObsError> {
    if batch.is_empty() {
        return Err(ObsError::EmptyBatch);
    }
    if gamma.class.modulus != batch.n as u32 {
        return Err(ObsError::ModulusMismatch {
            tuple: gamma.class.modulus,
            batch: batch.n as u32,
        });
    }
    Ok(())
}

/// Evaluates `t_gamma` on every sample of the batch, in batch order.
pub fn trace_values(batch: &SampleBatch, gamma: &LoopTuple) -> Result<Vec<Complex64>, ObsError> {
    check_batch(batch, gamma)?;
    Ok(batch
        .samples
        .iter()
        .map(|rho| trace_function(rho, gamma))
        .collect())
}

/// Sample mean and standard error of `t_gamma` over the batch.
pub fn mc_mean(batch: &SampleBatch, gamma: &LoopTuple) -> Result<Estimate, ObsError> {
    Estimate::from_values(&trace_values(batch, gamma)?)
}

/// The character-sum factor `n^{-2g} sum_u zeta^{u.[gamma]}`: the
/// geometric sums over each coordinate vanish unless every coordinate of
/// the class is zero, so the factor is the indicator of `[gamma] = 0`.
fn twist_orbit_factor(class: &HomologyClass) -> f64 {
    if class.is_zero() {
        1.0
    } else {
        0.0
    }
}

/// Mean of the twist-orbit average of `t_gamma`: each sample value is
/// replaced by its average over the full center-twist orbit, evaluated in
/// closed form. Exactly zero whenever `[gamma] != 0`, and identical to
/// `mc_mean` when `[gamma] = 0`.
pub fn twist_averaged_mean(batch: &SampleBatch, gamma: &LoopTuple) -> Result<Estimate, ObsError> {
    check_batch(batch, gamma)?;
    if twist_orbit_factor(&gamma.class) == 0.0 {
        return Ok(Estimate::exact_zero(batch.len()));
    }
    mc_mean(batch, gamma)
}

/// The normalized trace `t_hat = t_gamma - m`: `m` is the twist-averaged
/// mean, which is exactly zero for tuples of nonzero class (those traces
/// already integrate to zero) and the plain batch mean otherwise.
#[derive(Clone, Debug)]
pub struct NormalizedTrace {
    tuple: LoopTuple,
    offset: Complex64,
}

impl NormalizedTrace {
    pub fn tuple(&self) -> &LoopTuple {
        &self.tuple
    }

    pub fn offset(&self) -> Complex64 {
        self.offset
    }

    pub fn eval(&self, rho: &Representation) -> Complex64 {
        trace_function(rho, &self.tuple) - self.offset
    }
}

pub fn normalized_trace(
    batch: &SampleBatch,
    gamma: &LoopTuple,
) -> Result<NormalizedTrace, ObsError> {
    let centered = twist_averaged_mean(batch, gamma)?;
    Ok(NormalizedTrace {
        tuple: gamma.clone(),
        offset: centered.value,
    })
}

/// Which estimator an inner product uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Plain,
    TwistAveraged,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Plain => "plain",
            Estimator::TwistAveraged => "twist_averaged",
        }
    }
}

/// Estimates `<f, t_alpha> = int f conj(t_alpha) dmu` by sample
/// averaging, with `conj(t_alpha) = t_{alpha^-1}`, so the integrand is
/// the trace of the eta-tuple `(gamma, alpha^-1)` (minus the centering
/// offset times `t_{alpha^-1}` when `use_normalized` is set).
///
/// The twist-averaged variant replaces each integrand term by its orbit
/// average and is exactly zero whenever `[gamma] - [alpha] != 0`.
pub fn inner_product(
    batch: &SampleBatch,
    gamma: &LoopTuple,
    alpha: &Word,
    use_normalized: bool,
    estimator: Estimator,
) -> Result<Estimate, ObsError> {
    check_batch(batch, gamma)?;
    let presentation = batch.presentation.clone();
    let eta = gamma.with_appended(alpha.inverse(), &presentation)?;
    let alpha_inv = LoopTuple::single(alpha.inverse(), &presentation, batch.n as u32)?;
    let offset = if use_normalized {
        twist_averaged_mean(batch, gamma)?.value
    } else {
        Complex64::new(0.0, 0.0)
    };
    let (eta_factor, offset_factor) = match estimator {
        Estimator::Plain => (1.0, 1.0),
        Estimator::TwistAveraged => (
            twist_orbit_factor(&eta.class),
            twist_orbit_factor(&alpha_inv.class),
        ),
    };
    if eta_factor == 0.0 && (offset == Complex64::new(0.0, 0.0) || offset_factor == 0.0) {
        return Ok(Estimate::exact_zero(batch.len()));
    }
    let values: Vec<Complex64> = batch
        .samples
        .iter()
        .map(|rho| {
            let eta_term = if eta_factor != 0.0 {
                trace_function(rho, &eta)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let offset_term = if offset_factor != 0.0 {
                offset * trace_function(rho, &alpha_inv)
            } else {
                Complex64::new(0.0, 0.0)
            };
            eta_term - offset_term
        })
        .collect();
    Estimate::from_values(&values)
}

/// Sample variance of `t_gamma` (squared deviation from the batch mean),
/// with a standard error for the variance itself. Positive variance at
/// several sigma certifies that the normalized trace is a nonzero vector.
pub fn variance(batch: &SampleBatch, gamma: &LoopTuple) -> Result<Estimate, ObsError> {
    variance_from_values(&trace_values(batch, gamma)?)
}

/// `variance` on a raw value series; the streaming entry point.
pub fn variance_from_values(values: &[Complex64]) -> Result<Estimate, ObsError> {
    if values.is_empty() {
        return Err(ObsError::EmptyBatch);
    }
    let mean = pairwise_sum_complex(values) / values.len() as f64;
    let sq_dev: Vec<f64> = values.iter().map(|v| (v - mean).norm_sqr()).collect();
    if values.len() == 1 {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            std_error: 0.0,
            count: 1,
        });
    }
    let n = values.len() as f64;
    let var = pairwise_sum(&sq_dev) / (n - 1.0);
    let mean_sq = pairwise_sum(&sq_dev) / n;
    let spread: Vec<f64> = sq_dev.iter().map(|d| (d - mean_sq).powi(2)).collect();
    let se = (pairwise_sum(&spread) / (n - 1.0) / n).sqrt();
    Ok(Estimate {
        value: Complex64::new(var, 0.0),
        std_error: se,
        count: values.len(),
    })
}
