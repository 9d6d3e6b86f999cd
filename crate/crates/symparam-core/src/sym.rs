//! Simplex-valued condition vectors and their Dirichlet sampling law.
//!
//! A [`SymParameter`] is a k-vector `S = (s_1..s_k)` with `s_i >= 0` and
//! `sum s_i = 1`. During training S is drawn per batch from a Dirichlet
//! distribution with concentration `alpha`, fed to the model as an input and
//! simultaneously used as the weights of the combined objective.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng;

const SIMPLEX_TOL: f64 = 1e-9;

/// k-dimensional simplex vector; both model input and loss weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SymParameter {
    values: Vec<f64>,
}

impl SymParameter {
    /// Validated constructor: entries nonnegative, summing to 1 within 1e-9.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Usage("sym-parameter needs at least one entry".into()));
        }
        if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Domain(format!(
                "sym-parameter entries must be finite and >= 0, got {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!(
                "sym-parameter entries must sum to 1, got {sum}"
            )));
        }
        Ok(SymParameter {
            values: values.to_vec(),
        })
    }

    /// Unvalidated constructor for inference-only extrapolation outside the
    /// trained simplex (e.g. S = (0.0, 1.5, 0.0)).
    pub fn unchecked(values: &[f64]) -> Self {
        SymParameter {
            values: values.to_vec(),
        }
    }

    pub fn one_hot(k: usize, hot: usize) -> Result<Self> {
        if hot >= k {
            return Err(Error::Usage(format!("one_hot index {hot} out of range for k={k}")));
        }
        let mut values = alloc::vec![0.0; k];
        values[hot] = 1.0;
        Ok(SymParameter { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_valid_simplex(&self) -> bool {
        !self.values.is_empty()
            && self.values.iter().all(|&v| v.is_finite() && v >= 0.0)
            && (self.values.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
    }
}

/// Dirichlet concentration vector; all entries strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Concentration {
    alpha: Vec<f64>,
}

impl Concentration {
    pub fn new(alpha: &[f64]) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Usage("concentration needs at least one entry".into()));
        }
        if alpha.iter().any(|&a| !a.is_finite() || a <= 0.0) {
            return Err(Error::Domain(format!(
                "concentration entries must be finite and > 0, got {alpha:?}"
            )));
        }
        Ok(Concentration {
            alpha: alpha.to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Gamma(shape, 1) variate by the Marsaglia-Tsang squeeze method, with the
/// `Gamma(a+1) * U^{1/a}` boost for shape < 1.
pub fn gamma_variate(rng: &mut ChaCha8Rng, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::Domain(format!("gamma shape must be > 0, got {shape}")));
    }
    if shape < 1.0 {
        let g = gamma_variate(rng, shape + 1.0)?;
        let mut u = rng::uniform01(rng);
        while u <= 0.0 {
            u = rng::uniform01(rng);
        }
        return Ok(g * libm::pow(u, 1.0 / shape));
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = rng::standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng::uniform01(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return Ok(d * v);
        }
        if u > 0.0 && libm::log(u) < 0.5 * x2 + d * (1.0 - v + libm::log(v)) {
            return Ok(d * v);
        }
    }
}

/// Draw `S ~ Dirichlet(alpha)`: k independent Gamma(alpha_i, 1) variates,
/// normalized to the simplex.
pub fn sample_dirichlet(alpha: &Concentration, rng: &mut ChaCha8Rng) -> Result<SymParameter> {
    let mut draws = Vec::with_capacity(alpha.k());
    loop {
        draws.clear();
        for &a in alpha.alpha() {
            draws.push(gamma_variate(rng, a)?);
        }
        let total: f64 = draws.iter().sum();
        // all-zero draws are possible at tiny alpha through underflow; redraw
        if total > 0.0 {
            for v in &mut draws {
                *v /= total;
            }
            return Ok(SymParameter { values: draws });
        }
    }
}

/// Log-density of the Dirichlet distribution at an interior simplex point,
/// with the normalizer `B(alpha)` evaluated through log-Gamma.
pub fn dirichlet_log_pdf(s: &SymParameter, alpha: &Concentration) -> Result<f64> {
    if s.k() != alpha.k() {
        return Err(Error::Usage(format!(
            "dimension mismatch: S has k={}, alpha has k={}",
            s.k(),
            alpha.k()
        )));
    }
    if !s.is_valid_simplex() {
        return Err(Error::Domain("log-pdf requires a valid simplex point".into()));
    }
    if s.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(
            "log-pdf requires a strictly interior simplex point".into(),
        ));
    }
    let alpha0: f64 = alpha.alpha().iter().sum();
    let mut log_b = -ln_gamma(alpha0);
    for &a in alpha.alpha() {
        log_b += ln_gamma(a);
    }
    let mut lp = -log_b;
    for (&si, &ai) in s.values().iter().zip(alpha.alpha()) {
        lp += (ai - 1.0) * libm::log(si);
    }
    Ok(lp)
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn simplex_validation() {
        assert!(SymParameter::new(&[0.5, 0.5]).is_ok());
        assert!(SymParameter::new(&[1.0]).is_ok());
        assert!(SymParameter::new(&[0.6, 0.5]).is_err());
        assert!(SymParameter::new(&[-0.1, 1.1]).is_err());
        assert!(SymParameter::new(&[]).is_err());
        // extrapolation values are allowed through the unchecked constructor
        let s = SymParameter::unchecked(&[0.0, 1.5, 0.0]);
        assert!(!s.is_valid_simplex());
        assert_eq!(s.k(), 3);
    }

    #[test]
    fn concentration_validation() {
        assert!(Concentration::new(&[0.5, 0.5]).is_ok());
        assert!(Concentration::new(&[0.0, 1.0]).is_err());
        assert!(Concentration::new(&[-1.0]).is_err());
        assert!(Concentration::new(&[]).is_err());
    }

    #[test]
    fn draws_satisfy_simplex_invariants() {
        let alpha = Concentration::new(&[0.5, 0.5]).unwrap();
        let mut rng = substream(1, "dirichlet");
        for _ in 0..10_000 {
            let s = sample_dirichlet(&alpha, &mut rng).unwrap();
            assert!(s.values().iter().all(|&v| v >= 0.0));
            assert!((s.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_moments_match_analytic() {
        // Dirichlet(0.5, 0.5): mean 0.5, variance alpha_i(a0-alpha_i)/(a0^2(a0+1)) = 0.125
        let alpha = Concentration::new(&[0.5, 0.5]).unwrap();
        let mut rng = substream(42, "dirichlet");
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let s1 = sample_dirichlet(&alpha, &mut rng).unwrap().values()[0];
            sum += s1;
            sumsq += s1 * s1;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 0.125).abs() < 0.005, "variance {var}");
    }

    #[test]
    fn dirichlet_3d_mean() {
        let alpha = Concentration::new(&[1.0, 2.0, 3.0]).unwrap();
        let mut rng = substream(7, "dirichlet");
        let n = 50_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let s = sample_dirichlet(&alpha, &mut rng).unwrap();
            for (acc, &v) in sums.iter_mut().zip(s.values()) {
                *acc += v;
            }
        }
        for (i, expect) in [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0].iter().enumerate() {
            assert!((sums[i] / n as f64 - expect).abs() < 0.01);
        }
    }

    #[test]
    fn log_pdf_uniform_on_segment() {
        // Dirichlet(1,1) is uniform on the segment: log-pdf identically 0
        let alpha = Concentration::new(&[1.0, 1.0]).unwrap();
        for &s1 in &[0.1, 0.25, 0.5, 0.9] {
            let s = SymParameter::new(&[s1, 1.0 - s1]).unwrap();
            let lp = dirichlet_log_pdf(&s, &alpha).unwrap();
            assert!(lp.abs() < 1e-12, "log-pdf {lp} at s1={s1}");
        }
    }

    #[test]
    fn log_pdf_arcsine_closed_form() {
        // arcsine distribution: pdf(x) = 1 / (pi * sqrt(x(1-x)));
        // at x = 0.5 that is 2/pi
        let alpha = Concentration::new(&[0.5, 0.5]).unwrap();
        let s = SymParameter::new(&[0.5, 0.5]).unwrap();
        let lp = dirichlet_log_pdf(&s, &alpha).unwrap();
        let expect = libm::log(2.0 / core::f64::consts::PI);
        assert!((lp - expect).abs() < 1e-12, "log-pdf {lp} vs {expect}");
        // spot-check another interior point against the same closed form
        let s = SymParameter::new(&[0.2, 0.8]).unwrap();
        let lp = dirichlet_log_pdf(&s, &alpha).unwrap();
        let expect = -libm::log(core::f64::consts::PI * libm::sqrt(0.2 * 0.8));
        assert!((lp - expect).abs() < 1e-12);
    }

    #[test]
    fn log_pdf_rejects_boundary_and_mismatch() {
        let alpha = Concentration::new(&[0.5, 0.5]).unwrap();
        let s = SymParameter::new(&[0.0, 1.0]).unwrap();
        assert!(matches!(dirichlet_log_pdf(&s, &alpha), Err(Error::Domain(_))));
        let a3 = Concentration::new(&[1.0, 1.0, 1.0]).unwrap();
        let s2 = SymParameter::new(&[0.5, 0.5]).unwrap();
        assert!(matches!(dirichlet_log_pdf(&s2, &a3), Err(Error::Usage(_))));
    }

    #[test]
    fn sampler_histogram_matches_density() {
        // Monte Carlo oracle: empirical bin frequencies vs the bin
        // probability integrated from exp(log-pdf) by Simpson's rule,
        // within 3 sigma per interior bin.
        let alpha = Concentration::new(&[0.5, 0.5]).unwrap();
        let mut rng = substream(1234, "dirichlet");
        let n = 100_000usize;
        let bins = 24usize;
        let lo = 0.04;
        let hi = 0.96;
        let width = (hi - lo) / bins as f64;
        let mut counts = alloc::vec![0usize; bins];
        for _ in 0..n {
            let s1 = sample_dirichlet(&alpha, &mut rng).unwrap().values()[0];
            if s1 >= lo && s1 < hi {
                counts[((s1 - lo) / width) as usize] += 1;
            }
        }
        let pdf = |x: f64| {
            let s = SymParameter::new(&[x, 1.0 - x]).unwrap();
            libm::exp(dirichlet_log_pdf(&s, &alpha).unwrap())
        };
        for b in 0..bins {
            let a = lo + b as f64 * width;
            let c = a + width;
            let p = width / 6.0 * (pdf(a) + 4.0 * pdf(0.5 * (a + c)) + pdf(c));
            let sigma = libm::sqrt(p * (1.0 - p) / n as f64);
            let observed = counts[b] as f64 / n as f64;
            assert!(
                (observed - p).abs() <= 3.0 * sigma,
                "bin {b}: observed {observed}, expected {p}, sigma {sigma}"
            );
        }
    }

    #[test]
    fn gamma_variate_rejects_bad_shape() {
        let mut rng = substream(1, "dirichlet");
        assert!(gamma_variate(&mut rng, 0.0).is_err());
        assert!(gamma_variate(&mut rng, -1.0).is_err());
    }

    #[test]
    fn gamma_variate_mean_small_shape() {
        // the alpha < 1 boost path: Gamma(0.3) has mean 0.3
        let mut rng = substream(9, "dirichlet");
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += gamma_variate(&mut rng, 0.3).unwrap();
        }
        assert!((sum / n as f64 - 0.3).abs() < 0.01);
    }
}
