//! Gamma and beta random fields built from Gaussian field samples, their
//! transformed correlation structures and marginal densities, and the
//! reduction of high-resolution fields onto the Gauss-point grid.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::gauss::GaussGrid;
use crate::grf::{
    sample_spectral, CovarianceSpec, FieldSample, GrfError, PointSet, RegularGrid, SpectralBasis,
    SpectralOptions,
};
use crate::rng;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("degenerate site {0}: both gamma fields vanish")]
    DegenerateSite(usize),
    #[error("value outside [0, 1] at site {0}")]
    OutOfBounds(usize),
    #[error("density argument outside the support [0, 1]")]
    OutOfSupport,
    #[error("point {0} lies outside the field extent")]
    OutOfDomain(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Grf(#[from] GrfError),
}

/// Shape parameters of the beta field construction: `2s` and `2s'` squared
/// Gaussian fields feed the two gamma fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BetaFieldParams {
    s: u32,
    s_prime: u32,
}

impl BetaFieldParams {
    pub fn new(s: u32, s_prime: u32) -> Result<Self, FieldError> {
        if s < 1 || s_prime < 1 {
            return Err(FieldError::InvalidParameter("s and s' must be >= 1"));
        }
        Ok(Self { s, s_prime })
    }

    /// The uniform special case `s = s' = 1`.
    pub fn uniform() -> Self {
        Self { s: 1, s_prime: 1 }
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn s_prime(&self) -> u32 {
        self.s_prime
    }

    /// Gaussian samples consumed per beta sample: `2s + 2s'`.
    pub fn gaussians_per_sample(&self) -> usize {
        2 * (self.s + self.s_prime) as usize
    }
}

/// A degradation-parameter field: values in `[0, 1]` on a grid of shape
/// `shape`, with the seeds of the Gaussian samples that produced it.
#[derive(Debug, Clone)]
pub struct DegradationField {
    values: Vec<f64>,
    shape: [usize; 2],
    seeds: Vec<u64>,
}

impl DegradationField {
    pub fn new(values: Vec<f64>, shape: [usize; 2], seeds: Vec<u64>) -> Result<Self, FieldError> {
        if values.len() != shape[0] * shape[1] {
            return Err(FieldError::ShapeMismatch {
                expected: shape[0] * shape[1],
                got: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(FieldError::OutOfBounds(i));
            }
        }
        Ok(Self { values, shape, seeds })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Elementwise gamma field `g = 1/2 sum_r f_r^2` from `2s` Gaussian samples.
pub fn gamma_from_gaussians(samples: &[FieldSample]) -> Result<FieldSample, FieldError> {
    if samples.is_empty() || samples.len() % 2 != 0 {
        return Err(FieldError::InvalidParameter(
            "gamma field needs an even, positive number of Gaussian samples",
        ));
    }
    let n = samples[0].len();
    for s in samples {
        if s.len() != n {
            return Err(FieldError::ShapeMismatch {
                expected: n,
                got: s.len(),
            });
        }
    }
    let mut g = vec![0.0; n];
    for s in samples {
        for (acc, v) in g.iter_mut().zip(&s.values) {
            *acc += 0.5 * v * v;
        }
    }
    Ok(FieldSample {
        values: g,
        seed: samples[0].seed,
    })
}

/// Elementwise beta field `g / (g + g')`.
pub fn beta_from_gammas(g: &FieldSample, g_prime: &FieldSample) -> Result<FieldSample, FieldError> {
    if g.len() != g_prime.len() {
        return Err(FieldError::ShapeMismatch {
            expected: g.len(),
            got: g_prime.len(),
        });
    }
    let mut out = vec![0.0; g.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let denom = g.values[i] + g_prime.values[i];
        if denom == 0.0 {
            return Err(FieldError::DegenerateSite(i));
        }
        *o = g.values[i] / denom;
    }
    Ok(FieldSample {
        values: out,
        seed: g.seed,
    })
}

/// Covariance of the gamma field at a scalar lag: `k(lag)^2`.
pub fn gamma_covariance(spec: &CovarianceSpec, lag: f64) -> f64 {
    let k = spec.eval_lag(lag);
    k * k
}

/// Correlation of the beta field as a function of the normalized correlation
/// `rho` of the two constituent gamma fields.
///
/// Evaluates, with `m = s + s'`,
/// `1 - m ((1-rho)/(-rho))^m [ln(1-rho) - sum_{l<m} (1/l) (-rho/(1-rho))^l]`,
/// switching to the equivalent series `m sum_{d>=1} (-1)^{d+1} u^d/(m+d)`
/// (`u = rho/(1-rho)`) near `rho = 0` where the closed form cancels
/// catastrophically, and to the analytic limits at `rho = 0` and `rho = 1`.
pub fn beta_correlation_from_gamma_rho(params: &BetaFieldParams, rho: f64) -> f64 {
    let m = (params.s + params.s_prime) as i32;
    assert!(m > 1, "beta correlation requires s + s' > 1");
    debug_assert!((0.0..=1.0).contains(&rho));
    if rho <= 0.0 {
        return 0.0;
    }
    if rho >= 1.0 {
        return 1.0;
    }
    let u = rho / (1.0 - rho);
    if rho < 0.1 {
        let mut total = 0.0;
        let mut term = u; // u^d
        let mut d = 1;
        loop {
            let inc = term / (m + d) as f64;
            total += if d % 2 == 1 { inc } else { -inc };
            if inc < 1e-17 || d > 200 {
                break;
            }
            term *= u;
            d += 1;
        }
        m as f64 * total
    } else {
        let mut partial = 0.0;
        let x = -u; // (-rho)/(1-rho)
        let mut xl = 1.0;
        for l in 1..m {
            xl *= x;
            partial += xl / l as f64;
        }
        let bracket = (1.0 - rho).ln() - partial;
        let ratio = -(1.0 - rho) / rho; // (1-rho)/(-rho)
        1.0 - m as f64 * ratio.powi(m) * bracket
    }
}

/// Correlation of the beta field at a scalar lag.
///
/// The constituent gamma fields carry correlation `k(lag)^2`, so the closed
/// form is evaluated at the normalized gamma correlation
/// `rho = (k(lag)/k(0))^2`; it is 1 at zero lag and 0 at infinite lag.
/// Monte Carlo oracles reject the same formula evaluated at the normalized
/// Gaussian correlation `k(lag)/k(0)` (z of order 14 at N = 10^4).
pub fn beta_correlation(spec: &CovarianceSpec, params: &BetaFieldParams, lag: f64) -> f64 {
    let rho = spec.eval_lag(lag) / spec.variance();
    beta_correlation_from_gamma_rho(params, rho * rho)
}

/// Marginal density `beta^(s-1) (1-beta)^(s'-1) / B(s, s')` on `[0, 1]`.
pub fn beta_marginal_pdf(params: &BetaFieldParams, beta: f64) -> Result<f64, FieldError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(FieldError::OutOfSupport);
    }
    let s = params.s as f64;
    let sp = params.s_prime as f64;
    // integer shapes: B(s, s') = (s-1)! (s'-1)! / (s+s'-1)!
    //               = [prod_{i=1}^{s-1} i / (s'+i)] / s'
    let mut b = 1.0;
    for i in 1..params.s {
        b *= i as f64 / (params.s_prime + i) as f64;
    }
    b /= params.s_prime as f64;
    let pow = |base: f64, e: f64| -> f64 {
        if e == 0.0 {
            1.0
        } else {
            base.powf(e)
        }
    };
    Ok(pow(beta, s - 1.0) * pow(1.0 - beta, sp - 1.0) / b)
}

/// How Gaussian constituents are sampled inside [`sample_beta_fields`].
#[derive(Debug, Clone, Copy)]
pub struct BetaSamplingOptions {
    pub spectral: SpectralOptions,
}

impl Default for BetaSamplingOptions {
    fn default() -> Self {
        Self {
            spectral: SpectralOptions::default(),
        }
    }
}

fn beta_sample_from_seeds(
    params: &BetaFieldParams,
    basis: &Arc<SpectralBasis>,
    pts: &PointSet,
    shape: [usize; 2],
    seeds: &[u64],
) -> Result<DegradationField, FieldError> {
    let two_s = 2 * params.s as usize;
    let gaussians: Vec<FieldSample> = seeds
        .iter()
        .map(|&s| sample_spectral(&basis.with_phases(s), pts))
        .collect();
    let g = gamma_from_gaussians(&gaussians[..two_s])?;
    let g_prime = gamma_from_gaussians(&gaussians[two_s..])?;
    let beta = beta_from_gammas(&g, &g_prime)?;
    DegradationField::new(beta.values, shape, seeds.to_vec())
}

/// Draw `count` beta field samples at `pts` (interpreted as a grid of
/// `shape`). Each sample `j` consumes `2s + 2s'` Gaussian spectral samples
/// whose seeds are derived from `(master_seed, j, r)` and recorded in the
/// returned fields.
pub fn sample_beta_fields(
    params: &BetaFieldParams,
    spec: &CovarianceSpec,
    pts: &PointSet,
    shape: [usize; 2],
    count: usize,
    master_seed: u64,
    opts: &BetaSamplingOptions,
) -> Result<Vec<DegradationField>, FieldError> {
    if shape[0] * shape[1] != pts.len() {
        return Err(FieldError::ShapeMismatch {
            expected: pts.len(),
            got: shape[0] * shape[1],
        });
    }
    let basis = Arc::new(SpectralBasis::new(spec, &opts.spectral)?);
    (0..count)
        .into_par_iter()
        .map(|j| {
            let seeds: Vec<u64> = (0..params.gaussians_per_sample())
                .map(|r| rng::substream_seed(master_seed, &[j as u64, r as u64]))
                .collect();
            beta_sample_from_seeds(params, &basis, pts, shape, &seeds)
        })
        .collect()
}

/// Regenerate a beta field bit-exactly from its recorded Gaussian seeds.
pub fn regenerate_beta_field(
    params: &BetaFieldParams,
    spec: &CovarianceSpec,
    pts: &PointSet,
    shape: [usize; 2],
    seeds: &[u64],
    opts: &BetaSamplingOptions,
) -> Result<DegradationField, FieldError> {
    if seeds.len() != params.gaussians_per_sample() {
        return Err(FieldError::ShapeMismatch {
            expected: params.gaussians_per_sample(),
            got: seeds.len(),
        });
    }
    let basis = Arc::new(SpectralBasis::new(spec, &opts.spectral)?);
    beta_sample_from_seeds(params, &basis, pts, shape, seeds)
}

/// Assign to each Gauss point the value of the nearest pixel of a field
/// sampled on an equidistant grid.
pub fn downsample_to_gauss_grid(
    highres: &FieldSample,
    grid: &RegularGrid,
    gauss: &GaussGrid,
    seeds: Vec<u64>,
) -> Result<DegradationField, FieldError> {
    if highres.len() != grid.len() {
        return Err(FieldError::ShapeMismatch {
            expected: grid.len(),
            got: highres.len(),
        });
    }
    let mut values = Vec::with_capacity(gauss.len());
    for (p, c) in gauss.points().coords().iter().enumerate() {
        let mut idx = [0usize; 2];
        for a in 0..2 {
            let rel = (c[a] - grid.origin[a]) / grid.d[a];
            let i = rel.round();
            if i < -0.5 || i > grid.n[a] as f64 - 0.5 {
                return Err(FieldError::OutOfDomain(p));
            }
            idx[a] = (i.max(0.0) as usize).min(grid.n[a] - 1);
        }
        values.push(highres.values[idx[0] * grid.n[1] + idx[1]]);
    }
    DegradationField::new(values, gauss.shape, seeds)
}
