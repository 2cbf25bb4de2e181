//! Stationary covariance kernels and zero-mean Gaussian random field
//! samplers on 2-D point sets.
//!
//! Three interchangeable samplers are provided:
//! * [`sample_cholesky`] — exact, dense factorization, O(N^3) setup;
//! * [`sample_spectral`] — random-phase cosine series on arbitrary
//!   (non-equidistant) point sets;
//! * [`sample_fft`] — FFT synthesis on equidistant grids, O(N log N).

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::rng;

/// Errors for field construction and sampling.
#[derive(Debug, Error)]
pub enum GrfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("duplicate points at index {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("covariance matrix is not positive definite (jitter exhausted at {max_jitter:e})")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("kernel family has no implemented spectral transform")]
    UnsupportedFamily,
    #[error("grid spacing is not equidistant along axis {0}")]
    NonUniformGrid(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Stationary kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KernelFamily {
    SquaredExponential,
}

/// A stationary covariance kernel: variance (field units squared) and
/// correlation length (mm).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CovarianceSpec {
    variance: f64,
    corr_length: f64,
    family: KernelFamily,
}

impl CovarianceSpec {
    /// Squared-exponential kernel with the given variance and correlation length.
    pub fn squared_exponential(variance: f64, corr_length: f64) -> Result<Self, GrfError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(GrfError::InvalidParameter("variance must be positive"));
        }
        if !(corr_length > 0.0) || !corr_length.is_finite() {
            return Err(GrfError::InvalidParameter("corr_length must be positive"));
        }
        Ok(Self {
            variance,
            corr_length,
            family: KernelFamily::SquaredExponential,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn corr_length(&self) -> f64 {
        self.corr_length
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Kernel value at a scalar lag distance.
    pub fn eval_lag(&self, lag: f64) -> f64 {
        let l = self.corr_length;
        self.variance * (-(lag * lag) / (2.0 * l * l)).exp()
    }

    /// Kernel value between two points.
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let dx = x[0] - y[0];
        let dy = x[1] - y[1];
        self.eval_lag((dx * dx + dy * dy).sqrt())
    }

    /// Closed-form power spectral density
    /// `S(w) = variance * l/(4*pi) * exp(-l^2 |w|^2 / 4)`.
    ///
    /// Note: this form integrates to `variance / l` over the plane, so it is
    /// consistent with the kernel only at `l = 1`. Samplers weight their
    /// amplitudes with [`CovarianceSpec::sampling_spectral_density`] instead;
    /// the discrepancy between the two forms is measured by the verification
    /// suite rather than hidden here.
    pub fn spectral_density(&self, omega: [f64; 2]) -> Result<f64, GrfError> {
        match self.family {
            KernelFamily::SquaredExponential => {
                let l = self.corr_length;
                let w2 = omega[0] * omega[0] + omega[1] * omega[1];
                Ok(self.variance * l / (4.0 * std::f64::consts::PI) * (-l * l * w2 / 4.0).exp())
            }
        }
    }

    /// Power spectral density paired with [`CovarianceSpec::eval`] by the 2-D
    /// Wiener–Khinchin transform:
    /// `S(w) = variance * l^2/(2*pi) * exp(-l^2 |w|^2 / 2)`,
    /// which satisfies `integral S dw = k(0) = variance` for every `l`.
    pub fn sampling_spectral_density(&self, omega: [f64; 2]) -> f64 {
        let l = self.corr_length;
        let w2 = omega[0] * omega[0] + omega[1] * omega[1];
        self.variance * l * l / (2.0 * std::f64::consts::PI) * (-l * l * w2 / 2.0).exp()
    }
}

/// Kernel evaluation between two coordinates.
pub fn eval_kernel(spec: &CovarianceSpec, x: [f64; 2], y: [f64; 2]) -> f64 {
    spec.eval(x, y)
}

/// Spectral density of the kernel (closed form).
pub fn spectral_density(spec: &CovarianceSpec, omega: [f64; 2]) -> Result<f64, GrfError> {
    spec.spectral_density(omega)
}

/// A finite set of 2-D coordinates, validated to be non-empty, finite and
/// free of duplicates.
#[derive(Debug, Clone)]
pub struct PointSet {
    coords: Vec<[f64; 2]>,
}

impl PointSet {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self, GrfError> {
        if coords.is_empty() {
            return Err(GrfError::EmptyPointSet);
        }
        if coords
            .iter()
            .any(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(GrfError::NonFiniteCoordinate);
        }
        // exact-duplicate scan via sorted index permutation
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        idx.sort_by(|&a, &b| {
            coords[a]
                .partial_cmp(&coords[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in idx.windows(2) {
            if coords[w[0]] == coords[w[1]] {
                return Err(GrfError::DuplicatePoints(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        Ok(Self { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
}

/// An equidistant rectangular grid: `n[0] x n[1]` points, spacing `d`,
/// lower-left point at `origin`. Linear index is axis-0 major:
/// `p = i0 * n[1] + i1`.
#[derive(Debug, Clone, Copy)]
pub struct RegularGrid {
    pub n: [usize; 2],
    pub d: [f64; 2],
    pub origin: [f64; 2],
}

impl RegularGrid {
    pub fn new(n: [usize; 2], d: [f64; 2], origin: [f64; 2]) -> Result<Self, GrfError> {
        if n[0] == 0 || n[1] == 0 {
            return Err(GrfError::EmptyPointSet);
        }
        if !(d[0] > 0.0 && d[1] > 0.0) {
            return Err(GrfError::InvalidParameter("grid spacing must be positive"));
        }
        Ok(Self { n, d, origin })
    }

    /// Build from explicit per-axis coordinates, checking equidistance.
    pub fn from_axes(xs: &[f64], ys: &[f64]) -> Result<Self, GrfError> {
        let check = |v: &[f64], axis: usize| -> Result<f64, GrfError> {
            if v.len() < 2 {
                return Ok(1.0);
            }
            let d = v[1] - v[0];
            if d <= 0.0 {
                return Err(GrfError::NonUniformGrid(axis));
            }
            for w in v.windows(2) {
                if ((w[1] - w[0]) - d).abs() > 1e-12 * d.max(1.0) {
                    return Err(GrfError::NonUniformGrid(axis));
                }
            }
            Ok(d)
        };
        let d0 = check(xs, 0)?;
        let d1 = check(ys, 1)?;
        Self::new([xs.len(), ys.len()], [d0, d1], [xs[0], ys[0]])
    }

    /// `n x n` grid of nodes spanning `[0, extent]^2` (endpoints included).
    pub fn node_grid(n: usize, extent: f64) -> Self {
        let d = if n > 1 { extent / (n as f64 - 1.0) } else { extent };
        Self {
            n: [n, n],
            d: [d, d],
            origin: [0.0, 0.0],
        }
    }

    /// `n x n` grid of pixel centers covering `[0, extent]^2`.
    pub fn pixel_grid(n: usize, extent: f64) -> Self {
        let d = extent / n as f64;
        Self {
            n: [n, n],
            d: [d, d],
            origin: [0.5 * d, 0.5 * d],
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i0: usize, i1: usize) -> [f64; 2] {
        [
            self.origin[0] + i0 as f64 * self.d[0],
            self.origin[1] + i1 as f64 * self.d[1],
        ]
    }

    pub fn points(&self) -> PointSet {
        let mut coords = Vec::with_capacity(self.len());
        for i0 in 0..self.n[0] {
            for i1 in 0..self.n[1] {
                coords.push(self.point(i0, i1));
            }
        }
        PointSet { coords }
    }
}

/// One realization of a random field, aligned to the point set or grid that
/// produced it, together with the seed of its RNG stream.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl FieldSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dense covariance matrix `K[u][v] = k(X_u, X_v)`.
pub fn build_cov_matrix(spec: &CovarianceSpec, pts: &PointSet) -> Result<Array2<f64>, GrfError> {
    let n = pts.len();
    let c = pts.coords();
    let mut k = Array2::zeros((n, n));
    for u in 0..n {
        k[(u, u)] = spec.variance();
        for v in 0..u {
            let val = spec.eval(c[u], c[v]);
            k[(u, v)] = val;
            k[(v, u)] = val;
        }
    }
    Ok(k)
}

/// Lower-triangular Cholesky factor of a covariance matrix, with a jitter
/// ladder for numerically semi-definite matrices: `eps * variance` is added
/// to the diagonal, `eps` stepping 1e-12, 1e-11, ..., 1e-6 before giving up.
pub struct CholeskyFactor {
    l: Array2<f64>,
    n: usize,
    pub jitter: f64,
}

fn cholesky_in_place(a: &mut Array2<f64>) -> bool {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let dj = d.sqrt();
        a[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / dj;
        }
        for k in (j + 1)..n {
            a[(j, k)] = 0.0;
        }
    }
    true
}

impl CholeskyFactor {
    pub fn new(spec: &CovarianceSpec, pts: &PointSet) -> Result<Self, GrfError> {
        let k = build_cov_matrix(spec, pts)?;
        let n = pts.len();
        let mut jitter = 0.0;
        loop {
            let mut a = k.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    a[(i, i)] += jitter * spec.variance();
                }
            }
            if cholesky_in_place(&mut a) {
                return Ok(Self { l: a, n, jitter });
            }
            jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
            if jitter > 1e-6 {
                return Err(GrfError::NotPositiveDefinite { max_jitter: 1e-6 });
            }
        }
    }

    /// Draw one sample `f = L z` with `z` i.i.d. standard normal from `seed`.
    pub fn sample(&self, seed: u64) -> FieldSample {
        let mut r = rng::stream_from_seed(seed);
        let z: Vec<f64> = (0..self.n).map(|_| r.sample(StandardNormal)).collect();
        let mut f = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.l[(i, j)] * z[j];
            }
            f[i] = s;
        }
        FieldSample { values: f, seed }
    }
}

/// One-shot Cholesky sampling; factor once and reuse [`CholeskyFactor`] when
/// drawing many samples from the same spec and point set.
pub fn sample_cholesky(
    spec: &CovarianceSpec,
    pts: &PointSet,
    seed: u64,
) -> Result<FieldSample, GrfError> {
    Ok(CholeskyFactor::new(spec, pts)?.sample(seed))
}

/// Options for building a spectral plan.
#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Cutoff is chosen so the on-axis density has decayed to `rel_tol`
    /// times its peak.
    pub rel_tol: f64,
    /// Number of frequency pivots per axis.
    pub resolution: [usize; 2],
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            resolution: [128, 128],
        }
    }
}

/// Deterministic part of a spectral plan: cutoff, pivot frequencies and
/// amplitudes. Shared between plans that differ only by their phase draw.
#[derive(Debug)]
pub struct SpectralBasis {
    spec: CovarianceSpec,
    pub cutoff: [f64; 2],
    pub resolution: [usize; 2],
    pub steps: [f64; 2],
    /// `A[n1 * N2 + n2] = sqrt(2 S(n1 dw1, n2 dw2) dw1 dw2)`, all >= 0.
    amplitudes: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(spec: &CovarianceSpec, opts: &SpectralOptions) -> Result<Self, GrfError> {
        if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
            return Err(GrfError::InvalidParameter("rel_tol must be in (0,1)"));
        }
        if opts.resolution[0] == 0 || opts.resolution[1] == 0 {
            return Err(GrfError::InvalidParameter("resolution must be positive"));
        }
        // Invert exp(-l^2 w^2 / 4) = rel_tol per axis.
        let l = spec.corr_length();
        let wmax = 2.0 * (1.0 / opts.rel_tol).ln().sqrt() / l;
        let cutoff = [wmax, wmax];
        let [n1, n2] = opts.resolution;
        let steps = [cutoff[0] / n1 as f64, cutoff[1] / n2 as f64];
        let mut amplitudes = vec![0.0; n1 * n2];
        for i1 in 0..n1 {
            let w1 = i1 as f64 * steps[0];
            for i2 in 0..n2 {
                let w2 = i2 as f64 * steps[1];
                let s = spec.sampling_spectral_density([w1, w2]);
                // Trapezoid weight at the zero-frequency boundary: the pivots
                // form a left-endpoint rule over the first quadrant, which
                // over-counts the two axis lines by O(dw) and inflates the
                // field variance by several percent at practical resolutions.
                // Half-weighting the boundary restores O(dw^2) accuracy.
                let wq = if i1 == 0 { 0.5 } else { 1.0 } * if i2 == 0 { 0.5 } else { 1.0 };
                amplitudes[i1 * n2 + i2] = (2.0 * s * wq * steps[0] * steps[1]).sqrt();
            }
        }
        Ok(Self {
            spec: *spec,
            cutoff,
            resolution: opts.resolution,
            steps,
            amplitudes,
        })
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Attach a phase draw, producing a complete plan.
    pub fn with_phases(self: &std::sync::Arc<Self>, seed: u64) -> SpectralPlan {
        let [n1, n2] = self.resolution;
        let mut r = rng::stream_from_seed(seed);
        let mut draw = |_: ()| -> Vec<f64> {
            (0..n1 * n2)
                .map(|_| r.random::<f64>() * std::f64::consts::TAU)
                .collect()
        };
        let phases1 = draw(());
        let phases2 = draw(());
        let trig = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
            (p.iter().map(|a| a.cos()).collect(), p.iter().map(|a| a.sin()).collect())
        };
        let (cos1, sin1) = trig(&phases1);
        let (cos2, sin2) = trig(&phases2);
        SpectralPlan {
            basis: self.clone(),
            phases1,
            phases2,
            cos1,
            sin1,
            cos2,
            sin2,
            seed,
        }
    }
}

/// A spectral plan: basis plus one draw of random phase angles in `[0, 2pi)`.
pub struct SpectralPlan {
    basis: std::sync::Arc<SpectralBasis>,
    phases1: Vec<f64>,
    phases2: Vec<f64>,
    cos1: Vec<f64>,
    sin1: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    pub seed: u64,
}

impl SpectralPlan {
    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn phases(&self) -> (&[f64], &[f64]) {
        (&self.phases1, &self.phases2)
    }
}

/// Build a spectral plan: pick the cutoff from `rel_tol`, tabulate
/// amplitudes, and draw phase angles from `seed`.
pub fn plan_spectrum(
    spec: &CovarianceSpec,
    opts: &SpectralOptions,
    seed: u64,
) -> Result<SpectralPlan, GrfError> {
    let basis = std::sync::Arc::new(SpectralBasis::new(spec, opts)?);
    Ok(basis.with_phases(seed))
}

/// Evaluate the random-phase cosine series of a plan at every coordinate of
/// `pts`. Deterministic given the plan; points may be non-equidistant.
pub fn sample_spectral(plan: &SpectralPlan, pts: &PointSet) -> FieldSample {
    let b = &plan.basis;
    let [n1, n2] = b.resolution;
    let np = pts.len();
    let coords = pts.coords();

    // per-axis trig tables: t[n * np + p]
    let mut c1t = vec![0.0; n1 * np];
    let mut s1t = vec![0.0; n1 * np];
    let mut c2t = vec![0.0; n2 * np];
    let mut s2t = vec![0.0; n2 * np];
    for i1 in 0..n1 {
        let w = i1 as f64 * b.steps[0];
        for (p, c) in coords.iter().enumerate() {
            let a = w * c[0];
            c1t[i1 * np + p] = a.cos();
            s1t[i1 * np + p] = a.sin();
        }
    }
    for i2 in 0..n2 {
        let w = i2 as f64 * b.steps[1];
        for (p, c) in coords.iter().enumerate() {
            let a = w * c[1];
            c2t[i2 * np + p] = a.cos();
            s2t[i2 * np + p] = a.sin();
        }
    }

    let mut values = vec![0.0; np];
    for (p, v) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i1 in 0..n1 {
            let c1 = c1t[i1 * np + p];
            let s1 = s1t[i1 * np + p];
            let row = i1 * n2;
            for i2 in 0..n2 {
                let c2 = c2t[i2 * np + p];
                let s2 = s2t[i2 * np + p];
                // theta+- = w1 x1 +- w2 x2
                let cp = c1 * c2 - s1 * s2;
                let sp = s1 * c2 + c1 * s2;
                let cm = c1 * c2 + s1 * s2;
                let sm = s1 * c2 - c1 * s2;
                let k = row + i2;
                acc += b.amplitudes[k]
                    * (cp * plan.cos1[k] - sp * plan.sin1[k] + cm * plan.cos2[k]
                        - sm * plan.sin2[k]);
            }
        }
        *v = std::f64::consts::SQRT_2 * acc;
    }
    FieldSample {
        values,
        seed: plan.seed,
    }
}

/// Correlation lengths of padding added around an FFT sampling grid to
/// suppress periodic wrap-around.
const FFT_PAD_CORRELATION_LENGTHS: f64 = 6.0;

/// Padded transform shape used by [`sample_fft`] for a given grid.
pub fn fft_noise_shape(spec: &CovarianceSpec, grid: &RegularGrid) -> [usize; 2] {
    let pad = |n: usize, d: f64| -> usize {
        let extra = (FFT_PAD_CORRELATION_LENGTHS * spec.corr_length() / d).ceil() as usize;
        (n + extra).next_power_of_two()
    };
    [pad(grid.n[0], grid.d[0]), pad(grid.n[1], grid.d[1])]
}

fn fft2(data: &mut [Complex<f64>], n: [usize; 2], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft_rows = if inverse {
        planner.plan_fft_inverse(n[1])
    } else {
        planner.plan_fft_forward(n[1])
    };
    for row in data.chunks_exact_mut(n[1]) {
        fft_rows.process(row);
    }
    let fft_cols = if inverse {
        planner.plan_fft_inverse(n[0])
    } else {
        planner.plan_fft_forward(n[0])
    };
    let mut col = vec![Complex::default(); n[0]];
    for i1 in 0..n[1] {
        for i0 in 0..n[0] {
            col[i0] = data[i0 * n[1] + i1];
        }
        fft_cols.process(&mut col);
        for i0 in 0..n[0] {
            data[i0 * n[1] + i1] = col[i0];
        }
    }
}

fn fft_angular_frequency(i: usize, n: usize, d: f64) -> f64 {
    let k = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    std::f64::consts::TAU * k / (n as f64 * d)
}

/// FFT synthesis from an explicit white-noise array of shape
/// [`fft_noise_shape`] (axis-0 major). Exposed so linearity can be probed
/// directly; use [`sample_fft`] for seeded draws.
pub fn sample_fft_from_noise(
    spec: &CovarianceSpec,
    grid: &RegularGrid,
    z: &[f64],
    seed: u64,
) -> Result<FieldSample, GrfError> {
    let np = fft_noise_shape(spec, grid);
    if z.len() != np[0] * np[1] {
        return Err(GrfError::ShapeMismatch {
            expected: np[0] * np[1],
            got: z.len(),
        });
    }
    let mut data: Vec<Complex<f64>> = z.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut data, np, false);
    let dw = [
        std::f64::consts::TAU / (np[0] as f64 * grid.d[0]),
        std::f64::consts::TAU / (np[1] as f64 * grid.d[1]),
    ];
    // With an unnormalized inverse transform and E|FFT(z)_k|^2 = N, scaling
    // each mode by sqrt(S dw1 dw2 / N) gives Var(f) = sum_k S(w_k) dw1 dw2.
    let norm = (dw[0] * dw[1] / (np[0] * np[1]) as f64).sqrt();
    for i0 in 0..np[0] {
        let w0 = fft_angular_frequency(i0, np[0], grid.d[0]);
        for i1 in 0..np[1] {
            let w1 = fft_angular_frequency(i1, np[1], grid.d[1]);
            let s = spec.sampling_spectral_density([w0, w1]);
            data[i0 * np[1] + i1] *= s.sqrt() * norm;
        }
    }
    fft2(&mut data, np, true);
    let mut values = Vec::with_capacity(grid.len());
    for i0 in 0..grid.n[0] {
        for i1 in 0..grid.n[1] {
            values.push(data[i0 * np[1] + i1].re);
        }
    }
    Ok(FieldSample { values, seed })
}

/// Draw one Gaussian field sample on an equidistant grid by filtering white
/// noise in the frequency domain. The grid is embedded in a periodic domain
/// padded by several correlation lengths before transforming.
pub fn sample_fft(
    spec: &CovarianceSpec,
    grid: &RegularGrid,
    seed: u64,
) -> Result<FieldSample, GrfError> {
    let np = fft_noise_shape(spec, grid);
    let mut r = rng::stream_from_seed(seed);
    let z: Vec<f64> = (0..np[0] * np[1]).map(|_| r.sample(StandardNormal)).collect();
    sample_fft_from_noise(spec, grid, &z, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn se_spec() -> CovarianceSpec {
        CovarianceSpec::squared_exponential(1.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_zero_lag_is_variance() {
        let spec = CovarianceSpec::squared_exponential(0.173, 2f64.sqrt() / 3.0).unwrap();
        assert_relative_eq!(spec.eval([0.3, 0.4], [0.3, 0.4]), 0.173);
        assert_relative_eq!(se_spec().eval_lag(0.0), 1.0);
    }

    #[test]
    fn kernel_hand_value_at_sqrt2() {
        // |dx| = sqrt(2), l = 1 -> exp(-1)
        let v = se_spec().eval([0.0, 0.0], [1.0, 1.0]);
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let spec = CovarianceSpec::squared_exponential(2.5, 0.7).unwrap();
        let (a, b) = ([0.1, -0.4], [2.0, 0.9]);
        assert_eq!(spec.eval(a, b), spec.eval(b, a));
        assert!(spec.eval(a, b) > 0.0 && spec.eval(a, b) <= 2.5);
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(CovarianceSpec::squared_exponential(0.0, 1.0).is_err());
        assert!(CovarianceSpec::squared_exponential(1.0, -1.0).is_err());
    }

    #[test]
    fn cov_matrix_single_point() {
        let spec = CovarianceSpec::squared_exponential(0.5, 1.0).unwrap();
        let pts = PointSet::new(vec![[0.0, 0.0]]).unwrap();
        let k = build_cov_matrix(&spec, &pts).unwrap();
        assert_eq!(k.shape(), [1, 1]);
        assert_relative_eq!(k[(0, 0)], 0.5);
    }

    #[test]
    fn cov_matrix_two_points_at_l_sqrt2() {
        let spec = se_spec();
        let d = 2f64.sqrt();
        let pts = PointSet::new(vec![[0.0, 0.0], [d, 0.0]]).unwrap();
        let k = build_cov_matrix(&spec, &pts).unwrap();
        assert_relative_eq!(k[(0, 1)], (-1.0f64).exp(), max_relative = 1e-14);
        assert_eq!(k[(0, 1)], k[(1, 0)]);
    }

    #[test]
    fn cov_matrix_grid_diagonal() {
        let spec = CovarianceSpec::squared_exponential(0.173, 2f64.sqrt() / 3.0).unwrap();
        let pts = RegularGrid::node_grid(16, 1.0).points();
        let k = build_cov_matrix(&spec, &pts).unwrap();
        for i in 0..pts.len() {
            assert_relative_eq!(k[(i, i)], 0.173);
        }
    }

    #[test]
    fn duplicate_points_rejected() {
        let e = PointSet::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]).unwrap_err();
        match e {
            GrfError::DuplicatePoints(0, 2) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cov_matrix_eigenvalues_nearly_nonnegative() {
        let spec = CovarianceSpec::squared_exponential(0.8, 0.5).unwrap();
        let pts = RegularGrid::node_grid(8, 1.0).points();
        let k = build_cov_matrix(&spec, &pts).unwrap();
        let n = pts.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| k[(i, j)]);
        let eig = m.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * 0.8, "min eigenvalue {min}");
    }

    #[test]
    fn cholesky_degenerate_variance_gives_zero_field() {
        let spec = CovarianceSpec::squared_exponential(1e-18, 1.0).unwrap();
        let pts = RegularGrid::node_grid(4, 1.0).points();
        let f = sample_cholesky(&spec, &pts, 7).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn cholesky_single_point_is_raw_normal() {
        let pts = PointSet::new(vec![[0.0, 0.0]]).unwrap();
        let f = sample_cholesky(&se_spec(), &pts, 123).unwrap();
        let mut r = rng::stream_from_seed(123);
        let z: f64 = r.sample(StandardNormal);
        assert_eq!(f.values[0].to_bits(), z.to_bits());
    }

    #[test]
    fn cholesky_is_deterministic() {
        let pts = RegularGrid::node_grid(5, 1.0).points();
        let a = sample_cholesky(&se_spec(), &pts, 9).unwrap();
        let b = sample_cholesky(&se_spec(), &pts, 9).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn printed_density_hand_value_at_origin() {
        let s = se_spec().spectral_density([0.0, 0.0]).unwrap();
        assert_relative_eq!(s, 1.0 / (4.0 * std::f64::consts::PI), max_relative = 1e-14);
    }

    #[test]
    fn density_is_even() {
        let spec = CovarianceSpec::squared_exponential(1.3, 0.6).unwrap();
        let w = [0.7, -1.9];
        let mw = [-0.7, 1.9];
        assert_eq!(spec.spectral_density(w).unwrap(), spec.spectral_density(mw).unwrap());
        assert_eq!(
            spec.sampling_spectral_density(w),
            spec.sampling_spectral_density(mw)
        );
    }

    fn quadrature_integral<F: Fn([f64; 2]) -> f64>(f: F, wmax: f64, n: usize) -> f64 {
        let h = 2.0 * wmax / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let w0 = -wmax + (i as f64 + 0.5) * h;
            for j in 0..n {
                let w1 = -wmax + (j as f64 + 0.5) * h;
                acc += f([w0, w1]);
            }
        }
        acc * h * h
    }

    #[test]
    fn sampling_density_integrates_to_variance() {
        for (var, l) in [(1.0, 1.0), (0.173, 2f64.sqrt() / 3.0), (2.0, 0.3)] {
            let spec = CovarianceSpec::squared_exponential(var, l).unwrap();
            let wmax = 12.0 / l;
            let total = quadrature_integral(|w| spec.sampling_spectral_density(w), wmax, 400);
            assert_relative_eq!(total, var, max_relative = 1e-2);
        }
    }

    #[test]
    fn printed_density_integral_matches_variance_only_at_unit_length() {
        // At l = 1 the closed form integrates to the variance.
        let spec = se_spec();
        let total = quadrature_integral(|w| spec.spectral_density(w).unwrap(), 12.0, 400);
        assert_relative_eq!(total, 1.0, max_relative = 1e-2);

        // At other correlation lengths it integrates to variance / l; the
        // measured ratio is reported so the mismatch stays visible.
        let l = 2f64.sqrt() / 3.0;
        let spec = CovarianceSpec::squared_exponential(0.173, l).unwrap();
        let total = quadrature_integral(|w| spec.spectral_density(w).unwrap(), 12.0 / l, 400);
        let ratio = total / 0.173;
        println!("printed-form integral / variance = {ratio:.6} (expected 1/l = {:.6})", 1.0 / l);
        assert_relative_eq!(ratio, 1.0 / l, max_relative = 1e-2);
    }

    #[test]
    fn plan_cutoff_matches_closed_form_inversion() {
        let opts = SpectralOptions {
            rel_tol: 1e-6,
            resolution: [64, 64],
        };
        let plan = plan_spectrum(&se_spec(), &opts, 0).unwrap();
        let expected = 2.0 * (1e6f64).ln().sqrt();
        assert_relative_eq!(plan.basis().cutoff[0], expected, max_relative = 1e-12);
        assert_eq!(plan.basis().amplitudes().len(), 64 * 64);
        assert!(plan.basis().amplitudes().iter().all(|&a| a >= 0.0));
        let (p1, p2) = plan.phases();
        assert!(p1.iter().chain(p2).all(|&a| (0.0..std::f64::consts::TAU).contains(&a)));
    }

    #[test]
    fn spectral_single_pivot_direct_evaluation() {
        // One pivot with zero phases, evaluated at the origin: both cosine
        // terms are cos(0) = 1, so f = sqrt(2) * A00 * 2.
        let spec = se_spec();
        let basis = Arc::new(
            SpectralBasis::new(
                &spec,
                &SpectralOptions {
                    rel_tol: 0.5,
                    resolution: [1, 1],
                },
            )
            .unwrap(),
        );
        let mut plan = basis.with_phases(0);
        plan.phases1 = vec![0.0];
        plan.phases2 = vec![0.0];
        plan.cos1 = vec![1.0];
        plan.sin1 = vec![0.0];
        plan.cos2 = vec![1.0];
        plan.sin2 = vec![0.0];
        let pts = PointSet::new(vec![[0.0, 0.0]]).unwrap();
        let f = sample_spectral(&plan, &pts);
        let a00 = basis.amplitudes()[0];
        assert_relative_eq!(f.values[0], 2.0 * std::f64::consts::SQRT_2 * a00, max_relative = 1e-14);
    }

    #[test]
    fn spectral_is_deterministic_given_plan() {
        let plan = plan_spectrum(&se_spec(), &SpectralOptions::default(), 11).unwrap();
        let pts = RegularGrid::node_grid(4, 1.0).points();
        let a = sample_spectral(&plan, &pts);
        let b = sample_spectral(&plan, &pts);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn spectral_matches_brute_force_cosine_sum() {
        // Direct evaluation of the double cosine sum against the table-based
        // implementation.
        let spec = CovarianceSpec::squared_exponential(0.7, 0.8).unwrap();
        let opts = SpectralOptions {
            rel_tol: 1e-4,
            resolution: [9, 7],
        };
        let plan = plan_spectrum(&spec, &opts, 3).unwrap();
        let pts = PointSet::new(vec![[0.13, -0.4], [1.7, 2.9]]).unwrap();
        let fast = sample_spectral(&plan, &pts);
        let b = plan.basis();
        let (p1, p2) = plan.phases();
        for (p, c) in pts.coords().iter().enumerate() {
            let mut acc = 0.0;
            for i1 in 0..9 {
                for i2 in 0..7 {
                    let k = i1 * 7 + i2;
                    let t1 = i1 as f64 * b.steps[0] * c[0];
                    let t2 = i2 as f64 * b.steps[1] * c[1];
                    acc += b.amplitudes()[k]
                        * ((t1 + t2 + p1[k]).cos() + (t1 - t2 + p2[k]).cos());
                }
            }
            assert_relative_eq!(fast.values[p], std::f64::consts::SQRT_2 * acc, max_relative = 1e-12);
        }
    }

    #[test]
    fn fft_zero_noise_gives_zero_field() {
        let grid = RegularGrid::node_grid(8, 1.0);
        let spec = se_spec();
        let shape = fft_noise_shape(&spec, &grid);
        let z = vec![0.0; shape[0] * shape[1]];
        let f = sample_fft_from_noise(&spec, &grid, &z, 0).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fft_is_deterministic() {
        let grid = RegularGrid::node_grid(8, 1.0);
        let a = sample_fft(&se_spec(), &grid, 5).unwrap();
        let b = sample_fft(&se_spec(), &grid, 5).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn nonuniform_grid_rejected() {
        let xs = [0.0, 0.1, 0.25];
        let ys = [0.0, 0.1, 0.2];
        match RegularGrid::from_axes(&xs, &ys) {
            Err(GrfError::NonUniformGrid(0)) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(RegularGrid::from_axes(&ys, &ys).is_ok());
    }
}
