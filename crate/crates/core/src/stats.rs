//! Small statistical helpers shared by the self-test command and the
//! verification suites: Kolmogorov-Smirnov statistics, sample moments and
//! Monte Carlo standard errors.

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at significance `alpha`.
///
/// c(alpha) = sqrt(-ln(alpha/2)/2), critical D = c / sqrt(n).
pub fn ks_critical_value(alpha: f64, n: usize) -> f64 {
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_two_sample_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Unbiased sample covariance of paired observations.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn se_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the sample variance of a roughly Gaussian variable:
/// var_hat has variance ~ 2 sigma^4 / (n-1).
pub fn se_variance_gaussian(sigma2: f64, n: usize) -> f64 {
    sigma2 * (2.0 / (n as f64 - 1.0)).sqrt()
}

/// Standard error of an empirical covariance estimate between two jointly
/// Gaussian variables with variances `vx`, `vy` and covariance `cxy`:
/// Var(cov_hat) ~ (vx*vy + cxy^2) / (n-1).
pub fn se_covariance_gaussian(vx: f64, vy: f64, cxy: f64, n: usize) -> f64 {
    ((vx * vy + cxy * cxy) / (n as f64 - 1.0)).sqrt()
}

/// Empirical standard error of a covariance estimate, from the sample itself
/// (delta method; valid for any square-integrable pair).
pub fn se_covariance_empirical(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    se_mean(&prods)
}
