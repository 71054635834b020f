//! Point estimates used by the Monte Carlo harness.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

/// Sample mean and its standard error (`s / √n`). The error is 0 for a
/// single observation.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fraction of `true` entries and its binomial standard error.
pub fn frequency(flags: &[bool]) -> (f64, f64) {
    let n = flags.len() as f64;
    let p = flags.iter().filter(|&&b| b).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs non-empty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Total variation distance between the empirical law of `counts` and
/// Poisson(`mean`).
pub fn poisson_tv(counts: &[usize], mean: f64) -> f64 {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &c in counts {
        hist[c] += 1;
    }
    if mean == 0.0 {
        return 1.0 - hist[0] as f64 / n;
    }
    let law = Poisson::new(mean).expect("positive mean");
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (k, &h) in hist.iter().enumerate() {
        let p = law.pmf(k as u64);
        covered += p;
        tv += (h as f64 / n - p).abs();
    }
    // Poisson mass beyond the largest observed count
    tv += (1.0 - covered).max(0.0);
    0.5 * tv
}

/// Upper-tail p-value of a χ² statistic.
pub fn chi_square_pvalue(statistic: f64, dof: f64) -> f64 {
    let law = ChiSquared::new(dof).expect("positive degrees of freedom");
    law.sf(statistic)
}

/// Pearson correlation; NaN when either sample is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, _) = mean_se(x);
    let (my, _) = mean_se(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
