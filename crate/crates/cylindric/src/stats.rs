//! Batch-means estimators and the comparisons of sample streams with the
//! exact and limiting formulas.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::limit_shape::limit_shape_h;
use crate::mcmc::DiscreteGaussianSpec;
use crate::partitions::{height_of, CylindricConfig};

pub const DEFAULT_BATCHES: usize = 32;

/// Mean with batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value − target| / se`.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

/// Mean of `xs` with the standard error of `nb` contiguous batch means.
pub fn batch_means(xs: &[f64], nb: usize) -> Result<Estimate> {
    let nb = nb.max(2);
    let b = xs.len() / nb;
    if b < 2 {
        return Err(Error::Config(format!("{} samples cannot fill {nb} batches of at least 2", xs.len())));
    }
    let means: Vec<f64> = (0..nb).map(|j| xs[j * b..(j + 1) * b].iter().sum::<f64>() / b as f64).collect();
    let m = means.iter().sum::<f64>() / nb as f64;
    let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
    Ok(Estimate { value: m, se: (v / nb as f64).sqrt() })
}

/// `τ_int = (b·Var(batch means)/Var(x))/2`, so that `n_eff = n/(2τ_int)`.
pub fn integrated_autocorrelation(xs: &[f64], nb: usize) -> f64 {
    let n = xs.len();
    let b = n / nb.max(2);
    if b < 2 {
        return f64::NAN;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return 0.5;
    }
    let est = batch_means(xs, nb).expect("batch size checked above");
    let vb = est.se * est.se * nb as f64;
    (b as f64 * vb / var / 2.0).max(0.5)
}

/// One row of an empirical height profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    /// `y = (m + 1/2)/2N`.
    pub y: f64,
    /// Mean of `h(τ, m)/2N`.
    pub mean: f64,
    pub se: f64,
}

/// Empirical height profile at one column.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightProfile {
    pub rows: Vec<ProfileRow>,
    /// `sup_y |mean − H(y)|` over the rows.
    pub sup_distance: f64,
}

/// `h(τ, m)/2N` for `m ∈ [lo, hi]` averaged over the stream with batch-means errors.
pub fn height_profile(stream: &[CylindricConfig], tau: usize, window: (i64, i64), t: f64) -> Result<HeightProfile> {
    if stream.is_empty() {
        return Err(Error::Config("empty sample stream".into()));
    }
    let n2 = 2.0 * stream[0].n() as f64;
    let mut acc = ProfileAccumulator::new(window, stream.len());
    for c in stream {
        acc.push(c, tau);
    }
    acc.finish(n2, t)
}

/// Streaming form of [`height_profile`] for a known sample count.
#[derive(Clone, Debug)]
pub struct ProfileAccumulator {
    window: (i64, i64),
    total: usize,
    seen: usize,
    batch_sums: Vec<Vec<f64>>,
}

impl ProfileAccumulator {
    pub fn new(window: (i64, i64), total: usize) -> Self {
        let w = (window.1 - window.0 + 1).max(0) as usize;
        ProfileAccumulator { window, total, seen: 0, batch_sums: vec![vec![0.0; w]; DEFAULT_BATCHES] }
    }

    pub fn push(&mut self, cfg: &CylindricConfig, tau: usize) {
        self.push_column(cfg.column(tau), cfg.shift());
    }

    pub fn push_column(&mut self, la: &crate::partitions::Partition, s: i64) {
        let b = (self.seen * DEFAULT_BATCHES / self.total.max(1)).min(DEFAULT_BATCHES - 1);
        let row = &mut self.batch_sums[b];
        for (j, m) in (self.window.0..=self.window.1).enumerate() {
            row[j] += height_of(la, s, m) as f64;
        }
        self.seen += 1;
    }

    pub fn finish(&self, n2: f64, t: f64) -> Result<HeightProfile> {
        if self.seen < 2 * DEFAULT_BATCHES {
            return Err(Error::Config(format!("{} samples is too few for {DEFAULT_BATCHES} batches", self.seen)));
        }
        let counts: Vec<f64> = (0..DEFAULT_BATCHES)
            .map(|b| (0..self.seen).filter(|&i| (i * DEFAULT_BATCHES / self.total.max(1)).min(DEFAULT_BATCHES - 1) == b).count() as f64)
            .collect();
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for (j, m) in (self.window.0..=self.window.1).enumerate() {
            let means: Vec<f64> = (0..DEFAULT_BATCHES).map(|b| self.batch_sums[b][j] / counts[b] / n2).collect();
            let mean = (0..DEFAULT_BATCHES).map(|b| self.batch_sums[b][j]).sum::<f64>() / self.seen as f64 / n2;
            let nb = DEFAULT_BATCHES as f64;
            let v = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            let y = (m as f64 + 0.5) / n2;
            sup = sup.max((mean - limit_shape_h(y, t)?).abs());
            rows.push(ProfileRow { y, mean, se: (v / nb).sqrt() });
        }
        Ok(HeightProfile { rows, sup_distance: sup })
    }
}

/// Moments of jointly sampled slice observables.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceMoments {
    pub means: Vec<Estimate>,
    /// Row-major covariance estimates.
    pub covariance: Vec<Vec<Estimate>>,
    /// `κ₃` of each slice.
    pub third_cumulants: Vec<Estimate>,
    /// Skewness and excess-kurtosis z-scores against a Gaussian, per slice,
    /// using the effective sample size.
    pub skew_z: Vec<f64>,
    pub kurt_z: Vec<f64>,
    pub tau_int: Vec<f64>,
}

/// `series[j]` is the sample stream of slice `j`; all streams have equal length.
pub fn slice_moments(series: &[Vec<f64>]) -> Result<SliceMoments> {
    let n = series.first().map_or(0, |s| s.len());
    if series.iter().any(|s| s.len() != n) {
        return Err(Error::Config("slice streams have different lengths".into()));
    }
    if n < 2 * DEFAULT_BATCHES {
        return Err(Error::Config(format!("{n} samples is too few for {DEFAULT_BATCHES} batches")));
    }
    let k = series.len();
    let means: Vec<Estimate> = series.iter().map(|s| batch_means(s, DEFAULT_BATCHES)).collect::<Result<_>>()?;
    let centred: Vec<Vec<f64>> = series.iter().zip(&means).map(|(s, m)| s.iter().map(|x| x - m.value).collect()).collect();
    let mut covariance = vec![Vec::with_capacity(k); k];
    for a in 0..k {
        for b in 0..k {
            let prod: Vec<f64> = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).collect();
            let mut e = batch_means(&prod, DEFAULT_BATCHES)?;
            e.value *= n as f64 / (n - 1) as f64;
            covariance[a].push(e);
        }
    }
    let mut third = Vec::with_capacity(k);
    let mut skew_z = Vec::with_capacity(k);
    let mut kurt_z = Vec::with_capacity(k);
    let mut tau_int = Vec::with_capacity(k);
    for (j, c) in centred.iter().enumerate() {
        let cube: Vec<f64> = c.iter().map(|x| x * x * x).collect();
        let k3 = batch_means(&cube, DEFAULT_BATCHES)?;
        third.push(k3);
        let m2 = covariance[j][j].value;
        let m4 = c.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let tau = integrated_autocorrelation(&series[j], DEFAULT_BATCHES);
        let n_eff = n as f64 / (2.0 * tau).max(1.0);
        let g1 = k3.value / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        skew_z.push(g1.abs() / (6.0 / n_eff).sqrt());
        kurt_z.push(g2.abs() / (24.0 / n_eff).sqrt());
        tau_int.push(tau);
    }
    Ok(SliceMoments { means, covariance, third_cumulants: third, skew_z, kurt_z, tau_int })
}

/// Chi-square goodness of fit of a shift stream to the exact table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftReport {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub mean: f64,
    pub exact_mean: f64,
}

impl ShiftReport {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > 1.0 - level
    }
}

/// Cells with expected count below 5 are pooled into their neighbours.
pub fn shift_statistics(shifts: &[i64], spec: &DiscreteGaussianSpec) -> Result<ShiftReport> {
    if shifts.is_empty() {
        return Err(Error::Config("empty shift stream".into()));
    }
    let n = shifts.len() as f64;
    let table = spec.table();
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (expected, observed)
    let mut pend = (0.0, 0.0);
    for &(x, p) in &table {
        pend.0 += n * p;
        pend.1 += shifts.iter().filter(|&&s| s == x).count() as f64;
        if pend.0 >= 5.0 {
            cells.push(pend);
            pend = (0.0, 0.0);
        }
    }
    let outside = shifts.iter().filter(|s| !table.iter().any(|e| e.0 == **s)).count() as f64;
    pend.1 += outside;
    match cells.last_mut() {
        Some(last) => {
            last.0 += pend.0;
            last.1 += pend.1;
        }
        None => cells.push(pend),
    }
    let chi2: f64 = cells.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ShiftReport {
        chi2,
        dof,
        p_value: 1.0 - dist.cdf(chi2),
        mean: shifts.iter().sum::<i64>() as f64 / n,
        exact_mean: spec.mean(),
    })
}

/// Variance of the shift-mixed slice observable `r^S X` against
/// `Var(X) + W²·Var(S)`, where `W` is the Wallis moment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftVarianceCheck {
    pub mixed: Estimate,
    pub predicted: f64,
}

pub fn shift_mixed_variance(xs: &[f64], shifts: &[i64], r: f64, wallis: f64, var_s: f64) -> Result<ShiftVarianceCheck> {
    if xs.len() != shifts.len() {
        return Err(Error::Config("observable and shift streams differ in length".into()));
    }
    let mixed: Vec<f64> = xs.iter().zip(shifts).map(|(x, &s)| r.powi(s as i32) * x).collect();
    let m = slice_moments(&[mixed])?;
    let base = slice_moments(&[xs.to_vec()])?;
    Ok(ShiftVarianceCheck {
        mixed: m.covariance[0][0],
        predicted: base.covariance[0][0].value + wallis * wallis * var_s,
    })
}
