//! Contour-integral moment formulas for the slice observables `F_r` and their
//! large-`N` limits.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partitions::ModularData;
use crate::special::{pochhammer_eps, ThetaParams, DEFAULT_EPS};

/// Largest number of integrand evaluations in one n-fold trapezoid.
pub const MAX_EVALUATIONS: usize = 300_000_000;
/// Node-doubling tolerance, relative to `max(1, |value|)`.
pub const QUAD_TOL: f64 = 1e-9;

/// One slice observable: column `⌊2Nτ⌋` and `r = t^{k/N}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceObservable {
    pub tau: f64,
    pub k: u32,
}

impl SliceObservable {
    pub fn new(tau: f64, k: u32) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Domain(format!("τ = {tau} must lie in (0,1]")));
        }
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        Ok(SliceObservable { tau, k })
    }

    /// `⌊2Nτ⌋`, with `0` read as column `2N`.
    pub fn column(&self, n: usize) -> usize {
        let c = (2.0 * n as f64 * self.tau + 1e-9).floor() as usize;
        if c == 0 {
            2 * n
        } else {
            c.min(2 * n)
        }
    }
}

/// Concentric circles `|z_i| = ρ_i` for slices in ascending column order.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourSpec {
    pub radii: Vec<f64>,
    pub nodes_per_circle: usize,
}

impl ContourSpec {
    /// Validates `r_j^{−1}ρ_j < ρ_i < t^{−1}r_iρ_j` for `i < j`.
    pub fn new(radii: Vec<f64>, nodes_per_circle: usize, ks: &[u32], md: &ModularData) -> Result<Self> {
        if radii.len() != ks.len() {
            return Err(Error::Config(format!("{} radii for {} slices", radii.len(), ks.len())));
        }
        if nodes_per_circle < 4 {
            return Err(Error::Config("at least 4 nodes per circle".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("radii must be positive and finite".into()));
        }
        for i in 0..ks.len() {
            for j in i + 1..ks.len() {
                let (ri, rj) = (md.r_of(ks[i]), md.r_of(ks[j]));
                let lo = radii[j] / rj;
                let hi = radii[j] * ri / md.t;
                if !(lo < radii[i] && radii[i] < hi) {
                    return Err(Error::Config(format!(
                        "contour condition fails for slices {i},{j}: need {lo:.6e} < ρ_{i} = {:.6e} < {hi:.6e}",
                        radii[i]
                    )));
                }
            }
        }
        Ok(ContourSpec { radii, nodes_per_circle })
    }

    /// Default radii for `(column, k)` pairs in ascending column order.
    pub fn auto(cols_ks: &[(usize, u32)], md: &ModularData, nodes_per_circle: usize) -> Result<Self> {
        let n = cols_ks.len();
        let ks: Vec<u32> = cols_ks.iter().map(|x| x.1).collect();
        let lt = -md.t.ln();
        // admissible (ln ρ_i − ln ρ_j) ∈ (lo_ij, hi_ij)
        let lo = |j: usize| ks[j] as f64 / md.n as f64 * lt;
        let hi = |i: usize| (1.0 - ks[i] as f64 / md.n as f64) * lt;
        let mut logs = vec![0.0; n];
        if n > 1 {
            // ladder ln ρ_i = (n−i)γ|ln t|
            let mut g_lo = f64::NEG_INFINITY;
            let mut g_hi = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    let d = (j - i) as f64;
                    g_lo = g_lo.max(lo(j) / d);
                    g_hi = g_hi.min(hi(i) / d);
                }
            }
            if g_lo < g_hi {
                let g = 0.5 * (g_lo + g_hi);
                for (i, l) in logs.iter_mut().enumerate() {
                    *l = (n - 1 - i) as f64 * g;
                }
            } else {
                logs = max_slack(n, &|i, j| (lo(j), hi(i))).ok_or_else(|| {
                    Error::Config(format!(
                        "no admissible contours for k = {ks:?} at N = {}: the condition needs t^{{(k_i+k_j)/N}} > t for every pair",
                        md.n
                    ))
                })?;
            }
        }
        // centre on the zeros of the entire factors
        let centre: f64 = cols_ks.iter().map(|&(c, k)| (c as f64 + k as f64) * md.q.ln()).sum::<f64>() / n.max(1) as f64;
        let shift = centre - logs.iter().sum::<f64>() / n.max(1) as f64;
        let radii = logs.iter().map(|l| (l + shift).exp()).collect();
        ContourSpec::new(radii, nodes_per_circle, &ks, md)
    }
}

/// Maximises the common slack `s` of `lo_ij + s ≤ x_i − x_j ≤ hi_ij − s` by
/// bisection over Bellman-Ford feasibility.
fn max_slack(n: usize, bounds: &dyn Fn(usize, usize) -> (f64, f64)) -> Option<Vec<f64>> {
    let solve = |s: f64| -> Option<Vec<f64>> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (lo, hi) = bounds(i, j);
                edges.push((j, i, hi - s));
                edges.push((i, j, -(lo + s)));
            }
        }
        let mut d = vec![0.0f64; n];
        for _ in 0..n {
            let mut changed = false;
            for &(a, b, w) in &edges {
                if d[a] + w < d[b] - 1e-15 {
                    d[b] = d[a] + w;
                    changed = true;
                }
            }
            if !changed {
                return Some(d);
            }
        }
        None
    };
    solve(1e-12)?;
    let (mut a, mut b) = (1e-12, 1e3);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if solve(m).is_some() {
            a = m;
        } else {
            b = m;
        }
    }
    solve(a)
}

/// `(t;t)²/((rt;t)(r^{−1}t;t)(1 − r^{−1}))`.
pub fn prefactor(r: f64, t: f64) -> Result<f64> {
    let tt = pochhammer_eps(C64::new(t, 0.0), t, DEFAULT_EPS)?.re;
    let a = pochhammer_eps(C64::new(r * t, 0.0), t, DEFAULT_EPS)?.re;
    let b = pochhammer_eps(C64::new(t / r, 0.0), t, DEFAULT_EPS)?.re;
    let den = a * b * (1.0 - 1.0 / r);
    if den.abs() < 1e-14 {
        return Err(Error::Pole(format!("prefactor is singular at r = {r}, t = {t}")));
    }
    Ok(tt * tt / den)
}

/// `F(τ,z)/F(τ,q^{−2k}z)` as the finite product over half-integers in `(τ, τ+2k)`.
pub fn f_quotient(col: usize, k: u32, z: C64, md: &ModularData) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut acc = one;
    for m in 0..2 * k as usize {
        let v = col as f64 + 0.5 + m as f64;
        if (v.rem_euclid(2.0) - 0.5).abs() < 1e-9 {
            acc *= one - md.q.powf(v) / z;
        } else {
            acc *= one - md.q.powf(-v) * z;
        }
    }
    acc
}

/// `(x;t)(t/x;t)`, i.e. `θ₁` without its half-power and `(t;t)` factor.
fn theta_core(x: C64, t: f64) -> Result<C64> {
    Ok(pochhammer_eps(x, t, DEFAULT_EPS)? * pochhammer_eps(t / x, t, DEFAULT_EPS)?)
}

/// Cross term for `i < j` at `w = z_i/z_j`.
fn cross(w: C64, ri: f64, rj: f64, t: f64) -> Result<C64> {
    let den = theta_core(w * rj, t)? * theta_core(w / ri, t)?;
    if den.norm() < 1e-250 {
        return Err(Error::Pole(format!("contour node {w} meets a pole of the cross term")));
    }
    Ok(theta_core(w, t)? * theta_core(w * (rj / ri), t)? / den)
}

/// Contour value with its quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentValue {
    pub value: f64,
    /// Change under the last node doubling.
    pub quad_error: f64,
    /// `|Im| / max(1, |Re|)` of the raw quadrature.
    pub imag_residue: f64,
    pub nodes: usize,
}

/// `E[∏ F_{r_i}(λ^{(c_i)})]` for `(column, k)` pairs, any order.
pub fn contour_moment_columns(cols_ks: &[(usize, u32)], md: &ModularData, spec: Option<&ContourSpec>) -> Result<MomentValue> {
    if cols_ks.is_empty() {
        return Ok(MomentValue { value: 1.0, quad_error: 0.0, imag_residue: 0.0, nodes: 0 });
    }
    for &(c, k) in cols_ks {
        if c == 0 || c > md.columns() || k == 0 {
            return Err(Error::Domain(format!("slice (column {c}, k {k}) outside 1..={} × ℕ₊", md.columns())));
        }
    }
    let mut sorted = cols_ks.to_vec();
    sorted.sort_by_key(|x| x.0);
    let ks: Vec<u32> = sorted.iter().map(|x| x.1).collect();
    let n = sorted.len();
    let spec = match spec {
        Some(s) => ContourSpec::new(s.radii.clone(), s.nodes_per_circle, &ks, md)?,
        None => ContourSpec::auto(&sorted, md, default_nodes(n))?,
    };
    let mut pre = 1.0;
    for &k in &ks {
        pre *= prefactor(md.r_of(k), md.t)?;
    }
    let cap = ((MAX_EVALUATIONS as f64).powf(1.0 / n as f64)).floor() as usize;
    let mut m = spec.nodes_per_circle;
    let mut prev = trapezoid(&sorted, md, &spec.radii, m)?;
    loop {
        let m2 = 2 * m;
        if m2 > cap {
            return Err(Error::Resource(format!(
                "trapezoid did not settle below {QUAD_TOL:e} within {m} nodes per circle"
            )));
        }
        let next = trapezoid(&sorted, md, &spec.radii, m2)?;
        let diff = (next - prev).norm();
        m = m2;
        if diff < QUAD_TOL * next.norm().max(1.0) {
            return Ok(MomentValue {
                value: pre * next.re,
                quad_error: pre.abs() * diff,
                imag_residue: next.im.abs() / next.re.abs().max(1.0),
                nodes: m,
            });
        }
        prev = next;
    }
}

fn default_nodes(n: usize) -> usize {
    match n {
        1 => 64,
        2 => 128,
        _ => 32,
    }
}

/// Average of the integrand over the `m^n` node grid.
fn trapezoid(sorted: &[(usize, u32)], md: &ModularData, radii: &[f64], m: usize) -> Result<C64> {
    let n = sorted.len();
    let unit = |a: usize| C64::from_polar(1.0, 2.0 * PI * a as f64 / m as f64);
    let g: Vec<Vec<C64>> = sorted
        .iter()
        .zip(radii)
        .map(|(&(c, k), &rho)| (0..m).map(|a| f_quotient(c, k, unit(a) * rho, md)).collect())
        .collect();
    let mut cr: Vec<Vec<Vec<C64>>> = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (ri, rj) = (md.r_of(sorted[i].1), md.r_of(sorted[j].1));
            let ratio = radii[i] / radii[j];
            cr[i][j] = (0..m)
                .into_par_iter()
                .map(|d| cross(unit(d) * ratio, ri, rj, md.t))
                .collect::<Result<_>>()?;
        }
    }
    let total: C64 = (0..m)
        .into_par_iter()
        .map(|a0| {
            let mut idx = vec![0usize; n];
            idx[0] = a0;
            nest(1, &mut idx, g[0][a0], &g, &cr, m)
        })
        .sum();
    Ok(total / (m as f64).powi(n as i32))
}

fn nest(level: usize, idx: &mut [usize], acc: C64, g: &[Vec<C64>], cr: &[Vec<Vec<C64>>], m: usize) -> C64 {
    let n = idx.len();
    if level == n {
        return acc;
    }
    let mut sum = C64::new(0.0, 0.0);
    for a in 0..m {
        let mut w = acc * g[level][a];
        for (i, &ai) in idx[..level].iter().enumerate() {
            w *= cr[i][level][(ai + m - a) % m];
        }
        idx[level] = a;
        sum += nest(level + 1, idx, w, g, cr, m);
    }
    sum
}

/// `E[∏ F_{r_i}(λ^{(τ_i♯)})]` under the unshifted measure.
pub fn contour_moment(slices: &[SliceObservable], md: &ModularData, spec: Option<&ContourSpec>) -> Result<MomentValue> {
    let cols: Vec<(usize, u32)> = slices.iter().map(|s| (s.column(md.n), s.k)).collect();
    contour_moment_columns(&cols, md, spec)
}

/// `θ₃(u∏r_i;t)/θ₃(u;t)`.
pub fn shift_ratio(ks: &[u32], md: &ModularData) -> Result<f64> {
    let prod: f64 = ks.iter().map(|&k| md.r_of(k)).product();
    let tp = ThetaParams::new(md.t, DEFAULT_EPS)?;
    Ok((tp.theta3(C64::new(md.u * prod, 0.0))? / tp.theta3(C64::new(md.u, 0.0))?).re)
}

/// Shift-mixed moment `E[∏ r_i^S F_{r_i}]` for `(column, k)` pairs.
pub fn shift_mixed_moment_columns(cols_ks: &[(usize, u32)], md: &ModularData, spec: Option<&ContourSpec>) -> Result<MomentValue> {
    let mut v = contour_moment_columns(cols_ks, md, spec)?;
    let ks: Vec<u32> = cols_ks.iter().map(|x| x.1).collect();
    let f = shift_ratio(&ks, md)?;
    v.value *= f;
    v.quad_error *= f.abs();
    Ok(v)
}

pub fn shift_mixed_moment(slices: &[SliceObservable], md: &ModularData, spec: Option<&ContourSpec>) -> Result<MomentValue> {
    let cols: Vec<(usize, u32)> = slices.iter().map(|s| (s.column(md.n), s.k)).collect();
    shift_mixed_moment_columns(&cols, md, spec)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `C(2k,k)/(2k log t)²`.
pub fn mean_asymptotic(k: u32, t: f64) -> Result<f64> {
    check_k_t(k, t)?;
    let l = 2.0 * k as f64 * t.ln();
    Ok(binomial(2 * k as u64, k as u64) / (l * l))
}

/// `(1/2N)(−r^{1/2}/(1−r))`, mapping `F_r` to the slice observable
/// `(1/2N)Σ_x h(τ,x) r^x`.
pub fn slice_scale(k: u32, md: &ModularData) -> f64 {
    let r = md.r_of(k);
    -r.sqrt() / (1.0 - r) / (2.0 * md.n as f64)
}

/// `E[(1/(2N)²)Σ_x h(τ♯,x) t^{kx/N}]` from the exact single-slice formula.
pub fn prelimit_mean(slice: SliceObservable, md: &ModularData) -> Result<f64> {
    let v = contour_moment(&[slice], md, None)?;
    Ok(slice_scale(slice.k, md) * v.value / (2.0 * md.n as f64))
}

/// Mean, variance and third cumulant of the slice observable
/// `X = (1/2N)Σ_x h(τ♯,x) r^x` from the exact moment formulas.
pub fn prelimit_cumulants(slice: SliceObservable, md: &ModularData) -> Result<[f64; 3]> {
    let c = slice_scale(slice.k, md);
    let m1 = contour_moment(&[slice], md, None)?.value;
    let m2 = contour_moment(&[slice, slice], md, None)?.value;
    let m3 = contour_moment(&[slice, slice, slice], md, None)?.value;
    let k2 = m2 - m1 * m1;
    let k3 = m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
    Ok([c * m1, c * c * k2, c * c * c * k3])
}

/// Finite-`N` covariance of two slice observables.
pub fn prelimit_covariance(s1: SliceObservable, s2: SliceObservable, md: &ModularData) -> Result<f64> {
    let a = contour_moment(&[s1], md, None)?.value;
    let b = contour_moment(&[s2], md, None)?.value;
    let ab = contour_moment(&[s1, s2], md, None)?.value;
    Ok(slice_scale(s1.k, md) * slice_scale(s2.k, md) * (ab - a * b))
}

fn check_k_t(k: u32, t: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t = {t} must lie in (0,1)")));
    }
    Ok(())
}

/// `(1 − t^τ e^{−2πiη})^k (1 − t^{−τ} e^{2πiη})^k`.
fn limit_factor(eta: C64, tau: f64, k: u32, t: f64) -> C64 {
    let e = (C64::new(0.0, 2.0 * PI) * eta).exp();
    let tt = t.powf(tau);
    ((1.0 - tt / e) * (1.0 - e / tt)).powi(k as i32)
}

/// Limiting covariance as a double integral of `∂² log Θ` over horizontal
/// segments at heights `c₁`, `c₂`.
pub fn covariance_asymptotic_with(
    s1: SliceObservable,
    s2: SliceObservable,
    t: f64,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    let (s1, s2, c1, c2) = if s1.tau <= s2.tau { (s1, s2, c1, c2) } else { (s2, s1, c2, c1) };
    let w = -t.ln() / (2.0 * PI);
    if !(c2 - w < c1 && c1 < c2) {
        return Err(Error::Config(format!("offsets need c₂ − {w:.6} < c₁ < c₂, got c₁={c1}, c₂={c2}")));
    }
    let tp = ThetaParams::new(t, DEFAULT_EPS)?;
    let mut m = 128usize;
    let mut prev = cov_trapezoid(&tp, s1, s2, t, c1, c2, m)?;
    loop {
        m *= 2;
        let next = cov_trapezoid(&tp, s1, s2, t, c1, c2, m)?;
        if (next - prev).norm() < 1e-13 * next.norm().max(1.0) || m >= 8192 {
            let pre = -1.0 / (4.0 * (s1.k * s2.k) as f64 * (C64::new(0.0, 2.0 * PI) * t.ln()).powi(2));
            return Ok((pre * next).re);
        }
        prev = next;
    }
}

fn cov_trapezoid(tp: &ThetaParams, s1: SliceObservable, s2: SliceObservable, t: f64, c1: f64, c2: f64, m: usize) -> Result<C64> {
    let node = |a: usize, c: f64| C64::new(-0.5 + a as f64 / m as f64, c);
    let f1: Vec<C64> = (0..m).map(|a| limit_factor(node(a, c1), s1.tau, s1.k, t)).collect();
    let f2: Vec<C64> = (0..m).map(|a| limit_factor(node(a, c2), s2.tau, s2.k, t)).collect();
    // ∂² log Θ is 1-periodic, so tabulate by node difference
    let d2: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|d| tp.d2_log_big_theta(C64::new(d as f64 / m as f64, c1 - c2)))
        .collect::<Result<_>>()?;
    let total: C64 = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut s = C64::new(0.0, 0.0);
            for b in 0..m {
                s += d2[(a + m - b) % m] * f2[b];
            }
            s * f1[a]
        })
        .sum();
    Ok(total / (m * m) as f64)
}

/// Limiting covariance with the centred offsets `c₁ − c₂ = −|log t|/4π`.
pub fn covariance_asymptotic(s1: SliceObservable, s2: SliceObservable, t: f64) -> Result<f64> {
    let w = -t.ln() / (2.0 * PI);
    let c = 0.5 * (s1.tau + s2.tau) * w;
    let (lo, hi) = if s1.tau <= s2.tau { (c - w / 4.0, c + w / 4.0) } else { (c + w / 4.0, c - w / 4.0) };
    covariance_asymptotic_with(s1, s2, t, lo, hi)
}

/// `η(τ, y)` after substituting `t^y = 2 sin πs`.
fn eta_of_s(s: f64, tau: f64, t: f64) -> C64 {
    C64::new(s, -tau * t.ln() / (2.0 * PI))
}

/// `(1/π)∫∫ G(η(τ₁,y₁),η(τ₂,y₂)) t^{2k₁y₁} t^{2k₂y₂} dy₁dy₂` by nested
/// tanh-sinh quadrature in `s = arcsin(t^y/2)/π`.
pub fn greens_covariance(s1: SliceObservable, s2: SliceObservable, t: f64) -> Result<f64> {
    greens_covariance_tol(s1, s2, t, 1e-10)
}

pub fn greens_covariance_tol(s1: SliceObservable, s2: SliceObservable, t: f64, tol: f64) -> Result<f64> {
    check_k_t(s1.k, t)?;
    check_k_t(s2.k, t)?;
    let tp = ThetaParams::new(t, DEFAULT_EPS)?;
    let lt = -t.ln();
    let failure: Cell<Option<Error>> = Cell::new(None);
    // t^{2ky} dy = (2 sin πs)^{2k} π cot(πs) ds / |log t|
    let weight = |s: f64, k: u32| (2.0 * (PI * s).sin()).powi(2 * k as i32) * PI / (PI * s).tan() / lt;
    let inner = |x: f64| -> f64 {
        let e1 = eta_of_s(x, s1.tau, t);
        let g = |y: f64| -> f64 {
            let e2 = eta_of_s(y, s2.tau, t);
            // the diagonal is a measure-zero log singularity
            if (e1 - e2).norm() < 1e-10 {
                return 0.0;
            }
            match tp.greens(e1, e2) {
                Ok(v) => v * weight(y, s2.k),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let a = quadrature::double_exponential::integrate(&g, 0.0, x, tol).integral;
        let b = quadrature::double_exponential::integrate(&g, x, 0.5, tol).integral;
        (a + b) * weight(x, s1.k)
    };
    let out = quadrature::double_exponential::integrate(inner, 0.0, 0.5, tol).integral / PI;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(out)
}

/// `−C(2k,k)/(2k log t)`.
pub fn wallis_moment(k: u32, t: f64) -> Result<f64> {
    check_k_t(k, t)?;
    Ok(-binomial(2 * k as u64, k as u64) / (2.0 * k as f64 * t.ln()))
}

/// `∫ H'(y) t^{2ky} dy` by quadrature; `x = t^y/2` turns it into
/// `(4^k/|log t|)∫₀¹ H'·x^{2k−1} dx` with `H' = 2 arccos(x)/π`.
pub fn wallis_quadrature(k: u32, t: f64) -> Result<f64> {
    check_k_t(k, t)?;
    let f = |x: f64| 2.0 * x.acos() / PI * x.powi(2 * k as i32 - 1);
    let v = quadrature::double_exponential::integrate(f, 0.0, 1.0, 1e-14).integral;
    Ok(4f64.powi(k as i32) * v / -t.ln())
}
