//! Correlation kernel of the shift-mixed process as Fourier coefficients of
//! its theta-function generating series.
//!
//! With `w = ζη`,
//! `Σ_{x,y} K(σ,x;τ,y) ζ^{x−1/2} η^{y−1/2} = −F(σ,ζ)/F(τ,η^{−1}) · (t;t)³ θ₃(uw)/(θ₃(−t^{−1/2}w) θ₃(u))`
//! on `1 < |w| < 1/t` for `σ ≤ τ` and on `t < |w| < 1` for `σ > τ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partitions::ModularData;
use crate::special::{pochhammer_eps, ThetaParams, DEFAULT_EPS};

pub const DEFAULT_NODES: usize = 512;
pub const MAX_NODES: usize = 8192;
pub const NODE_TOL: f64 = 1e-10;

/// Largest `j ∈ 2ℤ − 1/2` below `tau`.
fn j_max(tau: i64) -> f64 {
    let b = (tau as f64 + 0.5).div_euclid(2.0);
    2.0 * b - 0.5
}

/// Smallest `i ∈ 2ℤ + 1/2` above `tau`.
fn i_min(tau: i64) -> f64 {
    let a = (tau as f64 - 0.5).div_euclid(2.0) + 1.0;
    2.0 * a + 0.5
}

/// Numerator and denominator products of `F(τ,z)`.
fn f_parts(tau: i64, z: C64, md: &ModularData) -> Result<(C64, C64)> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("F(τ, 0) is undefined".into()));
    }
    let lq = md.q.ln();
    let one = C64::new(1.0, 0.0);
    let mut num = one;
    let mut i = i_min(tau);
    loop {
        let x = (i * lq).exp() / z;
        if x.norm() < DEFAULT_EPS * 1e-3 {
            break;
        }
        num *= one - x;
        i += 2.0;
    }
    let mut den = one;
    let mut j = j_max(tau);
    loop {
        let x = (-j * lq).exp() * z;
        if x.norm() < DEFAULT_EPS * 1e-3 {
            break;
        }
        den *= one - x;
        j -= 2.0;
    }
    Ok((num, den))
}

/// `F(τ,z) = ∏_{i>τ, i∈2ℤ+1/2}(1 − q^i/z) / ∏_{j<τ, j∈2ℤ−1/2}(1 − q^{−j}z)`,
/// factors below `ε` in modulus dropped.
pub fn f_of(tau: i64, z: C64, md: &ModularData) -> Result<C64> {
    let (num, den) = f_parts(tau, z, md)?;
    if den.norm() < 1e-8 * num.norm().max(1e-300) {
        return Err(Error::Pole(format!("z = {z} is within 1e−8 of a pole of F({tau}, ·)")));
    }
    Ok(num / den)
}

/// `1/F(τ,z)`, finite at the poles of `F`.
pub fn f_inv_of(tau: i64, z: C64, md: &ModularData) -> Result<C64> {
    let (num, den) = f_parts(tau, z, md)?;
    if num.norm() < 1e-8 * den.norm().max(1e-300) {
        return Err(Error::Pole(format!("z = {z} is within 1e−8 of a zero of F({tau}, ·)")));
    }
    Ok(den / num)
}

/// Admissible `(ln|ζ|, ln|η|)` for the column pair, centred in the feasible set.
pub fn kernel_radii(sigma: i64, tau: i64, md: &ModularData) -> Result<(f64, f64)> {
    let lq = md.q.ln();
    let lt = md.t.ln();
    let a = j_max(sigma) * lq; // ln|ζ| < a
    let b = -i_min(tau) * lq; // ln|η| < b
    let (w_lo, w_hi) = if sigma <= tau { (0.0, -lt) } else { (lt, 0.0) };
    let top = w_hi.min(a + b);
    if top <= w_lo {
        return Err(Error::Config(format!("no admissible radii for σ={sigma}, τ={tau}")));
    }
    let w = 0.5 * (w_lo + top);
    let d = 0.5 * (a + b - w);
    Ok((a - d, b - d))
}

/// Kernel values for one column pair on a window of sites.
#[derive(Clone, Debug)]
pub struct KernelCache {
    pub md: ModularData,
    pub sigma: i64,
    pub tau: i64,
    /// `(ln|ζ|, ln|η|)`.
    pub radii: (f64, f64),
    pub nodes: usize,
    pub mx: (i64, i64),
    pub my: (i64, i64),
    /// `(x, y)`-major table of `K`, `mx.1 − mx.0 + 1` by `my.1 − my.0 + 1`.
    pub table: Vec<f64>,
    /// Largest change between the last two node counts.
    pub convergence: f64,
    /// Largest imaginary residue relative to `max(1, |K|)`.
    pub imag_residue: f64,
}

impl KernelCache {
    /// Sites `x = mx + 1/2`, `y = my + 1/2` with `mx ∈ [mx.0, mx.1]`, `my ∈ [my.0, my.1]`.
    pub fn new(md: &ModularData, sigma: i64, tau: i64, mx: (i64, i64), my: (i64, i64)) -> Result<Self> {
        let radii = kernel_radii(sigma, tau, md)?;
        Self::with_radii(md, sigma, tau, mx, my, radii)
    }

    pub fn with_radii(
        md: &ModularData,
        sigma: i64,
        tau: i64,
        mx: (i64, i64),
        my: (i64, i64),
        radii: (f64, f64),
    ) -> Result<Self> {
        let mut nodes = DEFAULT_NODES;
        let (mut prev, _) = coefficients(md, sigma, tau, mx, my, radii, nodes)?;
        loop {
            let next_nodes = nodes * 2;
            let (next, imag) = coefficients(md, sigma, tau, mx, my, radii, next_nodes)?;
            let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            nodes = next_nodes;
            if diff < NODE_TOL || nodes >= MAX_NODES {
                return Ok(KernelCache {
                    md: *md,
                    sigma,
                    tau,
                    radii,
                    nodes,
                    mx,
                    my,
                    table: next,
                    convergence: diff,
                    imag_residue: imag,
                });
            }
            prev = next;
        }
    }

    pub fn get(&self, mx: i64, my: i64) -> Option<f64> {
        if mx < self.mx.0 || mx > self.mx.1 || my < self.my.0 || my > self.my.1 {
            return None;
        }
        let w = (self.my.1 - self.my.0 + 1) as usize;
        Some(self.table[(mx - self.mx.0) as usize * w + (my - self.my.0) as usize])
    }
}

/// Trapezoidal coefficients on `nodes × nodes` points; returns the real parts
/// and the largest relative imaginary residue.
fn coefficients(
    md: &ModularData,
    sigma: i64,
    tau: i64,
    mx: (i64, i64),
    my: (i64, i64),
    radii: (f64, f64),
    nodes: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = nodes;
    let (lz, le) = radii;
    let tp = ThetaParams::new(md.t, DEFAULT_EPS)?;
    let tt3 = pochhammer_eps(C64::new(md.t, 0.0), md.t, DEFAULT_EPS)?.powi(3);
    let th_u = tp.theta3(C64::new(md.u, 0.0))?;
    let sqt = md.t.sqrt();
    let unit = |a: usize| C64::from_polar(1.0, 2.0 * PI * a as f64 / n as f64);
    let f: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|a| f_of(sigma, unit(a) * lz.exp(), md))
        .collect::<Result<_>>()?;
    let g: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|b| f_inv_of(tau, 1.0 / (unit(b) * le.exp()), md))
        .collect::<Result<_>>()?;
    let h: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|c| {
            let w = unit(c) * (lz + le).exp();
            let den = tp.theta3(-w / sqt)? * th_u;
            if den.norm() < 1e-300 {
                return Err(Error::Pole(format!("θ₃(−t^{{−1/2}}w) vanishes at w = {w}")));
            }
            Ok(-tt3 * tp.theta3(w * md.u)? / den)
        })
        .collect::<Result<_>>()?;
    let wy = (my.1 - my.0 + 1) as usize;
    let wx = (mx.1 - mx.0 + 1) as usize;
    let inv = 1.0 / (n * n) as f64;
    // partial[a][j] = Σ_b g[b] h[a+b] e^{−2πi b y_j / n}
    let partial: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..wy)
                .map(|j| {
                    let y = my.0 + j as i64;
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..n {
                        let ph = unit(((n as i64 * 4 - (b as i64 * y).rem_euclid(n as i64)) as usize) % n);
                        acc += g[b] * h[(a + b) % n] * ph;
                    }
                    acc * f[a]
                })
                .collect()
        })
        .collect();
    let out: Vec<(f64, f64)> = (0..wx * wy)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / wy, idx % wy);
            let x = mx.0 + i as i64;
            let y = my.0 + j as i64;
            let mut acc = C64::new(0.0, 0.0);
            for (a, row) in partial.iter().enumerate() {
                let ph = unit((n - (a as i64 * x).rem_euclid(n as i64) as usize) % n);
                acc += row[j] * ph;
            }
            let v = acc * inv * (-(x as f64) * lz - (y as f64) * le).exp();
            (v.re, v.im.abs() / v.re.abs().max(1.0))
        })
        .collect();
    let imag = out.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((out.into_iter().map(|x| x.0).collect(), imag))
}

/// `K(σ,x;τ,y)` for single sites `x = mx + 1/2`, `y = my + 1/2`.
pub fn kernel_entry(sigma: i64, mx: i64, tau: i64, my: i64, md: &ModularData) -> Result<f64> {
    let c = KernelCache::new(md, sigma, tau, (mx, mx), (my, my))?;
    Ok(c.table[0])
}

/// `det[K(τ_i,x_i;τ_j,x_j)]` for sites `(τ, m)`; one cache per column pair.
pub fn determinantal_correlation(md: &ModularData, sites: &[(usize, i64)]) -> Result<f64> {
    let k = sites.len();
    if k == 0 {
        return Ok(1.0);
    }
    let mut caches: HashMap<(usize, usize), KernelCache> = HashMap::new();
    for &(s, _) in sites {
        for &(t, _) in sites {
            if caches.contains_key(&(s, t)) {
                continue;
            }
            let xs: Vec<i64> = sites.iter().filter(|p| p.0 == s).map(|p| p.1).collect();
            let ys: Vec<i64> = sites.iter().filter(|p| p.0 == t).map(|p| p.1).collect();
            let mx = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
            let my = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
            caches.insert((s, t), KernelCache::new(md, s as i64, t as i64, mx, my)?);
        }
    }
    let m = DMatrix::from_fn(k, k, |i, j| {
        let (s, x) = sites[i];
        let (t, y) = sites[j];
        caches[&(s, t)].get(x, y).expect("window covers every site")
    });
    Ok(m.determinant())
}
