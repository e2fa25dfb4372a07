//! Limit shape, liquid region, the coordinates `ζ` and `η`, and the
//! conformal-structure checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Lower edge of the liquid band, `log 2 / log t`.
pub fn liquid_floor(t: f64) -> f64 {
    2f64.ln() / t.ln()
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t = {t} must lie in (0,1)")));
    }
    Ok(())
}

/// `H'(y) = 2 arctan(√(4t^{−2y} − 1))/π` in the band, `0` below it.
pub fn h_prime(y: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    let x = 0.5 * t.powf(y);
    if x >= 1.0 {
        return Ok(0.0);
    }
    // arctan(√(1/x² − 1)) = arccos x
    Ok(2.0 * x.acos() / PI)
}

/// `H(y) = ∫_{−∞}^y H'`. With `x = t^y/2` and `H' = 1 − 2 arcsin(x)/π` this is
/// `y + (2/(π|log t|)) ∫₀^x arcsin(s)/s ds`, whose integrand is bounded.
pub fn limit_shape_h(y: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    let x = 0.5 * t.powf(y);
    if x >= 1.0 {
        return Ok(0.0);
    }
    let f = |s: f64| if s == 0.0 { 1.0 } else { s.asin() / s };
    let v = quadrature::double_exponential::integrate(f, 0.0, x, 1e-15).integral;
    Ok(y + 2.0 * v / (PI * -t.ln()))
}

/// A point of the liquid region `0 < t^{2y} < 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiquidPoint {
    pub tau: f64,
    pub y: f64,
}

impl LiquidPoint {
    pub fn new(tau: f64, y: f64, t: f64) -> Result<Self> {
        check_t(t)?;
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Domain(format!("τ = {tau} must lie in (0,1]")));
        }
        let x = t.powf(2.0 * y);
        if !(x > 0.0 && x < 4.0) {
            return Err(Error::Domain(format!("y = {y} is outside the liquid band (t^{{2y}} = {x})")));
        }
        Ok(LiquidPoint { tau, y })
    }

    /// Point with `η = s + iτ|log t|/2π`, `s ∈ (0, 1/2)`.
    pub fn from_s(tau: f64, s: f64, t: f64) -> Result<Self> {
        if !(s > 0.0 && s < 0.5) {
            return Err(Error::Domain(format!("s = {s} must lie in (0,1/2)")));
        }
        LiquidPoint::new(tau, (2.0 * (PI * s).sin()).ln() / t.ln(), t)
    }
}

/// `ζ = t^{−τ}(2 − t^{2y} + i√(4t^{2y} − t^{4y}))/2`.
pub fn zeta_map(p: LiquidPoint, t: f64) -> Result<C64> {
    let a = t.powf(2.0 * p.y);
    let disc = 4.0 * a - a * a;
    if !(disc > 0.0) {
        return Err(Error::Domain(format!("ζ degenerates to the real axis at y = {}", p.y)));
    }
    Ok(C64::new(2.0 - a, disc.sqrt()) * (0.5 * t.powf(-p.tau)))
}

/// `η = (1/2πi) log(t^{2τ}ζ)` with the argument in `(0, π]`.
pub fn eta_map(p: LiquidPoint, t: f64) -> Result<C64> {
    let w = zeta_map(p, t)? * t.powf(2.0 * p.tau);
    let l = C64::new(w.norm().ln(), w.arg());
    Ok(l / C64::new(0.0, 2.0 * PI))
}

/// Residuals of the Kenyon–Okounkov relations at the complex slope `z = t^τζ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KoResidual {
    /// `|(t^{−ŷ}(1−z))² + t^{−τ̂}z|` with `(τ̂, ŷ) = (τ, y + τ/2)`.
    pub q: f64,
    /// `||z| − 1|`.
    pub unit: f64,
    /// `|(1 − z^{−1})(1 − z) − t^{2y}|`.
    pub slope: f64,
    /// `|arg z/π − (1 − H')|`.
    pub density: f64,
}

impl KoResidual {
    pub fn max(&self) -> f64 {
        self.q.max(self.unit).max(self.slope).max(self.density)
    }
}

pub fn ko_conformal_check(p: LiquidPoint, t: f64) -> Result<KoResidual> {
    let z = zeta_map(p, t)? * t.powf(p.tau);
    let (tau_hat, y_hat) = (p.tau, p.y + p.tau / 2.0);
    let one = C64::new(1.0, 0.0);
    let w = (one - z) * t.powf(-y_hat);
    let q = (w * w + z * t.powf(-tau_hat)).norm();
    let slope = ((one - 1.0 / z) * (one - z) - t.powf(2.0 * p.y)).norm();
    let density = (z.arg() / PI - (1.0 - h_prime(p.y, t)?)).abs();
    Ok(KoResidual { q, unit: (z.norm() - 1.0).abs(), slope, density })
}

/// `(π/2)∫‖∇g‖²` for `g(x,y) = 2x` over `(0,1/2) × ℝ/(|log t|/2π)ℤ`.
pub fn dirichlet_energy(t: f64) -> Result<f64> {
    check_t(t)?;
    let period = -t.ln() / (2.0 * PI);
    let g = |x: f64, _y: f64| 2.0 * x;
    let h = 1e-4;
    let grad2 = |x: f64, y: f64| {
        let gx = (g(x + h, y) - g(x - h, y)) / (2.0 * h);
        let gy = (g(x, y + h) - g(x, y - h)) / (2.0 * h);
        gx * gx + gy * gy
    };
    let inner = |x: f64| quadrature::double_exponential::integrate(|y| grad2(x, y), 0.0, period, 1e-14).integral;
    let v = quadrature::double_exponential::integrate(inner, 0.0, 0.5, 1e-14).integral;
    Ok(PI / 2.0 * v)
}

/// One row of the limit-shape grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRow {
    pub tau: f64,
    pub y: f64,
    pub h: f64,
    pub h_prime: f64,
    pub zeta: C64,
    pub eta: C64,
}

/// `n_tau × n_s` grid of interior liquid points, uniform in `τ` and in `s`.
pub fn liquid_grid(t: f64, n_tau: usize, n_s: usize) -> Result<Vec<GridRow>> {
    let mut out = Vec::with_capacity(n_tau * n_s);
    for i in 1..=n_tau {
        let tau = i as f64 / n_tau as f64;
        for j in 1..=n_s {
            let s = 0.5 * j as f64 / (n_s + 1) as f64;
            let p = LiquidPoint::from_s(tau, s, t)?;
            out.push(GridRow {
                tau,
                y: p.y,
                h: limit_shape_h(p.y, t)?,
                h_prime: h_prime(p.y, t)?,
                zeta: zeta_map(p, t)?,
                eta: eta_map(p, t)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_values() {
        let t = 0.5;
        assert_eq!(h_prime(liquid_floor(t), t).unwrap(), 0.0);
        assert!((h_prime(0.0, t).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(h_prime(liquid_floor(t) - 1.0, t).unwrap(), 0.0);
    }

    #[test]
    fn shape_is_frozen_below_and_tilted_above() {
        let t = 0.4;
        assert_eq!(limit_shape_h(liquid_floor(t) - 0.1, t).unwrap(), 0.0);
        assert!(limit_shape_h(liquid_floor(t), t).unwrap().abs() < 1e-13);
        let y = 25.0;
        assert!((limit_shape_h(y, t).unwrap() - y).abs() < 1e-9);
        // H' is the derivative of H
        let (y0, d) = (0.3, 1e-5);
        let fd = (limit_shape_h(y0 + d, t).unwrap() - limit_shape_h(y0 - d, t).unwrap()) / (2.0 * d);
        assert!((fd - h_prime(y0, t).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn zeta_and_eta_coordinates() {
        let t = 0.3;
        for row in liquid_grid(t, 5, 7).unwrap() {
            let p = LiquidPoint::new(row.tau, row.y, t).unwrap();
            assert!((row.zeta.norm() - t.powf(-row.tau)).abs() < 1e-12 * t.powf(-row.tau));
            let one = C64::new(1.0, 0.0);
            let lhs = (one - t.powf(-row.tau) / row.zeta) * (one - t.powf(row.tau) * row.zeta);
            assert!((lhs - t.powf(2.0 * row.y)).norm() < 1e-12);
            assert!((row.eta.im - row.tau * -t.ln() / (2.0 * PI)).abs() < 1e-12);
            assert!(row.eta.re > 0.0 && row.eta.re < 0.5);
            assert!((row.h_prime - (PI - row.zeta.arg()) / PI).abs() < 1e-12);
            assert!(ko_conformal_check(p, t).unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_energy_is_half_log() {
        for &t in &[0.3, 0.5, 0.8] {
            assert!((dirichlet_energy(t).unwrap() - t.ln().abs() / 2.0).abs() < 1e-8);
        }
    }
}
