//! q-Pochhammer symbols, Jacobi theta functions and the cylinder Green's function.
//!
//! Conventions: `(a;t)_∞ = ∏_{n≥0}(1 − a tⁿ)`,
//! `θ₁(z;t) = Σ_m (−1)^m t^{m(m+1)/2} z^{m+1/2}` (principal `z^{1/2}`),
//! `θ₃(z;t) = Σ_m z^m t^{m²/2}`, and `Θ(η|ω) = θ₁(e^{2πiη}; e^{2πiω})` written as an
//! entire series in `η`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-14;

/// Nome plus series truncation certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaParams {
    pub t: f64,
    pub eps: f64,
    /// Half-width of the summation window around the dominant term.
    pub m: i64,
}

impl ThetaParams {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("nome t = {t} must lie in (0,1)")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("tolerance {eps} must lie in (0,1)")));
        }
        // terms decay like t^{j²/2} away from the dominant index
        let m = (2.0 * eps.ln() / t.ln()).sqrt().ceil() as i64 + 2;
        Ok(ThetaParams { t, eps, m })
    }

    pub fn theta1(&self, z: C64) -> Result<C64> {
        nonzero(z)?;
        let lt = self.t.ln();
        let center = (-z.norm().ln() / lt - 0.5).round() as i64;
        let sq = z.sqrt();
        let lz = z.ln();
        let mut acc = C64::new(0.0, 0.0);
        for m in center - self.m..=center + self.m {
            let mag = (m * (m + 1)) as f64 / 2.0 * lt;
            let term = (C64::new(mag, 0.0) + lz * m as f64).exp() * sq;
            if m % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(acc)
    }

    pub fn theta1_product(&self, z: C64) -> Result<C64> {
        nonzero(z)?;
        let t = self.t;
        let sq = z.sqrt();
        Ok((sq - 1.0 / sq)
            * pochhammer_eps(C64::new(t, 0.0), t, self.eps)?
            * pochhammer_eps(z * t, t, self.eps)?
            * pochhammer_eps(t / z, t, self.eps)?)
    }

    pub fn theta3(&self, z: C64) -> Result<C64> {
        nonzero(z)?;
        let lt = self.t.ln();
        let center = (-z.norm().ln() / lt).round() as i64;
        let lz = z.ln();
        let mut acc = C64::new(0.0, 0.0);
        for m in center - self.m..=center + self.m {
            let mag = (m * m) as f64 / 2.0 * lt;
            acc += (C64::new(mag, 0.0) + lz * m as f64).exp();
        }
        Ok(acc)
    }

    pub fn theta3_product(&self, z: C64) -> Result<C64> {
        nonzero(z)?;
        let t = self.t;
        let s = t.sqrt();
        Ok(pochhammer_eps(C64::new(t, 0.0), t, self.eps)?
            * pochhammer_eps(-z * s, t, self.eps)?
            * pochhammer_eps(-s / z, t, self.eps)?)
    }

    /// `θ₁` evaluated both ways; errors if the two disagree beyond `tol` relative.
    pub fn theta1_checked(&self, z: C64, tol: f64) -> Result<C64> {
        let a = self.theta1(z)?;
        let b = self.theta1_product(z)?;
        check_agree(a, b, tol, "theta1")?;
        Ok(a)
    }

    pub fn theta3_checked(&self, z: C64, tol: f64) -> Result<C64> {
        let a = self.theta3(z)?;
        let b = self.theta3_product(z)?;
        check_agree(a, b, tol, "theta3")?;
        Ok(a)
    }

    /// `Θ(η)`, `Θ'(η)`, `Θ''(η)` by term-wise differentiation in `η`.
    pub fn big_theta_derivs(&self, eta: C64) -> (C64, C64, C64) {
        let lt = self.t.ln();
        let tp = 2.0 * PI;
        // |e^{2πi(m+1/2)η}| = e^{−2π(m+1/2) Im η}
        let center = (tp * eta.im / lt - 0.5).round() as i64;
        let (mut f, mut d1, mut d2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for m in center - self.m..=center + self.m {
            let nu = m as f64 + 0.5;
            let phase = C64::new(0.0, tp * nu) * eta;
            let mag = (m * (m + 1)) as f64 / 2.0 * lt;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let term = (C64::new(mag, 0.0) + phase).exp() * sign;
            let k = C64::new(0.0, tp * nu);
            f += term;
            d1 += term * k;
            d2 += term * k * k;
        }
        (f, d1, d2)
    }

    pub fn big_theta(&self, eta: C64) -> C64 {
        self.big_theta_derivs(eta).0
    }

    /// `∂²/∂η² log Θ(η|ω)`.
    pub fn d2_log_big_theta(&self, eta: C64) -> Result<C64> {
        lattice_guard(eta, self.t)?;
        let (f, d1, d2) = self.big_theta_derivs(eta);
        let g = d1 / f;
        Ok(d2 / f - g * g)
    }

    /// `G(η₁,η₂) = −(1/2π) log|Θ(η₁−η₂)/Θ(η₁+η̄₂)|`.
    pub fn greens(&self, eta1: C64, eta2: C64) -> Result<f64> {
        if (eta1 - eta2).norm() < 1e-13 {
            return Err(Error::Pole(format!("coincident points {eta1} and {eta2}")));
        }
        lattice_guard(eta1 - eta2, self.t)?;
        let (a, b) = (eta1 - eta2, eta1 + eta2.conj());
        let w = -self.t.ln() / (2.0 * PI);
        if w >= 1.0 {
            let (na, nb) = (self.big_theta(a).norm(), self.big_theta(b).norm());
            if nb == 0.0 {
                return Err(Error::Pole(format!("reflected point of {eta2} coincides with {eta1}")));
            }
            return Ok(-(na / nb).ln() / (2.0 * PI));
        }
        // a and b share their imaginary part, so the Gaussian factors reduce to
        // e^{−π((Re a)² − (Re b)²)/w}
        let la = self.log_abs_dual(a);
        let lb = self.log_abs_dual(b);
        if !lb.is_finite() {
            return Err(Error::Pole(format!("reflected point of {eta2} coincides with {eta1}")));
        }
        let gauss = -PI * (a.re * a.re - b.re * b.re) / w;
        Ok(-(la - lb + gauss) / (2.0 * PI))
    }

    /// `log|Θ(−iη/w | i/w)|` with `w = |log t|/2π`. Up to an `η`-independent
    /// constant and the factor `e^{−π Re(η²)/w}` this is `log|Θ(η|ω)|`; the dual
    /// nome `e^{−2π/w}` avoids the cancellation of the direct series for `t` near 1.
    pub fn log_abs_dual(&self, eta: C64) -> f64 {
        let w = -self.t.ln() / (2.0 * PI);
        let ld = -2.0 * PI / w;
        let xi = C64::new(0.0, -1.0) * eta / w;
        let center = (2.0 * PI * xi.im / ld - 0.5).round() as i64;
        let span = (2.0 * self.eps.ln() / ld).sqrt().ceil() as i64 + 2;
        let expo = |m: i64| {
            let nu = m as f64 + 0.5;
            C64::new((m * (m + 1)) as f64 / 2.0 * ld, 0.0) + C64::new(0.0, 2.0 * PI * nu) * xi
        };
        let top = (center - span..=center + span).map(|m| expo(m).re).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = C64::new(0.0, 0.0);
        for m in center - span..=center + span {
            let term = (expo(m) - top).exp();
            if m % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        top + acc.norm().ln()
    }
}

fn nonzero(z: C64) -> Result<()> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("theta argument must be finite and nonzero, got {z}")));
    }
    Ok(())
}

fn check_agree(a: C64, b: C64, tol: f64, what: &str) -> Result<()> {
    let scale = a.norm().max(b.norm()).max(1e-300);
    if (a - b).norm() > tol * scale.max(1.0) {
        return Err(Error::Domain(format!("{what}: sum {a} and product {b} disagree")));
    }
    Ok(())
}

/// Zeros of `Θ` sit at `n + mω`, `ω = i|log t|/2π`.
fn lattice_guard(eta: C64, t: f64) -> Result<()> {
    let w = -t.ln() / (2.0 * PI);
    let m = (eta.im / w).round();
    let n = eta.re.round();
    let d = C64::new(eta.re - n, eta.im - m * w).norm();
    if d < 1e-12 {
        return Err(Error::Pole(format!("η = {eta} is a lattice point")));
    }
    Ok(())
}

/// `(a;t)_∞ = ∏_{n≥0}(1 − a tⁿ)`, truncated once the remainder
/// `Σ_{n≥n₀} 2|a|tⁿ ≤ 2|a|t^{n₀}/(1−t)` drops below `eps`.
pub fn pochhammer_eps(a: C64, t: f64, eps: f64) -> Result<C64> {
    if !(t.abs() < 1.0) {
        return Err(Error::Domain(format!("|t| = {} must be below 1", t.abs())));
    }
    let mut acc = C64::new(1.0, 0.0);
    let mut x = a;
    let tail = 1.0 / (1.0 - t.abs());
    for _ in 0..100_000 {
        if 2.0 * x.norm() * tail < eps * 1e-2 {
            return Ok(acc);
        }
        acc *= C64::new(1.0, 0.0) - x;
        x *= t;
    }
    Err(Error::Resource("q-Pochhammer product failed to converge".into()))
}

pub fn q_pochhammer(a: C64, t: f64) -> Result<C64> {
    pochhammer_eps(a, t, DEFAULT_EPS)
}

fn params(t: f64) -> Result<ThetaParams> {
    ThetaParams::new(t, DEFAULT_EPS)
}

pub fn theta1(z: C64, t: f64) -> Result<C64> {
    params(t)?.theta1(z)
}

pub fn theta3(z: C64, t: f64) -> Result<C64> {
    params(t)?.theta3(z)
}

/// `Θ(η|ω)` with `t = e^{2πiω}` passed as the real nome.
pub fn big_theta(eta: C64, t: f64) -> Result<C64> {
    Ok(params(t)?.big_theta(eta))
}

pub fn d2_log_big_theta(eta: C64, t: f64) -> Result<C64> {
    params(t)?.d2_log_big_theta(eta)
}

pub fn greens(eta1: C64, eta2: C64, t: f64) -> Result<f64> {
    params(t)?.greens(eta1, eta2)
}
