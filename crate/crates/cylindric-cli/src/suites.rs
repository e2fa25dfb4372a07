//! Verification suites behind `verify`.

use std::f64::consts::PI;

use anyhow::Result;
use clap::ValueEnum;
use cylindric::kernel::{determinantal_correlation, kernel_entry};
use cylindric::limit_shape::{dirichlet_energy, ko_conformal_check, LiquidPoint};
use cylindric::mcmc::{run_with, sample_shift, DiscreteGaussianSpec, RunParams};
use cylindric::moments::{
    contour_moment_columns, covariance_asymptotic, greens_covariance, mean_asymptotic, prelimit_cumulants, prelimit_mean,
    shift_mixed_moment_columns, shift_ratio, wallis_moment, wallis_quadrature, SliceObservable,
};
use cylindric::partitions::{height_sum, observable_f};
use cylindric::rows::{exact_correlation, exact_observable_expectation};
use cylindric::special::ThetaParams;
use cylindric::stats::{shift_statistics, slice_moments, ProfileAccumulator};
use cylindric::transfer::{exact_sample, BoxTruncation};
use cylindric::ModularData;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::{num, save, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Exact,
    Kernel,
    Moments,
    Asymptotics,
    Mcmc,
}

/// One check: `value` is compared against `tolerance` (pass iff `value ≤ tolerance`
/// unless stated in `detail`).
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed: value <= tolerance, value, tolerance, detail: detail.into() }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn run(suite: Suite, cfg: &RunConfig) -> Result<bool> {
    let checks = match suite {
        Suite::Identities => identities()?,
        Suite::Exact => exact()?,
        Suite::Kernel => kernel()?,
        Suite::Moments => moments()?,
        Suite::Asymptotics => asymptotics()?,
        Suite::Mcmc => mcmc(cfg.seed)?,
    };
    let name = format!("{suite:?}").to_lowercase();
    let header = cfg.header();
    let mut csv = Csv::new(&header, &["check", "passed", "value", "tolerance", "detail"]);
    let mut text = format!("{header}\nverify {name}\n\n");
    for ch in &checks {
        csv.row(&[ch.name.clone(), ch.passed.to_string(), num(ch.value), num(ch.tolerance), format!("\"{}\"", ch.detail.replace('"', "'"))]);
        let line = format!("{} {:<44} value {:.3e}  tolerance {:.3e}  {}", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.value, ch.tolerance, ch.detail);
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
    }
    let ok = checks.iter().all(|c| c.passed);
    let verdict = format!("\n{}: {} of {} checks passed\n", if ok { "PASS" } else { "FAIL" }, checks.iter().filter(|c| c.passed).count(), checks.len());
    print!("{verdict}");
    text.push_str(&verdict);
    csv.save(&cfg.out, &format!("verify_{name}.csv"))?;
    save(&cfg.out, &format!("verify_{name}.txt"), &text)?;
    Ok(ok)
}

fn identities() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    // height/observable identity on exact samples
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = 1 + i % 3;
        let md = ModularData::new(0.3 + 0.2 * (i % 3) as f64, n, 1.0)?;
        let s = rng.gen_range(-3..=3);
        let cfg = exact_sample(&BoxTruncation::new(6, 6), &md, &mut rng)?.with_shift(s);
        for tau in 1..=2 * n {
            for r in [0.3, 0.6, 0.9] {
                let la = cfg.column(tau);
                let lhs = height_sum(la, s, r);
                let rhs = -r.sqrt() / (1.0 - r) * r.powi(s as i32) * observable_f(la, r)?;
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1e-300));
            }
        }
    }
    out.push(below("height/observable identity", worst, 1e-12, "200 samples, N <= 3, box 6x6, r in {0.3,0.6,0.9}"));

    for t in [0.3, 0.6] {
        let p = ThetaParams::new(t, 1e-15)?;
        let pts = [c(0.7, 0.2), c(-1.3, 0.4), c(2.1, -0.9), c(0.45, 0.0)];
        let mut d: f64 = 0.0;
        let mut qp: f64 = 0.0;
        for z in pts {
            d = d.max((p.theta1(z)? - p.theta1_product(z)?).norm()).max((p.theta3(z)? - p.theta3_product(z)?).norm());
            let lhs = p.theta3(z * t)?;
            let rhs = p.theta3(z)? / (z * t.sqrt());
            qp = qp.max((lhs - rhs).norm() / rhs.norm().max(1.0));
        }
        out.push(below(&format!("theta sum = product, t={t}"), d, 1e-11, ""));
        out.push(below(&format!("theta3 quasi-periodicity, t={t}"), qp, 1e-11, "theta3(tz) = theta3(z)/(sqrt(t) z)"));
        let zeros = (-3..=3).map(|n| p.theta1(c(t.powi(n), 0.0)).map(|v| v.norm())).collect::<Result<Vec<_>, _>>()?;
        out.push(below(&format!("theta1 zeros at t^n, t={t}"), zeros.into_iter().fold(0.0, f64::max), 1e-12, "n = -3..3"));

        let w = -t.ln() / (2.0 * PI);
        let (e1, e2) = (c(0.2, 0.3 * w), c(0.37, 0.8 * w));
        let g = p.greens(e1, e2)?;
        let sym = (g - p.greens(e2, e1)?).abs().max((g - p.greens(e1 + c(0.0, w), e2)?).abs());
        out.push(below(&format!("Green symmetry/periodicity, t={t}"), sym, 1e-12, ""));
        let bnd = p.greens(c(0.0, 0.4 * w), e2)?.abs().max(p.greens(c(0.5, 0.1 * w), e2)?.abs());
        out.push(below(&format!("Green boundary values, t={t}"), bnd, 1e-9, "Re eta = 0 and 1/2"));
        let lap = |h: f64| -> Result<f64> {
            let e = c(0.3, 0.1 * w);
            let f = |z: C64| p.greens(z, e2);
            Ok((f(e + h)? + f(e - h)? + f(e + c(0.0, h))? + f(e - c(0.0, h))? - 4.0 * f(e)?).abs() / (h * h))
        };
        let (l1, l2) = (lap(2e-2)?, lap(1e-2)?);
        // five-point Laplacian of a harmonic function is O(h^2) after dividing by h^2
        out.push(Check {
            name: format!("Green discrete harmonicity, t={t}"),
            passed: (3.0..=5.0).contains(&(l1 / l2)),
            value: l1 / l2,
            tolerance: 4.0,
            detail: format!("|Delta_h G|/h^2 = {l1:.2e} at h=2e-2, {l2:.2e} at h=1e-2; ratio must lie in [3,5]"),
        });
        let reg = |d: f64| -> Result<f64> { Ok(p.greens(e2 + c(d, 0.0), e2)? + d.ln() / (2.0 * PI)) };
        let (r1, r2) = (reg(1e-4)?, reg(1e-7)?);
        out.push(below(&format!("Green log singularity, t={t}"), (r1 - r2).abs(), 1e-3, "G + log|d|/2pi settles as d -> 0"));
    }
    let mut wal: f64 = 0.0;
    for k in 1..=5 {
        for t in [0.3, 0.6] {
            wal = wal.max((wallis_quadrature(k, t)? - wallis_moment(k, t)?).abs());
        }
    }
    out.push(below("Wallis integral, k <= 5", wal, 1e-10, ""));
    for t in [0.3, 0.5, 0.8] {
        out.push(below(&format!("Dirichlet energy, t={t}"), (dirichlet_energy(t)? - t.ln().abs() / 2.0).abs(), 1e-8, "|log t|/2"));
    }
    for t in [0.3, 0.6] {
        let mut worst: f64 = 0.0;
        for i in 1..=20 {
            for j in 1..=20 {
                let p = LiquidPoint::from_s(i as f64 / 20.0, 0.5 * j as f64 / 21.0, t)?;
                let r = ko_conformal_check(p, t)?;
                worst = worst.max(r.q).max(r.unit);
            }
        }
        out.push(below(&format!("complex-slope relation, t={t}"), worst, 1e-12, "20x20 liquid grid"));
    }
    Ok(out)
}

fn exact() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let md = ModularData::new(0.09, 2, 1.0)?;
    let tr = BoxTruncation::new(24, 30);
    for col in 1..=4usize {
        let cm = contour_moment_columns(&[(col, 1)], &md, None)?;
        let e = exact_observable_expectation(&tr, &md, &[(col, 1)], false)?;
        out.push(below(&format!("contour vs enumeration, N=2 col {col} k=1"), (cm.value - e.value).abs(), 1e-4 + e.budget(), ""));
    }
    let md = ModularData::new(0.09, 2, 0.6)?;
    let cm = shift_mixed_moment_columns(&[(3, 1)], &md, None)?;
    let e = exact_observable_expectation(&tr, &md, &[(3, 1)], true)?;
    out.push(below("shift-mixed contour vs enumeration, N=2", (cm.value - e.value).abs(), 1e-4 + e.budget(), "u = 0.6"));
    let md = ModularData::new(0.05, 1, 0.7)?;
    let tr = BoxTruncation::new(8, 16);
    let mut worst: f64 = 0.0;
    for tau in 1..=2usize {
        for m in -3..=3i64 {
            let k = kernel_entry(tau as i64, m, tau as i64, m, &md)?;
            worst = worst.max((k - exact_correlation(&tr, &md, &[(tau, m)], true)?).abs());
        }
    }
    out.push(below("kernel diagonal vs enumeration, N=1", worst, 1e-5, ""));
    Ok(out)
}

fn kernel() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n, t, u) in [(1usize, 0.05, 0.7), (2, 0.02, 1.3)] {
        let md = ModularData::new(t, n, u)?;
        let tr = BoxTruncation::new(8, 16);
        let mut worst: f64 = 0.0;
        for i in 0..15 {
            let k = 1 + i % 2;
            let mut sites: Vec<(usize, i64)> = Vec::new();
            while sites.len() < k {
                let s = (rng.gen_range(1..=2 * n), rng.gen_range(-3..=3i64));
                if !sites.contains(&s) {
                    sites.push(s);
                }
            }
            let d = determinantal_correlation(&md, &sites)?;
            let e = exact_correlation(&tr, &md, &sites, true)?;
            worst = worst.max((d - e).abs());
        }
        out.push(below(&format!("rho_1, rho_2 vs enumeration, N={n}"), worst, 1e-5, "15 random site tuples"));
    }
    Ok(out)
}

fn moments() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let md = ModularData::new(0.01, 3, 1.0)?;
    let tr = BoxTruncation::new(10, 13);
    for (a, b) in [(1usize, 1usize), (2, 5)] {
        let cm = contour_moment_columns(&[(a, 1), (b, 1)], &md, None)?;
        let e = exact_observable_expectation(&tr, &md, &[(a, 1), (b, 1)], false)?;
        out.push(below(&format!("two-slice contour vs enumeration, N=3 cols ({a},{b})"), (cm.value - e.value).abs(), 1e-4 + e.budget(), ""));
    }
    for u in [0.6, 1.0, 2.5] {
        let md = ModularData::new(0.3, 2, u)?;
        let want = {
            let spec = DiscreteGaussianSpec::new(&md)?;
            let r = md.r_of(1);
            spec.table().iter().map(|&(s, p)| p * r.powi(s as i32)).sum::<f64>()
        };
        out.push(below(&format!("shift ratio identity, u={u}"), (shift_ratio(&[1], &md)? - want).abs(), 1e-10, "theta3 ratio vs sum over S"));
    }
    let mut worst: f64 = 0.0;
    for t in [0.3, 0.6] {
        for k1 in 1..=2 {
            for k2 in 1..=2 {
                for (a, b) in [(0.3, 0.3), (0.3, 0.7)] {
                    let s1 = SliceObservable::new(a, k1)?;
                    let s2 = SliceObservable::new(b, k2)?;
                    worst = worst.max((covariance_asymptotic(s1, s2, t)? - greens_covariance(s1, s2, t)?).abs());
                }
            }
        }
    }
    out.push(below("covariance: theta form vs Green's form", worst, 1e-6, "k in {1,2}^2, two tau pairs, t in {0.3,0.6}"));
    Ok(out)
}

fn asymptotics() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let t = 0.5;
    let s = SliceObservable::new(1.0, 1)?;
    let lim = mean_asymptotic(1, t)?;
    let ns = [25usize, 50, 100, 200];
    let mut pts = Vec::new();
    for n in ns {
        let md = ModularData::new(t, n, 1.0)?;
        pts.push(((n as f64).ln(), (prelimit_mean(s, &md)? - lim).abs().ln()));
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / 4.0, pts.iter().map(|p| p.1).sum::<f64>() / 4.0);
    let slope = -pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    out.push(Check {
        name: "mean convergence order, k=1 tau=1".into(),
        passed: (0.7..=1.3).contains(&slope),
        value: slope,
        tolerance: 1.3,
        detail: "slope in [0.7, 1.3]".into(),
    });
    let mut ratios = Vec::new();
    for n in [8usize, 16, 32] {
        let c = prelimit_cumulants(s, &ModularData::new(t, n, 1.0)?)?;
        ratios.push(c[2] / c[1].powf(1.5));
    }
    out.push(Check {
        name: "third cumulant ratio decays".into(),
        passed: ratios.windows(2).all(|w| w[1] < w[0]) && ratios[2] < 0.2,
        value: ratios[2],
        tolerance: 0.2,
        detail: format!("N = 8,16,32: {:.4}, {:.4}, {:.4}", ratios[0], ratios[1], ratios[2]),
    });
    let md = ModularData::new(t, 64, 1.0)?;
    let var = prelimit_cumulants(s, &md)?[1];
    let g = greens_covariance(s, s, t)?;
    out.push(below("finite-N variance vs Green's form, N=64", (var - g).abs() / g, 0.01, format!("{var:.6} vs {g:.6}")));
    Ok(out)
}

fn mcmc(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (t, n) = (0.5, 8usize);
    let md = ModularData::new(t, n, 1.0)?;
    let s = SliceObservable::new(1.0, 1)?;
    let exact = prelimit_cumulants(s, &md)?;
    let trunc = cylindric::mcmc::sampling_box(&md);
    let params = RunParams { sweeps: 400_000, burn_in: 5_000, thin: 10, seed };
    let n2 = 2 * n as i64;
    let mut prof = ProfileAccumulator::new((-2 * n2, 6 * n2), (params.sweeps / params.thin) as usize);
    let mut xs = Vec::new();
    let rep = run_with(&md, &trunc, params, |st| {
        xs.push(st.slice_value(md.columns(), md.r_of(1)));
        prof.push_column(&st.partition(md.columns()), 0);
    })?;
    let m = slice_moments(&[xs])?;
    out.push(below("MC mean vs exact, N=8", m.means[0].z(exact[0]).abs(), 3.0, format!("{:.5} +- {:.5} vs {:.5}", m.means[0].value, m.means[0].se, exact[0])));
    let v = m.covariance[0][0];
    out.push(below("MC variance vs exact, N=8", v.z(exact[1]).abs(), 3.0, format!("{:.5} +- {:.5} vs {:.5}", v.value, v.se, exact[1])));
    let p = prof.finish(n2 as f64, t)?;
    out.push(below("height profile sup distance, N=8", p.sup_distance, 0.05, ""));
    out.push(below("box boundary occupancy", rep.top_occupancy.max(rep.bottom_occupancy), 1e-3, ""));
    let spec = DiscreteGaussianSpec::new(&ModularData::new(t, n, 0.8)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<i64> = (0..200_000).map(|_| sample_shift(&spec, &mut rng)).collect();
    let sr = shift_statistics(&shifts, &spec)?;
    out.push(Check { name: "shift sampler chi-square".into(), passed: sr.passes(0.99), value: sr.p_value, tolerance: 0.01, detail: "passes iff p >= 0.01".into() });
    Ok(out)
}
