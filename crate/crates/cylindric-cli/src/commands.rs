//! `sample`, `limitshape`, `moments`, `greens`, `kernel` and `exact`.

use anyhow::{Context, Result};
use cylindric::kernel::KernelCache;
use cylindric::limit_shape::{h_prime, ko_conformal_check, limit_shape_h, liquid_floor, liquid_grid, LiquidPoint};
use cylindric::mcmc::{run_with, sample_shift, sampling_box, DiscreteGaussianSpec, RunParams};
use cylindric::moments::{
    contour_moment, greens_covariance, mean_asymptotic, prelimit_covariance, shift_mixed_moment, slice_scale, SliceObservable,
};
use cylindric::rows::exact_observable_expectation;
use cylindric::special::ThetaParams;
use cylindric::stats::{shift_statistics, slice_moments, ProfileAccumulator};
use cylindric::transfer::BoxTruncation;
use cylindric::ModularData;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::{heatmap, line_plot, num, save, Csv, Series};

fn modular(cfg: &RunConfig) -> Result<ModularData> {
    Ok(ModularData::new(cfg.t, cfg.n, cfg.u)?)
}

fn observables(cfg: &RunConfig) -> Result<Vec<SliceObservable>> {
    cfg.slices().into_iter().map(|(tau, k)| Ok(SliceObservable::new(tau, k)?)).collect()
}

fn report(path: std::path::PathBuf) {
    println!("wrote {}", path.display());
}

/// Heat-bath chain; writes the configuration stream, slice series, statistics
/// and the height profile at the first slice's column.
pub fn sample(cfg: &RunConfig) -> Result<()> {
    let md = modular(cfg)?;
    let slices = observables(cfg)?;
    let trunc = match (cfg.l, cfg.r) {
        (Some(l), Some(r)) => BoxTruncation::new(l, r),
        (None, None) => sampling_box(&md),
        _ => anyhow::bail!("give both l and r, or neither"),
    };
    let spec = DiscreteGaussianSpec::new(&md)?;
    // the shift is independent of the partitions, so it gets its own stream
    let mut shift_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_5A1F_7000_0001);
    let cols: Vec<usize> = slices.iter().map(|s| s.column(cfg.n)).collect();
    let rs: Vec<f64> = slices.iter().map(|s| md.r_of(s.k)).collect();
    let header = cfg.header();
    let kept = (cfg.sweeps / cfg.thin) as usize;
    let n2 = 2 * cfg.n as i64;
    let window = (-(liquid_floor(cfg.t).abs() * n2 as f64).ceil() as i64 - n2, 6 * n2);
    let mut profile = ProfileAccumulator::new(window, kept);
    let mut stream = format!("{header}\n");
    let mut series = vec![Vec::with_capacity(kept); slices.len()];
    let mut shifts = Vec::with_capacity(kept);
    let params = RunParams { sweeps: cfg.sweeps, burn_in: cfg.burn_in(), thin: cfg.thin, seed: cfg.seed };
    let run = run_with(&md, &trunc, params, |st| {
        let s = sample_shift(&spec, &mut shift_rng);
        shifts.push(s);
        stream.push_str(&st.config().with_shift(s).to_string());
        stream.push('\n');
        for (j, (&c, &r)) in cols.iter().zip(&rs).enumerate() {
            series[j].push(st.slice_value(c, r));
        }
        profile.push_column(&st.partition(cols[0]), 0);
    })?;
    report(save(&cfg.out, "sample_configs.txt", &stream)?);

    let mut names = vec!["sample".to_string(), "shift".to_string()];
    names.extend(slices.iter().map(|s| format!("x_tau{}_k{}", num(s.tau), s.k)));
    let mut csv = Csv::new(&header, &names.iter().map(String::as_str).collect::<Vec<_>>());
    for i in 0..shifts.len() {
        let mut row = vec![i.to_string(), shifts[i].to_string()];
        row.extend(series.iter().map(|s| num(s[i])));
        csv.row(&row);
    }
    report(csv.save(&cfg.out, "sample_slices.csv")?);

    let m = slice_moments(&series)?;
    let shift_rep = shift_statistics(&shifts, &spec)?;
    let mut stats = Csv::new(&header, &["quantity", "slice", "value", "se", "reference"]);
    for (j, s) in slices.iter().enumerate() {
        let label = format!("tau={} k={}", num(s.tau), s.k);
        let exact_mean = contour_moment(&[*s], &md, None).ok().map(|v| slice_scale(s.k, &md) * v.value);
        let exact_var = prelimit_covariance(*s, *s, &md).ok();
        let green = greens_covariance(*s, *s, cfg.t).ok();
        let v = m.covariance[j][j];
        let k3 = m.third_cumulants[j];
        stats.row(&["mean".into(), label.clone(), num(m.means[j].value), num(m.means[j].se), exact_mean.map_or("nan".into(), num)]);
        stats.row(&["variance".into(), label.clone(), num(v.value), num(v.se), green.map_or("nan".into(), num)]);
        stats.row(&["variance_exact_finite_n".into(), label.clone(), num(v.value), num(v.se), exact_var.map_or("nan".into(), num)]);
        stats.row(&["kappa3".into(), label.clone(), num(k3.value), num(k3.se), num(0.0)]);
        stats.row(&["kappa3_ratio".into(), label.clone(), num(k3.value / v.value.powf(1.5)), "nan".into(), num(0.0)]);
        stats.row(&["skew_z".into(), label.clone(), num(m.skew_z[j]), "nan".into(), num(0.0)]);
        stats.row(&["kurt_z".into(), label.clone(), num(m.kurt_z[j]), "nan".into(), num(0.0)]);
        stats.row(&["tau_int".into(), label.clone(), num(m.tau_int[j] * cfg.thin as f64), "nan".into(), "nan".into()]);
        println!("{label}: mean {:.6} ± {:.6}, variance {:.6} ± {:.6} (Green {:.6})", m.means[j].value, m.means[j].se, v.value, v.se, green.unwrap_or(f64::NAN));
    }
    for (a, s1) in slices.iter().enumerate() {
        for (b, s2) in slices.iter().enumerate().skip(a + 1) {
            let c = m.covariance[a][b];
            let g = greens_covariance(*s1, *s2, cfg.t).ok();
            stats.row(&["covariance".into(), format!("{a}-{b}"), num(c.value), num(c.se), g.map_or("nan".into(), num)]);
        }
    }
    stats.row(&["shift_chi2".into(), "".into(), num(shift_rep.chi2), num(shift_rep.dof as f64), num(shift_rep.p_value)]);
    stats.row(&["shift_mean".into(), "".into(), num(shift_rep.mean), "nan".into(), num(shift_rep.exact_mean)]);
    stats.row(&["top_occupancy".into(), "".into(), num(run.top_occupancy), "nan".into(), "nan".into()]);
    stats.row(&["bottom_occupancy".into(), "".into(), num(run.bottom_occupancy), "nan".into(), "nan".into()]);
    report(stats.save(&cfg.out, "sample_stats.csv")?);
    if let Some(w) = run.boundary_warning() {
        eprintln!("warning: {w}");
    }

    let prof = profile.finish(n2 as f64, cfg.t)?;
    let mut pc = Csv::new(&header, &["y", "mean_height", "se", "limit_shape"]);
    let mut emp = Vec::new();
    let mut lim = Vec::new();
    for row in &prof.rows {
        let h = limit_shape_h(row.y, cfg.t)?;
        pc.row(&[num(row.y), num(row.mean), num(row.se), num(h)]);
        emp.push((row.y, row.mean));
        lim.push((row.y, h));
    }
    report(pc.save(&cfg.out, "sample_profile.csv")?);
    let svg = line_plot(
        &header,
        &format!("height profile, column {}, sup distance {:.4}", cols[0], prof.sup_distance),
        "y",
        "h / 2N",
        &[
            Series { label: "empirical".into(), colour: "steelblue", points: emp, markers: true },
            Series { label: "limit shape H".into(), colour: "crimson", points: lim, markers: false },
        ],
        &[(liquid_floor(cfg.t), "frozen | liquid".into())],
    );
    report(save(&cfg.out, "sample_profile.svg", &svg)?);
    println!("profile sup distance {:.6}", prof.sup_distance);
    Ok(())
}

/// Limit shape grid with `ζ`, `η` and the conformal residuals, plus the profile plot.
pub fn limitshape(cfg: &RunConfig) -> Result<()> {
    let t = cfg.t;
    let header = cfg.header();
    let mut csv = Csv::new(&header, &["tau", "y", "H", "H_prime", "zeta_re", "zeta_im", "eta_re", "eta_im", "ko_residual"]);
    for row in liquid_grid(t, 20, 20)? {
        let res = ko_conformal_check(LiquidPoint::new(row.tau, row.y, t)?, t)?;
        csv.row(&[num(row.tau), num(row.y), num(row.h), num(row.h_prime), num(row.zeta.re), num(row.zeta.im), num(row.eta.re), num(row.eta.im), num(res.max())]);
    }
    report(csv.save(&cfg.out, "limitshape_grid.csv")?);
    let floor = liquid_floor(t);
    let (a, b) = (floor - 1.0, floor + 4.0 * floor.abs().max(1.0));
    let pts = |f: &dyn Fn(f64) -> Result<f64>| -> Result<Vec<(f64, f64)>> { (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).map(|y| Ok((y, f(y)?))).collect() };
    let svg = line_plot(
        &header,
        &format!("limit shape, t = {t}"),
        "y",
        "H(y)",
        &[
            Series { label: "H".into(), colour: "crimson", points: pts(&|y| Ok(limit_shape_h(y, t)?))?, markers: false },
            Series { label: "H'".into(), colour: "seagreen", points: pts(&|y| Ok(h_prime(y, t)?))?, markers: false },
        ],
        &[(floor, format!("frozen | liquid, y = log 2/log t = {floor:.6}"))],
    );
    report(save(&cfg.out, "limitshape.svg", &svg)?);
    Ok(())
}

/// Moment formula values with their quadrature budgets and the limit quantities.
pub fn moments(cfg: &RunConfig) -> Result<()> {
    let md = modular(cfg)?;
    let slices = observables(cfg)?;
    let header = cfg.header();
    let plain = contour_moment(&slices, &md, None).context("contour moment")?;
    let mixed = shift_mixed_moment(&slices, &md, None).context("shift-mixed moment")?;
    let mut csv = Csv::new(&header, &["quantity", "value", "quad_error", "imag_residue"]);
    csv.row(&["E[prod F]".into(), num(plain.value), num(plain.quad_error), num(plain.imag_residue)]);
    csv.row(&["E[prod r^S F]".into(), num(mixed.value), num(mixed.quad_error), num(mixed.imag_residue)]);
    println!("E[prod F] = {} (quadrature error {:.2e})", plain.value, plain.quad_error);
    println!("E[prod r^S F] = {} (quadrature error {:.2e})", mixed.value, mixed.quad_error);
    if slices.len() == 1 {
        let s = slices[0];
        let scale = slice_scale(s.k, &md);
        csv.row(&["E[X]".into(), num(scale * plain.value), num(scale.abs() * plain.quad_error), "nan".into()]);
        if let Ok(m) = mean_asymptotic(s.k, cfg.t) {
            csv.row(&["limit mean".into(), num(m), "nan".into(), "nan".into()]);
        }
    }
    if slices.len() == 2 {
        let g = greens_covariance(slices[0], slices[1], cfg.t)?;
        csv.row(&["limit covariance".into(), num(g), "nan".into(), "nan".into()]);
    }
    report(csv.save(&cfg.out, "moments.csv")?);
    Ok(())
}

/// `G(η, η₀)` on a grid over the cylinder, `η₀ = 1/4 + iτ|log t|/2π`.
pub fn greens(cfg: &RunConfig) -> Result<()> {
    let tp = ThetaParams::new(cfg.t, 1e-15)?;
    let w = -cfg.t.ln() / (2.0 * std::f64::consts::PI);
    let eta0 = C64::new(0.25, cfg.tau[0] * w);
    let header = cfg.header();
    let (ns, ny) = (48usize, 48usize);
    let mut csv = Csv::new(&header, &["s", "im_eta", "G"]);
    let mut grid = vec![vec![f64::NAN; ns]; ny];
    for (i, row) in grid.iter_mut().enumerate() {
        let im = (i as f64 + 0.5) / ny as f64 * w;
        for (j, cell) in row.iter_mut().enumerate() {
            let s = 0.5 * (j as f64 + 0.5) / ns as f64;
            let eta = C64::new(s, im);
            let g = tp.greens(eta, eta0).unwrap_or(f64::NAN);
            *cell = g;
            csv.row(&[num(s), num(im), num(g)]);
        }
    }
    report(csv.save(&cfg.out, "greens_grid.csv")?);
    let svg = heatmap(&header, &format!("Green's function, pole at {:.3}+{:.3}i", eta0.re, eta0.im), "Re η ∈ (0, 1/2)", "Im η (one period)", &grid);
    report(save(&cfg.out, "greens.svg", &svg)?);
    Ok(())
}

/// `K(σ, x; τ, y)` on a window of sites for the first (and second) slice column.
pub fn kernel(cfg: &RunConfig) -> Result<()> {
    let md = modular(cfg)?;
    let slices = observables(cfg)?;
    let sigma = slices[0].column(cfg.n) as i64;
    let tau = slices.get(1).unwrap_or(&slices[0]).column(cfg.n) as i64;
    let win = (-8, 8);
    let cache = KernelCache::new(&md, sigma, tau, win, win)?;
    let header = cfg.header();
    let mut csv = Csv::new(&header, &["sigma", "x", "tau", "y", "K"]);
    for mx in win.0..=win.1 {
        for my in win.0..=win.1 {
            let k = cache.get(mx, my).context("kernel window")?;
            csv.row(&[sigma.to_string(), num(mx as f64 + 0.5), tau.to_string(), num(my as f64 + 0.5), num(k)]);
        }
    }
    report(csv.save(&cfg.out, "kernel.csv")?);
    Ok(())
}

/// Exact box-truncated `E[∏F]` by the row transfer engine next to the contour value.
pub fn exact(cfg: &RunConfig) -> Result<()> {
    let md = modular(cfg)?;
    let slices = observables(cfg)?;
    let trunc = match (cfg.l, cfg.r) {
        (Some(l), Some(r)) => BoxTruncation::new(l, r),
        (None, None) => BoxTruncation::default_for(&md),
        _ => anyhow::bail!("give both l and r, or neither"),
    };
    let pairs: Vec<(usize, u32)> = slices.iter().map(|s| (s.column(cfg.n), s.k)).collect();
    let header = cfg.header();
    let mut csv = Csv::new(&header, &["measure", "exact", "tail_budget", "contour", "quad_error"]);
    for (shifted, label) in [(false, "unshifted"), (true, "shift-mixed")] {
        let e = exact_observable_expectation(&trunc, &md, &pairs, shifted)?;
        let c = if shifted { shift_mixed_moment(&slices, &md, None) } else { contour_moment(&slices, &md, None) };
        let (cv, ce) = match c {
            Ok(m) => (m.value, m.quad_error),
            Err(e) => {
                eprintln!("{label}: contour formula unavailable: {e}");
                (f64::NAN, f64::NAN)
            }
        };
        println!("{label}: exact {} (tail {:.2e}), contour {cv}", e.value, e.budget());
        csv.row(&[label.into(), num(e.value), num(e.budget()), num(cv), num(ce)]);
    }
    report(csv.save(&cfg.out, "exact.csv")?);
    Ok(())
}
