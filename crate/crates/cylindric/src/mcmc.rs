//! Markov chain sampler for the box-truncated unshifted measure and an exact
//! sampler for the independent discrete-Gaussian shift.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partitions::{observable_f_unchecked, CylindricConfig, ModularData, Partition};
use crate::special::theta3;
use crate::transfer::BoxTruncation;
use num_complex::Complex64 as C64;

/// Box sized for sampling: `L` covers the frozen floor near
/// `2N log 2/|log t|` with an `N^{1/3}` margin, `R` keeps the expected number
/// of particles above the box below `1e−6`.
pub fn sampling_box(md: &ModularData) -> BoxTruncation {
    let n2 = md.columns() as f64;
    let lt = -md.t.ln();
    let l = (n2 * 2f64.ln() / lt + 6.0 * n2.cbrt() + 10.0).ceil() as usize;
    // 2N · density tail 2N t^y/(π|log t|) = 1e−6 at y = R/2N
    let eps = 1e-6 / n2;
    let y = (eps * std::f64::consts::PI * lt / n2).ln() / md.t.ln();
    let r = (n2 * y).ceil().max(l as f64) as u32;
    BoxTruncation::new(l, r)
}

/// Chain state: `2N` columns of exactly `L` parts each (zero-padded), `S = 0`.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub md: ModularData,
    pub trunc: BoxTruncation,
    cols: Vec<Vec<u32>>,
    pub rng: ChaCha8Rng,
    pub sweeps: u64,
    /// Sweeps in which a part touched the top or bottom edge of the box.
    pub top_hits: u64,
    pub bottom_hits: u64,
}

impl ChainState {
    pub fn new(md: &ModularData, trunc: &BoxTruncation, seed: u64) -> Self {
        ChainState {
            md: *md,
            trunc: *trunc,
            cols: vec![vec![0; trunc.l]; md.columns()],
            rng: ChaCha8Rng::seed_from_u64(seed),
            sweeps: 0,
            top_hits: 0,
            bottom_hits: 0,
        }
    }

    pub fn from_config(cfg: &CylindricConfig, md: &ModularData, trunc: &BoxTruncation, seed: u64) -> Result<Self> {
        let mut s = ChainState::new(md, trunc, seed);
        if cfg.n() != md.n {
            return Err(Error::Config(format!("configuration has N = {}, chain has N = {}", cfg.n(), md.n)));
        }
        for (c, la) in cfg.lambdas().iter().enumerate() {
            if la.len() > trunc.l || la.first() > trunc.r {
                return Err(Error::Config(format!("column {} does not fit the {}x{} box", c + 1, trunc.l, trunc.r)));
            }
            for i in 0..trunc.l {
                s.cols[c][i] = la.part(i + 1);
            }
        }
        Ok(s)
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    /// `λ^{(τ)}_i`, 1-based, zero beyond the box.
    pub fn part(&self, tau: usize, i: usize) -> u32 {
        if i == 0 || i > self.trunc.l {
            return 0;
        }
        self.cols[tau - 1][i - 1]
    }

    pub fn partition(&self, tau: usize) -> Partition {
        let v: Vec<u32> = self.cols[tau - 1].iter().copied().take_while(|&p| p > 0).collect();
        Partition::new(v).expect("chain columns stay weakly decreasing")
    }

    pub fn config(&self) -> CylindricConfig {
        let lambdas = (1..=self.columns()).map(|c| self.partition(c)).collect();
        CylindricConfig::new(self.md.n, lambdas, 0).expect("chain preserves interlacing")
    }

    fn neighbours(&self, tau: usize) -> (usize, usize) {
        let m = self.columns();
        ((tau + m - 2) % m + 1, tau % m + 1)
    }

    /// Admissible range of `λ^{(τ)}_i` given every other part.
    pub fn bounds(&self, tau: usize, i: usize) -> (u32, u32) {
        let (a, b) = self.neighbours(tau);
        if tau % 2 == 1 {
            // odd columns sit below both neighbours
            let lo = self.part(a, i + 1).max(self.part(b, i + 1));
            let hi = self.part(a, i).min(self.part(b, i));
            (lo, hi)
        } else {
            let lo = self.part(a, i).max(self.part(b, i));
            let hi = if i == 1 { self.trunc.r } else { self.part(a, i - 1).min(self.part(b, i - 1)) };
            (lo, hi)
        }
    }

    /// Single-site Metropolis move: uniform `(τ, i)`, proposal `±1`, acceptance
    /// `min(1, q^{Δvol})`. Returns whether the move was accepted.
    pub fn step(&mut self) -> bool {
        let tau = self.rng.gen_range(1..=self.columns());
        let i = self.rng.gen_range(1..=self.trunc.l);
        let up = self.rng.gen_bool(0.5);
        let (lo, hi) = self.bounds(tau, i);
        let v = self.part(tau, i);
        if up {
            if v + 1 > hi || v + 1 > self.trunc.r {
                return false;
            }
            if self.rng.gen::<f64>() >= self.md.q {
                return false;
            }
            self.cols[tau - 1][i - 1] = v + 1;
        } else {
            if v == 0 || v - 1 < lo {
                return false;
            }
            self.cols[tau - 1][i - 1] = v - 1;
        }
        true
    }

    /// `2N·L` Metropolis steps.
    pub fn metropolis_sweep(&mut self) {
        for _ in 0..self.columns() * self.trunc.l {
            self.step();
        }
        self.sweeps += 1;
    }

    /// Heat-bath sweep: all odd columns given the even ones, then all even
    /// columns given the odd ones. Parts of one parity are conditionally
    /// independent truncated geometrics with ratio `q`.
    pub fn gibbs_sweep(&mut self) {
        let lq = self.md.q.ln();
        let pow = PowTable::new(self.md.q);
        let mut touched_top = false;
        let mut touched_bottom = false;
        for parity in [1usize, 0] {
            for tau in (1..=self.columns()).filter(|c| c % 2 == parity) {
                for i in 1..=self.trunc.l {
                    let (lo, hi) = self.bounds(tau, i);
                    let v = pow.sample(&mut self.rng, lo, hi, lq);
                    self.cols[tau - 1][i - 1] = v;
                    if i == 1 && v == self.trunc.r {
                        touched_top = true;
                    }
                    if i == self.trunc.l && v > 0 {
                        touched_bottom = true;
                    }
                }
            }
        }
        self.top_hits += touched_top as u64;
        self.bottom_hits += touched_bottom as u64;
        self.sweeps += 1;
    }

    /// Slice observable `(1/2N)Σ_x h(τ,x) r^x = (1/2N)(−r^{1/2}/(1−r)) F_r(λ^{(τ)})`.
    pub fn slice_value(&self, tau: usize, r: f64) -> f64 {
        let la = &self.cols[tau - 1];
        let mut l = 0i32;
        let mut head = 0.0;
        for (i, &p) in la.iter().enumerate() {
            if p == 0 {
                break;
            }
            head += r.powi(p as i32 - i as i32);
            l += 1;
        }
        let f = head + r.powi(-l) / (1.0 - 1.0 / r);
        -r.sqrt() / (1.0 - r) * f / self.md.columns() as f64
    }
}

/// `q^k` for short intervals, where uniform proposals accepted with
/// probability `q^k` beat inversion.
struct PowTable {
    pow: Vec<f64>,
}

impl PowTable {
    const MAX_WIDTH: usize = 32;

    fn new(q: f64) -> Self {
        let mut pow = Vec::with_capacity(Self::MAX_WIDTH);
        let mut len = 0;
        while len < Self::MAX_WIDTH && q.powi(len as i32) >= 0.5 {
            pow.push(q.powi(len as i32));
            len += 1;
        }
        PowTable { pow }
    }

    fn sample<R: Rng>(&self, rng: &mut R, lo: u32, hi: u32, lq: f64) -> u32 {
        if lo >= hi {
            return lo;
        }
        let w = (hi - lo) as usize;
        if w >= self.pow.len() {
            return truncated_geometric(rng, lo, hi, lq);
        }
        loop {
            let k = rng.gen_range(0..=w);
            if k == 0 || rng.gen::<f64>() < self.pow[k] {
                return lo + k as u32;
            }
        }
    }
}

/// `P(v) ∝ q^v` on `[lo, hi]` by inversion.
fn truncated_geometric<R: Rng>(rng: &mut R, lo: u32, hi: u32, lq: f64) -> u32 {
    if lo >= hi {
        return lo;
    }
    let n = (hi - lo + 1) as f64;
    let u: f64 = rng.gen();
    // 1 − q^n computed stably
    let span = -(n * lq).exp_m1();
    let d = (-(u * span)).ln_1p() / lq;
    lo + (d.floor() as u32).min(hi - lo)
}

/// `P(S = x) ∝ e^{−C(x−m)²}` with `m = −log u/log t`, `C = |log t|/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteGaussianSpec {
    pub m: f64,
    pub c: f64,
    pub cutoff: i64,
    support: Vec<(i64, f64)>,
}

impl DiscreteGaussianSpec {
    pub fn new(md: &ModularData) -> Result<Self> {
        let m = -md.u.ln() / md.t.ln();
        let c = -md.t.ln() / 2.0;
        // e^{−C d²} ≤ 1e−16 beyond the cutoff, so the omitted mass is far below 1e−12
        let cutoff = ((16.0 * 10f64.ln() / c).sqrt()).ceil() as i64 + 2;
        let centre = m.round() as i64;
        let support: Vec<(i64, f64)> = (centre - cutoff..=centre + cutoff)
            .map(|x| (x, (x as f64 * md.u.ln() + (x * x) as f64 / 2.0 * md.t.ln()).exp()))
            .collect();
        let spec = DiscreteGaussianSpec { m, c, cutoff, support };
        let z = spec.normalizer();
        let th = theta3(C64::new(md.u, 0.0), md.t)?.re;
        if ((z - th) / th).abs() > 1e-12 {
            return Err(Error::Domain(format!("shift normalizer {z} disagrees with θ₃(u;t) = {th}")));
        }
        Ok(spec)
    }

    /// `Σ u^x t^{x²/2}` over the support.
    pub fn normalizer(&self) -> f64 {
        self.support.iter().map(|x| x.1).sum()
    }

    /// Normalised `(x, P(S = x))`.
    pub fn table(&self) -> Vec<(i64, f64)> {
        let z = self.normalizer();
        self.support.iter().map(|&(x, w)| (x, w / z)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.table().iter().map(|&(x, p)| x as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.table().iter().map(|&(x, p)| (x as f64 - m).powi(2) * p).sum()
    }
}

/// Inverse-CDF draw over the certified support.
pub fn sample_shift<R: Rng + ?Sized>(spec: &DiscreteGaussianSpec, rng: &mut R) -> i64 {
    let z = spec.normalizer();
    let mut u = rng.gen::<f64>() * z;
    for &(x, w) in &spec.support {
        if u < w {
            return x;
        }
        u -= w;
    }
    spec.support.last().expect("support is non-empty").0
}

/// Chain parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunParams {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

/// Summary of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub samples: usize,
    /// Integrated autocorrelation time (in samples) of the `k = 1` slice
    /// observable at column `2N`, from batch means.
    pub tau_int: f64,
    pub top_occupancy: f64,
    pub bottom_occupancy: f64,
}

impl RunReport {
    pub fn boundary_warning(&self) -> Option<String> {
        if self.top_occupancy > 1e-3 || self.bottom_occupancy > 1e-3 {
            Some(format!(
                "box boundary occupied in {:.2e} (top) / {:.2e} (bottom) of sweeps",
                self.top_occupancy, self.bottom_occupancy
            ))
        } else {
            None
        }
    }
}

/// Runs a heat-bath chain from the empty configuration, calling `visit` on
/// every kept state.
pub fn run_with<F: FnMut(&ChainState)>(md: &ModularData, trunc: &BoxTruncation, p: RunParams, mut visit: F) -> Result<RunReport> {
    if p.thin == 0 || p.sweeps == 0 {
        return Err(Error::Config("sweeps and thinning must be positive".into()));
    }
    let mut st = ChainState::new(md, trunc, p.seed);
    for _ in 0..p.burn_in {
        st.gibbs_sweep();
    }
    st.top_hits = 0;
    st.bottom_hits = 0;
    let r = md.r_of(1);
    let col = md.columns();
    let mut series = Vec::new();
    for s in 1..=p.sweeps {
        st.gibbs_sweep();
        if s % p.thin == 0 {
            series.push(st.slice_value(col, r));
            visit(&st);
        }
    }
    Ok(RunReport {
        samples: series.len(),
        tau_int: crate::stats::integrated_autocorrelation(&series, crate::stats::DEFAULT_BATCHES),
        top_occupancy: st.top_hits as f64 / p.sweeps as f64,
        bottom_occupancy: st.bottom_hits as f64 / p.sweeps as f64,
    })
}

/// Collects the kept configurations.
pub fn run(md: &ModularData, trunc: &BoxTruncation, p: RunParams) -> Result<(Vec<CylindricConfig>, RunReport)> {
    let mut out = Vec::new();
    let rep = run_with(md, trunc, p, |s| out.push(s.config()))?;
    Ok((out, rep))
}

/// `F_r` of a column, exposed for the chain's consumers.
pub fn column_observable(la: &Partition, r: f64) -> f64 {
    observable_f_unchecked(la, r)
}
