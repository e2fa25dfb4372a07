//! Partitions, cyclically interlacing configurations, height functions and
//! the slice observable F_r.
//!
//! Sites of ℤ' = ℤ + 1/2 are addressed by an integer `m` standing for the
//! half-integer `m + 1/2`. Columns are numbered `1..=2N`; odd columns hold the
//! smaller partition of each interlacing pair.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Weakly decreasing list of positive parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// Builds a partition, dropping trailing zeros.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!("parts not weakly decreasing: {parts:?}")));
        }
        if parts.contains(&0) {
            return Err(Error::Domain("zero part before a positive part".into()));
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    /// `λ_i` with 1-based `i`; zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        if i == 0 {
            return 0;
        }
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    pub fn first(&self) -> u32 {
        self.part(1)
    }

    /// Occupied sites `λ_i − i` for `i ≤ ℓ`, shifted by `s`.
    pub fn sites(&self, s: i64) -> impl Iterator<Item = i64> + '_ {
        self.parts
            .iter()
            .enumerate()
            .map(move |(i, &p)| s + p as i64 - (i as i64 + 1))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "-");
        }
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(Partition::empty());
        }
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

/// `μ ≺ λ`: `λ_i ≥ μ_i ≥ λ_{i+1}` for all `i`.
pub fn interlaces(mu: &Partition, la: &Partition) -> bool {
    let n = mu.len().max(la.len());
    (1..=n + 1).all(|i| la.part(i) >= mu.part(i) && mu.part(i) >= la.part(i + 1))
}

/// Parameter bundle `(t, N, q, u, ω)` with `q = t^{1/(2N)}`, `ω = log t / (2πi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularData {
    pub t: f64,
    pub n: usize,
    pub q: f64,
    pub u: f64,
}

impl ModularData {
    pub fn new(t: f64, n: usize, u: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("t = {t} must lie in (0,1)")));
        }
        if n == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Domain(format!("u = {u} must be positive")));
        }
        let q = t.powf(1.0 / (2.0 * n as f64));
        Ok(ModularData { t, n, q, u })
    }

    /// `Im ω = |log t| / 2π`; `ω` itself is purely imaginary.
    pub fn omega_im(&self) -> f64 {
        -self.t.ln() / (2.0 * std::f64::consts::PI)
    }

    pub fn columns(&self) -> usize {
        2 * self.n
    }

    /// `r = q^{2k} = t^{k/N}`.
    pub fn r_of(&self, k: u32) -> f64 {
        self.t.powf(k as f64 / self.n as f64)
    }
}

/// A cylindric partition with shift: `λ^{(1)} ≺ λ^{(2)} ≻ λ^{(3)} ≺ ⋯ ≻ λ^{(1)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CylindricConfig {
    n: usize,
    lambdas: Vec<Partition>,
    shift: i64,
}

impl CylindricConfig {
    pub fn new(n: usize, lambdas: Vec<Partition>, shift: i64) -> Result<Self> {
        if n == 0 || lambdas.len() != 2 * n {
            return Err(Error::Domain(format!(
                "need 2N = {} partitions, got {}",
                2 * n,
                lambdas.len()
            )));
        }
        let cfg = CylindricConfig { n, lambdas, shift };
        if let Some(c) = cfg.first_violation() {
            return Err(Error::Domain(format!("interlacing fails between columns {c} and {}", c % (2 * n) + 1)));
        }
        Ok(cfg)
    }

    pub fn empty(n: usize, shift: i64) -> Self {
        CylindricConfig { n, lambdas: vec![Partition::empty(); 2 * n], shift }
    }

    /// Column `c` (1-based) paired with its right neighbour violates interlacing.
    fn first_violation(&self) -> Option<usize> {
        let m = 2 * self.n;
        (0..m).find(|&i| {
            let (a, b) = (&self.lambdas[i], &self.lambdas[(i + 1) % m]);
            let ok = if i % 2 == 0 { interlaces(a, b) } else { interlaces(b, a) };
            !ok
        })
        .map(|i| i + 1)
    }

    pub fn is_valid(&self) -> bool {
        self.lambdas.len() == 2 * self.n && self.first_violation().is_none()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn with_shift(&self, shift: i64) -> Self {
        CylindricConfig { shift, ..self.clone() }
    }

    pub fn lambdas(&self) -> &[Partition] {
        &self.lambdas
    }

    /// `λ^{(τ)}` for `τ ∈ 1..=2N`.
    pub fn column(&self, tau: usize) -> &Partition {
        &self.lambdas[tau - 1]
    }

    /// `Σ|λ^{(i)}| + N·S²`.
    pub fn volume(&self) -> u64 {
        self.lambdas.iter().map(Partition::size).sum::<u64>() + self.n as u64 * (self.shift * self.shift) as u64
    }

    /// Height at column `tau`, site `m` (the half-integer `y = m + 1/2`).
    pub fn height(&self, tau: usize, m: i64) -> u64 {
        height_of(self.column(tau), self.shift, m)
    }

    /// Finite description of the point set of every column.
    pub fn point_set(&self) -> Vec<ColumnPoints> {
        self.lambdas
            .iter()
            .map(|la| ColumnPoints {
                floor: self.shift - la.len() as i64,
                occupied: la.sites(self.shift).collect(),
            })
            .collect()
    }
}

/// `#{x < y : x unoccupied}` for the point set `{s + λ_i − i + 1/2}`, with `y = m + 1/2`.
pub fn height_of(la: &Partition, s: i64, m: i64) -> u64 {
    let floor = s - la.len() as i64;
    if m <= floor {
        return 0;
    }
    let below = la.sites(s).filter(|&x| x < m).count() as i64;
    (m - floor - below) as u64
}

/// Sites of one column: every site below `floor` is occupied, plus `occupied`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnPoints {
    pub floor: i64,
    pub occupied: Vec<i64>,
}

/// Inverse of [`CylindricConfig::point_set`].
pub fn shift_of_tiling(columns: &[ColumnPoints]) -> Result<CylindricConfig> {
    if columns.is_empty() || columns.len() % 2 == 1 {
        return Err(Error::Malformed(format!("need an even positive number of columns, got {}", columns.len())));
    }
    let mut shift = None;
    let mut lambdas = Vec::with_capacity(columns.len());
    for (c, col) in columns.iter().enumerate() {
        let f = col.floor;
        let mut occ: Vec<i64> = col.occupied.iter().copied().filter(|&x| x >= f).collect();
        occ.sort_unstable_by(|a, b| b.cmp(a));
        occ.dedup();
        // signed excess against the empty room, which occupies exactly the sites m < 0
        let occupied_nonneg = occ.iter().filter(|&&x| x >= 0).count() as i64 + f.max(0);
        let holes_neg = (-f).max(0) - occ.iter().filter(|&&x| x < 0).count() as i64;
        let s = occupied_nonneg - holes_neg;
        match shift {
            None => shift = Some(s),
            Some(s0) if s0 != s => {
                return Err(Error::Malformed(format!("column {} has excess {s}, column 1 has {s0}", c + 1)))
            }
            _ => {}
        }
        // the i-th largest occupied site is s + λ_i − i
        let sites = occ.iter().copied().chain((0..).map(|j| f - 1 - j));
        let mut parts = Vec::new();
        for (i, x) in sites.enumerate().take(occ.len() + 1) {
            let p = x - s + i as i64 + 1;
            if p < 0 {
                return Err(Error::Malformed(format!("column {} yields a negative part", c + 1)));
            }
            if p == 0 {
                break;
            }
            parts.push(p as u32);
        }
        if parts.len() > occ.len() {
            return Err(Error::Malformed(format!("column {} does not terminate", c + 1)));
        }
        lambdas.push(Partition::new(parts).map_err(|e| Error::Malformed(e.to_string()))?);
    }
    let n = columns.len() / 2;
    CylindricConfig::new(n, lambdas, shift.unwrap_or(0)).map_err(|e| Error::Malformed(e.to_string()))
}

/// `F_r(λ) = Σ_{i≤ℓ} r^{λ_i−i+1} + r^{−ℓ}/(1 − r^{−1})`.
pub fn observable_f(la: &Partition, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r = {r} must lie in (0,1)")));
    }
    Ok(observable_f_unchecked(la, r))
}

pub(crate) fn observable_f_unchecked(la: &Partition, r: f64) -> f64 {
    let l = la.len() as i32;
    let head: f64 = la.sites(0).map(|m| r.powi(m as i32 + 1)).sum();
    head + r.powi(-l) / (1.0 - 1.0 / r)
}

/// Shift-mixed observable `r^S F_r(λ)`.
pub fn observable_f_shifted(la: &Partition, s: i64, r: f64) -> Result<f64> {
    Ok(r.powi(s as i32) * observable_f(la, r)?)
}

/// `Σ_{x∈ℤ'} h(x) r^x` for one column, the tail beyond the top particle summed
/// in closed form (`h = m − S` there).
pub fn height_sum(la: &Partition, s: i64, r: f64) -> f64 {
    let lo = s - la.len() as i64;
    let top = s + la.first() as i64; // h(m) = m − s for m ≥ top
    let sqrt_r = r.sqrt();
    let mut acc = 0.0;
    for m in lo + 1..top {
        acc += height_of(la, s, m) as f64 * r.powi(m as i32);
    }
    // Σ_{m ≥ top} (m − s) r^m = r^{top} Σ_{j≥0} (top − s + j) r^j
    let a = (top - s) as f64;
    acc += r.powi(top as i32) * (a / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
    acc * sqrt_r
}

impl fmt::Display for CylindricConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.n, self.shift)?;
        for la in &self.lambdas {
            write!(f, " ; {la}")?;
        }
        Ok(())
    }
}

impl FromStr for CylindricConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.trim().split(';');
        let head = fields.next().ok_or_else(|| Error::Parse("empty line".into()))?;
        let mut hw = head.split_whitespace();
        let n: usize = hw
            .next()
            .ok_or_else(|| Error::Parse("missing N".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("N: {e}")))?;
        let shift: i64 = hw
            .next()
            .ok_or_else(|| Error::Parse("missing S".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("S: {e}")))?;
        if hw.next().is_some() {
            return Err(Error::Parse("trailing tokens before first ';'".into()));
        }
        let lambdas = fields.map(str::parse).collect::<Result<Vec<Partition>>>()?;
        CylindricConfig::new(n, lambdas, shift)
    }
}
