//! Box-truncated exact layer: column transfer operators, brute-force
//! enumeration and exact sampling.
//!
//! The row engine in [`crate::rows`] covers the boxes too large to
//! materialize here; both are cross-checked in tests.

use rand::Rng;

use crate::error::{Error, Result};
use crate::partitions::{interlaces, CylindricConfig, ModularData, Partition};

/// Largest state space the dense column operator will materialize.
pub const MAX_DENSE_STATES: usize = 3000;
/// Largest number of configurations [`enumerate_configs`] will list.
pub const MAX_ENUMERATION: usize = 10_000_000;

/// Partitions with at most `l` parts, each at most `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxTruncation {
    pub l: usize,
    pub r: u32,
}

impl BoxTruncation {
    pub fn new(l: usize, r: u32) -> Self {
        BoxTruncation { l, r }
    }

    /// `C(L+R, L)`.
    pub fn state_count(&self) -> u128 {
        let (n, k) = (self.l as u128 + self.r as u128, self.l.min(self.r as usize) as u128);
        (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
    }

    /// All states, ordered by size then reverse-lexicographically.
    pub fn states(&self) -> Result<Vec<Partition>> {
        let count = self.state_count();
        if count > MAX_ENUMERATION as u128 {
            return Err(Error::Resource(format!("{count} states in a {}x{} box", self.l, self.r)));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut cur = Vec::new();
        fill(self.l, self.r, &mut cur, &mut out);
        out.sort_by(|a, b| a.size().cmp(&b.size()).then(b.cmp(a)));
        Ok(out)
    }

    /// Grown by `d` in both directions.
    pub fn grown(&self, d: usize) -> Self {
        BoxTruncation { l: self.l + d, r: self.r + d as u32 }
    }

    /// Default: `q^R < 1e−4/(2N)` and `L = R`.
    pub fn default_for(md: &ModularData) -> Self {
        let target = 1e-4 / md.columns() as f64;
        let r = (target.ln() / md.q.ln()).ceil().max(1.0) as u32;
        BoxTruncation { l: r as usize, r }
    }
}

fn fill(l: usize, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
    out.push(Partition::new(cur.clone()).expect("generated parts are decreasing"));
    if cur.len() == l {
        return;
    }
    for p in 1..=max {
        cur.push(p);
        fill(l, p, cur, out);
        cur.pop();
    }
}

/// Dense odd→even operator `T(μ,λ) = 1{μ≺λ} q^{(|μ|+|λ|)/2}`; the even→odd
/// operator is its transpose, so `Z = Tr((T Tᵀ)^N)`.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    pub states: Vec<Partition>,
    pub n: usize,
    /// Row-major `states × states`.
    pub matrix: Vec<f64>,
}

impl TransferOperator {
    pub fn new(trunc: &BoxTruncation, md: &ModularData) -> Result<Self> {
        if trunc.state_count() > MAX_DENSE_STATES as u128 {
            return Err(Error::Resource(format!(
                "{} states exceed the dense limit {MAX_DENSE_STATES}",
                trunc.state_count()
            )));
        }
        let states = trunc.states()?;
        let s = states.len();
        let w: Vec<f64> = states.iter().map(|p| md.q.powf(p.size() as f64 / 2.0)).collect();
        let mut matrix = vec![0.0; s * s];
        for (i, mu) in states.iter().enumerate() {
            for (j, la) in states.iter().enumerate() {
                if interlaces(mu, la) {
                    matrix[i * s + j] = w[i] * w[j];
                }
            }
        }
        Ok(TransferOperator { states, n: md.n, matrix })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Operator carrying column `c` to column `c+1` (1-based, cyclic).
    pub fn step(&self, c: usize) -> Vec<f64> {
        if c % 2 == 1 {
            self.matrix.clone()
        } else {
            transpose(&self.matrix, self.dim())
        }
    }

    /// The 2N operators starting at column `start`, multiplied around the cycle.
    pub fn cyclic_product(&self, start: usize) -> Vec<f64> {
        let s = self.dim();
        let m = 2 * self.n;
        let mut acc = identity(s);
        for k in 0..m {
            let c = (start - 1 + k) % m + 1;
            acc = matmul(&acc, &self.step(c), s);
        }
        acc
    }

    pub fn partition_function(&self) -> f64 {
        let p = self.cyclic_product(1);
        (0..self.dim()).map(|i| p[i * self.dim() + i]).sum()
    }

    /// Exact sample: `λ^{(1)}` from the diagonal of the cyclic product, then
    /// the linear chain by backward conditional sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CylindricConfig {
        let s = self.dim();
        let m = 2 * self.n;
        // suffix[c] = step(c) ⋯ step(2N), mapping column c to column 1
        let mut suffix = vec![identity(s); m + 2];
        for c in (1..=m).rev() {
            suffix[c] = matmul(&self.step(c), &suffix[c + 1], s);
        }
        let diag: Vec<f64> = (0..s).map(|i| suffix[1][i * s + i]).collect();
        let first = draw(&diag, rng);
        let mut idx = vec![first];
        let mut cur = first;
        let step_ops: Vec<Vec<f64>> = (1..=m).map(|c| self.step(c)).collect();
        for c in 1..m {
            // next column c+1 weighted by step(c)[cur, j] · suffix[c+1][j, first]
            let op = &step_ops[c - 1];
            let w: Vec<f64> = (0..s).map(|j| op[cur * s + j] * suffix[c + 1][j * s + first]).collect();
            cur = draw(&w, rng);
            idx.push(cur);
        }
        let lambdas = idx.into_iter().map(|i| self.states[i].clone()).collect();
        CylindricConfig::new(self.n, lambdas, 0).expect("transfer operator emits interlacing chains")
    }
}

fn draw<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &x) in w.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    w.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

fn identity(s: usize) -> Vec<f64> {
    let mut m = vec![0.0; s * s];
    for i in 0..s {
        m[i * s + i] = 1.0;
    }
    m
}

fn transpose(a: &[f64], s: usize) -> Vec<f64> {
    let mut b = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            b[j * s + i] = a[i * s + j];
        }
    }
    b
}

fn matmul(a: &[f64], b: &[f64], s: usize) -> Vec<f64> {
    let mut c = vec![0.0; s * s];
    for i in 0..s {
        for k in 0..s {
            let x = a[i * s + k];
            if x == 0.0 {
                continue;
            }
            let row = &b[k * s..(k + 1) * s];
            let out = &mut c[i * s..(i + 1) * s];
            for (o, &y) in out.iter_mut().zip(row) {
                *o += x * y;
            }
        }
    }
    c
}

/// Weights `u^S t^{S²/2}` for the shifts carrying at least `1e−12` of the
/// largest weight, as `(S, weight)`.
pub fn shift_table(u: f64, t: f64) -> Vec<(i64, f64)> {
    let lw = |s: i64| s as f64 * u.ln() + (s * s) as f64 / 2.0 * t.ln();
    let center = (-u.ln() / t.ln()).round() as i64;
    let max = lw(center);
    let cut = max + (1e-12f64).ln();
    let mut lo = center;
    while lw(lo - 1) >= cut {
        lo -= 1;
    }
    let mut hi = center;
    while lw(hi + 1) >= cut {
        hi += 1;
    }
    (lo..=hi).map(|s| (s, lw(s).exp())).collect()
}

/// Every configuration in the box with its exact probability. With
/// `with_shift`, shifts range over `[−s_max, s_max]` weighted by
/// `u^S t^{S²/2}`; otherwise `S = 0`.
pub fn enumerate_configs(
    trunc: &BoxTruncation,
    md: &ModularData,
    with_shift: Option<i64>,
) -> Result<Vec<(CylindricConfig, f64)>> {
    let states = trunc.states()?;
    let s = states.len();
    // up[i] = {j : states[i] ≺ states[j]}
    let mut up = vec![Vec::new(); s];
    let mut down = vec![Vec::new(); s];
    for i in 0..s {
        for j in 0..s {
            if interlaces(&states[i], &states[j]) {
                up[i].push(j);
                down[j].push(i);
            }
        }
    }
    let m = md.columns();
    let mut raw: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut path = Vec::with_capacity(m);
    for start in 0..s {
        path.clear();
        path.push(start);
        walk(&mut path, m, &up, &down, &mut raw)?;
    }
    let shifts: Vec<(i64, f64)> = match with_shift {
        None => vec![(0, 1.0)],
        Some(smax) => (-smax..=smax)
            .map(|x| (x, (x as f64 * md.u.ln() + (x * x) as f64 / 2.0 * md.t.ln()).exp()))
            .collect(),
    };
    let mut out = Vec::with_capacity(raw.len() * shifts.len());
    let mut total = 0.0;
    for (path, _) in &raw {
        let vol: u64 = path.iter().map(|&i| states[i].size()).sum();
        let w = md.q.powf(vol as f64);
        let lambdas: Vec<Partition> = path.iter().map(|&i| states[i].clone()).collect();
        for &(sh, ws) in &shifts {
            let cfg = CylindricConfig::new(md.n, lambdas.clone(), sh).expect("walk keeps interlacing");
            total += w * ws;
            out.push((cfg, w * ws));
        }
    }
    for e in &mut out {
        e.1 /= total;
    }
    Ok(out)
}

fn walk(
    path: &mut Vec<usize>,
    m: usize,
    up: &[Vec<usize>],
    down: &[Vec<usize>],
    out: &mut Vec<(Vec<usize>, f64)>,
) -> Result<()> {
    let c = path.len(); // columns filled so far
    let last = *path.last().expect("path starts non-empty");
    if c == m {
        // column 2N (even) must dominate column 1 (odd)
        if up[path[0]].contains(&last) {
            if out.len() >= MAX_ENUMERATION {
                return Err(Error::Resource(format!("more than {MAX_ENUMERATION} configurations")));
            }
            out.push((path.clone(), 0.0));
        }
        return Ok(());
    }
    // column c is odd (1-based) when c is odd: next (even) dominates it
    let next = if c % 2 == 1 { &up[last] } else { &down[last] };
    for &j in next {
        path.push(j);
        walk(path, m, up, down, out)?;
        path.pop();
    }
    Ok(())
}

/// Exact sample from the box-truncated unshifted measure.
pub fn exact_sample<R: Rng + ?Sized>(trunc: &BoxTruncation, md: &ModularData, rng: &mut R) -> Result<CylindricConfig> {
    Ok(TransferOperator::new(trunc, md)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_states_count() {
        for (l, r) in [(0, 0), (1, 1), (2, 3), (3, 3), (4, 2)] {
            let b = BoxTruncation::new(l, r);
            assert_eq!(b.states().unwrap().len() as u128, b.state_count());
        }
    }

    #[test]
    fn trivial_box_has_unit_partition_function() {
        let md = ModularData::new(0.3, 3, 1.0).unwrap();
        let op = TransferOperator::new(&BoxTruncation::new(0, 0), &md).unwrap();
        assert!((op.partition_function() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn n1_unit_box_by_hand() {
        // pairs (λ¹, λ²) with λ¹ ≺ λ²: (∅,∅), (∅,(1)), ((1),(1)); cyclic closure
        // λ² ≻ λ¹ is the same condition, so Z = 1 + q + q².
        let md = ModularData::new(0.2, 1, 1.0).unwrap();
        let op = TransferOperator::new(&BoxTruncation::new(1, 1), &md).unwrap();
        let q = md.q;
        assert!((op.partition_function() - (1.0 + q + q * q)).abs() < 1e-14);
        let e = enumerate_configs(&BoxTruncation::new(1, 1), &md, None).unwrap();
        assert_eq!(e.len(), 3);
        let best = e.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
        assert_eq!(best.0, CylindricConfig::empty(1, 0));
    }

    #[test]
    fn column_trace_matches_enumeration_and_rotation() {
        let md = ModularData::new(0.3, 2, 1.0).unwrap();
        let b = BoxTruncation::new(2, 2);
        let op = TransferOperator::new(&b, &md).unwrap();
        let z = op.partition_function();
        let states = b.states().unwrap();
        let _ = states;
        let configs = enumerate_configs(&b, &md, None).unwrap();
        let brute: f64 = configs.iter().map(|(c, _)| md.q.powf(c.volume() as f64)).sum();
        assert!((z - brute).abs() < 1e-12 * z);
        for start in 2..=4 {
            let p = op.cyclic_product(start);
            let tr: f64 = (0..op.dim()).map(|i| p[i * op.dim() + i]).sum();
            assert!((tr - z).abs() < 1e-12 * z);
        }
        let bigger = TransferOperator::new(&BoxTruncation::new(3, 3), &md).unwrap().partition_function();
        assert!(bigger > z);
    }

    #[test]
    fn shift_weights_ratio() {
        let md = ModularData::new(0.4, 1, 0.7).unwrap();
        let e = enumerate_configs(&BoxTruncation::new(1, 1), &md, Some(2)).unwrap();
        let p = |cfg: &CylindricConfig| e.iter().find(|(c, _)| c == cfg).unwrap().1;
        let base = CylindricConfig::empty(1, 0);
        for s in [-2i64, -1, 1, 2] {
            let ratio = p(&base.with_shift(s)) / p(&base);
            let expect = md.u.powi(s as i32) * md.t.powf((s * s) as f64 / 2.0);
            assert!((ratio - expect).abs() < 1e-12 * expect);
        }
        let total: f64 = e.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_is_seeded_and_freezes_at_small_q() {
        let md = ModularData::new(0.3, 1, 1.0).unwrap();
        let b = BoxTruncation::new(2, 2);
        let op = TransferOperator::new(&b, &md).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| op.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        let tiny = ModularData::new(1e-12, 1, 1.0).unwrap();
        let op = TransferOperator::new(&b, &tiny).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = (0..200).filter(|_| op.sample(&mut rng) == CylindricConfig::empty(1, 0)).count();
        assert!(empty >= 199);
    }

    #[test]
    fn shift_table_covers_the_mass() {
        let (u, t) = (0.8, 0.3);
        let tab = shift_table(u, t);
        let sum: f64 = tab.iter().map(|x| x.1).sum();
        let th = crate::special::theta3(num_complex::Complex64::new(u, 0.0), t).unwrap().re;
        assert!((sum - th).abs() < 1e-11 * th);
    }
}
