//! Row-transfer engine for the box-truncated measure.
//!
//! Row `i` of a configuration is the vector `(λ_i^{(1)}, …, λ_i^{(2N)})`.
//! Within a row every odd entry is at most its two even neighbours; from row
//! `i` to row `i+1` every even entry is at most its two odd neighbours in row
//! `i`. Rows below `L` vanish. The chain is linear, and transitions are
//! evaluated with multidimensional suffix sums over the even part.
//!
//! Site occupancies in different rows are disjoint events and `F_r` is a sum
//! over rows, so correlations and products of `F_r` reduce to a forward pass
//! with a subset mask recording which factors have been placed.

use crate::error::{Error, Result};
use crate::partitions::{CylindricConfig, ModularData};
use crate::transfer::{shift_table, BoxTruncation};

/// Upper limit on `states × channels` held in memory.
pub const MAX_ROW_CELLS: usize = 40_000_000;

pub struct RowChain {
    md: ModularData,
    l: usize,
    r: u32,
    cols: usize,
    /// Flattened row vectors, stride `cols`.
    states: Vec<u32>,
    size: Vec<u32>,
    /// Grid index of the even entries.
    even_idx: Vec<usize>,
    /// Grid index of the bounds the row imposes on the next row's even entries.
    bound_idx: Vec<usize>,
    grid: usize,
}

impl RowChain {
    pub fn new(trunc: &BoxTruncation, md: &ModularData) -> Result<Self> {
        let n = md.n;
        let cols = 2 * n;
        let side = trunc.r as usize + 1;
        let grid = side
            .checked_pow(n as u32)
            .filter(|&g| g <= MAX_ROW_CELLS)
            .ok_or_else(|| Error::Resource(format!("even grid {side}^{n} too large")))?;
        let mut states = Vec::new();
        let mut size = Vec::new();
        let mut even_idx = Vec::new();
        let mut bound_idx = Vec::new();
        let mut row = vec![0u32; cols];
        for g in 0..grid {
            let mut rem = g;
            for m in 0..n {
                row[2 * m + 1] = (rem % side) as u32;
                rem /= side;
            }
            // odd column 2m+1 (0-based 2m) sits between even 0-based 2m−1 and 2m+1
            let caps: Vec<u32> = (0..n)
                .map(|m| row[(2 * m + cols - 1) % cols].min(row[2 * m + 1]))
                .collect();
            let count: usize = caps.iter().map(|&c| c as usize + 1).product();
            if states.len() / cols + count > MAX_ROW_CELLS {
                return Err(Error::Resource("row state space too large".into()));
            }
            let mut odd = vec![0u32; n];
            'odd: loop {
                for m in 0..n {
                    row[2 * m] = odd[m];
                }
                states.extend_from_slice(&row);
                size.push(row.iter().sum());
                even_idx.push(g);
                let mut b = 0usize;
                for m in (0..n).rev() {
                    let cap = row[2 * m].min(row[(2 * m + 2) % cols]);
                    b = b * side + cap as usize;
                }
                bound_idx.push(b);
                for m in 0..n {
                    if odd[m] < caps[m] {
                        odd[m] += 1;
                        continue 'odd;
                    }
                    odd[m] = 0;
                }
                break;
            }
        }
        Ok(RowChain { md: *md, l: trunc.l, r: trunc.r, cols, states, size, even_idx, bound_idx, grid })
    }

    pub fn state_count(&self) -> usize {
        self.size.len()
    }

    fn row(&self, s: usize) -> &[u32] {
        &self.states[s * self.cols..(s + 1) * self.cols]
    }

    /// Forward pass with `k` factors. `local(i, row, buf)` fills `buf[U]` with the
    /// weight of placing the factor subset `U` at row `i` (1-based); `buf[0]` is 1.
    /// Returns, for each subset `M`, the sum over configurations of
    /// `q^{Σ|λ|}` times the placements of exactly the factors in `M`.
    fn run<F>(&self, k: usize, local: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &[u32], &mut [f64]),
    {
        let kk = 1usize << k;
        let ns = self.state_count();
        if ns.saturating_mul(kk) > MAX_ROW_CELLS {
            return Err(Error::Resource(format!("{ns} row states × {kk} channels")));
        }
        let mut totals = vec![0.0; kk];
        if self.l == 0 {
            totals[0] = 1.0;
            return Ok(totals);
        }
        let qpow: Vec<f64> = {
            let max = *self.size.iter().max().unwrap_or(&0) as usize;
            let mut v = Vec::with_capacity(max + 1);
            let mut x = 1.0;
            for _ in 0..=max {
                v.push(x);
                x *= self.md.q;
            }
            v
        };
        let mut alpha = vec![0.0; ns * kk];
        let mut incoming = vec![0.0; self.grid * kk];
        let mut buf = vec![0.0; kk];
        for i in 1..=self.l {
            if i == 1 {
                // no row above: every even entry is only bounded by R
                incoming.iter_mut().for_each(|x| *x = 0.0);
                for g in 0..self.grid {
                    incoming[g * kk] = 1.0;
                }
            } else {
                incoming.iter_mut().for_each(|x| *x = 0.0);
                for s in 0..ns {
                    let b = self.bound_idx[s];
                    for m in 0..kk {
                        incoming[b * kk + m] += alpha[s * kk + m];
                    }
                }
                self.suffix_sum(&mut incoming, kk);
            }
            for s in 0..ns {
                let row = self.row(s);
                buf.iter_mut().for_each(|x| *x = 0.0);
                buf[0] = 1.0;
                local(i, row, &mut buf);
                let w = qpow[self.size[s] as usize];
                let inc = &incoming[self.even_idx[s] * kk..(self.even_idx[s] + 1) * kk];
                let out = &mut alpha[s * kk..(s + 1) * kk];
                for m in 0..kk {
                    // Σ_{U ⊆ M} buf[U] · inc[M \ U]
                    let mut acc = 0.0;
                    let mut u = m;
                    loop {
                        if buf[u] != 0.0 {
                            acc += buf[u] * inc[m & !u];
                        }
                        if u == 0 {
                            break;
                        }
                        u = (u - 1) & m;
                    }
                    out[m] = w * acc;
                }
            }
        }
        for s in 0..ns {
            for m in 0..kk {
                totals[m] += alpha[s * kk + m];
            }
        }
        Ok(totals)
    }

    /// In place: `a[g] ← Σ_{g' ≥ g} a[g']` componentwise over the even grid.
    fn suffix_sum(&self, a: &mut [f64], kk: usize) {
        let side = self.r as usize + 1;
        let mut stride = 1;
        for _ in 0..self.md.n {
            for g in (0..self.grid).rev() {
                if (g / stride) % side + 1 < side {
                    let src = (g + stride) * kk;
                    for m in 0..kk {
                        a[g * kk + m] += a[src + m];
                    }
                }
            }
            stride *= side;
        }
    }

    pub fn partition_function(&self) -> Result<f64> {
        Ok(self.run(0, |_, _, _| {})?[0])
    }

    /// `P(all sites occupied)` under the unshifted measure; sites are `(τ, m)`
    /// with `m` standing for `m + 1/2`.
    pub fn correlation(&self, sites: &[(usize, i64)]) -> Result<f64> {
        let mut live: Vec<(usize, i64)> = Vec::new();
        for &(tau, m) in sites {
            if tau == 0 || tau > self.cols {
                return Err(Error::Domain(format!("column {tau} outside 1..={}", self.cols)));
            }
            // rows beyond L are empty, so every site m ≤ −L−1 is occupied
            if m <= -(self.l as i64) - 1 || live.contains(&(tau, m)) {
                continue;
            }
            live.push((tau, m));
        }
        let k = live.len();
        let totals = self.run(k, |i, row, buf| {
            let mut sat = 0usize;
            for (j, &(tau, m)) in live.iter().enumerate() {
                if row[tau - 1] as i64 == m + i as i64 {
                    sat |= 1 << j;
                }
            }
            let mut u = sat;
            while u != 0 {
                buf[u] = 1.0;
                u = (u - 1) & sat;
            }
        })?;
        Ok(totals[(1 << k) - 1] / totals[0])
    }

    /// `E[∏_j F_{r_j}(λ^{(τ_j)})]` under the unshifted measure.
    pub fn observable_moment(&self, slices: &[(usize, f64)]) -> Result<f64> {
        for &(tau, r) in slices {
            if tau == 0 || tau > self.cols {
                return Err(Error::Domain(format!("column {tau} outside 1..={}", self.cols)));
            }
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Domain(format!("r = {r} must lie in (0,1)")));
            }
        }
        let k = slices.len();
        // F_r(λ) = 1/(1 − r^{−1}) + Σ_{i≤L} r^{1−i}(r^{λ_i} − 1)
        let totals = self.run(k, |i, row, buf| {
            let phi: Vec<f64> = slices
                .iter()
                .map(|&(tau, r)| r.powi(1 - i as i32) * (r.powi(row[tau - 1] as i32) - 1.0))
                .collect();
            for u in 1..buf.len() {
                let mut w = 1.0;
                for (j, p) in phi.iter().enumerate() {
                    if u & (1 << j) != 0 {
                        w *= p;
                    }
                }
                buf[u] = w;
            }
        })?;
        let z = totals[0];
        let mut acc = 0.0;
        for (m, tot) in totals.iter().enumerate() {
            let mut c = 1.0;
            for (j, &(_, r)) in slices.iter().enumerate() {
                if m & (1 << j) == 0 {
                    c *= 1.0 / (1.0 - 1.0 / r);
                }
            }
            acc += c * tot / z;
        }
        Ok(acc)
    }
}

/// Truncated partition function `Σ q^{Σ|λ|}` over the box.
pub fn partition_function(trunc: &BoxTruncation, md: &ModularData) -> Result<f64> {
    RowChain::new(trunc, md)?.partition_function()
}

/// `Z_{L+2,R+2} / Z_{L,R} − 1`.
pub fn tail_bound(trunc: &BoxTruncation, md: &ModularData) -> Result<f64> {
    let z0 = partition_function(trunc, md)?;
    let z1 = partition_function(&trunc.grown(2), md)?;
    Ok(z1 / z0 - 1.0)
}

/// Normalized `P(S)` over the certified support.
pub fn shift_probabilities(md: &ModularData) -> Vec<(i64, f64)> {
    let tab = shift_table(md.u, md.t);
    let total: f64 = tab.iter().map(|x| x.1).sum();
    tab.into_iter().map(|(s, w)| (s, w / total)).collect()
}

/// `ρ_k` at sites `(τ, m)`; with `shifted`, averaged over the independent shift.
pub fn exact_correlation(trunc: &BoxTruncation, md: &ModularData, points: &[(usize, i64)], shifted: bool) -> Result<f64> {
    let chain = RowChain::new(trunc, md)?;
    if !shifted {
        return chain.correlation(points);
    }
    let mut acc = 0.0;
    for (s, p) in shift_probabilities(md) {
        let moved: Vec<(usize, i64)> = points.iter().map(|&(tau, m)| (tau, m - s)).collect();
        acc += p * chain.correlation(&moved)?;
    }
    Ok(acc)
}

/// Exact value with its truncation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactValue {
    pub value: f64,
    /// `Z_{L+2,R+2}/Z_{L,R} − 1`.
    pub tail_z: f64,
    /// `|E_{L+2,R+2} − E_{L,R}|`.
    pub tail_delta: f64,
}

impl ExactValue {
    pub fn budget(&self) -> f64 {
        self.tail_z.abs().max(self.tail_delta)
    }
}

/// `E[∏ F_{r_i}(λ^{(τ_i)})]` with `r_i = q^{2k_i}` for `(τ_i, k_i)`; with
/// `shifted`, the observables are `r_i^S F_{r_i}`.
pub fn exact_observable_expectation(
    trunc: &BoxTruncation,
    md: &ModularData,
    slices: &[(usize, u32)],
    shifted: bool,
) -> Result<ExactValue> {
    let rs: Vec<(usize, f64)> = slices.iter().map(|&(tau, k)| (tau, md.r_of(k))).collect();
    let factor = if shifted {
        let prod: f64 = rs.iter().map(|x| x.1).product();
        shift_probabilities(md).iter().map(|&(s, p)| p * prod.powi(s as i32)).sum()
    } else {
        1.0
    };
    let small = RowChain::new(trunc, md)?;
    let big = RowChain::new(&trunc.grown(2), md)?;
    let v0 = small.observable_moment(&rs)? * factor;
    let v1 = big.observable_moment(&rs)? * factor;
    let tail_z = big.partition_function()? / small.partition_function()? - 1.0;
    Ok(ExactValue { value: v1, tail_z, tail_delta: (v1 - v0).abs() })
}

/// Row vectors of a configuration, for tests and diagnostics.
pub fn rows_of(cfg: &CylindricConfig, l: usize) -> Vec<Vec<u32>> {
    (1..=l).map(|i| cfg.lambdas().iter().map(|p| p.part(i)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{height_of, observable_f};
    use crate::transfer::{enumerate_configs, TransferOperator};

    fn brute_moment(e: &[(CylindricConfig, f64)], slices: &[(usize, f64)]) -> f64 {
        e.iter()
            .map(|(c, p)| p * slices.iter().map(|&(tau, r)| observable_f(c.column(tau), r).unwrap()).product::<f64>())
            .sum()
    }

    #[test]
    fn row_engine_matches_column_engine_and_enumeration() {
        for (n, l, r) in [(1, 2, 3), (2, 2, 2), (2, 3, 2), (3, 1, 2)] {
            let md = ModularData::new(0.35, n, 1.0).unwrap();
            let b = BoxTruncation::new(l, r);
            let zr = partition_function(&b, &md).unwrap();
            let zc = TransferOperator::new(&b, &md).unwrap().partition_function();
            assert!((zr - zc).abs() < 1e-12 * zc, "N={n} L={l} R={r}: {zr} vs {zc}");
        }
    }

    #[test]
    fn correlations_and_moments_match_enumeration() {
        let md = ModularData::new(0.3, 2, 1.0).unwrap();
        let b = BoxTruncation::new(2, 3);
        let e = enumerate_configs(&b, &md, None).unwrap();
        let chain = RowChain::new(&b, &md).unwrap();
        let occ = |c: &CylindricConfig, tau: usize, m: i64| {
            height_of(c.column(tau), 0, m + 1) == height_of(c.column(tau), 0, m)
        };
        let tuples: Vec<Vec<(usize, i64)>> = vec![
            vec![(1, 0)],
            vec![(2, -1)],
            vec![(3, 1), (4, -2)],
            vec![(2, 0), (2, -1), (1, -2)],
            vec![(4, -3)],
        ];
        for sites in tuples {
            let brute: f64 = e.iter().filter(|(c, _)| sites.iter().all(|&(t, m)| occ(c, t, m))).map(|x| x.1).sum();
            let got = chain.correlation(&sites).unwrap();
            assert!((brute - got).abs() < 1e-13, "{sites:?}: {brute} vs {got}");
        }
        for slices in [vec![(1, 0.5)], vec![(2, 0.7), (3, 0.4)], vec![(1, 0.6), (1, 0.6), (4, 0.8)]] {
            let brute = brute_moment(&e, &slices);
            let got = chain.observable_moment(&slices).unwrap();
            assert!((brute - got).abs() < 1e-12 * brute.abs().max(1.0), "{slices:?}: {brute} vs {got}");
        }
    }

    #[test]
    fn frozen_zones() {
        let md = ModularData::new(0.2, 1, 1.0).unwrap();
        let b = BoxTruncation::new(4, 8);
        let chain = RowChain::new(&b, &md).unwrap();
        assert!((chain.correlation(&[(1, -5)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(chain.correlation(&[(2, 8)]).unwrap() == 0.0);
        let rho: Vec<f64> = (-4..=2).map(|m| chain.correlation(&[(1, m)]).unwrap()).collect();
        assert!(rho.windows(2).all(|w| w[0] >= w[1]), "{rho:?}");
    }

    #[test]
    fn shifted_correlation_is_a_shift_average() {
        let md = ModularData::new(0.3, 1, 0.6).unwrap();
        let b = BoxTruncation::new(3, 5);
        let chain = RowChain::new(&b, &md).unwrap();
        let direct = exact_correlation(&b, &md, &[(1, 0)], true).unwrap();
        let manual: f64 = shift_probabilities(&md).iter().map(|&(s, p)| p * chain.correlation(&[(1, -s)]).unwrap()).sum();
        assert!((direct - manual).abs() < 1e-15);
        // against enumeration with a wide shift range
        let e = enumerate_configs(&BoxTruncation::new(2, 2), &md, Some(6)).unwrap();
        let small = exact_correlation(&BoxTruncation::new(2, 2), &md, &[(2, 0), (1, -1)], true).unwrap();
        let occ = |c: &CylindricConfig, tau: usize, m: i64| c.column(tau).sites(c.shift()).any(|x| x == m) || m < c.shift() - c.column(tau).len() as i64;
        let brute: f64 = e.iter().filter(|(c, _)| occ(c, 2, 0) && occ(c, 1, -1)).map(|x| x.1).sum();
        assert!((small - brute).abs() < 1e-11, "{small} vs {brute}");
    }

    #[test]
    fn tail_shrinks_with_the_box() {
        let md = ModularData::new(0.2, 1, 1.0).unwrap();
        let a = tail_bound(&BoxTruncation::new(2, 4), &md).unwrap();
        let b = tail_bound(&BoxTruncation::new(4, 8), &md).unwrap();
        assert!(a > b && b > 0.0);
    }
}
