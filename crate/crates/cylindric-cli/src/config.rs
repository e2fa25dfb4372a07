//! Run configuration: `key = value` files, flag overrides and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::output::num;

/// Keys accepted in configuration files.
pub const KEYS: &[&str] = &["n", "t", "u", "k", "tau", "seed", "sweeps", "burn_in", "thin", "l", "r", "out", "threads"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub t: f64,
    pub u: f64,
    pub k: Vec<u32>,
    pub tau: Vec<f64>,
    pub seed: u64,
    pub sweeps: u64,
    /// `None` selects a default scaled with `N`.
    pub burn_in: Option<u64>,
    pub thin: u64,
    /// Box rows; `None` selects a default per command.
    pub l: Option<usize>,
    /// Box width; `None` selects a default per command.
    pub r: Option<u32>,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

/// Values given on the command line; `None` or empty leaves the file value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub k: Vec<u32>,
    pub tau: Vec<f64>,
    pub seed: Option<u64>,
    pub sweeps: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            n: 2,
            t: 0.5,
            u: 1.0,
            k: vec![1],
            tau: vec![1.0],
            seed: 1,
            sweeps: 10_000,
            burn_in: None,
            thin: 10,
            l: None,
            r: None,
            out: PathBuf::from("."),
            threads: None,
        }
    }

    /// Defaults, then the optional file, then the flags.
    pub fn load(command: &str, file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::defaults(command);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_file(&text).with_context(|| format!("in {}", path.display()))?;
        }
        cfg.apply_flags(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{line}`", no + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value).with_context(|| format!("line {}", no + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| anyhow::anyhow!("invalid value `{v}` for `{key}`"))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').map(|x| p(key, x.trim())).collect()
        }
        match key {
            "n" => self.n = p(key, value)?,
            "t" => self.t = p(key, value)?,
            "u" => self.u = p(key, value)?,
            "k" => self.k = list(key, value)?,
            "tau" => self.tau = list(key, value)?,
            "seed" => self.seed = p(key, value)?,
            "sweeps" => self.sweeps = p(key, value)?,
            "burn_in" => self.burn_in = Some(p(key, value)?),
            "thin" => self.thin = p(key, value)?,
            "l" => self.l = Some(p(key, value)?),
            "r" => self.r = Some(p(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(p(key, value)?),
            _ => bail!("unknown key `{key}` (accepted: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Overrides) {
        if let Some(v) = f.n {
            self.n = v;
        }
        if let Some(v) = f.t {
            self.t = v;
        }
        if let Some(v) = f.u {
            self.u = v;
        }
        if !f.k.is_empty() {
            self.k = f.k.clone();
        }
        if !f.tau.is_empty() {
            self.tau = f.tau.clone();
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.sweeps {
            self.sweeps = v;
        }
        if let Some(v) = &f.out {
            self.out = v.clone();
        }
        if let Some(v) = f.threads {
            self.threads = Some(v);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            bail!("n must be positive");
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            bail!("t = {} must lie in (0,1)", self.t);
        }
        if !(self.u > 0.0 && self.u.is_finite()) {
            bail!("u = {} must be positive", self.u);
        }
        if self.k.is_empty() || self.k.contains(&0) {
            bail!("k values must be positive");
        }
        if self.tau.is_empty() || self.tau.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            bail!("tau values must lie in (0,1]");
        }
        if self.k.len() != 1 && self.k.len() != self.tau.len() {
            bail!("{} k values for {} tau values; give one k or one per tau", self.k.len(), self.tau.len());
        }
        if self.sweeps == 0 || self.thin == 0 {
            bail!("sweeps and thin must be positive");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(())
    }

    /// `(τ, k)` pairs with a single `k` broadcast over all `τ`.
    pub fn slices(&self) -> Vec<(f64, u32)> {
        self.tau.iter().enumerate().map(|(i, &tau)| (tau, if self.k.len() == 1 { self.k[0] } else { self.k[i] })).collect()
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(40 * (self.n as u64).pow(2)).max(1000)
    }

    /// Single header line recording every field.
    pub fn header(&self) -> String {
        let mut s = format!("# RunConfig command={}", self.command);
        let join = |v: Vec<String>| v.join(",");
        let _ = write!(
            s,
            " n={} t={} u={} k={} tau={} seed={} sweeps={} burn_in={} thin={} l={} r={} out={} threads={}",
            self.n,
            num(self.t),
            num(self.u),
            join(self.k.iter().map(|x| x.to_string()).collect()),
            join(self.tau.iter().map(|&x| num(x)).collect()),
            self.seed,
            self.sweeps,
            self.burn_in(),
            self.thin,
            self.l.map_or("auto".into(), |x| x.to_string()),
            self.r.map_or("auto".into(), |x| x.to_string()),
            self.out.display(),
            self.threads.map_or("auto".into(), |x| x.to_string()),
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::defaults("moments");
        c.apply_file("# comment\nn = 3\nt=0.2 # trailing\ntau = 0.25, 0.5\n\nk = 1\n").unwrap();
        assert_eq!((c.n, c.t, c.tau.clone()), (3, 0.2, vec![0.25, 0.5]));
        c.apply_flags(&Overrides { n: Some(5), ..Default::default() });
        assert_eq!(c.n, 5);
        assert_eq!(c.t, 0.2);
        c.validate().unwrap();
        assert_eq!(c.slices(), vec![(0.25, 1), (0.5, 1)]);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let mut c = RunConfig::defaults("sample");
        assert!(c.apply_file("colour = red").is_err());
        assert!(c.apply_file("n = two").is_err());
        assert!(c.apply_file("just words").is_err());
        c.t = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn header_is_one_line_with_every_key() {
        let h = RunConfig::defaults("sample").header();
        assert!(!h.contains('\n'));
        for k in KEYS {
            assert!(h.contains(&format!(" {k}=")), "{k}");
        }
    }
}
