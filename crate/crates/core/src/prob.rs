//! Dense probability tables over small finite alphabets and the information
//! measures built on them.
//!
//! All quantities are in nats. Tables are stored row-major in the order of
//! their alphabet list, the last variable varying fastest.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex-membership tolerance for tables and kernel rows.
pub const PROB_TOL: f64 = 1e-9;
/// Tolerance for numerical information identities.
pub const INFO_TOL: f64 = 1e-10;
/// Negative information values of at most this magnitude are rounding noise.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub label: String,
    pub size: usize,
}

impl Alphabet {
    /// Panics if `size == 0`; use [`Alphabet::try_new`] for untrusted input.
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        Self::try_new(label, size).expect("alphabet size must be positive")
    }

    pub fn try_new(label: impl Into<String>, size: usize) -> Result<Self> {
        let label = label.into();
        if size == 0 {
            return Err(Error::arg(format!("alphabet `{label}` has size 0")));
        }
        Ok(Self { label, size })
    }
}

fn total_size(alphabets: &[Alphabet]) -> usize {
    alphabets.iter().map(|a| a.size).product()
}

fn row_major_strides(alphabets: &[Alphabet]) -> Vec<usize> {
    let mut strides = vec![1; alphabets.len()];
    for i in (0..alphabets.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * alphabets[i + 1].size;
    }
    strides
}

fn check_unique_labels(alphabets: &[Alphabet]) -> Result<()> {
    for (i, a) in alphabets.iter().enumerate() {
        if alphabets[..i].iter().any(|b| b.label == a.label) {
            return Err(Error::arg(format!("duplicate variable label `{}`", a.label)));
        }
    }
    Ok(())
}

/// Draw a point uniformly from the `k`-simplex (flat Dirichlet).
pub fn dirichlet_row<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

/// A joint probability mass function over a tuple of finite alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct FinitePmf {
    alphabets: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl FinitePmf {
    pub fn new(alphabets: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        check_unique_labels(&alphabets)?;
        let expected = total_size(&alphabets);
        if probs.len() != expected {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, alphabets require {expected}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { alphabets, probs })
    }

    pub(crate) fn from_parts(alphabets: Vec<Alphabet>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), total_size(&alphabets));
        Self { alphabets, probs }
    }

    pub fn uniform(alphabets: Vec<Alphabet>) -> Self {
        let n = total_size(&alphabets);
        Self::from_parts(alphabets, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(alphabets: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        if at.len() != alphabets.len() || at.iter().zip(&alphabets).any(|(i, a)| *i >= a.size) {
            return Err(Error::arg("point-mass index outside the alphabets"));
        }
        let strides = row_major_strides(&alphabets);
        let idx: usize = at.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let mut probs = vec![0.0; total_size(&alphabets)];
        probs[idx] = 1.0;
        Ok(Self::from_parts(alphabets, probs))
    }

    pub fn random<R: Rng + ?Sized>(alphabets: Vec<Alphabet>, rng: &mut R) -> Self {
        let probs = dirichlet_row(total_size(&alphabets), rng);
        Self::from_parts(alphabets, probs)
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.alphabets.iter().map(|a| a.label.as_str())
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.alphabets
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn alphabet(&self, label: &str) -> Result<&Alphabet> {
        Ok(&self.alphabets[self.position(label)?])
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.alphabets)
    }

    /// Marginal over `labels`, in the order given.
    pub fn marginal(&self, labels: &[&str]) -> Result<FinitePmf> {
        let positions = labels.iter().map(|l| self.position(l)).collect::<Result<Vec<_>>>()?;
        let alphabets: Vec<Alphabet> = positions.iter().map(|&p| self.alphabets[p].clone()).collect();
        check_unique_labels(&alphabets)?;
        let probs = self.marginal_probs(&positions);
        Ok(Self::from_parts(alphabets, probs))
    }

    pub(crate) fn marginal_probs(&self, positions: &[usize]) -> Vec<f64> {
        let strides = self.strides();
        let sizes: Vec<usize> = positions.iter().map(|&p| self.alphabets[p].size).collect();
        let mut out_strides = vec![1usize; positions.len()];
        for i in (0..positions.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * sizes[i + 1];
        }
        let plan: Vec<(usize, usize, usize)> = positions
            .iter()
            .zip(&sizes)
            .zip(&out_strides)
            .map(|((&p, &sz), &os)| (strides[p], sz, os))
            .collect();
        let mut out = vec![0.0; sizes.iter().product()];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let m: usize = plan.iter().map(|&(js, sz, os)| (idx / js) % sz * os).sum();
            out[m] += p;
        }
        out
    }

    /// Law of the remaining variables given `label = value`; `None` when the
    /// conditioning event has zero probability.
    pub fn condition_on(&self, label: &str, value: usize) -> Result<Option<FinitePmf>> {
        let pos = self.position(label)?;
        if value >= self.alphabets[pos].size {
            return Err(Error::arg(format!("value {value} outside alphabet `{label}`")));
        }
        let strides = self.strides();
        let rest: Vec<Alphabet> = self
            .alphabets
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, a)| a.clone())
            .collect();
        let mut probs = Vec::with_capacity(total_size(&rest));
        for (idx, &p) in self.probs.iter().enumerate() {
            if (idx / strides[pos]) % self.alphabets[pos].size == value {
                probs.push(p);
            }
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            return Ok(None);
        }
        probs.iter_mut().for_each(|p| *p /= mass);
        Ok(Some(Self::from_parts(rest, probs)))
    }
}

/// A stochastic kernel `p(to | from)`; row `r` is the law of `to` given the
/// `r`-th tuple of `from` in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CondKernel {
    from: Vec<Alphabet>,
    to: Vec<Alphabet>,
    probs: Vec<f64>,
}

/// A kernel row that fails simplex membership.
#[derive(Clone, Debug, PartialEq)]
pub struct RowViolation {
    pub row: usize,
    pub sum: f64,
    pub min_entry: f64,
}

impl CondKernel {
    pub fn new(from: Vec<Alphabet>, to: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        let k = Self::new_unchecked(from, to, probs)?;
        if let Some(v) = k.row_violations().first() {
            return Err(Error::InvalidDistribution(format!(
                "kernel row {} sums to {} (min entry {})",
                v.row, v.sum, v.min_entry
            )));
        }
        Ok(k)
    }

    /// Shape-checked but not simplex-checked; see [`CondKernel::row_violations`].
    pub fn new_unchecked(from: Vec<Alphabet>, to: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        let mut all = from.clone();
        all.extend(to.iter().cloned());
        check_unique_labels(&all)?;
        if to.is_empty() {
            return Err(Error::arg("kernel must produce at least one variable"));
        }
        let expected = total_size(&from) * total_size(&to);
        if probs.len() != expected {
            return Err(Error::InvalidDistribution(format!(
                "kernel has {} entries, alphabets require {expected}",
                probs.len()
            )));
        }
        Ok(Self { from, to, probs })
    }

    pub fn from_rows(from: Vec<Alphabet>, to: Vec<Alphabet>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(from, to, rows.concat())
    }

    /// `to = map[row]` deterministically.
    pub fn deterministic(from: Vec<Alphabet>, to: Vec<Alphabet>, map: &[usize]) -> Result<Self> {
        let rows = total_size(&from);
        let cols = total_size(&to);
        if map.len() != rows || map.iter().any(|&c| c >= cols) {
            return Err(Error::arg("deterministic map does not fit the alphabets"));
        }
        let mut probs = vec![0.0; rows * cols];
        for (r, &c) in map.iter().enumerate() {
            probs[r * cols + c] = 1.0;
        }
        Self::new(from, to, probs)
    }

    /// Copies a single variable: `to = from`.
    pub fn identity(from: Alphabet, to_label: impl Into<String>) -> Result<Self> {
        let to = Alphabet::new(to_label, from.size);
        let map: Vec<usize> = (0..from.size).collect();
        Self::deterministic(vec![from], vec![to], &map)
    }

    pub fn random<R: Rng + ?Sized>(from: Vec<Alphabet>, to: Vec<Alphabet>, rng: &mut R) -> Self {
        let rows = total_size(&from);
        let cols = total_size(&to);
        let probs = (0..rows).flat_map(|_| dirichlet_row(cols, rng)).collect();
        Self { from, to, probs }
    }

    pub fn from_alphabets(&self) -> &[Alphabet] {
        &self.from
    }

    pub fn to_alphabets(&self) -> &[Alphabet] {
        &self.to
    }

    pub fn n_rows(&self) -> usize {
        total_size(&self.from)
    }

    pub fn n_cols(&self) -> usize {
        total_size(&self.to)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.n_cols();
        &self.probs[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.n_cols();
        &mut self.probs[r * c..(r + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.n_cols())
    }

    /// Row index of a tuple of conditioning values.
    pub fn row_index(&self, from_values: &[usize]) -> usize {
        from_values
            .iter()
            .zip(row_major_strides(&self.from))
            .map(|(v, s)| v * s)
            .sum()
    }

    pub fn row_violations(&self) -> Vec<RowViolation> {
        self.rows()
            .enumerate()
            .filter_map(|(row, r)| {
                let sum: f64 = r.iter().sum();
                let min_entry = r.iter().cloned().fold(f64::INFINITY, f64::min);
                let bad = (sum - 1.0).abs() > PROB_TOL || min_entry < 0.0 || !sum.is_finite();
                bad.then_some(RowViolation { row, sum, min_entry })
            })
            .collect()
    }

    /// Marginalize the output onto `labels` (order as given).
    pub fn marginal_to(&self, labels: &[&str]) -> Result<CondKernel> {
        let out_pmf_alphas = self.to.clone();
        let probe = FinitePmf::from_parts(out_pmf_alphas, vec![0.0; self.n_cols()]);
        let positions = labels.iter().map(|l| probe.position(l)).collect::<Result<Vec<_>>>()?;
        let to: Vec<Alphabet> = positions.iter().map(|&p| self.to[p].clone()).collect();
        let mut probs = Vec::with_capacity(self.n_rows() * total_size(&to));
        for r in 0..self.n_rows() {
            let row = FinitePmf::from_parts(self.to.clone(), self.row(r).to_vec());
            probs.extend(row.marginal_probs(&positions));
        }
        CondKernel::new_unchecked(self.from.clone(), to, probs)
    }

    /// `p(c | a) = Σ_b self(b | a) next(c | b)`; `next` must condition on
    /// exactly `self`'s output variables.
    pub fn then(&self, next: &CondKernel) -> Result<CondKernel> {
        if next.from != self.to {
            return Err(Error::Composition(format!(
                "cannot chain kernel producing {:?} into kernel consuming {:?}",
                labels_of(&self.to),
                labels_of(&next.from)
            )));
        }
        let (rows, mid, cols) = (self.n_rows(), self.n_cols(), next.n_cols());
        let mut probs = vec![0.0; rows * cols];
        for r in 0..rows {
            for b in 0..mid {
                let w = self.probs[r * mid + b];
                if w == 0.0 {
                    continue;
                }
                for c in 0..cols {
                    probs[r * cols + c] += w * next.probs[b * cols + c];
                }
            }
        }
        CondKernel::new_unchecked(self.from.clone(), next.to.clone(), probs)
    }
}

fn labels_of(alphabets: &[Alphabet]) -> Vec<&str> {
    alphabets.iter().map(|a| a.label.as_str()).collect()
}

/// Chain `root` through `factors` in order, producing the full joint law.
///
/// Each factor's conditioning variables must already be present, either in
/// the root or as the output of an earlier factor. Output variables are
/// appended in factor order.
pub fn compose_joint(factors: &[CondKernel], root: &FinitePmf) -> Result<FinitePmf> {
    let mut alphabets = root.alphabets.clone();
    let mut probs = root.probs.clone();
    for (k, factor) in factors.iter().enumerate() {
        let current = FinitePmf::from_parts(alphabets.clone(), vec![0.0; probs.len()]);
        let mut plan = Vec::with_capacity(factor.from.len());
        let strides = current.strides();
        let factor_strides = row_major_strides(&factor.from);
        for (alpha, fs) in factor.from.iter().zip(&factor_strides) {
            let pos = current.position(&alpha.label).map_err(|_| {
                Error::Composition(format!(
                    "factor {k} conditions on `{}`, which no earlier factor produces",
                    alpha.label
                ))
            })?;
            if alphabets[pos].size != alpha.size {
                return Err(Error::Composition(format!(
                    "factor {k} expects |{}| = {}, found {}",
                    alpha.label, alpha.size, alphabets[pos].size
                )));
            }
            plan.push((strides[pos], alpha.size, *fs));
        }
        for a in &factor.to {
            if alphabets.iter().any(|b| b.label == a.label) {
                return Err(Error::Composition(format!(
                    "factor {k} re-produces variable `{}`",
                    a.label
                )));
            }
        }
        let cols = factor.n_cols();
        let mut next = vec![0.0; probs.len() * cols];
        for (idx, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row: usize = plan.iter().map(|&(js, sz, fs)| (idx / js) % sz * fs).sum();
            let krow = factor.row(row);
            let out = &mut next[idx * cols..(idx + 1) * cols];
            for (o, q) in out.iter_mut().zip(krow) {
                *o = p * q;
            }
        }
        alphabets.extend(factor.to.iter().cloned());
        probs = next;
    }
    Ok(FinitePmf::from_parts(alphabets, probs))
}

/// Memoized entropy evaluator over variable subsets of one joint law.
///
/// Subsets are bitmasks over the joint's variable positions. Variables with a
/// single-symbol alphabet are constants and are dropped from every subset, so
/// terms such as `I(U;S)` with a constant `S` evaluate to exactly `0.0`.
pub struct InfoCalc<'a> {
    pmf: &'a FinitePmf,
    constant_mask: u64,
    cache: HashMap<u64, f64>,
}

impl<'a> InfoCalc<'a> {
    pub fn new(pmf: &'a FinitePmf) -> Self {
        assert!(pmf.alphabets.len() <= 64, "at most 64 variables");
        let constant_mask = pmf
            .alphabets
            .iter()
            .enumerate()
            .filter(|(_, a)| a.size == 1)
            .fold(0u64, |m, (i, _)| m | (1 << i));
        Self {
            pmf,
            constant_mask,
            cache: HashMap::new(),
        }
    }

    pub fn pmf(&self) -> &FinitePmf {
        self.pmf
    }

    pub fn mask(&self, labels: &[&str]) -> Result<u64> {
        labels
            .iter()
            .try_fold(0u64, |m, l| Ok(m | (1 << self.pmf.position(l)?)))
    }

    pub fn entropy_mask(&mut self, mask: u64) -> f64 {
        let mask = mask & !self.constant_mask;
        if mask == 0 {
            return 0.0;
        }
        if let Some(&h) = self.cache.get(&mask) {
            return h;
        }
        let positions: Vec<usize> = (0..self.pmf.alphabets.len()).filter(|i| mask & (1 << i) != 0).collect();
        let h = if positions.len() == self.pmf.alphabets.len() {
            entropy_of(&self.pmf.probs)
        } else {
            entropy_of(&self.pmf.marginal_probs(&positions))
        };
        self.cache.insert(mask, h);
        h
    }

    pub fn entropy(&mut self, labels: &[&str]) -> Result<f64> {
        let m = self.mask(labels)?;
        Ok(self.entropy_mask(m))
    }

    /// `H(A | C)`.
    pub fn cond_entropy(&mut self, a: &[&str], given: &[&str]) -> Result<f64> {
        let (ma, mc) = (self.mask(a)?, self.mask(given)?);
        Ok(clamp_info(self.entropy_mask(ma | mc) - self.entropy_mask(mc)))
    }

    pub fn mi(&mut self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.cmi(a, b, &[])
    }

    /// `I(A; B | C)`; the three groups must be disjoint.
    pub fn cmi(&mut self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let (ma, mb, mc) = (self.mask(a)?, self.mask(b)?, self.mask(c)?);
        if ma & mb != 0 || ma & mc != 0 || mb & mc != 0 {
            return Err(Error::arg(format!(
                "variable groups {a:?}, {b:?}, {c:?} overlap"
            )));
        }
        let (ma, mb, mc) = (ma & !self.constant_mask, mb & !self.constant_mask, mc & !self.constant_mask);
        if ma == 0 || mb == 0 {
            return Ok(0.0);
        }
        let v = self.entropy_mask(ma | mc) + self.entropy_mask(mb | mc)
            - self.entropy_mask(ma | mb | mc)
            - self.entropy_mask(mc);
        Ok(clamp_info(v))
    }
}

fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

fn clamp_info(v: f64) -> f64 {
    if v < 0.0 && v >= -CLAMP_TOL {
        0.0
    } else {
        v
    }
}

/// Entropy (nats) of the marginal on `subset`.
pub fn entropy(p: &FinitePmf, subset: &[&str]) -> Result<f64> {
    InfoCalc::new(p).entropy(subset)
}

pub fn conditional_entropy(p: &FinitePmf, a: &[&str], given: &[&str]) -> Result<f64> {
    InfoCalc::new(p).cond_entropy(a, given)
}

/// `I(A; B) = H(A) + H(B) − H(A,B)`.
pub fn mutual_information(p: &FinitePmf, a: &[&str], b: &[&str]) -> Result<f64> {
    InfoCalc::new(p).mi(a, b)
}

/// `I(A; B | C) = H(A,C) + H(B,C) − H(A,B,C) − H(C)`.
pub fn conditional_mutual_information(p: &FinitePmf, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    InfoCalc::new(p).cmi(a, b, c)
}
