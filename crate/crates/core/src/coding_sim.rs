//! Monte Carlo realization of the superposition-plus-binning scheme for the
//! multilevel broadcast channel: random codebooks, successive typicality
//! encoding against the state, and typicality decoding at every receiver.
//!
//! Codebook layout: the `u` book holds `M0·B0` sequences indexed by
//! `(m0, b0)`; every `u` carries `M11·B11` superposed `v` sequences and every
//! `v` carries `M12·B12` superposed `x` sequences. Bins are contiguous, so the
//! flat `u` index is `m0·B0 + b0` and so on down the layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{MbcChannel, S, U, V, X, Y1, Y2, Y3};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};
use crate::prob::{Alphabet, FinitePmf};
use crate::regions::AuxScheme;

pub const DEFAULT_CAP: u64 = 1 << 20;
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Largest variable count a typicality test accepts.
pub const MAX_TYPICAL_VARS: usize = 12;

const SIZE_SLACK: f64 = 1e-9;

pub const CSV_HEADER: &str = "n,R0,R1,e1,e2,e3,enc_fail,trials,seed";

/// `⌈e^{nR}⌉`, with a small slack so that `e^{n·ln k / n}` lands on `k`.
pub fn index_count(n: usize, rate: f64) -> f64 {
    ((n as f64 * rate).exp() - SIZE_SLACK).ceil().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub r0: f64,
    pub r11: f64,
    pub r12: f64,
    /// Bin rates `(R0', R11', R12')`.
    pub bins: [f64; 3],
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub cap: u64,
    pub exec: Exec,
}

impl SimConfig {
    pub fn new(n: usize, rates: [f64; 3], bins: [f64; 3], trials: usize, seed: u64) -> Self {
        Self {
            n,
            r0: rates[0],
            r11: rates[1],
            r12: rates[2],
            bins,
            epsilon: DEFAULT_EPSILON,
            trials,
            seed,
            cap: DEFAULT_CAP,
            exec: Exec::default(),
        }
    }

    pub fn r1(&self) -> f64 {
        self.r11 + self.r12
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("blocklength n must be at least 1"));
        }
        let rates = [self.r0, self.r11, self.r12, self.bins[0], self.bins[1], self.bins[2]];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::arg(format!("rates must be finite and nonnegative, got {rates:?}")));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::arg(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn sizes(&self) -> Result<BookSizes> {
        self.validate()?;
        let c = |r| index_count(self.n, r);
        let raw = [c(self.r0), c(self.bins[0]), c(self.r11), c(self.bins[1]), c(self.r12), c(self.bins[2])];
        let cap = self.cap as f64;
        let mut product = 1.0;
        for r in raw {
            product *= r;
            if product > cap {
                return Err(Error::CodebookCap {
                    required: raw.iter().product(),
                    cap: self.cap,
                });
            }
        }
        let [m0, b0, m11, b11, m12, b12] = raw.map(|r| r as usize);
        Ok(BookSizes { m0, b0, m11, b11, m12, b12 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSizes {
    pub m0: usize,
    pub b0: usize,
    pub m11: usize,
    pub b11: usize,
    pub m12: usize,
    pub b12: usize,
}

impl BookSizes {
    pub fn u_len(&self) -> usize {
        self.m0 * self.b0
    }

    pub fn v_len(&self) -> usize {
        self.u_len() * self.m11 * self.b11
    }

    pub fn x_len(&self) -> usize {
        self.v_len() * self.m12 * self.b12
    }

    fn u_index(&self, m0: usize, b0: usize) -> usize {
        m0 * self.b0 + b0
    }

    fn v_index(&self, u: usize, m11: usize, b11: usize) -> usize {
        (u * self.m11 + m11) * self.b11 + b11
    }

    fn x_index(&self, v: usize, m12: usize, b12: usize) -> usize {
        (v * self.m12 + m12) * self.b12 + b12
    }
}

/// Cumulative rows for inverse-CDF sampling.
#[derive(Clone, Debug)]
struct Cdf {
    cols: usize,
    cum: Vec<f64>,
}

impl Cdf {
    fn from_rows(rows: &[f64], cols: usize) -> Self {
        let mut cum = Vec::with_capacity(rows.len());
        for row in rows.chunks(cols) {
            let total: f64 = row.iter().sum();
            let mut acc = 0.0;
            for p in row {
                acc += if total > 0.0 { p / total } else { 1.0 / cols as f64 };
                cum.push(acc);
            }
        }
        Self { cols, cum }
    }

    fn sample<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> u16 {
        let r: f64 = rng.gen();
        let c = &self.cum[row * self.cols..(row + 1) * self.cols];
        c.iter().position(|&q| r < q).unwrap_or(self.cols - 1) as u16
    }
}

/// Row-normalized `p(b | a)` from the joint of `(a, b)`.
fn conditional(joint: &FinitePmf, a: &str, b: &str) -> Result<Cdf> {
    let m = joint.marginal(&[a, b])?;
    Ok(Cdf::from_rows(m.probs(), m.alphabets()[1].size))
}

struct SubsetTable {
    vars: Vec<(usize, usize)>,
    entropy: f64,
    neg_log: Vec<f64>,
}

/// Weak (entropy) typicality against a reference joint law, checked on every
/// nonempty subset of the supplied variables.
pub struct TypicalityTest {
    epsilon: f64,
    alphabets: Vec<Alphabet>,
    tables: Vec<SubsetTable>,
}

impl TypicalityTest {
    pub fn new(reference: &FinitePmf, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
        }
        let alphabets = reference.alphabets().to_vec();
        let k = alphabets.len();
        if k == 0 || k > MAX_TYPICAL_VARS {
            return Err(Error::arg(format!(
                "typicality needs 1 to {MAX_TYPICAL_VARS} variables, got {k}"
            )));
        }
        if let Some(a) = alphabets.iter().find(|a| a.size > u16::MAX as usize) {
            return Err(Error::arg(format!("alphabet `{}` is too large ({})", a.label, a.size)));
        }
        let mut tables = Vec::with_capacity((1 << k) - 1);
        for mask in 1usize..(1 << k) {
            let positions: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let probs = reference.marginal_probs(&positions);
            let mut stride = 1;
            let mut vars = Vec::with_capacity(positions.len());
            for &p in positions.iter().rev() {
                vars.push((p, stride));
                stride *= alphabets[p].size;
            }
            let entropy = probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum();
            let neg_log = probs.iter().map(|p| if *p > 0.0 { -p.ln() } else { f64::INFINITY }).collect();
            tables.push(SubsetTable { vars, entropy, neg_log });
        }
        Ok(Self {
            epsilon,
            alphabets,
            tables,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.alphabets
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Joint typicality of the labelled sequences.
    pub fn is_typical(&self, sequences: &[(&str, &[usize])]) -> Result<bool> {
        let n = sequences.first().map(|(_, s)| s.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::arg("typicality needs at least one nonempty sequence"));
        }
        let mut seqs: Vec<Option<&[usize]>> = vec![None; self.alphabets.len()];
        let mut mask = 0u32;
        for (label, s) in sequences {
            let p = self.position(label)?;
            if s.len() != n {
                return Err(Error::arg(format!("sequence `{label}` has length {}, expected {n}", s.len())));
            }
            if let Some(v) = s.iter().find(|v| **v >= self.alphabets[p].size) {
                return Err(Error::arg(format!("symbol {v} outside alphabet `{label}`")));
            }
            if mask >> p & 1 == 1 {
                return Err(Error::arg(format!("sequence `{label}` supplied twice")));
            }
            mask |= 1 << p;
            seqs[p] = Some(s);
        }
        Ok(self.check(&seqs, n, mask, mask))
    }

    /// All subsets of `have` that meet `new`.
    fn check<T: Copy + Into<usize>>(&self, seqs: &[Option<&[T]>], n: usize, have: u32, new: u32) -> bool {
        let mut sub = have;
        while sub != 0 {
            if sub & new != 0 && !self.subset_ok(sub as usize, seqs, n) {
                return false;
            }
            sub = (sub - 1) & have;
        }
        true
    }

    fn subset_ok<T: Copy + Into<usize>>(&self, mask: usize, seqs: &[Option<&[T]>], n: usize) -> bool {
        let t = &self.tables[mask - 1];
        let cols: Vec<(&[T], usize)> = t
            .vars
            .iter()
            .map(|&(v, stride)| (seqs[v].expect("sequence present for subset"), stride))
            .collect();
        let mut sum = 0.0;
        for i in 0..n {
            let idx: usize = cols.iter().map(|(s, st)| s[i].into() * st).sum();
            sum += t.neg_log[idx];
        }
        (sum / n as f64 - t.entropy).abs() <= self.epsilon
    }
}

/// Superposition codebooks; see the module docs for the index layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebooks {
    pub n: usize,
    pub sizes: BookSizes,
    u: Vec<u16>,
    v: Vec<u16>,
    x: Vec<u16>,
}

impl Codebooks {
    pub fn u(&self, m0: usize, b0: usize) -> &[u16] {
        self.u_at(self.sizes.u_index(m0, b0))
    }

    pub fn v(&self, m0: usize, b0: usize, m11: usize, b11: usize) -> &[u16] {
        let u = self.sizes.u_index(m0, b0);
        self.v_at(self.sizes.v_index(u, m11, b11))
    }

    pub fn x(&self, m0: usize, b0: usize, m11: usize, b11: usize, m12: usize, b12: usize) -> &[u16] {
        let u = self.sizes.u_index(m0, b0);
        let v = self.sizes.v_index(u, m11, b11);
        self.x_at(self.sizes.x_index(v, m12, b12))
    }

    fn u_at(&self, i: usize) -> &[u16] {
        &self.u[i * self.n..(i + 1) * self.n]
    }

    fn v_at(&self, i: usize) -> &[u16] {
        &self.v[i * self.n..(i + 1) * self.n]
    }

    fn x_at(&self, i: usize) -> &[u16] {
        &self.x[i * self.n..(i + 1) * self.n]
    }
}

pub fn build_codebooks(channel: &MbcChannel, scheme: &AuxScheme, cfg: &SimConfig) -> Result<Codebooks> {
    let joint = scheme.joint(channel)?;
    build_from_joint(&joint, cfg)
}

fn build_from_joint(joint: &FinitePmf, cfg: &SimConfig) -> Result<Codebooks> {
    let sizes = cfg.sizes()?;
    let n = cfg.n;
    let pu = joint.marginal(&[U])?;
    let pu = Cdf::from_rows(pu.probs(), pu.alphabets()[0].size);
    let pv = conditional(joint, U, V)?;
    let px = conditional(joint, V, X)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let mut u = Vec::with_capacity(sizes.u_len() * n);
    for _ in 0..sizes.u_len() * n {
        u.push(pu.sample(0, &mut rng));
    }
    let per_u = sizes.m11 * sizes.b11;
    let mut v = Vec::with_capacity(sizes.v_len() * n);
    for ui in 0..sizes.u_len() {
        let useq = &u[ui * n..(ui + 1) * n];
        for _ in 0..per_u {
            v.extend(useq.iter().map(|&a| pv.sample(a as usize, &mut rng)));
        }
    }
    let per_v = sizes.m12 * sizes.b12;
    let mut x = Vec::with_capacity(sizes.x_len() * n);
    for vi in 0..sizes.v_len() {
        let vseq = &v[vi * n..(vi + 1) * n];
        for _ in 0..per_v {
            x.extend(vseq.iter().map(|&a| px.sample(a as usize, &mut rng)));
        }
    }
    Ok(Codebooks { n, sizes, u, v, x })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub m0: usize,
    pub m11: usize,
    pub m12: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    U,
    V,
    X,
}

/// Chosen bin indices `(b0, b11, b12)`; on failure the failing layer and every
/// later one fall back to bin 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoded {
    pub bins: [usize; 3],
    pub failure: Option<Layer>,
}

struct Positions {
    s: usize,
    u: usize,
    v: usize,
    x: usize,
}

impl Positions {
    fn of(test: &TypicalityTest) -> Result<Self> {
        Ok(Self {
            s: test.position(S)?,
            u: test.position(U)?,
            v: test.position(V)?,
            x: test.position(X)?,
        })
    }
}

/// Successive first-match bin search: `u` with `s`, then `v` with `(u, s)`,
/// then `x` with `(u, v, s)`.
pub fn encode(books: &Codebooks, test: &TypicalityTest, state: &[u16], msg: Message) -> Result<Encoded> {
    let z = &books.sizes;
    if state.len() != books.n {
        return Err(Error::arg(format!("state has length {}, expected {}", state.len(), books.n)));
    }
    if msg.m0 >= z.m0 || msg.m11 >= z.m11 || msg.m12 >= z.m12 {
        return Err(Error::arg(format!("message {msg:?} outside the codebook")));
    }
    let pos = Positions::of(test)?;
    Ok(encode_at(books, test, &pos, state, msg))
}

fn encode_at(books: &Codebooks, test: &TypicalityTest, pos: &Positions, state: &[u16], msg: Message) -> Encoded {
    let z = &books.sizes;
    let n = books.n;
    let mut seqs: Vec<Option<&[u16]>> = vec![None; test.alphabets.len()];
    seqs[pos.s] = Some(state);
    let (bs, bu, bv, bx) = (1 << pos.s, 1 << pos.u, 1 << pos.v, 1 << pos.x);
    let mut failure = None;
    let mut ok = test.check(&seqs, n, bs, bs);

    let mut ub = None;
    if ok {
        ub = (0..z.b0).find(|&b| {
            seqs[pos.u] = Some(books.u_at(z.u_index(msg.m0, b)));
            test.check(&seqs, n, bs | bu, bu)
        });
    }
    if ub.is_none() {
        failure = Some(Layer::U);
        ok = false;
    }
    let ui = z.u_index(msg.m0, ub.unwrap_or(0));
    seqs[pos.u] = Some(books.u_at(ui));

    let mut vb = None;
    if ok {
        vb = (0..z.b11).find(|&b| {
            seqs[pos.v] = Some(books.v_at(z.v_index(ui, msg.m11, b)));
            test.check(&seqs, n, bs | bu | bv, bv)
        });
        if vb.is_none() {
            failure = Some(Layer::V);
            ok = false;
        }
    }
    let vi = z.v_index(ui, msg.m11, vb.unwrap_or(0));
    seqs[pos.v] = Some(books.v_at(vi));

    let mut xb = None;
    if ok {
        xb = (0..z.b12).find(|&b| {
            seqs[pos.x] = Some(books.x_at(z.x_index(vi, msg.m12, b)));
            test.check(&seqs, n, bs | bu | bv | bx, bx)
        });
        if xb.is_none() {
            failure = Some(Layer::X);
        }
    }
    Encoded {
        bins: [ub.unwrap_or(0), vb.unwrap_or(0), xb.unwrap_or(0)],
        failure,
    }
}

/// Per-receiver decoding outcome: `Some` when exactly one candidate survives.
struct Decoders<'a> {
    books: &'a Codebooks,
    test: &'a TypicalityTest,
    pos: Positions,
    y: [usize; 3],
}

impl Decoders<'_> {
    fn seqs<'s>(&self, y: usize, ys: &'s [u16]) -> Vec<Option<&'s [u16]>> {
        let mut seqs = vec![None; self.test.alphabets.len()];
        seqs[y] = Some(ys);
        seqs
    }

    /// Unique `m0` with `(u, y2)` typical.
    fn y2(&self, ys: &[u16]) -> Option<usize> {
        let (b, z, n) = (self.books, &self.books.sizes, self.books.n);
        let by = 1 << self.y[1];
        let bu = 1 << self.pos.u;
        let mut seqs = self.seqs(self.y[1], ys);
        if !self.test.check(&seqs, n, by, by) {
            return None;
        }
        let mut found = None;
        for m0 in 0..z.m0 {
            let hit = (0..z.b0).any(|b0| {
                seqs[self.pos.u] = Some(b.u_at(z.u_index(m0, b0)));
                self.test.check(&seqs, n, by | bu, bu)
            });
            if hit {
                if found.is_some() {
                    return None;
                }
                found = Some(m0);
            }
        }
        found
    }

    /// Unique `m0` with some `(u, v, y3)` typical.
    fn y3(&self, ys: &[u16]) -> Option<usize> {
        let (b, z, n) = (self.books, &self.books.sizes, self.books.n);
        let by = 1 << self.y[2];
        let (bu, bv) = (1 << self.pos.u, 1 << self.pos.v);
        let mut seqs = self.seqs(self.y[2], ys);
        if !self.test.check(&seqs, n, by, by) {
            return None;
        }
        let per_u = z.m11 * z.b11;
        let mut found = None;
        for m0 in 0..z.m0 {
            let mut hit = false;
            'bins: for b0 in 0..z.b0 {
                let ui = z.u_index(m0, b0);
                seqs[self.pos.u] = Some(b.u_at(ui));
                if !self.test.check(&seqs, n, by | bu, bu) {
                    continue;
                }
                for j in 0..per_u {
                    seqs[self.pos.v] = Some(b.v_at(ui * per_u + j));
                    if self.test.check(&seqs, n, by | bu | bv, bv) {
                        hit = true;
                        break 'bins;
                    }
                }
            }
            seqs[self.pos.v] = None;
            if hit {
                if found.is_some() {
                    return None;
                }
                found = Some(m0);
            }
        }
        found
    }

    /// Unique `(m0, m11, m12)` with some `(u, v, x, y1)` typical.
    fn y1(&self, ys: &[u16]) -> Option<Message> {
        let (z, n) = (&self.books.sizes, self.books.n);
        let by = 1 << self.y[0];
        let (bu, bv, bx) = (1 << self.pos.u, 1 << self.pos.v, 1 << self.pos.x);
        let mut seqs = self.seqs(self.y[0], ys);
        if !self.test.check(&seqs, n, by, by) {
            return None;
        }
        let mut found: Option<Message> = None;
        for m0 in 0..z.m0 {
            for m11 in 0..z.m11 {
                for m12 in 0..z.m12 {
                    let msg = Message { m0, m11, m12 };
                    if self.y1_hit(&mut seqs, msg, [by, bu, bv, bx]) {
                        if found.is_some() {
                            return None;
                        }
                        found = Some(msg);
                    }
                }
            }
        }
        found
    }

    fn y1_hit<'s>(&'s self, seqs: &mut Vec<Option<&'s [u16]>>, msg: Message, bits: [u32; 4]) -> bool {
        let (b, z, n) = (self.books, &self.books.sizes, self.books.n);
        let [by, bu, bv, bx] = bits;
        for b0 in 0..z.b0 {
            let ui = z.u_index(msg.m0, b0);
            seqs[self.pos.u] = Some(b.u_at(ui));
            seqs[self.pos.v] = None;
            seqs[self.pos.x] = None;
            if !self.test.check(seqs, n, by | bu, bu) {
                continue;
            }
            for b11 in 0..z.b11 {
                let vi = z.v_index(ui, msg.m11, b11);
                seqs[self.pos.v] = Some(b.v_at(vi));
                seqs[self.pos.x] = None;
                if !self.test.check(seqs, n, by | bu | bv, bv) {
                    continue;
                }
                for b12 in 0..z.b12 {
                    seqs[self.pos.x] = Some(b.x_at(z.x_index(vi, msg.m12, b12)));
                    if self.test.check(seqs, n, by | bu | bv | bx, bx) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Decoding errors at `(Y1, Y2, Y3)`.
    pub errors: [bool; 3],
    pub encoding_failure: Option<Layer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub r0: f64,
    pub r1: f64,
    /// Empirical error rates `(e1, e2, e3)`.
    pub errors: [f64; 3],
    pub encoding_failure: f64,
    /// Encoding failures by first failing layer `(U, V, X)`.
    pub failures_by_layer: [usize; 3],
    pub trials: usize,
    pub seed: u64,
}

impl SimReport {
    pub fn worst_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    /// One row under [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.r0,
            self.r1,
            self.errors[0],
            self.errors[1],
            self.errors[2],
            self.encoding_failure,
            self.trials,
            self.seed
        )
    }
}

/// A channel, scheme and codebook ready to run trials.
pub struct Simulator {
    books: Codebooks,
    test: TypicalityTest,
    cfg: SimConfig,
    ps: Cdf,
    main: Cdf,
    degrading: Cdf,
    n3: usize,
    ns: usize,
}

impl Simulator {
    pub fn new(channel: &MbcChannel, scheme: &AuxScheme, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let joint = scheme.joint(channel)?;
        let test = TypicalityTest::new(&joint, cfg.epsilon)?;
        let books = build_from_joint(&joint, cfg)?;
        let ns = channel.state.alphabets()[0].size;
        let outs = channel.main.to_alphabets();
        Ok(Self {
            books,
            test,
            cfg: cfg.clone(),
            ps: Cdf::from_rows(channel.state.probs(), ns),
            main: Cdf::from_rows(channel.main.probs(), channel.main.n_cols()),
            degrading: Cdf::from_rows(channel.degrading.probs(), channel.degrading.n_cols()),
            n3: outs[1].size,
            ns,
        })
    }

    pub fn codebooks(&self) -> &Codebooks {
        &self.books
    }

    pub fn test(&self) -> &TypicalityTest {
        &self.test
    }

    /// One trial; all randomness comes from `(seed, trial)`.
    pub fn trial(&self, trial: usize) -> Result<TrialOutcome> {
        let n = self.cfg.n;
        let z = &self.books.sizes;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(trial as u64 + 1);
        let state: Vec<u16> = (0..n).map(|_| self.ps.sample(0, &mut rng)).collect();
        let msg = Message {
            m0: rng.gen_range(0..z.m0),
            m11: rng.gen_range(0..z.m11),
            m12: rng.gen_range(0..z.m12),
        };
        let pos = Positions::of(&self.test)?;
        let enc = encode_at(&self.books, &self.test, &pos, &state, msg);
        let x = self.books.x(msg.m0, enc.bins[0], msg.m11, enc.bins[1], msg.m12, enc.bins[2]);
        let mut y1 = Vec::with_capacity(n);
        let mut y3 = Vec::with_capacity(n);
        for (xi, si) in x.iter().zip(&state) {
            let row = *xi as usize * self.ns + *si as usize;
            let c = self.main.sample(row, &mut rng) as usize;
            y1.push((c / self.n3) as u16);
            y3.push((c % self.n3) as u16);
        }
        let y2: Vec<u16> = y1.iter().map(|&a| self.degrading.sample(a as usize, &mut rng)).collect();
        let dec = Decoders {
            books: &self.books,
            test: &self.test,
            y: [self.test.position(Y1)?, self.test.position(Y2)?, self.test.position(Y3)?],
            pos,
        };
        Ok(TrialOutcome {
            errors: [
                dec.y1(&y1) != Some(msg),
                dec.y2(&y2) != Some(msg.m0),
                dec.y3(&y3) != Some(msg.m0),
            ],
            encoding_failure: enc.failure,
        })
    }

    pub fn run(&self) -> Result<SimReport> {
        let outcomes = map_indexed(self.cfg.trials, self.cfg.exec, |t| self.trial(t));
        let mut errors = [0usize; 3];
        let mut by_layer = [0usize; 3];
        for o in outcomes {
            let o = o?;
            for k in 0..3 {
                errors[k] += o.errors[k] as usize;
            }
            if let Some(l) = o.encoding_failure {
                by_layer[l as usize] += 1;
            }
        }
        let t = self.cfg.trials.max(1) as f64;
        Ok(SimReport {
            n: self.cfg.n,
            r0: self.cfg.r0,
            r1: self.cfg.r1(),
            errors: errors.map(|e| e as f64 / t),
            encoding_failure: by_layer.iter().sum::<usize>() as f64 / t,
            failures_by_layer: by_layer,
            trials: self.cfg.trials,
            seed: self.cfg.seed,
        })
    }
}

pub fn simulate(channel: &MbcChannel, scheme: &AuxScheme, cfg: &SimConfig) -> Result<SimReport> {
    Simulator::new(channel, scheme, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::gen::{bit, bsc};
    use crate::prob::CondKernel;

    fn pair(flip: f64) -> FinitePmf {
        let p = [0.5 * (1.0 - flip), 0.5 * flip, 0.5 * flip, 0.5 * (1.0 - flip)];
        FinitePmf::new(vec![bit("A"), bit("B")], p.to_vec()).unwrap()
    }

    #[test]
    fn index_counts() {
        assert_eq!(index_count(4, std::f64::consts::LN_2 / 4.0), 2.0);
        assert_eq!(index_count(16, 0.0), 1.0);
        assert_eq!(index_count(3, 3f64.ln() / 3.0), 3.0);
        assert_eq!(index_count(1, 0.1), 2.0);
    }

    #[test]
    fn typical_uniform_bits() {
        let t = TypicalityTest::new(&pair(0.5), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        let b: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        assert!(t.is_typical(&[("A", &a), ("B", &b)]).unwrap());
    }

    #[test]
    fn constant_sequence_fails_against_correlated_partner() {
        let t = TypicalityTest::new(&pair(0.1), 0.1).unwrap();
        let a = vec![0usize; 100];
        let b: Vec<usize> = (0..100).map(|i| i % 2).collect();
        assert!(!t.is_typical(&[("A", &a), ("B", &b)]).unwrap());
    }

    #[test]
    fn wrong_law_is_atypical() {
        let t = TypicalityTest::new(&pair(0.1), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut misses = 0;
        for _ in 0..50 {
            let a: Vec<usize> = (0..200).map(|_| rng.gen_range(0..2)).collect();
            let b: Vec<usize> = a.iter().map(|&x| x ^ (rng.gen::<f64>() < 0.4) as usize).collect();
            misses += t.is_typical(&[("A", &a), ("B", &b)]).unwrap() as usize;
        }
        assert_eq!(misses, 0);
    }

    #[test]
    fn typicality_errors() {
        let t = TypicalityTest::new(&pair(0.1), 0.1).unwrap();
        assert!(t.is_typical(&[("A", &[2usize][..])]).is_err());
        assert!(t.is_typical(&[("C", &[0usize][..])]).is_err());
        assert!(t.is_typical(&[("A", &[0usize][..]), ("B", &[0usize, 1][..])]).is_err());
        assert!(TypicalityTest::new(&pair(0.1), 0.0).is_err());
    }

    fn simple_channel(ns: usize) -> MbcChannel {
        let state = FinitePmf::uniform(vec![Alphabet::new(S, ns)]);
        let y1 = bsc(ns, Y1, 0.05);
        let y3 = bsc(ns, Y3, 0.1);
        let deg = CondKernel::from_rows(vec![bit(Y1)], vec![bit(Y2)], &[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        MbcChannel::from_marginals(state, &y1, &y3, deg).unwrap()
    }

    fn plain_scheme(ns: usize) -> AuxScheme {
        let rows = vec![vec![0.5, 0.5]; ns];
        let pu = CondKernel::from_rows(vec![Alphabet::new(S, ns)], vec![bit(U)], &rows).unwrap();
        let pv = CondKernel::from_rows(
            vec![bit(U), Alphabet::new(S, ns)],
            vec![bit(V)],
            &(0..2 * ns).map(|i| if i / ns == 0 { vec![0.9, 0.1] } else { vec![0.1, 0.9] }).collect::<Vec<_>>(),
        )
        .unwrap();
        let px = CondKernel::from_rows(
            vec![bit(V), Alphabet::new(S, ns)],
            vec![bit(X)],
            &(0..2 * ns).map(|i| if i / ns == 0 { vec![0.8, 0.2] } else { vec![0.2, 0.8] }).collect::<Vec<_>>(),
        )
        .unwrap();
        AuxScheme::new(pu, pv, px).unwrap()
    }

    #[test]
    fn codebook_sizes() {
        let ch = simple_channel(1);
        let sch = plain_scheme(1);
        let r = std::f64::consts::LN_2 / 4.0;
        let cfg = SimConfig::new(4, [r; 3], [0.0; 3], 1, 1);
        let books = build_codebooks(&ch, &sch, &cfg).unwrap();
        assert_eq!(books.sizes.x_len(), 8);
        assert_eq!(books.x.len(), 32);
        let zero = SimConfig::new(4, [0.0; 3], [0.0; 3], 1, 1);
        assert_eq!(build_codebooks(&ch, &sch, &zero).unwrap().sizes.u_len(), 1);
    }

    #[test]
    fn codebooks_deterministic() {
        let ch = simple_channel(2);
        let sch = plain_scheme(2);
        let cfg = SimConfig::new(8, [0.1, 0.1, 0.1], [0.1, 0.0, 0.1], 1, 5);
        assert_eq!(build_codebooks(&ch, &sch, &cfg).unwrap(), build_codebooks(&ch, &sch, &cfg).unwrap());
    }

    #[test]
    fn cap_reported() {
        let ch = simple_channel(1);
        let sch = plain_scheme(1);
        let mut cfg = SimConfig::new(40, [0.5, 0.0, 0.0], [0.0; 3], 1, 1);
        cfg.cap = 1000;
        match build_codebooks(&ch, &sch, &cfg) {
            Err(Error::CodebookCap { required, cap }) => {
                assert_eq!(cap, 1000);
                assert!(required > 4e8);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn constant_state_encodes_first_bins() {
        let ch = simple_channel(1);
        let sch = plain_scheme(1);
        let mut cfg = SimConfig::new(8, [0.1; 3], [0.1; 3], 1, 2);
        cfg.epsilon = 10.0;
        let sim = Simulator::new(&ch, &sch, &cfg).unwrap();
        let msg = Message { m0: 1, m11: 0, m12: 1 };
        let e = encode(sim.codebooks(), sim.test(), &[0; 8], msg).unwrap();
        assert_eq!(e, Encoded { bins: [0, 0, 0], failure: None });
    }

    #[test]
    fn zero_rates_no_errors() {
        let ch = simple_channel(2);
        let sch = plain_scheme(2);
        let mut cfg = SimConfig::new(8, [0.0; 3], [0.0; 3], 200, 3);
        cfg.epsilon = 10.0;
        let r = simulate(&ch, &sch, &cfg).unwrap();
        assert_eq!(r.errors, [0.0; 3]);
        assert_eq!(r.encoding_failure, 0.0);
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let ch = simple_channel(2);
        let sch = plain_scheme(2);
        let mut cfg = SimConfig::new(10, [0.1, 0.05, 0.05], [0.1, 0.0, 0.0], 100, 11);
        cfg.exec = Exec::Sequential;
        let a = simulate(&ch, &sch, &cfg).unwrap();
        cfg.exec = Exec::Parallel;
        let b = simulate(&ch, &sch, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.csv_row().split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn mismatched_scheme_rejected() {
        let ch = simple_channel(2);
        let sch = plain_scheme(1);
        let cfg = SimConfig::new(4, [0.0; 3], [0.0; 3], 1, 1);
        assert!(simulate(&ch, &sch, &cfg).is_err());
    }
}
