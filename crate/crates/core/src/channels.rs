//! Channel containers for the multilevel (MBC) and less-noisy three-receiver
//! broadcast models, plus checkers for their structural hypotheses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Alphabet, CondKernel, FinitePmf, PROB_TOL};
use crate::simplex::phase_one;

pub const X: &str = "X";
pub const S: &str = "S";
pub const Y1: &str = "Y1";
pub const Y2: &str = "Y2";
pub const Y3: &str = "Y3";
pub const U: &str = "U";
pub const V: &str = "V";

/// Residual above which a degradedness LP counts as infeasible.
pub const DEGRADED_TOL: f64 = 1e-7;
/// A conditional row is deterministic when one symbol carries this much mass.
pub const DETERMINISTIC_TOL: f64 = 1e-9;
/// Smallest `I(U;Z|s) − I(U;Y|s)` reported as a less-noisy counterexample.
pub const LESS_NOISY_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receiver {
    Y1,
    Y2,
    Y3,
}

impl Receiver {
    pub const ALL: [Receiver; 3] = [Receiver::Y1, Receiver::Y2, Receiver::Y3];

    pub fn label(self) -> &'static str {
        match self {
            Receiver::Y1 => Y1,
            Receiver::Y2 => Y2,
            Receiver::Y3 => Y3,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "Y1" => Ok(Receiver::Y1),
            "Y2" => Ok(Receiver::Y2),
            "Y3" => Ok(Receiver::Y3),
            other => Err(Error::arg(format!("unknown receiver `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Normalization,
    Negative,
    Shape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub kind: ViolationKind,
    pub magnitude: f64,
    pub detail: String,
}

/// Multilevel BC: `p(y1,y3|x,s)` with `Y2` produced from `Y1` by `p(y2|y1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MbcChannel {
    pub state: FinitePmf,
    pub main: CondKernel,
    pub degrading: CondKernel,
}

/// Three-receiver BC `p(y1,y2,y3|x,s)` with a declared ordering
/// `declared_order[0] ≽ declared_order[1] ≽ declared_order[2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LessNoisyChannel {
    pub state: FinitePmf,
    pub main: CondKernel,
    pub declared_order: [Receiver; 3],
}

/// Common view of both channel models.
pub trait BroadcastModel {
    fn state(&self) -> &FinitePmf;

    /// Kernels appended after `X` when composing the full joint law.
    fn output_factors(&self) -> Vec<CondKernel>;

    /// Marginal kernel `(X,S) → receiver`.
    fn receiver_kernel(&self, receiver: Receiver) -> Result<CondKernel>;

    fn validate(&self) -> Vec<Violation>;

    fn input_alphabet(&self) -> Alphabet;

    fn state_alphabet(&self) -> Alphabet {
        self.state().alphabets()[0].clone()
    }
}

fn pmf_violations(field: &str, p: &FinitePmf) -> Vec<Violation> {
    let mut out = Vec::new();
    let min = p.probs().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        out.push(Violation {
            field: field.into(),
            kind: ViolationKind::Negative,
            magnitude: -min,
            detail: format!("negative entry {min}"),
        });
    }
    let sum: f64 = p.probs().iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        out.push(Violation {
            field: field.into(),
            kind: ViolationKind::Normalization,
            magnitude: (sum - 1.0).abs(),
            detail: format!("sums to {sum}"),
        });
    }
    out
}

fn kernel_violations(field: &str, k: &CondKernel) -> Vec<Violation> {
    k.row_violations()
        .into_iter()
        .map(|v| {
            if v.min_entry < 0.0 {
                Violation {
                    field: format!("{field}[row {}]", v.row),
                    kind: ViolationKind::Negative,
                    magnitude: -v.min_entry,
                    detail: format!("negative entry {}", v.min_entry),
                }
            } else {
                Violation {
                    field: format!("{field}[row {}]", v.row),
                    kind: ViolationKind::Normalization,
                    magnitude: (v.sum - 1.0).abs(),
                    detail: format!("row sums to {}", v.sum),
                }
            }
        })
        .collect()
}

fn shape(field: &str, detail: String) -> Violation {
    Violation {
        field: field.into(),
        kind: ViolationKind::Shape,
        magnitude: 0.0,
        detail,
    }
}

fn label_list(a: &[Alphabet]) -> Vec<&str> {
    a.iter().map(|x| x.label.as_str()).collect()
}

fn check_state_and_main(state: &FinitePmf, main: &CondKernel, outputs: &[&str], out: &mut Vec<Violation>) {
    if label_list(state.alphabets()) != [S] {
        out.push(shape("state", format!("expected a law over [S], found {:?}", label_list(state.alphabets()))));
    }
    out.extend(pmf_violations("state", state));
    let from = main.from_alphabets();
    if label_list(from) != [X, S] {
        out.push(shape("main", format!("expected conditioning on [X, S], found {:?}", label_list(from))));
    } else if from[1].size != state.alphabets()[0].size {
        out.push(shape(
            "main",
            format!("|S| = {} in main but {} in state", from[1].size, state.alphabets()[0].size),
        ));
    }
    if label_list(main.to_alphabets()) != outputs {
        out.push(shape(
            "main",
            format!("expected outputs {outputs:?}, found {:?}", label_list(main.to_alphabets())),
        ));
    }
    out.extend(kernel_violations("main", main));
}

impl MbcChannel {
    /// Build and validate.
    pub fn new(state: FinitePmf, main: CondKernel, degrading: CondKernel) -> Result<Self> {
        let ch = Self { state, main, degrading };
        ch.ensure_valid()?;
        Ok(ch)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidDistribution(format!("{}: {}", v.field, v.detail))),
        }
    }

    /// Construct from separate per-receiver kernels `p(y1|x,s)`, `p(y3|x,s)`
    /// (conditionally independent given `(x,s)`) and `p(y2|y1)`.
    pub fn from_marginals(state: FinitePmf, y1: &CondKernel, y3: &CondKernel, degrading: CondKernel) -> Result<Self> {
        let main = product_kernel(&[y1, y3])?;
        Self::new(state, main, degrading)
    }
}

/// Pointwise product of kernels sharing the same conditioning variables.
pub fn product_kernel(parts: &[&CondKernel]) -> Result<CondKernel> {
    let from = parts[0].from_alphabets().to_vec();
    if parts.iter().any(|k| k.from_alphabets() != from.as_slice()) {
        return Err(Error::arg("product kernel parts must share their conditioning alphabets"));
    }
    let to: Vec<Alphabet> = parts.iter().flat_map(|k| k.to_alphabets().iter().cloned()).collect();
    let rows = parts[0].n_rows();
    let mut probs = Vec::new();
    for r in 0..rows {
        let mut acc = vec![1.0];
        for k in parts {
            acc = acc.iter().flat_map(|a| k.row(r).iter().map(move |b| a * b)).collect();
        }
        probs.extend(acc);
    }
    CondKernel::new(from, to, probs)
}

impl BroadcastModel for MbcChannel {
    fn state(&self) -> &FinitePmf {
        &self.state
    }

    fn output_factors(&self) -> Vec<CondKernel> {
        vec![self.main.clone(), self.degrading.clone()]
    }

    fn receiver_kernel(&self, receiver: Receiver) -> Result<CondKernel> {
        match receiver {
            Receiver::Y1 => self.main.marginal_to(&[Y1]),
            Receiver::Y3 => self.main.marginal_to(&[Y3]),
            Receiver::Y2 => self.main.marginal_to(&[Y1])?.then(&self.degrading),
        }
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_state_and_main(&self.state, &self.main, &[Y1, Y3], &mut out);
        let y1 = self.main.to_alphabets().iter().find(|a| a.label == Y1);
        let from = self.degrading.from_alphabets();
        match (y1, from) {
            (Some(y1), [d]) if d == y1 => {}
            (y1, _) => out.push(shape(
                "degrading",
                format!(
                    "degrading kernel consumes {:?} but main produces Y1 of size {:?}",
                    from.iter().map(|a| (&a.label, a.size)).collect::<Vec<_>>(),
                    y1.map(|a| a.size)
                ),
            )),
        }
        if label_list(self.degrading.to_alphabets()) != [Y2] {
            out.push(shape("degrading", "expected output [Y2]".into()));
        }
        out.extend(kernel_violations("degrading", &self.degrading));
        out
    }

    fn input_alphabet(&self) -> Alphabet {
        self.main.from_alphabets()[0].clone()
    }
}

impl LessNoisyChannel {
    pub fn new(state: FinitePmf, main: CondKernel) -> Result<Self> {
        let ch = Self {
            state,
            main,
            declared_order: [Receiver::Y1, Receiver::Y2, Receiver::Y3],
        };
        match ch.validate().first() {
            None => Ok(ch),
            Some(v) => Err(Error::InvalidDistribution(format!("{}: {}", v.field, v.detail))),
        }
    }
}

impl BroadcastModel for LessNoisyChannel {
    fn state(&self) -> &FinitePmf {
        &self.state
    }

    fn output_factors(&self) -> Vec<CondKernel> {
        vec![self.main.clone()]
    }

    fn receiver_kernel(&self, receiver: Receiver) -> Result<CondKernel> {
        self.main.marginal_to(&[receiver.label()])
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_state_and_main(&self.state, &self.main, &[Y1, Y2, Y3], &mut out);
        let mut order = self.declared_order.to_vec();
        order.sort_by_key(|r| r.index());
        order.dedup();
        if order.len() != 3 {
            out.push(shape("declared_order", "must list each receiver once".into()));
        }
        out
    }

    fn input_alphabet(&self) -> Alphabet {
        self.main.from_alphabets()[0].clone()
    }
}

/// Outcome of [`check_degraded`].
#[derive(Clone, Debug, PartialEq)]
pub enum Degradedness {
    /// One stochastic map `q(z|y)` per state value.
    Degraded { witness: Vec<CondKernel> },
    /// No map reproduces `p(z|x,s)` at this state; `x` is the input symbol
    /// with the largest residual under the best map found.
    NotDegraded { x: usize, s: usize, residual: f64 },
}

impl Degradedness {
    pub fn is_degraded(&self) -> bool {
        matches!(self, Degradedness::Degraded { .. })
    }
}

fn xs_sizes(k: &CondKernel) -> Result<(usize, usize)> {
    match k.from_alphabets() {
        [x, s] => Ok((x.size, s.size)),
        other => Err(Error::arg(format!(
            "expected a kernel conditioned on (X, S), found {:?}",
            label_list(other)
        ))),
    }
}

/// Is `Z` a degraded version of `Y` for every state, i.e. does a stochastic
/// map `q(z|y,s)` exist with `p(z|x,s) = Σ_y p(y|x,s) q(z|y,s)`?
pub fn check_degraded(y_kernel: &CondKernel, z_kernel: &CondKernel) -> Result<Degradedness> {
    let (nx, ns) = xs_sizes(y_kernel)?;
    if xs_sizes(z_kernel)? != (nx, ns) {
        return Err(Error::arg("Y and Z kernels condition on different (X, S) alphabets"));
    }
    let (ny, nz) = (y_kernel.n_cols(), z_kernel.n_cols());
    let y_alpha = Alphabet::new(y_kernel.to_alphabets().iter().map(|a| a.label.as_str()).collect::<Vec<_>>().join(","), ny);
    let mut z_label = z_kernel.to_alphabets().iter().map(|a| a.label.as_str()).collect::<Vec<_>>().join(",");
    if z_label == y_alpha.label {
        z_label.push('\'');
    }
    let z_alpha = Alphabet::new(z_label, nz);

    let mut witness = Vec::with_capacity(ns);
    for s in 0..ns {
        // Unknowns q[y][z], flattened y-major.
        let nvar = ny * nz;
        let mut a = Vec::with_capacity(ny + nx * nz);
        let mut b = Vec::with_capacity(ny + nx * nz);
        for yv in 0..ny {
            let mut row = vec![0.0; nvar];
            row[yv * nz..(yv + 1) * nz].iter_mut().for_each(|c| *c = 1.0);
            a.push(row);
            b.push(1.0);
        }
        for x in 0..nx {
            let py = y_kernel.row(x * ns + s);
            let pz = z_kernel.row(x * ns + s);
            for zv in 0..nz {
                let mut row = vec![0.0; nvar];
                for yv in 0..ny {
                    row[yv * nz + zv] = py[yv];
                }
                a.push(row);
                b.push(pz[zv]);
            }
        }
        let sol = phase_one(&a, &b);
        if sol.infeasibility > DEGRADED_TOL {
            let (x, residual) = (0..nx)
                .map(|x| {
                    let r: f64 = (0..nz)
                        .map(|zv| {
                            let row = &a[ny + x * nz + zv];
                            (row.iter().zip(&sol.x).map(|(c, q)| c * q).sum::<f64>() - b[ny + x * nz + zv]).abs()
                        })
                        .sum();
                    (x, r)
                })
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            return Ok(Degradedness::NotDegraded { x, s, residual });
        }
        let mut probs = sol.x;
        for yv in 0..ny {
            let row = &mut probs[yv * nz..(yv + 1) * nz];
            let t: f64 = row.iter().sum();
            row.iter_mut().for_each(|q| *q /= t);
        }
        witness.push(CondKernel::new(vec![y_alpha.clone()], vec![z_alpha.clone()], probs)?);
    }
    Ok(Degradedness::Degraded { witness })
}

/// Outcome of [`falsify_less_noisy`].
#[derive(Clone, Debug, PartialEq)]
pub enum LessNoisyVerdict {
    /// A law `p(u|s) p(x|u,s)` at state `state` with
    /// `I(U;Z|S=s) − I(U;Y|S=s) = gap > 0`.
    Counterexample {
        state: usize,
        p_u: Vec<f64>,
        p_x_given_u: Vec<Vec<f64>>,
        gap: f64,
        sample: usize,
    },
    /// No violation in `samples` laws. Not a proof. `skipped_states` lists
    /// zero-probability states, which were not examined.
    ConsistentAfter { samples: usize, skipped_states: Vec<usize> },
}

fn mi_through(p_u: &[f64], p_x_given_u: &[Vec<f64>], chan: &[&[f64]]) -> f64 {
    let ny = chan[0].len();
    let mut p_y_given_u = vec![vec![0.0; ny]; p_u.len()];
    for (u, row) in p_x_given_u.iter().enumerate() {
        for (x, &px) in row.iter().enumerate() {
            for y in 0..ny {
                p_y_given_u[u][y] += px * chan[x][y];
            }
        }
    }
    let mut p_y = vec![0.0; ny];
    for (u, &pu) in p_u.iter().enumerate() {
        for y in 0..ny {
            p_y[y] += pu * p_y_given_u[u][y];
        }
    }
    let mut total = 0.0;
    for (u, &pu) in p_u.iter().enumerate() {
        if pu == 0.0 {
            continue;
        }
        for y in 0..ny {
            let q = p_y_given_u[u][y];
            if q > 0.0 {
                total += pu * q * (q / p_y[y]).ln();
            }
        }
    }
    total.max(0.0)
}

/// Randomized search for a violation of "`Y` is less noisy than `Z`".
///
/// Sample 0 probes `U = X` with `U` uniform (when `aux_card ≥ |X|`); the
/// remaining samples draw every row of `p(u|s)` and `p(x|u,s)` from a flat
/// Dirichlet, with sample `k` using stream `k` of the seeded generator.
pub fn falsify_less_noisy_kernels(
    state: &FinitePmf,
    y_kernel: &CondKernel,
    z_kernel: &CondKernel,
    samples: usize,
    aux_card: usize,
    seed: u64,
) -> Result<LessNoisyVerdict> {
    if samples == 0 {
        return Err(Error::arg("samples must be at least 1"));
    }
    if aux_card < 2 {
        return Err(Error::arg("auxiliary cardinality must be at least 2"));
    }
    let (nx, ns) = xs_sizes(y_kernel)?;
    if xs_sizes(z_kernel)? != (nx, ns) || state.probs().len() != ns {
        return Err(Error::arg("Y, Z kernels and state law disagree on (X, S) alphabets"));
    }
    let skipped: Vec<usize> = (0..ns).filter(|&s| state.probs()[s] <= 0.0).collect();

    for sample in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample as u64);
        for s in (0..ns).filter(|s| !skipped.contains(s)) {
            let (p_u, p_x_given_u) = if sample == 0 && aux_card >= nx {
                let mut p_u = vec![0.0; aux_card];
                p_u[..nx].iter_mut().for_each(|p| *p = 1.0 / nx as f64);
                let rows = (0..aux_card)
                    .map(|u| (0..nx).map(|x| if u == x || (u >= nx && x == 0) { 1.0 } else { 0.0 }).collect())
                    .collect();
                (p_u, rows)
            } else {
                let p_u = crate::prob::dirichlet_row(aux_card, &mut rng);
                let rows: Vec<Vec<f64>> = (0..aux_card).map(|_| crate::prob::dirichlet_row(nx, &mut rng)).collect();
                (p_u, rows)
            };
            let ych: Vec<&[f64]> = (0..nx).map(|x| y_kernel.row(x * ns + s)).collect();
            let zch: Vec<&[f64]> = (0..nx).map(|x| z_kernel.row(x * ns + s)).collect();
            let gap = mi_through(&p_u, &p_x_given_u, &zch) - mi_through(&p_u, &p_x_given_u, &ych);
            if gap > LESS_NOISY_GAP {
                return Ok(LessNoisyVerdict::Counterexample {
                    state: s,
                    p_u,
                    p_x_given_u,
                    gap,
                    sample,
                });
            }
        }
    }
    Ok(LessNoisyVerdict::ConsistentAfter {
        samples,
        skipped_states: skipped,
    })
}

/// Falsification of the declared ordering `pair.0 ≽ pair.1` on a less-noisy
/// channel.
pub fn falsify_less_noisy(
    channel: &LessNoisyChannel,
    pair: (Receiver, Receiver),
    samples: usize,
    aux_card: usize,
    seed: u64,
) -> Result<LessNoisyVerdict> {
    let y = channel.receiver_kernel(pair.0)?;
    let z = channel.receiver_kernel(pair.1)?;
    falsify_less_noisy_kernels(&channel.state, &y, &z, samples, aux_card, seed)
}

/// `receiver = f(x, s)`; `table[x * |S| + s]` is the output symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetFunctionTable {
    pub variable: String,
    pub output_size: usize,
    pub table: Vec<usize>,
}

/// Deterministic-function table for `kernel`, if every row is (within
/// [`DETERMINISTIC_TOL`]) a point mass.
pub fn deterministic_table(variable: &str, kernel: &CondKernel) -> Option<DetFunctionTable> {
    let threshold = 1.0 - DETERMINISTIC_TOL - f64::EPSILON;
    let table = kernel
        .rows()
        .map(|row| row.iter().position(|&p| p >= threshold))
        .collect::<Option<Vec<_>>>()?;
    Some(DetFunctionTable {
        variable: variable.to_string(),
        output_size: kernel.n_cols(),
        table,
    })
}

pub fn detect_deterministic<C: BroadcastModel + ?Sized>(channel: &C, receiver: &str) -> Result<Option<DetFunctionTable>> {
    let r = Receiver::from_label(receiver)?;
    Ok(deterministic_table(receiver, &channel.receiver_kernel(r)?))
}

/// Random channel builders used by tests, the acceptance suite and benches.
pub mod gen {
    use super::*;

    pub fn bit(label: &str) -> Alphabet {
        Alphabet::new(label, 2)
    }

    pub fn xs(nx: usize, ns: usize) -> Vec<Alphabet> {
        vec![Alphabet::new(X, nx), Alphabet::new(S, ns)]
    }

    pub fn random_det<R: Rng + ?Sized>(from: Vec<Alphabet>, to: Alphabet, rng: &mut R) -> CondKernel {
        let rows: usize = from.iter().map(|a| a.size).product();
        let map: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..to.size)).collect();
        CondKernel::deterministic(from, vec![to], &map).expect("valid map")
    }

    /// Random `(X,S) → out` kernel that is deterministic when `det`.
    pub fn random_receiver<R: Rng + ?Sized>(nx: usize, ns: usize, out: Alphabet, det: bool, rng: &mut R) -> CondKernel {
        if det {
            random_det(xs(nx, ns), out, rng)
        } else {
            CondKernel::random(xs(nx, ns), vec![out], rng)
        }
    }

    /// Random binary-alphabet MBC with full-support state law.
    pub fn random_mbc<R: Rng + ?Sized>(rng: &mut R) -> MbcChannel {
        let state = FinitePmf::random(vec![bit(S)], rng);
        let main = CondKernel::random(xs(2, 2), vec![bit(Y1), bit(Y3)], rng);
        let degrading = CondKernel::random(vec![bit(Y1)], vec![bit(Y2)], rng);
        MbcChannel::new(state, main, degrading).expect("valid random channel")
    }

    /// Random MBC whose receivers `Y1`, `Y2`, `Y3` are deterministic when the
    /// corresponding flag is set. A deterministic `Y2` requires a
    /// deterministic `Y1` and a deterministic degrading map.
    pub fn random_mbc_det<R: Rng + ?Sized>(sizes: [usize; 5], det: [bool; 3], rng: &mut R) -> MbcChannel {
        let [nx, ns, n1, n2, n3] = sizes;
        let state = FinitePmf::random(vec![Alphabet::new(S, ns)], rng);
        let y1 = random_receiver(nx, ns, Alphabet::new(Y1, n1), det[0] || det[1], rng);
        let y3 = random_receiver(nx, ns, Alphabet::new(Y3, n3), det[2], rng);
        let degrading = if det[1] {
            random_det(vec![Alphabet::new(Y1, n1)], Alphabet::new(Y2, n2), rng)
        } else {
            CondKernel::random(vec![Alphabet::new(Y1, n1)], vec![Alphabet::new(Y2, n2)], rng)
        };
        MbcChannel::from_marginals(state, &y1, &y3, degrading).expect("valid random channel")
    }

    /// Random physically degraded chain `X,S → Y1 → Y2 → Y3` (the later maps
    /// may depend on `S`), hence less noisy in the declared order.
    /// `det[k]` makes receiver `k` a deterministic function of `(X,S)`.
    pub fn random_less_noisy<R: Rng + ?Sized>(sizes: [usize; 5], det: [bool; 3], rng: &mut R) -> LessNoisyChannel {
        let [nx, ns, n1, n2, n3] = sizes;
        let state = FinitePmf::random(vec![Alphabet::new(S, ns)], rng);
        let y1 = random_receiver(nx, ns, Alphabet::new(Y1, n1), det[0] || det[1] || det[2], rng);
        let step = |from: Alphabet, to: Alphabet, det: bool, rng: &mut R| {
            let f = vec![from, Alphabet::new(S, ns)];
            if det {
                random_det(f, to, rng)
            } else {
                CondKernel::random(f, vec![to], rng)
            }
        };
        let m12 = step(Alphabet::new(Y1, n1), Alphabet::new(Y2, n2), det[1] || det[2], rng);
        let m23 = step(Alphabet::new(Y2, n2), Alphabet::new(Y3, n3), det[2], rng);
        // Joint p(y1,y2,y3|x,s) = p(y1|x,s) q(y2|y1,s) r(y3|y2,s).
        let mut probs = Vec::with_capacity(nx * ns * n1 * n2 * n3);
        for x in 0..nx {
            for s in 0..ns {
                let r1 = y1.row(x * ns + s);
                for a in 0..n1 {
                    let r2 = m12.row(a * ns + s);
                    for b in 0..n2 {
                        let r3 = m23.row(b * ns + s);
                        for c in 0..n3 {
                            probs.push(r1[a] * r2[b] * r3[c]);
                        }
                    }
                }
            }
        }
        let main = CondKernel::new(
            xs(nx, ns),
            vec![Alphabet::new(Y1, n1), Alphabet::new(Y2, n2), Alphabet::new(Y3, n3)],
            probs,
        )
        .expect("valid random kernel");
        LessNoisyChannel::new(state, main).expect("valid random channel")
    }

    /// Binary symmetric kernel `(X,S) → out` flipping with `flip`, ignoring `S`.
    pub fn bsc(ns: usize, out: &str, flip: f64) -> CondKernel {
        let mut rows = Vec::new();
        for x in 0..2 {
            for _ in 0..ns {
                rows.push(if x == 0 { vec![1.0 - flip, flip] } else { vec![flip, 1.0 - flip] });
            }
        }
        CondKernel::from_rows(xs(2, ns), vec![bit(out)], &rows).expect("valid bsc")
    }
}
