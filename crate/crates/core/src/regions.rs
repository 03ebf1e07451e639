//! Rate-region formulas for the multilevel and less-noisy models: fixed-scheme
//! evaluation, capacity special cases, and the randomized scheme search that
//! approximates their unions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{
    deterministic_table, BroadcastModel, LessNoisyChannel, MbcChannel, Receiver, S, U, V, X, Y1, Y2, Y3,
};
use crate::error::{Error, Result};
use crate::geometry::{downward_contains, downward_hull_2d, downward_hull_3d, polygon_area, vertices_2d, Line};
use crate::par::{map_indexed, Exec};
use crate::prob::{compose_joint, Alphabet, CondKernel, FinitePmf, InfoCalc};

/// Auxiliary conditionals `p(u|s) p(v|u,s) p(x|v,s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxScheme {
    pub p_u_given_s: CondKernel,
    pub p_v_given_us: CondKernel,
    pub p_x_given_vs: CondKernel,
}

/// Which parts of a scheme the search may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeShape {
    pub nu: usize,
    pub nv: usize,
    /// `V = U` deterministically (requires `nu == nv`).
    pub tie_v_to_u: bool,
}

fn labels(a: &[Alphabet]) -> Vec<&str> {
    a.iter().map(|x| x.label.as_str()).collect()
}

impl AuxScheme {
    pub fn new(p_u_given_s: CondKernel, p_v_given_us: CondKernel, p_x_given_vs: CondKernel) -> Result<Self> {
        let sch = Self {
            p_u_given_s,
            p_v_given_us,
            p_x_given_vs,
        };
        let (pu, pv, px) = (&sch.p_u_given_s, &sch.p_v_given_us, &sch.p_x_given_vs);
        let ok = labels(pu.from_alphabets()) == [S]
            && labels(pu.to_alphabets()) == [U]
            && labels(pv.from_alphabets()) == [U, S]
            && labels(pv.to_alphabets()) == [V]
            && labels(px.from_alphabets()) == [V, S]
            && labels(px.to_alphabets()) == [X];
        if !ok {
            return Err(Error::arg("scheme kernels must be S→U, (U,S)→V and (V,S)→X"));
        }
        let (nu, nv, ns) = (pu.n_cols(), pv.n_cols(), pu.n_rows());
        if pv.from_alphabets()[0].size != nu
            || pv.from_alphabets()[1].size != ns
            || px.from_alphabets()[0].size != nv
            || px.from_alphabets()[1].size != ns
        {
            return Err(Error::arg("scheme kernels disagree on |U|, |V| or |S|"));
        }
        for (name, k) in [("pU_given_S", pu), ("pV_given_US", pv), ("pX_given_VS", px)] {
            if let Some(v) = k.row_violations().first() {
                return Err(Error::InvalidDistribution(format!("{name} row {} sums to {}", v.row, v.sum)));
            }
        }
        Ok(sch)
    }

    /// `(|U|, |V|, |X|, |S|)`.
    pub fn cards(&self) -> (usize, usize, usize, usize) {
        (
            self.p_u_given_s.n_cols(),
            self.p_v_given_us.n_cols(),
            self.p_x_given_vs.n_cols(),
            self.p_u_given_s.n_rows(),
        )
    }

    /// Flat-Dirichlet rows for every free conditional of `shape`.
    pub fn random<R: Rng + ?Sized>(shape: SchemeShape, nx: usize, ns: usize, rng: &mut R) -> Self {
        let s = Alphabet::new(S, ns);
        let (ua, va) = (Alphabet::new(U, shape.nu), Alphabet::new(V, shape.nv));
        let pu = CondKernel::random(vec![s.clone()], vec![ua.clone()], rng);
        let pv = if shape.tie_v_to_u {
            tie_kernel(shape.nu, ns)
        } else {
            CondKernel::random(vec![ua, s.clone()], vec![va.clone()], rng)
        };
        let px = CondKernel::random(vec![va, s], vec![Alphabet::new(X, nx)], rng);
        Self {
            p_u_given_s: pu,
            p_v_given_us: pv,
            p_x_given_vs: px,
        }
    }

    /// Like [`AuxScheme::random`], but each conditional row is
    /// `λ·r(·|a,s) + (1−λ)·c(·|a)`, so `λ` controls how strongly the
    /// auxiliaries and input depend on the state.
    pub fn random_blended<R: Rng + ?Sized>(shape: SchemeShape, nx: usize, ns: usize, lambda: f64, rng: &mut R) -> Self {
        let raw = Self::random(shape, nx, ns, rng);
        let blend = |k: &CondKernel, rng: &mut R| {
            let cols = k.n_cols();
            let mut probs = Vec::with_capacity(k.probs().len());
            for a in 0..k.n_rows() / ns {
                let common = crate::prob::dirichlet_row(cols, rng);
                for s in 0..ns {
                    probs.extend(k.row(a * ns + s).iter().zip(&common).map(|(r, c)| lambda * r + (1.0 - lambda) * c));
                }
            }
            CondKernel::new(k.from_alphabets().to_vec(), k.to_alphabets().to_vec(), probs).expect("blended rows")
        };
        let pu = blend(&raw.p_u_given_s, rng);
        let pv = if shape.tie_v_to_u { raw.p_v_given_us.clone() } else { blend(&raw.p_v_given_us, rng) };
        let px = blend(&raw.p_x_given_vs, rng);
        Self {
            p_u_given_s: pu,
            p_v_given_us: pv,
            p_x_given_vs: px,
        }
    }

    /// `U`, `V` constant; `X ~ p(x|s)`.
    pub fn constant_aux(p_x_given_s: &[Vec<f64>]) -> Result<Self> {
        let ns = p_x_given_s.len();
        let nx = p_x_given_s.first().map_or(0, Vec::len);
        let s = Alphabet::new(S, ns);
        Self::new(
            CondKernel::from_rows(vec![s.clone()], vec![Alphabet::new(U, 1)], &vec![vec![1.0]; ns])?,
            tie_kernel(1, ns),
            CondKernel::from_rows(vec![Alphabet::new(V, 1), s], vec![Alphabet::new(X, nx)], p_x_given_s)?,
        )
    }

    /// `U = V = X` with `X ~ p(x|s)`.
    pub fn all_equal_x(p_x_given_s: &[Vec<f64>]) -> Result<Self> {
        let ns = p_x_given_s.len();
        let nx = p_x_given_s.first().map_or(0, Vec::len);
        let s = Alphabet::new(S, ns);
        let map: Vec<usize> = (0..nx).flat_map(|v| std::iter::repeat(v).take(ns)).collect();
        Self::new(
            CondKernel::from_rows(vec![s.clone()], vec![Alphabet::new(U, nx)], p_x_given_s)?,
            tie_kernel(nx, ns),
            CondKernel::deterministic(vec![Alphabet::new(V, nx), s], vec![Alphabet::new(X, nx)], &map)?,
        )
    }

    /// `V = U` with the given `p(u|s)` and `p(x|u,s)` (rows indexed `u·|S|+s`).
    pub fn two_layer(p_u_given_s: CondKernel, p_x_given_us: &[Vec<f64>]) -> Result<Self> {
        let (nu, ns) = (p_u_given_s.n_cols(), p_u_given_s.n_rows());
        let nx = p_x_given_us.first().map_or(0, Vec::len);
        Self::new(
            p_u_given_s,
            tie_kernel(nu, ns),
            CondKernel::from_rows(
                vec![Alphabet::new(V, nu), Alphabet::new(S, ns)],
                vec![Alphabet::new(X, nx)],
                p_x_given_us,
            )?,
        )
    }

    fn free_kernels(&self, shape: SchemeShape) -> Vec<usize> {
        let mut k = Vec::with_capacity(3);
        if shape.nu > 1 {
            k.push(0);
        }
        if !shape.tie_v_to_u && shape.nv > 1 {
            k.push(1);
        }
        k.push(2);
        k
    }

    /// Move one coordinate of one free conditional row by `±step`, clamp at
    /// zero and renormalize.
    pub fn perturbed<R: Rng + ?Sized>(&self, shape: SchemeShape, step: f64, rng: &mut R) -> Self {
        let mut out = self.clone();
        let free = self.free_kernels(shape);
        let which = free[rng.gen_range(0..free.len())];
        let k = match which {
            0 => &mut out.p_u_given_s,
            1 => &mut out.p_v_given_us,
            _ => &mut out.p_x_given_vs,
        };
        let r = rng.gen_range(0..k.n_rows());
        let row = k.row_mut(r);
        let j = rng.gen_range(0..row.len());
        let delta = if rng.gen_bool(0.5) { step } else { -step };
        row[j] = (row[j] + delta).max(0.0);
        let t: f64 = row.iter().sum();
        if t > 0.0 {
            row.iter_mut().for_each(|p| *p /= t);
        } else {
            row.iter_mut().for_each(|p| *p = 0.0);
            row[j] = 1.0;
        }
        out
    }

    /// Joint law of `(S, U, V, X, outputs…)`.
    pub fn joint<C: BroadcastModel + ?Sized>(&self, channel: &C) -> Result<FinitePmf> {
        let (_, _, nx, ns) = self.cards();
        if nx != channel.input_alphabet().size || ns != channel.state_alphabet().size {
            return Err(Error::arg(format!(
                "scheme has |X| = {nx}, |S| = {ns}; channel has |X| = {}, |S| = {}",
                channel.input_alphabet().size,
                channel.state_alphabet().size
            )));
        }
        let mut factors = vec![
            self.p_u_given_s.clone(),
            self.p_v_given_us.clone(),
            self.p_x_given_vs.clone(),
        ];
        factors.extend(channel.output_factors());
        compose_joint(&factors, channel.state())
    }
}

fn tie_kernel(n: usize, ns: usize) -> CondKernel {
    let map: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat(u).take(ns)).collect();
    CondKernel::deterministic(
        vec![Alphabet::new(U, n), Alphabet::new(S, ns)],
        vec![Alphabet::new(V, n)],
        &map,
    )
    .expect("tie kernel")
}

/// Per-receiver flag: evaluate with `Yk` replaced by `(Yk, S)`.
pub type SiMask = [bool; 3];

pub const NO_SI: SiMask = [false; 3];
pub const FULL_SI: SiMask = [true; 3];

fn rx(r: Receiver, si: SiMask) -> Vec<&'static str> {
    if si[r.index()] {
        vec![r.label(), S]
    } else {
        vec![r.label()]
    }
}

/// `a·(R0,R1) ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace2 {
    pub a: [f64; 2],
    pub b: f64,
}

/// Polytope in `(R0, R1)` within the nonnegative quadrant.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRegion2 {
    pub halfspaces: Vec<HalfSpace2>,
    pub vertices: Vec<[f64; 2]>,
}

impl RateRegion2 {
    /// `R0 ≤ r0, R1 ≤ r1, R0 + R1 ≤ sum`, each bound clamped at zero.
    pub fn from_bounds(r0: f64, r1: f64, sum: f64) -> Self {
        let halfspaces = vec![
            HalfSpace2 { a: [1.0, 0.0], b: r0.max(0.0) },
            HalfSpace2 { a: [0.0, 1.0], b: r1.max(0.0) },
            HalfSpace2 { a: [1.0, 1.0], b: sum.max(0.0) },
        ];
        let lines: Vec<Line> = halfspaces.iter().map(|h| Line { a: h.a, b: h.b }).collect();
        let vertices = vertices_2d(&lines).points().to_vec();
        Self { halfspaces, vertices }
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= -tol && p[1] >= -tol && self.halfspaces.iter().all(|h| h.a[0] * p[0] + h.a[1] * p[1] <= h.b + tol)
    }
}

/// Box `0 ≤ Rk ≤ c[k]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegion3 {
    pub c: [f64; 3],
}

impl RateRegion3 {
    pub fn new(raw: [f64; 3]) -> Self {
        Self { c: raw.map(|v| v.max(0.0)) }
    }

    pub fn contains(&self, p: [f64; 3], tol: f64) -> bool {
        (0..3).all(|k| p[k] >= -tol && p[k] <= self.c[k] + tol)
    }
}

/// Information constants appearing in the multilevel coding constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MbcConstants {
    pub i_u_y2: f64,
    pub i_x_y1_given_v: f64,
    pub i_x_y1_given_u: f64,
    pub i_x_y1: f64,
    pub i_v_y3: f64,
    pub i_u_s: f64,
    pub i_v_s_given_u: f64,
    pub i_x_s_given_v: f64,
    pub i_uv_s: f64,
}

/// Unclamped bounds of the multilevel inner bound for one scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MbcInnerTerms {
    /// `I(U;Y2) − I(U;S)`.
    pub a1: f64,
    /// `I(V;Y3) − I(U,V;S)`.
    pub a2: f64,
    /// `I(X;Y1|U) − I(V;S|U) − I(X;S|V)`.
    pub b: f64,
    /// `I(V;Y3) + I(X;Y1|V) − I(X;S|V) − I(U,V;S)`.
    pub c: f64,
    /// `I(X;Y1) − I(U,V;S) − I(X;S|V)`, implied by the others.
    pub d: f64,
}

impl MbcInnerTerms {
    pub fn a(&self) -> f64 {
        self.a1.min(self.a2)
    }

    pub fn region(&self) -> RateRegion2 {
        RateRegion2::from_bounds(self.a(), self.b, self.c)
    }
}

pub fn mbc_constants(channel: &MbcChannel, scheme: &AuxScheme, si: SiMask) -> Result<MbcConstants> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    let (y1, y2, y3) = (rx(Receiver::Y1, si), rx(Receiver::Y2, si), rx(Receiver::Y3, si));
    Ok(MbcConstants {
        i_u_y2: ic.mi(&[U], &y2)?,
        i_x_y1_given_v: ic.cmi(&[X], &y1, &[V])?,
        i_x_y1_given_u: ic.cmi(&[X], &y1, &[U])?,
        i_x_y1: ic.mi(&[X], &y1)?,
        i_v_y3: ic.mi(&[V], &y3)?,
        i_u_s: ic.mi(&[U], &[S])?,
        i_v_s_given_u: ic.cmi(&[V], &[S], &[U])?,
        i_x_s_given_v: ic.cmi(&[X], &[S], &[V])?,
        i_uv_s: ic.mi(&[U, V], &[S])?,
    })
}

impl MbcConstants {
    pub fn terms(&self) -> MbcInnerTerms {
        MbcInnerTerms {
            a1: self.i_u_y2 - self.i_u_s,
            a2: self.i_v_y3 - self.i_uv_s,
            b: self.i_x_y1_given_u - self.i_v_s_given_u - self.i_x_s_given_v,
            c: self.i_v_y3 + self.i_x_y1_given_v - self.i_x_s_given_v - self.i_uv_s,
            d: self.i_x_y1 - self.i_uv_s - self.i_x_s_given_v,
        }
    }

    /// Same bounds with every state term dropped.
    pub fn terms_without_state(&self) -> MbcInnerTerms {
        MbcInnerTerms {
            a1: self.i_u_y2,
            a2: self.i_v_y3,
            b: self.i_x_y1_given_u,
            c: self.i_v_y3 + self.i_x_y1_given_v,
            d: self.i_x_y1,
        }
    }
}

pub fn mbc_inner_terms(channel: &MbcChannel, scheme: &AuxScheme, si: SiMask) -> Result<MbcInnerTerms> {
    Ok(mbc_constants(channel, scheme, si)?.terms())
}

/// Multilevel inner bound for one scheme.
pub fn mbc_inner_fixed(channel: &MbcChannel, scheme: &AuxScheme) -> Result<RateRegion2> {
    mbc_inner_fixed_si(channel, scheme, NO_SI)
}

pub fn mbc_inner_fixed_si(channel: &MbcChannel, scheme: &AuxScheme, si: SiMask) -> Result<RateRegion2> {
    Ok(mbc_inner_terms(channel, scheme, si)?.region())
}

/// Multilevel inner bound without state: `R0 ≤ min{I(U;Y2), I(V;Y3)}`,
/// `R1 ≤ I(X;Y1|U)`, `R0 + R1 ≤ I(V;Y3) + I(X;Y1|V)`.
pub fn mbc_inner_no_state(channel: &MbcChannel, scheme: &AuxScheme) -> Result<MbcInnerTerms> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    let i_v_y3 = ic.mi(&[V], &[Y3])?;
    Ok(MbcInnerTerms {
        a1: ic.mi(&[U], &[Y2])?,
        a2: i_v_y3,
        b: ic.cmi(&[X], &[Y1], &[U])?,
        c: i_v_y3 + ic.cmi(&[X], &[Y1], &[V])?,
        d: ic.mi(&[X], &[Y1])?,
    })
}

/// Two-receiver degraded BC with state at the encoder, superposition plus
/// binning: `(I(U;Y2) − I(U;S), I(X;Y1|U) − I(X;S|U))`, unclamped.
pub fn degraded_bc_bounds(
    state: &FinitePmf,
    y1_kernel: &CondKernel,
    degrading: &CondKernel,
    p_u_given_s: &CondKernel,
    p_x_given_us: &CondKernel,
) -> Result<[f64; 2]> {
    let joint = compose_joint(
        &[p_u_given_s.clone(), p_x_given_us.clone(), y1_kernel.clone(), degrading.clone()],
        state,
    )?;
    let mut ic = InfoCalc::new(&joint);
    Ok([
        ic.mi(&[U], &[Y2])? - ic.mi(&[U], &[S])?,
        ic.cmi(&[X], &[Y1], &[U])? - ic.cmi(&[X], &[S], &[U])?,
    ])
}

/// Rectangle of [`degraded_bc_bounds`], clamped at zero.
pub fn degraded_bc_fixed(
    state: &FinitePmf,
    y1_kernel: &CondKernel,
    degrading: &CondKernel,
    p_u_given_s: &CondKernel,
    p_x_given_us: &CondKernel,
) -> Result<RateRegion2> {
    let [r0, r1] = degraded_bc_bounds(state, y1_kernel, degrading, p_u_given_s, p_x_given_us)?;
    Ok(RateRegion2::from_bounds(r0, r1, r0.max(0.0) + r1.max(0.0)))
}

/// Unclamped less-noisy inner-bound box corners.
pub fn ln_inner_raw(channel: &LessNoisyChannel, scheme: &AuxScheme, si: SiMask) -> Result<[f64; 3]> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    Ok([
        ic.cmi(&[X], &rx(Receiver::Y1, si), &[V])? - ic.cmi(&[X], &[S], &[V])?,
        ic.cmi(&[V], &rx(Receiver::Y2, si), &[U])? - ic.cmi(&[V], &[S], &[U])?,
        ic.mi(&[U], &rx(Receiver::Y3, si))? - ic.mi(&[U], &[S])?,
    ])
}

pub fn ln_inner_fixed(channel: &LessNoisyChannel, scheme: &AuxScheme) -> Result<RateRegion3> {
    ln_inner_fixed_si(channel, scheme, NO_SI)
}

pub fn ln_inner_fixed_si(channel: &LessNoisyChannel, scheme: &AuxScheme, si: SiMask) -> Result<RateRegion3> {
    Ok(RateRegion3::new(ln_inner_raw(channel, scheme, si)?))
}

/// Less-noisy inner bound without state: `(I(X;Y1|V), I(V;Y2|U), I(U;Y3))`.
pub fn ln_inner_no_state(channel: &LessNoisyChannel, scheme: &AuxScheme) -> Result<[f64; 3]> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    Ok([
        ic.cmi(&[X], &[Y1], &[V])?,
        ic.cmi(&[V], &[Y2], &[U])?,
        ic.mi(&[U], &[Y3])?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MbcVariant {
    /// `Y3` deterministic.
    OneDet,
    /// `Y1`, `Y3` deterministic.
    TwoDet,
    /// All receivers deterministic.
    FullDet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LnVariant {
    General,
    OneDet,
    TwoDet,
    FullDet,
    FullDetPartialSI,
    TwoDetPartialSI,
}

impl MbcVariant {
    pub const ALL: [MbcVariant; 3] = [MbcVariant::OneDet, MbcVariant::TwoDet, MbcVariant::FullDet];

    pub fn deterministic_receivers(self) -> &'static [Receiver] {
        match self {
            MbcVariant::OneDet => &[Receiver::Y3],
            MbcVariant::TwoDet => &[Receiver::Y1, Receiver::Y3],
            MbcVariant::FullDet => &[Receiver::Y1, Receiver::Y2, Receiver::Y3],
        }
    }

    pub fn shape(self, nu: usize) -> SchemeShape {
        match self {
            MbcVariant::FullDet => SchemeShape { nu: 1, nv: 1, tie_v_to_u: true },
            _ => SchemeShape { nu, nv: nu, tie_v_to_u: true },
        }
    }

    /// Receivers that see the state in the matching inner-bound reduction.
    pub fn inner_si(self) -> SiMask {
        FULL_SI
    }
}

impl LnVariant {
    pub const ALL: [LnVariant; 6] = [
        LnVariant::General,
        LnVariant::OneDet,
        LnVariant::TwoDet,
        LnVariant::FullDet,
        LnVariant::FullDetPartialSI,
        LnVariant::TwoDetPartialSI,
    ];

    pub fn deterministic_receivers(self) -> &'static [Receiver] {
        match self {
            LnVariant::General => &[],
            LnVariant::OneDet => &[Receiver::Y1],
            LnVariant::TwoDet | LnVariant::TwoDetPartialSI => &[Receiver::Y1, Receiver::Y2],
            LnVariant::FullDet | LnVariant::FullDetPartialSI => &[Receiver::Y1, Receiver::Y2, Receiver::Y3],
        }
    }

    pub fn shape(self, nu: usize, nv: usize) -> SchemeShape {
        match self {
            LnVariant::General | LnVariant::OneDet => SchemeShape { nu, nv, tie_v_to_u: false },
            LnVariant::TwoDet | LnVariant::TwoDetPartialSI => SchemeShape { nu, nv: nu, tie_v_to_u: true },
            LnVariant::FullDet | LnVariant::FullDetPartialSI => SchemeShape { nu: 1, nv: 1, tie_v_to_u: true },
        }
    }

    pub fn inner_si(self) -> SiMask {
        match self {
            LnVariant::FullDetPartialSI | LnVariant::TwoDetPartialSI => [true, true, false],
            _ => FULL_SI,
        }
    }
}

fn require_deterministic<C: BroadcastModel>(channel: &C, receivers: &[Receiver]) -> Result<()> {
    for &r in receivers {
        if deterministic_table(r.label(), &channel.receiver_kernel(r)?).is_none() {
            return Err(Error::Precondition(format!(
                "receiver {} is not a deterministic function of (X, S)",
                r.label()
            )));
        }
    }
    Ok(())
}

/// Capacity-formula bounds `(R0, R1, R0+R1)` at one scheme.
pub fn mbc_capacity_bounds(channel: &MbcChannel, scheme: &AuxScheme, variant: MbcVariant) -> Result<[f64; 3]> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    let h_y3 = ic.cond_entropy(&[Y3], &[S])?;
    let h_y13 = ic.cond_entropy(&[Y1, Y3], &[S])?;
    Ok(match variant {
        MbcVariant::OneDet => [
            ic.cmi(&[U], &[Y2], &[S])?.min(h_y3),
            ic.cmi(&[X], &[Y1], &[U, S])?,
            h_y3 + ic.cmi(&[X], &[Y1], &[Y3, S])?,
        ],
        MbcVariant::TwoDet => [
            ic.cmi(&[U], &[Y2], &[S])?.min(h_y3),
            ic.cond_entropy(&[Y1], &[U, S])?,
            h_y13,
        ],
        MbcVariant::FullDet => [
            ic.cond_entropy(&[Y2], &[S])?.min(h_y3),
            ic.cond_entropy(&[Y1], &[Y2, S])?,
            h_y13,
        ],
    })
}

pub fn mbc_capacity_fixed(channel: &MbcChannel, scheme: &AuxScheme, variant: MbcVariant) -> Result<RateRegion2> {
    let [r0, r1, sum] = mbc_capacity_bounds(channel, scheme, variant)?;
    Ok(RateRegion2::from_bounds(r0, r1, sum))
}

/// Capacity-formula box corner at one scheme.
pub fn ln_capacity_raw(channel: &LessNoisyChannel, scheme: &AuxScheme, variant: LnVariant) -> Result<[f64; 3]> {
    let joint = scheme.joint(channel)?;
    let mut ic = InfoCalc::new(&joint);
    let r3_general = ic.cmi(&[U], &[Y3], &[S])?;
    Ok(match variant {
        LnVariant::General => [
            ic.cmi(&[X], &[Y1], &[V, S])?,
            ic.cmi(&[V], &[Y2], &[U, S])?,
            r3_general,
        ],
        LnVariant::OneDet => [
            ic.cond_entropy(&[Y1], &[V, S])?,
            ic.cmi(&[V], &[Y2], &[U, S])?,
            r3_general,
        ],
        LnVariant::TwoDet => [
            ic.cond_entropy(&[Y1], &[Y2, S])?,
            ic.cond_entropy(&[Y2], &[U, S])?,
            r3_general,
        ],
        LnVariant::FullDet | LnVariant::FullDetPartialSI => [
            ic.cond_entropy(&[Y1], &[Y2, S])?,
            ic.cond_entropy(&[Y2], &[Y3, S])?,
            ic.cond_entropy(&[Y3], &[S])?,
        ],
        LnVariant::TwoDetPartialSI => [
            ic.cond_entropy(&[Y1], &[Y2, S])?,
            ic.cond_entropy(&[Y2], &[U, S])?,
            ic.mi(&[U], &[Y3])? - ic.mi(&[U], &[S])?,
        ],
    })
}

pub fn ln_capacity_fixed(channel: &LessNoisyChannel, scheme: &AuxScheme, variant: LnVariant) -> Result<RateRegion3> {
    Ok(RateRegion3::new(ln_capacity_raw(channel, scheme, variant)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// `(|U|, |V|)`; `None` means `|X|·|S|` for both.
    pub aux_cards: Option<(usize, usize)>,
    pub restarts: usize,
    pub hillclimb_steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            aux_cards: None,
            restarts: 50,
            hillclimb_steps: 200,
            step_size: 0.05,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some((u, v)) = self.aux_cards {
            if u == 0 || v == 0 {
                return Err(Error::arg("auxiliary cardinalities must be at least 1"));
            }
        }
        if self.restarts == 0 {
            return Err(Error::arg("restarts must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::arg("step size must be positive"));
        }
        Ok(())
    }

    pub fn cards_for(&self, nx: usize, ns: usize) -> (usize, usize) {
        self.aux_cards.unwrap_or((nx * ns, nx * ns))
    }
}

/// Points whose downward-closed convex hull is the searched region.
pub trait HullPoint: Copy + Send + Sync + AsRef<[f64]> + 'static {
    /// Keep only points that can still matter for the hull.
    fn reduce(points: &[Self]) -> Vec<Self>;
    /// Progress measure; the hull grows iff one of its components grows.
    fn measure(points: &[Self]) -> [f64; 2];
    fn hull(points: &[Self]) -> Vec<Self>;
    /// Climbing direction of restart `r`; may draw from `rng`.
    fn direction<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Self;

    fn support(points: &[Self], w: &Self) -> f64 {
        points
            .iter()
            .map(|p| p.as_ref().iter().zip(w.as_ref()).map(|(a, b)| a * b).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl HullPoint for [f64; 2] {
    fn reduce(points: &[Self]) -> Vec<Self> {
        downward_hull_2d(points)
    }

    fn measure(points: &[Self]) -> [f64; 2] {
        let support: f64 = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|w| points.iter().map(|p| w[0] * p[0] + w[1] * p[1]).fold(0.0, f64::max))
            .sum();
        [polygon_area(points), support]
    }

    fn hull(points: &[Self]) -> Vec<Self> {
        downward_hull_2d(points)
    }

    fn direction<R: Rng + ?Sized>(r: usize, _rng: &mut R) -> Self {
        let frac = match r {
            0 => 0.0,
            1 => 1.0,
            2 => 0.5,
            _ => (r as f64 * 0.618_033_988_749_894_9).fract(),
        };
        let theta = frac * std::f64::consts::FRAC_PI_2;
        [theta.cos(), theta.sin()]
    }
}

const DIRECTIONS_3D: [[f64; 3]; 13] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 1.0, 1.0],
    [2.0, 1.0, 1.0],
    [1.0, 2.0, 1.0],
    [1.0, 1.0, 2.0],
    [2.0, 2.0, 1.0],
    [2.0, 1.0, 2.0],
    [1.0, 2.0, 2.0],
];

impl HullPoint for [f64; 3] {
    fn reduce(points: &[Self]) -> Vec<Self> {
        let mut keep: Vec<Self> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let dominated = points.iter().enumerate().any(|(j, q)| {
                j != i && (0..3).all(|k| q[k] >= p[k]) && ((0..3).any(|k| q[k] > p[k]) || j < i)
            });
            if !dominated {
                keep.push(*p);
            }
        }
        keep
    }

    fn measure(points: &[Self]) -> [f64; 2] {
        let support = DIRECTIONS_3D
            .iter()
            .map(|w| points.iter().map(|p| w[0] * p[0] + w[1] * p[1] + w[2] * p[2]).fold(0.0, f64::max))
            .sum();
        [support, 0.0]
    }

    fn hull(points: &[Self]) -> Vec<Self> {
        downward_hull_3d(points)
    }

    fn direction<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Self {
        if r < DIRECTIONS_3D.len() {
            DIRECTIONS_3D[r]
        } else {
            let d = crate::prob::dirichlet_row(3, rng);
            [d[0], d[1], d[2]]
        }
    }
}

const GROWTH_TOL: f64 = 1e-13;

/// Convex hull of a union of fixed-scheme regions.
#[derive(Clone, Debug)]
pub struct RegionHull<P> {
    /// Hull vertices: counterclockwise from the origin in 2-D, lexicographic
    /// in 3-D.
    pub vertices: Vec<P>,
    /// Index into `schemes` of the scheme behind each vertex.
    pub vertex_schemes: Vec<usize>,
    /// Every scheme accepted during the search, then any seeds.
    pub schemes: Vec<AuxScheme>,
    /// Raw union: generating points tagged with their scheme index.
    pub points: Vec<(P, usize)>,
}

impl<P: HullPoint> RegionHull<P> {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        downward_contains(&self.vertices, p, tol)
    }

    pub fn best_scheme(&self, vertex: usize) -> &AuxScheme {
        &self.schemes[self.vertex_schemes[vertex]]
    }

    fn assemble(points: Vec<(P, usize)>, schemes: Vec<AuxScheme>) -> Self {
        let raw: Vec<P> = points.iter().map(|(p, _)| *p).collect();
        let vertices = P::hull(&raw);
        let vertex_schemes = vertices
            .iter()
            .map(|v| {
                // Nearest generating point that dominates the vertex.
                points
                    .iter()
                    .filter(|(p, _)| p.as_ref().iter().zip(v.as_ref()).all(|(a, b)| *a >= b - 1e-9))
                    .map(|(p, i)| {
                        let d: f64 = p.as_ref().iter().zip(v.as_ref()).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d, *i)
                    })
                    .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
                    .1
            })
            .collect();
        Self {
            vertices,
            vertex_schemes,
            schemes,
            points,
        }
    }
}

impl RegionHull<[f64; 2]> {
    /// Outward half-spaces `a·R ≤ b` of the hull edges, axis edges excluded.
    pub fn halfspaces(&self) -> Vec<HalfSpace2> {
        let v = &self.vertices;
        let n = v.len();
        let mut out = Vec::new();
        if n < 3 {
            return out;
        }
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let a = [q[1] - p[1], p[0] - q[0]];
            if a[0] <= 1e-15 && a[1] <= 1e-15 {
                continue;
            }
            let scale = a[0].max(a[1]);
            let a = [a[0] / scale, a[1] / scale];
            out.push(HalfSpace2 { a, b: a[0] * p[0] + a[1] * p[1] });
        }
        out
    }
}

/// Randomized restarts plus hill climbing over schemes of `shape`.
///
/// Each restart climbs the support of its scheme's region along its own
/// direction, also accepting level moves that enlarge the hull found so far.
/// `eval` maps a scheme to the points whose downward hull is its region.
/// Restart `r` draws from stream `r` of the seeded generator, so the output
/// does not depend on the execution schedule and a run with more restarts
/// explores a superset of schemes.
pub fn search_hull<P, F>(
    shape: SchemeShape,
    nx: usize,
    ns: usize,
    cfg: &SearchConfig,
    seeds: &[AuxScheme],
    eval: F,
) -> Result<RegionHull<P>>
where
    P: HullPoint,
    F: Fn(&AuxScheme) -> Result<Vec<P>> + Sync + Send,
{
    cfg.validate()?;
    if shape.tie_v_to_u && shape.nu != shape.nv {
        return Err(Error::arg("V = U requires |U| = |V|"));
    }
    let runs = map_indexed(cfg.restarts, cfg.exec, |r| -> Result<Vec<(AuxScheme, Vec<P>)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let w = P::direction(r, &mut rng);
        let mut current = AuxScheme::random(shape, nx, ns, &mut rng);
        let pts = eval(&current)?;
        let mut height = P::support(&pts, &w);
        let mut acc = P::reduce(&pts);
        let mut score = P::measure(&acc);
        let mut accepted = vec![(current.clone(), pts)];
        for _ in 0..cfg.hillclimb_steps {
            let cand = current.perturbed(shape, cfg.step_size, &mut rng);
            let pts = eval(&cand)?;
            let mut merged = acc.clone();
            merged.extend_from_slice(&pts);
            let merged = P::reduce(&merged);
            let m = P::measure(&merged);
            let h = P::support(&pts, &w);
            let climbs = h > height + GROWTH_TOL;
            let grows = m[0] > score[0] + GROWTH_TOL || m[1] > score[1] + GROWTH_TOL;
            if climbs || (h >= height - GROWTH_TOL && grows) {
                acc = merged;
                score = m;
                height = height.max(h);
                current = cand.clone();
                accepted.push((cand, pts));
            }
        }
        Ok(accepted)
    });

    let mut schemes = Vec::new();
    let mut points = Vec::new();
    for run in runs {
        for (sch, pts) in run? {
            let id = schemes.len();
            schemes.push(sch);
            points.extend(pts.into_iter().map(|p| (p, id)));
        }
    }
    for sch in seeds {
        let id = schemes.len();
        points.extend(eval(sch)?.into_iter().map(|p| (p, id)));
        schemes.push(sch.clone());
    }
    Ok(RegionHull::assemble(points, schemes))
}

fn mbc_sizes(channel: &MbcChannel) -> (usize, usize) {
    (channel.input_alphabet().size, channel.state_alphabet().size)
}

/// Time-shared union of the multilevel inner bound over searched schemes.
pub fn mbc_inner_region(channel: &MbcChannel, cfg: &SearchConfig) -> Result<RegionHull<[f64; 2]>> {
    mbc_inner_region_si(channel, cfg, NO_SI)
}

pub fn mbc_inner_region_si(channel: &MbcChannel, cfg: &SearchConfig, si: SiMask) -> Result<RegionHull<[f64; 2]>> {
    let (nx, ns) = mbc_sizes(channel);
    let (nu, nv) = cfg.cards_for(nx, ns);
    let shape = SchemeShape { nu, nv, tie_v_to_u: false };
    search_hull(shape, nx, ns, cfg, &[], |sch| Ok(mbc_inner_fixed_si(channel, sch, si)?.vertices))
}

/// Capacity region of a deterministic multilevel variant.
pub fn mbc_capacity(channel: &MbcChannel, variant: MbcVariant, cfg: &SearchConfig) -> Result<RegionHull<[f64; 2]>> {
    mbc_capacity_seeded(channel, variant, cfg, &[])
}

/// As [`mbc_capacity`], additionally evaluating the formulas at `seeds`.
pub fn mbc_capacity_seeded(
    channel: &MbcChannel,
    variant: MbcVariant,
    cfg: &SearchConfig,
    seeds: &[AuxScheme],
) -> Result<RegionHull<[f64; 2]>> {
    require_deterministic(channel, variant.deterministic_receivers())?;
    let (nx, ns) = mbc_sizes(channel);
    let shape = variant.shape(cfg.cards_for(nx, ns).0);
    search_hull(shape, nx, ns, cfg, seeds, |sch| {
        Ok(mbc_capacity_fixed(channel, sch, variant)?.vertices)
    })
}

fn ln_sizes(channel: &LessNoisyChannel) -> (usize, usize) {
    (channel.input_alphabet().size, channel.state_alphabet().size)
}

pub fn ln_inner_region(channel: &LessNoisyChannel, cfg: &SearchConfig, si: SiMask) -> Result<RegionHull<[f64; 3]>> {
    let (nx, ns) = ln_sizes(channel);
    let (nu, nv) = cfg.cards_for(nx, ns);
    let shape = SchemeShape { nu, nv, tie_v_to_u: false };
    search_hull(shape, nx, ns, cfg, &[], |sch| Ok(vec![ln_inner_fixed_si(channel, sch, si)?.c]))
}

pub fn ln_capacity(channel: &LessNoisyChannel, variant: LnVariant, cfg: &SearchConfig) -> Result<RegionHull<[f64; 3]>> {
    ln_capacity_seeded(channel, variant, cfg, &[])
}

pub fn ln_capacity_seeded(
    channel: &LessNoisyChannel,
    variant: LnVariant,
    cfg: &SearchConfig,
    seeds: &[AuxScheme],
) -> Result<RegionHull<[f64; 3]>> {
    require_deterministic(channel, variant.deterministic_receivers())?;
    let (nx, ns) = ln_sizes(channel);
    let (nu, nv) = cfg.cards_for(nx, ns);
    search_hull(variant.shape(nu, nv), nx, ns, cfg, seeds, |sch| {
        Ok(vec![ln_capacity_fixed(channel, sch, variant)?.c])
    })
}
