use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bcsi::aen_bounds::{self, AenParams, EntropyMode, OuterMode, Regime};
use bcsi::channels::{self, BroadcastModel, Degradedness, LessNoisyVerdict, Receiver};
use bcsi::coding_sim::{self, SimConfig};
use bcsi::fmelim;
use bcsi::gaussian_wdp::{self, WdpParams};
use bcsi::io::{self as bio, Channel};
use bcsi::regions::{self, AuxScheme, HullPoint, LnVariant, MbcVariant, RegionHull, SchemeShape, SearchConfig, NO_SI};
use bcsi::{Error, Exec};

use crate::format::{num, tuple, Units};
use crate::{AenArgs, CapacityArgs, CheckArgs, Cli, Command, FmAction, FmVerifyArgs, Io, Model, Property};
use crate::{RegionArgs, SearchArgs, SimulateArgs, Variant, WdpArgs};

/// Tolerance for `R11 + R12 = R1`.
const SPLIT_TOL: f64 = 1e-9;
/// Grid verdict tolerance on `β`.
const GRID_BETA_TOL: f64 = 1e-3;

struct Ctx {
    units: Units,
    exec: Exec,
}

pub fn dispatch(cli: &Cli, io: &mut Io) -> Result<()> {
    let ctx = Ctx {
        units: Units { bits: cli.bits },
        exec: if cli.sequential { Exec::Sequential } else { Exec::default() },
    };
    match &cli.command {
        Command::Region(a) => region(&ctx, a, io),
        Command::Capacity(a) => capacity(&ctx, a, io),
        Command::Check(a) => check(a, io),
        Command::Fm { action: FmAction::Verify(a) } => fm_verify(a, io),
        Command::Simulate(a) => simulate(&ctx, a, io),
        Command::Wdp(a) => wdp(&ctx, a, io),
        Command::Aen(a) => aen(&ctx, a, io),
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} file {}", path.display()))
}

fn load_channel(path: &Path) -> Result<Channel> {
    let text = read_text(path, "channel")?;
    bio::parse_channel(&text).with_context(|| format!("channel file {}", path.display()))
}

fn load_scheme(path: &Path) -> Result<AuxScheme> {
    let text = read_text(path, "scheme")?;
    bio::parse_scheme(&text).with_context(|| format!("scheme file {}", path.display()))
}

fn mbc_only(ch: Channel, path: &Path) -> Result<channels::MbcChannel> {
    match ch {
        Channel::Mbc(c) => Ok(c),
        Channel::LessNoisy(_) => Err(invalid(format!("{} holds a lessnoisy channel; this command needs mbc", path.display()))),
    }
}

fn ln_only(ch: Channel, path: &Path) -> Result<channels::LessNoisyChannel> {
    match ch {
        Channel::LessNoisy(c) => Ok(c),
        Channel::Mbc(_) => Err(invalid(format!("{} holds an mbc channel; this command needs lessnoisy", path.display()))),
    }
}

fn search_config(ctx: &Ctx, a: &SearchArgs) -> Result<SearchConfig> {
    let cfg = SearchConfig {
        aux_cards: a.aux_card,
        restarts: a.restarts,
        hillclimb_steps: a.steps,
        step_size: a.step_size,
        seed: a.seed,
        exec: ctx.exec,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_csv<const N: usize>(header: [&str; N], rows: &[[f64; N]], dest: Option<&PathBuf>, io: &mut Io) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    match dest {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display()))?,
        None => io.out.write_all(&bytes)?,
    }
    Ok(())
}

fn schemes_json<P: HullPoint>(hull: &RegionHull<P>, units: Units) -> Value {
    hull.vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            json!({
                "vertex": v.as_ref().iter().map(|x| units.rate(*x)).collect::<Vec<_>>(),
                "scheme": bio::scheme_to_file(hull.best_scheme(i)),
            })
        })
        .collect()
}

fn region(ctx: &Ctx, a: &RegionArgs, io: &mut Io) -> Result<()> {
    let ch = load_channel(&a.channel)?;
    let cfg = search_config(ctx, &a.search)?;
    let u = ctx.units;
    let summary = match a.model {
        Model::Mbc => {
            let c = mbc_only(ch, &a.channel)?;
            let hull = regions::mbc_inner_region(&c, &cfg)?;
            let rows: Vec<[f64; 2]> = hull.vertices.iter().map(|v| u.rates(*v)).collect();
            write_csv(["R0", "R1"], &rows, a.out.as_ref(), io)?;
            let hs: Vec<Value> = hull
                .halfspaces()
                .iter()
                .map(|h| json!({"a": h.a, "b": u.rate(h.b)}))
                .collect();
            json!({"model": "mbc", "units": u.name(), "vertices": rows, "halfspaces": hs,
                   "best_schemes": schemes_json(&hull, u)})
        }
        Model::Lessnoisy => {
            let c = ln_only(ch, &a.channel)?;
            let hull = regions::ln_inner_region(&c, &cfg, NO_SI)?;
            let rows: Vec<[f64; 3]> = hull.vertices.iter().map(|v| u.rates(*v)).collect();
            write_csv(["R1", "R2", "R3"], &rows, a.out.as_ref(), io)?;
            json!({"model": "lessnoisy", "units": u.name(), "vertices": rows,
                   "best_schemes": schemes_json(&hull, u)})
        }
    };
    let summary_path = a.summary.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(p) = summary_path {
        fs::write(&p, serde_json::to_string_pretty(&summary)?).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

fn capacity(ctx: &Ctx, a: &CapacityArgs, io: &mut Io) -> Result<()> {
    let ch = load_channel(&a.channel)?;
    let cfg = search_config(ctx, &a.search)?;
    let u = ctx.units;
    let mbc = match a.variant {
        Variant::OneDet => Some(MbcVariant::OneDet),
        Variant::TwoDet => Some(MbcVariant::TwoDet),
        Variant::FullDet => Some(MbcVariant::FullDet),
        _ => None,
    };
    if let Some(v) = mbc {
        let c = mbc_only(ch, &a.channel)?;
        let hull = regions::mbc_capacity(&c, v, &cfg)?;
        let rows: Vec<[f64; 2]> = hull.vertices.iter().map(|p| u.rates(*p)).collect();
        return write_csv(["R0", "R1"], &rows, a.out.as_ref(), io);
    }
    let v = match a.variant {
        Variant::LnGeneral => LnVariant::General,
        Variant::LnOneDet => LnVariant::OneDet,
        Variant::LnTwoDet => LnVariant::TwoDet,
        Variant::LnFullDet => LnVariant::FullDet,
        Variant::LnFullDetPartial => LnVariant::FullDetPartialSI,
        _ => LnVariant::TwoDetPartialSI,
    };
    let c = ln_only(ch, &a.channel)?;
    let hull = regions::ln_capacity(&c, v, &cfg)?;
    let rows: Vec<[f64; 3]> = hull.vertices.iter().map(|p| u.rates(*p)).collect();
    write_csv(["R1", "R2", "R3"], &rows, a.out.as_ref(), io)
}

fn receiver_pairs(ch: &Channel) -> Vec<(Receiver, Receiver)> {
    match ch {
        Channel::Mbc(_) => vec![(Receiver::Y1, Receiver::Y2), (Receiver::Y1, Receiver::Y3)],
        Channel::LessNoisy(c) => {
            let o = c.declared_order;
            vec![(o[0], o[1]), (o[1], o[2])]
        }
    }
}

fn check(a: &CheckArgs, io: &mut Io) -> Result<()> {
    let ch = load_channel(&a.channel)?;
    let (kernel, state, nx): (Box<dyn Fn(Receiver) -> bcsi::Result<_>>, _, _) = match &ch {
        Channel::Mbc(c) => (Box::new(move |r| c.receiver_kernel(r)), c.state.clone(), c.input_alphabet().size),
        Channel::LessNoisy(c) => (Box::new(move |r| c.receiver_kernel(r)), c.state.clone(), c.input_alphabet().size),
    };
    for (y, z) in receiver_pairs(&ch) {
        let (ky, kz) = (kernel(y)?, kernel(z)?);
        let pair = format!("{} -> {}", y.label(), z.label());
        match a.property {
            Property::Degraded => match channels::check_degraded(&ky, &kz)? {
                Degradedness::Degraded { .. } => writeln!(io.out, "{pair}: degraded")?,
                Degradedness::NotDegraded { x, s, residual } => writeln!(
                    io.out,
                    "{pair}: not degraded (x = {x}, s = {s}, residual = {})",
                    num(residual)
                )?,
            },
            Property::LessNoisy => {
                let card = a.aux_card.unwrap_or(nx);
                match channels::falsify_less_noisy_kernels(&state, &ky, &kz, a.samples, card, a.seed)? {
                    LessNoisyVerdict::Counterexample { state, gap, sample, .. } => writeln!(
                        io.out,
                        "{pair}: not less noisy (s = {state}, gap = {}, sample {sample})",
                        num(gap)
                    )?,
                    LessNoisyVerdict::ConsistentAfter { samples, skipped_states } => {
                        write!(io.out, "{pair}: no counterexample in {samples} samples")?;
                        if !skipped_states.is_empty() {
                            write!(io.out, " (zero-probability states skipped: {skipped_states:?})")?;
                        }
                        writeln!(io.out)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn verts(v: &bcsi::geometry::Vertices2) -> String {
    match v {
        bcsi::geometry::Vertices2::Empty => "empty".into(),
        bcsi::geometry::Vertices2::Unbounded => "unbounded".into(),
        bcsi::geometry::Vertices2::Polygon(p) => p.iter().map(|q| tuple(q)).collect::<Vec<_>>().join(" "),
    }
}

fn fm_verify(a: &FmVerifyArgs, io: &mut Io) -> Result<()> {
    let ch = mbc_only(load_channel(&a.channel)?, &a.channel)?;
    let (nx, ns) = (ch.input_alphabet().size, ch.state_alphabet().size);
    let shape = match &a.scheme {
        Some(path) => {
            let sch = load_scheme(path)?;
            let (nu, nv, _, _) = sch.cards();
            let v = fmelim::fm_verify(&ch, &sch)?;
            writeln!(io.out, "projected system:")?;
            for row in &v.projected.rows {
                writeln!(io.out, "  {}", v.projected.render_row(row))?;
            }
            writeln!(io.out, "projected vertices: {}", verts(&v.projected_vertices))?;
            writeln!(io.out, "closed-form vertices: {}", verts(&v.closed_form_vertices))?;
            writeln!(io.out, "match: {}", yes(v.matches))?;
            writeln!(io.out, "combined sum-rate row redundant: {}", yes(v.combined_row_redundant))?;
            SchemeShape { nu, nv, tie_v_to_u: false }
        }
        None => SchemeShape { nu: nx * ns, nv: nx * ns, tie_v_to_u: false },
    };
    if a.trials == 0 {
        return Ok(());
    }
    let mut matches = 0;
    let mut redundant = 0;
    let mut nonempty = 0;
    for t in 0..a.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        rng.set_stream(t as u64);
        let lambda = rng.gen_range(0.0..0.05);
        let sch = AuxScheme::random_blended(shape, nx, ns, lambda, &mut rng);
        let v = fmelim::fm_verify(&ch, &sch)?;
        matches += v.matches as usize;
        redundant += v.combined_row_redundant as usize;
        nonempty += matches!(v.closed_form_vertices, bcsi::geometry::Vertices2::Polygon(_)) as usize;
    }
    writeln!(io.out, "random schemes: {}", a.trials)?;
    writeln!(io.out, "  nonempty closed form: {nonempty}")?;
    writeln!(io.out, "  vertex sets match: {matches}")?;
    writeln!(io.out, "  combined row redundant: {redundant}")?;
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn simulate(ctx: &Ctx, a: &SimulateArgs, io: &mut Io) -> Result<()> {
    let ch = mbc_only(load_channel(&a.channel)?, &a.channel)?;
    let sch = load_scheme(&a.scheme)?;
    let (r0, r1) = (a.rates[0], a.rates[1]);
    let split = a.split.unwrap_or([r1 / 2.0, r1 / 2.0]);
    if (split[0] + split[1] - r1).abs() > SPLIT_TOL {
        return Err(invalid(format!(
            "--split {},{} does not add up to R1 = {r1}",
            split[0], split[1]
        )));
    }
    if a.n.is_empty() {
        return Err(invalid("--n needs at least one blocklength"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(coding_sim::CSV_HEADER.split(','))?;
    for &n in &a.n {
        let mut cfg = SimConfig::new(n, [r0, split[0], split[1]], a.bins, a.trials, a.seed);
        cfg.epsilon = a.eps;
        cfg.cap = a.cap;
        cfg.exec = ctx.exec;
        let r = coding_sim::simulate(&ch, &sch, &cfg).with_context(|| format!("blocklength n = {n}"))?;
        w.write_record([
            r.n.to_string(),
            ctx.units.rate(r.r0).to_string(),
            ctx.units.rate(r.r1).to_string(),
            r.errors[0].to_string(),
            r.errors[1].to_string(),
            r.errors[2].to_string(),
            r.encoding_failure.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    match &a.out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display()))?,
        None => io.out.write_all(&bytes)?,
    }
    Ok(())
}

fn wdp(ctx: &Ctx, a: &WdpArgs, io: &mut Io) -> Result<()> {
    let p = WdpParams::new(a.p, a.n, a.q)?;
    let beta = gaussian_wdp::beta_star(&p)?;
    let rates = gaussian_wdp::wdp_rates(&p)?;
    writeln!(io.out, "β* = {}", tuple(&beta))?;
    writeln!(io.out, "rates = {} {}", tuple(&ctx.units.rates(rates)), ctx.units.name())?;
    let mut pass = true;
    for k in 0..3 {
        let (b, r) = gaussian_wdp::grid_argmax(&p, k + 1, a.grid)?;
        let gap = (b - beta[k]).abs();
        let flat = gaussian_wdp::is_flat(&p, k + 1)?;
        pass &= flat || gap <= GRID_BETA_TOL;
        writeln!(
            io.out,
            "grid layer {}: β = {}, rate = {}, |β − β*| = {}{}",
            k + 1,
            num(b),
            num(ctx.units.rate(r)),
            num(gap),
            if flat { " (state variance 0, rate flat in β)" } else { "" }
        )?;
    }
    writeln!(io.out, "grid check: {}", if pass { "pass" } else { "fail" })?;
    Ok(())
}

fn aen(ctx: &Ctx, a: &AenArgs, io: &mut Io) -> Result<()> {
    let p = AenParams::new(a.mx, a.ms, a.mz)?;
    let regime = Regime {
        ratio: a.regime_ratio,
        small: a.regime_small,
    };
    let u = ctx.units;
    let inner = aen_bounds::aen_inner_with(&p, regime)?;
    for k in 0..3 {
        writeln!(
            io.out,
            "inner R{}: {} {}{}",
            k + 1,
            num(u.rate(inner.rates[k])),
            u.name(),
            if inner.valid[k] { "" } else { " (outside the high-input-mean regime)" }
        )?;
    }
    let mode = if a.corrected { OuterMode::CorrectedConstant } else { OuterMode::PaperConstant };
    let printed = aen_bounds::erlang2_entropy(1.0, EntropyMode::PaperClosedForm)?;
    let oracle = aen_bounds::erlang2_entropy(1.0, EntropyMode::NumericalOracle)?;
    if !a.corrected && (printed - oracle).abs() > 1e-3 {
        writeln!(
            io.err,
            "warning: printed Erlang(2) entropy constant {} differs from quadrature {}; see --corrected",
            num(printed),
            num(oracle)
        )?;
    }
    let outer = match aen_bounds::aen_outer(&p, mode) {
        Ok(o) => {
            for k in 0..3 {
                writeln!(io.out, "outer R{}: {} {}", k + 1, num(u.rate(o[k])), u.name())?;
            }
            Some(o)
        }
        Err(Error::Precondition(msg)) => {
            writeln!(io.out, "outer: not available ({msg})")?;
            None
        }
        Err(e) => return Err(e.into()),
    };
    if a.compare {
        writeln!(io.out, "entropy constant: printed {}, quadrature {}", num(printed), num(oracle))?;
        if let Some(o) = outer {
            for k in 0..3 {
                let gap = o[k] - inner.rates[k];
                writeln!(
                    io.out,
                    "compare R{}: outer − inner = {}{}",
                    k + 1,
                    num(u.rate(gap)),
                    if gap < 0.0 { " (inner exceeds outer)" } else { "" }
                )?;
            }
        }
    }
    Ok(())
}
