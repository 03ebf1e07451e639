//! Fourier–Motzkin elimination over named rate variables with small integer
//! coefficients and real bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hausdorff, vertices_2d, Line, Vertices2, VERTEX_TOL};
use crate::regions::{mbc_constants, AuxScheme, MbcConstants, MbcInnerTerms, NO_SI};
use crate::channels::MbcChannel;

/// Largest coefficient magnitude tolerated during elimination.
pub const COEF_LIMIT: i64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IneqRow {
    pub coeffs: Vec<i64>,
    pub bound: f64,
    pub sense: Sense,
    pub label: String,
}

impl IneqRow {
    /// Same half-space written as `coeffs · x ≤ bound`.
    pub fn as_le(&self) -> (Vec<i64>, f64) {
        match self.sense {
            Sense::Le => (self.coeffs.clone(), self.bound),
            Sense::Ge => (self.coeffs.iter().map(|c| -c).collect(), -self.bound),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinIneqSystem {
    pub variables: Vec<String>,
    pub rows: Vec<IneqRow>,
}

impl LinIneqSystem {
    pub fn new(variables: &[&str]) -> Self {
        Self {
            variables: variables.iter().map(|v| v.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn index(&self, var: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::UnknownLabel(var.to_string()))
    }

    /// Add `Σ c·var (sense) bound` from `(var, c)` pairs.
    pub fn push(&mut self, terms: &[(&str, i64)], sense: Sense, bound: f64, label: &str) -> Result<()> {
        let mut coeffs = vec![0; self.variables.len()];
        for &(v, c) in terms {
            if c.abs() > COEF_LIMIT {
                return Err(Error::Blowup {
                    variable: v.to_string(),
                    coefficient: c,
                    limit: COEF_LIMIT,
                });
            }
            coeffs[self.index(v)?] += c;
        }
        self.rows.push(IneqRow {
            coeffs,
            bound,
            sense,
            label: label.to_string(),
        });
        Ok(())
    }

    pub fn add_variable(&mut self, var: &str) -> Result<()> {
        if self.variables.iter().any(|v| v == var) {
            return Err(Error::arg(format!("variable `{var}` already declared")));
        }
        self.variables.push(var.to_string());
        for r in &mut self.rows {
            r.coeffs.push(0);
        }
        Ok(())
    }

    /// Does `x` satisfy every row within `tol`?
    pub fn satisfied_by(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| {
            let (c, b) = r.as_le();
            c.iter().zip(x).map(|(c, x)| *c as f64 * x).sum::<f64>() <= b + tol
        })
    }

    pub fn render_row(&self, row: &IneqRow) -> String {
        let mut lhs = String::new();
        for (c, v) in row.coeffs.iter().zip(&self.variables) {
            if *c == 0 {
                continue;
            }
            let sign = if *c < 0 { "-" } else if lhs.is_empty() { "" } else { "+" };
            let mag = c.abs();
            let term = if mag == 1 { v.clone() } else { format!("{mag}{v}") };
            if lhs.is_empty() {
                lhs = format!("{sign}{term}");
            } else {
                lhs = format!("{lhs} {sign} {term}");
            }
        }
        if lhs.is_empty() {
            lhs = "0".into();
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
        };
        format!("{lhs} {op} {:.12}", row.bound)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Project `sys` onto the variables not in `drop`, eliminating in the given
/// order. Output rows are in `≤` form, integer-normalized and deduplicated
/// (identical left-hand sides keep the tightest bound).
pub fn fm_eliminate(sys: &LinIneqSystem, drop: &[&str]) -> Result<LinIneqSystem> {
    let mut vars = sys.variables.clone();
    let mut rows: Vec<(Vec<i64>, f64, String)> = sys
        .rows
        .iter()
        .map(|r| {
            let (c, b) = r.as_le();
            (c, b, r.label.clone())
        })
        .collect();
    for &d in drop {
        let j = vars
            .iter()
            .position(|v| v == d)
            .ok_or_else(|| Error::UnknownLabel(d.to_string()))?;
        let (mut pos, mut neg, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.0[j].signum() {
                1 => pos.push(r),
                -1 => neg.push(r),
                _ => keep.push(r),
            }
        }
        for p in &pos {
            for n in &neg {
                let (fp, fn_) = (-n.0[j], p.0[j]);
                let mut c: Vec<i64> = p.0.iter().zip(&n.0).map(|(a, b)| fp * a + fn_ * b).collect();
                let mut b = fp as f64 * p.1 + fn_ as f64 * n.1;
                let g = c.iter().fold(0, |g, &x| gcd(g, x));
                if g > 1 {
                    c.iter_mut().for_each(|x| *x /= g);
                    b /= g as f64;
                }
                if let Some(&big) = c.iter().find(|x| x.abs() > COEF_LIMIT) {
                    return Err(Error::Blowup {
                        variable: d.to_string(),
                        coefficient: big,
                        limit: COEF_LIMIT,
                    });
                }
                keep.push((c, b, format!("{} & {}", p.2, n.2)));
            }
        }
        for r in &mut keep {
            r.0.remove(j);
        }
        vars.remove(j);
        rows = dedup(keep);
    }
    Ok(LinIneqSystem {
        variables: vars,
        rows: rows
            .into_iter()
            .map(|(coeffs, bound, label)| IneqRow {
                coeffs,
                bound,
                sense: Sense::Le,
                label,
            })
            .collect(),
    })
}

fn dedup(rows: Vec<(Vec<i64>, f64, String)>) -> Vec<(Vec<i64>, f64, String)> {
    let mut out: Vec<(Vec<i64>, f64, String)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.0 == r.0) {
            Some(o) if r.1 < o.1 => *o = r,
            Some(_) => {}
            None => out.push(r),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimal2d {
    pub kept: Vec<usize>,
    pub redundant: Vec<usize>,
    pub vertices: Vertices2,
}

fn lines_of(sys: &LinIneqSystem, skip: Option<usize>) -> Vec<Line> {
    sys.rows
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, r)| {
            let (c, b) = r.as_le();
            Line {
                a: [c[0] as f64, c[1] as f64],
                b,
            }
        })
        .collect()
}

/// Vertex-set equality within `tol`.
pub fn same_vertices(a: &Vertices2, b: &Vertices2, tol: f64) -> bool {
    match (a, b) {
        (Vertices2::Polygon(p), Vertices2::Polygon(q)) => hausdorff(p, q) <= tol,
        _ => a == b,
    }
}

/// Classify rows of a two-variable system (intersected with the nonnegative
/// quadrant) as kept or redundant. A row is redundant when dropping it alone
/// leaves the vertex set unchanged. Unbounded regions are reported with
/// every row kept.
pub fn minimal_2d(sys: &LinIneqSystem) -> Result<Minimal2d> {
    if sys.variables.len() != 2 {
        return Err(Error::arg(format!(
            "minimal_2d needs exactly two variables, got {}",
            sys.variables.len()
        )));
    }
    let full = vertices_2d(&lines_of(sys, None));
    let (mut kept, mut redundant) = (Vec::new(), Vec::new());
    for i in 0..sys.rows.len() {
        let without = vertices_2d(&lines_of(sys, Some(i)));
        if full != Vertices2::Unbounded && same_vertices(&full, &without, VERTEX_TOL) {
            redundant.push(i);
        } else {
            kept.push(i);
        }
    }
    Ok(Minimal2d {
        kept,
        redundant,
        vertices: full,
    })
}

pub const PRE_FM_VARIABLES: [&str; 6] = ["R0", "R0'", "R11", "R11'", "R12", "R12'"];
/// Variables removed to reach `(R0, R1)`, in elimination order.
pub const PRE_FM_DROP: [&str; 5] = ["R0'", "R11'", "R12'", "R11", "R12"];

/// Coding-constraint system of the multilevel scheme at zero slack.
pub fn build_pre_fm(channel: &MbcChannel, scheme: &AuxScheme) -> Result<LinIneqSystem> {
    Ok(pre_fm_from_constants(&mbc_constants(channel, scheme, NO_SI)?))
}

pub fn pre_fm_from_constants(k: &MbcConstants) -> LinIneqSystem {
    use Sense::{Ge, Le};
    let mut sys = LinIneqSystem::new(&PRE_FM_VARIABLES);
    let rows: [(&[(&str, i64)], Sense, f64, &str); 8] = [
        (&[("R0", 1), ("R0'", 1)], Le, k.i_u_y2, "Y2 decodes u"),
        (&[("R12", 1), ("R12'", 1)], Le, k.i_x_y1_given_v, "Y1 decodes x given u, v"),
        (
            &[("R11", 1), ("R11'", 1), ("R12", 1), ("R12'", 1)],
            Le,
            k.i_x_y1_given_u,
            "Y1 decodes v, x given u",
        ),
        (
            &[("R0", 1), ("R0'", 1), ("R11", 1), ("R11'", 1), ("R12", 1), ("R12'", 1)],
            Le,
            k.i_x_y1,
            "Y1 decodes u, v, x",
        ),
        (
            &[("R0", 1), ("R0'", 1), ("R11", 1), ("R11'", 1)],
            Le,
            k.i_v_y3,
            "Y3 decodes u, v",
        ),
        (&[("R0'", 1)], Ge, k.i_u_s, "u bin covers S"),
        (&[("R11'", 1)], Ge, k.i_v_s_given_u, "v bin covers S"),
        (&[("R12'", 1)], Ge, k.i_x_s_given_v, "x bin covers S"),
    ];
    for (terms, sense, bound, label) in rows {
        sys.push(terms, sense, bound, label).expect("declared variables");
    }
    for v in PRE_FM_VARIABLES {
        sys.push(&[(v, 1)], Ge, 0.0, &format!("{v} >= 0")).expect("declared variables");
    }
    sys
}

/// Add `R1 = R11 + R12` and eliminate down to `(R0, R1)`.
pub fn project_to_rates(pre: &LinIneqSystem) -> Result<LinIneqSystem> {
    let mut sys = pre.clone();
    sys.add_variable("R1")?;
    sys.push(&[("R1", 1), ("R11", -1), ("R12", -1)], Sense::Le, 0.0, "R1 split")?;
    sys.push(&[("R1", 1), ("R11", -1), ("R12", -1)], Sense::Ge, 0.0, "R1 split")?;
    fm_eliminate(&sys, &PRE_FM_DROP)
}

/// Unclamped closed-form half-spaces `R0 ≤ a1, R0 ≤ a2, R1 ≤ b, R0+R1 ≤ c`,
/// plus the implied `R0+R1 ≤ d` when `with_d`.
pub fn closed_form_system(t: &MbcInnerTerms, with_d: bool) -> LinIneqSystem {
    let mut sys = LinIneqSystem::new(&["R0", "R1"]);
    let mut push = |terms: &[(&str, i64)], b: f64, label: &str| {
        sys.push(terms, Sense::Le, b, label).expect("declared variables");
    };
    push(&[("R0", 1)], t.a1, "common rate at Y2");
    push(&[("R0", 1)], t.a2, "common rate at Y3");
    push(&[("R1", 1)], t.b, "private rate");
    push(&[("R0", 1), ("R1", 1)], t.c, "sum rate");
    if with_d {
        push(&[("R0", 1), ("R1", 1)], t.d, "combined sum rate");
    }
    sys
}

/// Result of mechanically re-deriving the multilevel inner bound.
#[derive(Clone, Debug, PartialEq)]
pub struct FmVerdict {
    pub projected: LinIneqSystem,
    pub projected_vertices: Vertices2,
    pub closed_form_vertices: Vertices2,
    /// Vertex sets of the projection and the closed form agree.
    pub matches: bool,
    /// The combined sum-rate row is redundant both after projection and
    /// next to the closed-form rows.
    pub combined_row_redundant: bool,
    pub constants: MbcConstants,
}

pub fn fm_verify(channel: &MbcChannel, scheme: &AuxScheme) -> Result<FmVerdict> {
    let constants = mbc_constants(channel, scheme, NO_SI)?;
    fm_verify_constants(&constants)
}

pub fn fm_verify_constants(constants: &MbcConstants) -> Result<FmVerdict> {
    let terms = constants.terms();
    let projected = project_to_rates(&pre_fm_from_constants(constants))?;
    let projected_vertices = vertices_2d(&lines_of(&projected, None));
    let closed_form_vertices = vertices_2d(&lines_of(&closed_form_system(&terms, false), None));
    let matches = same_vertices(&projected_vertices, &closed_form_vertices, VERTEX_TOL);

    let mut with_d = projected.clone();
    with_d.push(&[("R0", 1), ("R1", 1)], Sense::Le, terms.d, "combined sum rate")?;
    let after = minimal_2d(&with_d)?.redundant.contains(&(with_d.rows.len() - 1));
    let beside = minimal_2d(&closed_form_system(&terms, true))?.redundant.contains(&4);
    Ok(FmVerdict {
        projected,
        projected_vertices,
        closed_form_vertices,
        matches,
        combined_row_redundant: after && beside,
        constants: *constants,
    })
}
