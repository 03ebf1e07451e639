//! JSON formats for channels and auxiliary schemes.
//!
//! Channel:
//! `{"model": "mbc"|"lessnoisy", "alphabets": {"X":n,"S":n,"Y1":n,"Y2":n,"Y3":n},
//!   "state": [..], "main": [[..]..], "degrading": [[..]..]}`
//! with `main` rows indexed by `(x, s)` and columns by `(y1, y3)` (mbc) or
//! `(y1, y2, y3)` (lessnoisy), row-major. A flat array is accepted as well.
//! `degrading` holds `p(y2|y1)` and is required for mbc only.
//!
//! Scheme: `{"pU_given_S": rows by s, "pV_given_US": rows by (u, s),
//! "pX_given_VS": rows by (v, s)}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::{LessNoisyChannel, MbcChannel, Receiver, S, U, V, X, Y1, Y2, Y3};
use crate::error::{Error, Result};
use crate::prob::{Alphabet, CondKernel, FinitePmf};
use crate::regions::AuxScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mbc,
    Lessnoisy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Table {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl Table {
    fn flatten(&self, field: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let flat = match self {
            Table::Flat(v) => v.clone(),
            Table::Rows(r) => {
                if r.len() != rows {
                    return Err(Error::Format(format!("`{field}` has {} rows, expected {rows}", r.len())));
                }
                if let Some((i, row)) = r.iter().enumerate().find(|(_, row)| row.len() != cols) {
                    return Err(Error::Format(format!(
                        "`{field}` row {i} has {} entries, expected {cols}",
                        row.len()
                    )));
                }
                r.concat()
            }
        };
        if flat.len() != rows * cols {
            return Err(Error::Format(format!(
                "`{field}` has {} entries, expected {}",
                flat.len(),
                rows * cols
            )));
        }
        Ok(flat)
    }

    fn rows_of(k: &CondKernel) -> Self {
        Table::Rows(k.rows().map(|r| r.to_vec()).collect())
    }
}

/// On-disk channel document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub model: ModelKind,
    pub alphabets: BTreeMap<String, usize>,
    pub state: Vec<f64>,
    pub main: Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrading: Option<Table>,
    /// Declared less-noisy ordering, strongest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    Mbc(MbcChannel),
    LessNoisy(LessNoisyChannel),
}

impl Channel {
    pub fn model(&self) -> ModelKind {
        match self {
            Channel::Mbc(_) => ModelKind::Mbc,
            Channel::LessNoisy(_) => ModelKind::Lessnoisy,
        }
    }
}

fn alpha(sizes: &BTreeMap<String, usize>, label: &str) -> Result<Alphabet> {
    let n = *sizes
        .get(label)
        .ok_or_else(|| Error::Format(format!("`alphabets` is missing `{label}`")))?;
    Alphabet::try_new(label, n).map_err(|_| Error::Format(format!("`alphabets.{label}` must be positive")))
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    channel_from_file(&file)
}

pub fn channel_from_file(file: &ChannelFile) -> Result<Channel> {
    let known = [X, S, Y1, Y2, Y3];
    if let Some(k) = file.alphabets.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Format(format!("`alphabets` has unknown variable `{k}`")));
    }
    let [x, s, y1, y2, y3] = known.map(|l| alpha(&file.alphabets, l));
    let (x, s, y1, y2, y3) = (x?, s?, y1?, y2?, y3?);
    if file.state.len() != s.size {
        return Err(Error::Format(format!(
            "`state` has {} entries, expected |S| = {}",
            file.state.len(),
            s.size
        )));
    }
    let state = FinitePmf::new(vec![s.clone()], file.state.clone())
        .map_err(|e| Error::InvalidDistribution(format!("state: {e}")))?;
    let from = vec![x.clone(), s.clone()];
    let rows = x.size * s.size;
    match file.model {
        ModelKind::Mbc => {
            if file.order.is_some() {
                return Err(Error::Format("`order` applies to lessnoisy channels only".into()));
            }
            let outs = vec![y1.clone(), y3];
            let cols = outs.iter().map(|a| a.size).product();
            let main = CondKernel::new_unchecked(from, outs, file.main.flatten("main", rows, cols)?)?;
            let deg = file
                .degrading
                .as_ref()
                .ok_or_else(|| Error::Format("mbc channel needs `degrading`".into()))?;
            let deg = CondKernel::new_unchecked(vec![y1.clone()], vec![y2.clone()], deg.flatten("degrading", y1.size, y2.size)?)?;
            Ok(Channel::Mbc(MbcChannel::new(state, main, deg)?))
        }
        ModelKind::Lessnoisy => {
            if file.degrading.is_some() {
                return Err(Error::Format("`degrading` applies to mbc channels only".into()));
            }
            let outs = vec![y1, y2, y3];
            let cols = outs.iter().map(|a| a.size).product();
            let main = CondKernel::new_unchecked(from, outs, file.main.flatten("main", rows, cols)?)?;
            let mut ch = LessNoisyChannel::new(state, main)?;
            if let Some(order) = &file.order {
                let parsed = order
                    .iter()
                    .map(|l| Receiver::from_label(l).map_err(|_| Error::Format(format!("`order` has unknown receiver `{l}`"))))
                    .collect::<Result<Vec<_>>>()?;
                ch.declared_order = parsed
                    .try_into()
                    .map_err(|_| Error::Format("`order` must list three receivers".into()))?;
                if let Some(v) = crate::channels::BroadcastModel::validate(&ch).first() {
                    return Err(Error::Format(format!("`order`: {}", v.detail)));
                }
            }
            Ok(Channel::LessNoisy(ch))
        }
    }
}

fn sizes_of(alphabets: &[&Alphabet]) -> BTreeMap<String, usize> {
    alphabets.iter().map(|a| (a.label.clone(), a.size)).collect()
}

pub fn channel_to_file(ch: &Channel) -> ChannelFile {
    match ch {
        Channel::Mbc(c) => {
            let from = c.main.from_alphabets();
            let to = c.main.to_alphabets();
            let y2 = &c.degrading.to_alphabets()[0];
            ChannelFile {
                model: ModelKind::Mbc,
                alphabets: sizes_of(&[&from[0], &from[1], &to[0], y2, &to[1]]),
                state: c.state.probs().to_vec(),
                main: Table::rows_of(&c.main),
                degrading: Some(Table::rows_of(&c.degrading)),
                order: None,
            }
        }
        Channel::LessNoisy(c) => {
            let from = c.main.from_alphabets();
            let to = c.main.to_alphabets();
            ChannelFile {
                model: ModelKind::Lessnoisy,
                alphabets: sizes_of(&[&from[0], &from[1], &to[0], &to[1], &to[2]]),
                state: c.state.probs().to_vec(),
                main: Table::rows_of(&c.main),
                degrading: None,
                order: Some(c.declared_order.iter().map(|r| r.label().to_string()).collect()),
            }
        }
    }
}

pub fn channel_to_json(ch: &Channel) -> String {
    serde_json::to_string_pretty(&channel_to_file(ch)).expect("channel serializes")
}

/// On-disk scheme document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    #[serde(rename = "pU_given_S")]
    pub p_u_given_s: Vec<Vec<f64>>,
    #[serde(rename = "pV_given_US")]
    pub p_v_given_us: Vec<Vec<f64>>,
    #[serde(rename = "pX_given_VS")]
    pub p_x_given_vs: Vec<Vec<f64>>,
}

fn width(field: &str, rows: &[Vec<f64>]) -> Result<usize> {
    let w = rows
        .first()
        .map(|r| r.len())
        .filter(|w| *w > 0)
        .ok_or_else(|| Error::Format(format!("`{field}` is empty")))?;
    Ok(w)
}

pub fn parse_scheme(text: &str) -> Result<AuxScheme> {
    let file: SchemeFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    scheme_from_file(&file)
}

pub fn scheme_from_file(file: &SchemeFile) -> Result<AuxScheme> {
    let ns = file.p_u_given_s.len();
    let nu = width("pU_given_S", &file.p_u_given_s)?;
    let nv = width("pV_given_US", &file.p_v_given_us)?;
    let nx = width("pX_given_VS", &file.p_x_given_vs)?;
    let (s, u, v, x) = (Alphabet::new(S, ns), Alphabet::new(U, nu), Alphabet::new(V, nv), Alphabet::new(X, nx));
    let t = |f: &str, rows: &[Vec<f64>], n_rows: usize, n_cols: usize| {
        Table::Rows(rows.to_vec()).flatten(f, n_rows, n_cols)
    };
    let pu = CondKernel::new_unchecked(vec![s.clone()], vec![u.clone()], t("pU_given_S", &file.p_u_given_s, ns, nu)?)?;
    let pv = CondKernel::new_unchecked(
        vec![u, s.clone()],
        vec![v.clone()],
        t("pV_given_US", &file.p_v_given_us, nu * ns, nv)?,
    )?;
    let px = CondKernel::new_unchecked(vec![v, s], vec![x], t("pX_given_VS", &file.p_x_given_vs, nv * ns, nx)?)?;
    AuxScheme::new(pu, pv, px)
}

pub fn scheme_to_file(sch: &AuxScheme) -> SchemeFile {
    let rows = |k: &CondKernel| k.rows().map(|r| r.to_vec()).collect();
    SchemeFile {
        p_u_given_s: rows(&sch.p_u_given_s),
        p_v_given_us: rows(&sch.p_v_given_us),
        p_x_given_vs: rows(&sch.p_x_given_vs),
    }
}

pub fn scheme_to_json(sch: &AuxScheme) -> String {
    serde_json::to_string_pretty(&scheme_to_file(sch)).expect("scheme serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::gen;
    use crate::regions::{mbc_inner_fixed, SchemeShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BINARY_MBC: &str = r#"{
        "model": "mbc",
        "alphabets": {"X": 2, "S": 2, "Y1": 2, "Y2": 2, "Y3": 2},
        "state": [0.5, 0.5],
        "main": [[0.9, 0.0, 0.1, 0.0], [0.0, 0.9, 0.0, 0.1], [0.1, 0.0, 0.9, 0.0], [0.0, 0.1, 0.0, 0.9]],
        "degrading": [[0.8, 0.2], [0.2, 0.8]]
    }"#;

    #[test]
    fn parse_mbc() {
        let Channel::Mbc(ch) = parse_channel(BINARY_MBC).unwrap() else {
            panic!("expected mbc")
        };
        assert_eq!(ch.main.n_rows(), 4);
        assert_eq!(ch.degrading.row(1), &[0.2, 0.8]);
    }

    #[test]
    fn channel_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = Channel::Mbc(gen::random_mbc(&mut rng));
        assert_eq!(parse_channel(&channel_to_json(&ch)).unwrap(), ch);
        let ln = Channel::LessNoisy(gen::random_less_noisy([2, 2, 3, 2, 2], [false; 3], &mut rng));
        assert_eq!(parse_channel(&channel_to_json(&ln)).unwrap(), ln);
    }

    #[test]
    fn flat_main_accepted() {
        let flat = BINARY_MBC.replace(
            "[[0.9, 0.0, 0.1, 0.0], [0.0, 0.9, 0.0, 0.1], [0.1, 0.0, 0.9, 0.0], [0.0, 0.1, 0.0, 0.9]]",
            "[0.9, 0.0, 0.1, 0.0, 0.0, 0.9, 0.0, 0.1, 0.1, 0.0, 0.9, 0.0, 0.0, 0.1, 0.0, 0.9]",
        );
        assert_eq!(parse_channel(&flat).unwrap(), parse_channel(BINARY_MBC).unwrap());
    }

    #[test]
    fn errors_name_fields() {
        let bad_row = BINARY_MBC.replace("[0.8, 0.2], [0.2, 0.8]", "[0.8, 0.3], [0.2, 0.8]");
        let e = parse_channel(&bad_row).unwrap_err().to_string();
        assert!(e.contains("degrading"), "{e}");
        let short = BINARY_MBC.replace("\"state\": [0.5, 0.5]", "\"state\": [1.0]");
        assert!(parse_channel(&short).unwrap_err().to_string().contains("state"));
        let missing = BINARY_MBC.replace("\"Y3\": 2", "\"Z\": 2");
        assert!(parse_channel(&missing).unwrap_err().to_string().contains("Z"));
        let no_deg = BINARY_MBC.replace(",\n        \"degrading\": [[0.8, 0.2], [0.2, 0.8]]", "");
        assert!(parse_channel(&no_deg).unwrap_err().to_string().contains("degrading"));
        assert!(matches!(parse_channel("{"), Err(Error::Format(_))));
    }

    #[test]
    fn scheme_round_trip_reproduces_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = gen::random_mbc(&mut rng);
        let shape = SchemeShape { nu: 3, nv: 2, tie_v_to_u: false };
        let sch = AuxScheme::random(shape, 2, 2, &mut rng);
        let back = parse_scheme(&scheme_to_json(&sch)).unwrap();
        assert_eq!(back, sch);
        let (a, b) = (mbc_inner_fixed(&ch, &sch).unwrap(), mbc_inner_fixed(&ch, &back).unwrap());
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            assert!((p[0] - q[0]).abs() <= 1e-12 && (p[1] - q[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn scheme_shape_errors() {
        let text = r#"{"pU_given_S": [[0.5, 0.5]], "pV_given_US": [[1.0]], "pX_given_VS": [[0.5, 0.5]]}"#;
        let e = parse_scheme(text).unwrap_err().to_string();
        assert!(e.contains("pV_given_US"), "{e}");
        let unknown = r#"{"pU": [[1.0]]}"#;
        assert!(matches!(parse_scheme(unknown), Err(Error::Format(_))));
    }
}
