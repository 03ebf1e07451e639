/// `U=4,V=4`, `U=4` or `4,4`.
pub fn parse_aux_card(s: &str) -> Result<(usize, usize), String> {
    let mut u = None;
    let mut v = None;
    for (i, part) in s.split(',').enumerate() {
        let (key, val) = match part.split_once('=') {
            Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim()),
            None => (if i == 0 { "U".to_string() } else { "V".to_string() }, part.trim()),
        };
        let n: usize = val.parse().map_err(|_| format!("`{part}` is not a cardinality"))?;
        if n == 0 {
            return Err(format!("`{part}`: cardinality must be at least 1"));
        }
        match key.as_str() {
            "U" => u = Some(n),
            "V" => v = Some(n),
            _ => return Err(format!("unknown auxiliary `{key}`, expected U or V")),
        }
    }
    let u = u.ok_or("missing U cardinality")?;
    Ok((u, v.unwrap_or(u)))
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_list(s)
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_list(s)
}

/// Six decimals with trailing zeros removed.
pub fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn tuple(xs: &[f64]) -> String {
    format!("({})", xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", "))
}

/// Display conversion for rates.
#[derive(Clone, Copy, Debug)]
pub struct Units {
    pub bits: bool,
}

impl Units {
    pub fn rate(self, nats: f64) -> f64 {
        if self.bits {
            nats / std::f64::consts::LN_2
        } else {
            nats
        }
    }

    pub fn rates<const N: usize>(self, p: [f64; N]) -> [f64; N] {
        p.map(|v| self.rate(v))
    }

    pub fn name(self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}
