//! Additive-exponential-noise three-receiver broadcast channel with
//! exponential interference: printed inner and outer bounds and the
//! Erlang(2, m) entropy constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published value of `h(Erlang(2,1))`.
pub const PAPER_ERLANG2_CONSTANT: f64 = 1.154431;

/// Absolute tolerance of the entropy quadrature.
pub const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyMode {
    PaperClosedForm,
    NumericalOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterMode {
    PaperConstant,
    CorrectedConstant,
}

/// Thresholds for the high-input-mean regime of the inner bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// `m_x ≥ ratio · max(m_s, m_zk)`.
    pub ratio: f64,
    /// `max(m_s, m_zk) ≤ small`.
    pub small: f64,
}

impl Default for Regime {
    fn default() -> Self {
        Self { ratio: 20.0, small: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AenParams {
    pub m_x: f64,
    pub m_s: f64,
    pub m_z: [f64; 3],
}

impl AenParams {
    pub fn new(m_x: f64, m_s: f64, m_z: [f64; 3]) -> Result<Self> {
        let p = Self { m_x, m_s, m_z };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m_x, self.m_s, self.m_z[0], self.m_z[1], self.m_z[2]];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::arg(format!("all means must be positive, got {all:?}")));
        }
        Ok(())
    }

    pub fn regime_holds(&self, k: usize, regime: Regime) -> bool {
        let big = self.m_s.max(self.m_z[k]);
        self.m_x >= regime.ratio * big && big <= regime.small
    }
}

/// Differential entropy (nats) of Erlang(2, m).
pub fn erlang2_entropy(m: f64, mode: EntropyMode) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::arg(format!("mean must be positive, got {m}")));
    }
    Ok(match mode {
        EntropyMode::PaperClosedForm => PAPER_ERLANG2_CONSTANT + m.ln(),
        EntropyMode::NumericalOracle => {
            let ln_m2 = 2.0 * m.ln();
            let integrand = |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let f = t / (m * m) * (-t / m).exp();
                if f == 0.0 {
                    0.0
                } else {
                    -f * (t.ln() - ln_m2 - t / m)
                }
            };
            quadrature::double_exponential::integrate(integrand, 0.0, 50.0 * m, QUADRATURE_TOL).integral
        }
    })
}

/// Single-receiver achievable rate for noise mean `m_z`, evaluated exactly
/// as printed.
pub fn inner_rate(m_x: f64, m_s: f64, m_z: f64) -> f64 {
    let t = m_x + m_s + m_z;
    let a = m_x * t + m_s * m_z;
    (1.0 + (m_s + m_z) / m_z).ln() + a / (t * t) * (std::f64::consts::E * t.powi(3) / a).ln()
        - (m_x + m_s) / t * (std::f64::consts::E * t * t / (m_x + m_s)).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerBound {
    pub rates: [f64; 3],
    pub valid: [bool; 3],
}

pub fn aen_inner(p: &AenParams) -> Result<InnerBound> {
    aen_inner_with(p, Regime::default())
}

pub fn aen_inner_with(p: &AenParams, regime: Regime) -> Result<InnerBound> {
    p.validate()?;
    Ok(InnerBound {
        rates: [0, 1, 2].map(|k| inner_rate(p.m_x, p.m_s, p.m_z[k])),
        valid: [0, 1, 2].map(|k| p.regime_holds(k, regime)),
    })
}

/// Outer bound when interference and noise share the mean `m`.
pub fn aen_outer(p: &AenParams, mode: OuterMode) -> Result<[f64; 3]> {
    p.validate()?;
    let m = p.m_s;
    if p.m_z.iter().any(|z| (z - m).abs() > 1e-12) {
        return Err(Error::Precondition(format!(
            "outer bound needs m_s = m_z1 = m_z2 = m_z3, got m_s = {m}, m_z = {:?}",
            p.m_z
        )));
    }
    let head = (std::f64::consts::E * (p.m_x + 2.0 * m)).ln();
    let v = match mode {
        OuterMode::PaperConstant => head - PAPER_ERLANG2_CONSTANT - m.ln(),
        OuterMode::CorrectedConstant => head - erlang2_entropy(m, EntropyMode::NumericalOracle)?,
    };
    Ok([v; 3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // 1 + Euler–Mascheroni.
    const ONE_PLUS_GAMMA: f64 = 1.577_215_664_901_532_9;

    #[test]
    fn printed_constant() {
        assert_eq!(erlang2_entropy(1.0, EntropyMode::PaperClosedForm).unwrap(), 1.154431);
    }

    #[test]
    fn oracle_constant() {
        let h = erlang2_entropy(1.0, EntropyMode::NumericalOracle).unwrap();
        assert_abs_diff_eq!(h, ONE_PLUS_GAMMA, epsilon = 1e-8);
    }

    #[test]
    fn scale_covariance() {
        for mode in [EntropyMode::PaperClosedForm, EntropyMode::NumericalOracle] {
            let h1 = erlang2_entropy(1.0, mode).unwrap();
            for m in [0.1, 1.0, 10.0, 0.01, 250.0] {
                assert_abs_diff_eq!(erlang2_entropy(m, mode).unwrap() - h1, m.ln(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn outer_values() {
        let p = AenParams::new(10.0, 1.0, [1.0; 3]).unwrap();
        // 1 + ln 12 − 1.154431
        assert_abs_diff_eq!(aen_outer(&p, OuterMode::PaperConstant).unwrap()[0], 2.330475650, epsilon = 1e-9);
        assert_abs_diff_eq!(
            aen_outer(&p, OuterMode::CorrectedConstant).unwrap()[1],
            1.0 + 12f64.ln() - ONE_PLUS_GAMMA,
            epsilon = 1e-8
        );
    }

    #[test]
    fn outer_small_input_limit() {
        let p = AenParams::new(1e-12, 1.0, [1.0; 3]).unwrap();
        let v = aen_outer(&p, OuterMode::PaperConstant).unwrap()[2];
        assert_abs_diff_eq!(v, (2.0 * std::f64::consts::E).ln() - 1.154431, epsilon = 1e-9);
    }

    #[test]
    fn outer_needs_equal_means() {
        let p = AenParams::new(10.0, 1.0, [1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(aen_outer(&p, OuterMode::PaperConstant), Err(Error::Precondition(_))));
    }

    #[test]
    fn inner_frozen_value() {
        let p = AenParams::new(100.0, 0.01, [0.01, 0.02, 0.03]).unwrap();
        let b = aen_inner(&p).unwrap();
        // Term-by-term evaluation at 50 digits (mpmath).
        assert_abs_diff_eq!(b.rates[0], INNER_100_001_001, epsilon = 1e-10);
        assert_eq!(b.valid, [true; 3]);
    }

    #[test]
    fn inner_regime_flag() {
        let p = AenParams::new(0.05, 0.05, [0.01; 3]).unwrap();
        let b = aen_inner(&p).unwrap();
        assert_eq!(b.valid, [false; 3]);
        assert!(b.rates[0].is_finite());
    }

    #[test]
    fn inner_increasing_in_mx() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let mx = 10.0 * 100f64.powf(i as f64 / 100.0);
            let v = inner_rate(mx, 1e-3, 1e-3);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn nonpositive_rejected() {
        assert!(AenParams::new(0.0, 1.0, [1.0; 3]).is_err());
        assert!(erlang2_entropy(-1.0, EntropyMode::NumericalOracle).is_err());
    }

    const INNER_100_001_001: f64 = 1.098_151_874_782_612_9;
}
