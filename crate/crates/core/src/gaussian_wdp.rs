//! Three-receiver Gaussian broadcast channel with additive interference known
//! at the encoder (writing on dirty paper, layered).
//!
//! Layer k sees `Y_k = X_k + S_k + W_k`, where the effective state and noise
//! are
//!
//! | layer | state `S_k`     | noise `W_k`      |
//! |-------|-----------------|------------------|
//! | 3     | `S`             | `X1 + X2 + Z3`   |
//! | 2     | `S + X3`        | `X1 + Z2`        |
//! | 1     | `S + X2 + X3`   | `Z1`             |
//!
//! and the auxiliary is `U_k = X_k + β_k S_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WdpParams {
    /// Layer powers `(P1, P2, P3)`.
    pub p: [f64; 3],
    /// Noise variances `N1 ≤ N2 ≤ N3`.
    pub n: [f64; 3],
    /// Interference variance.
    pub q: f64,
}

impl WdpParams {
    pub fn new(p: [f64; 3], n: [f64; 3], q: f64) -> Result<Self> {
        let w = Self { p, n, q };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.p.iter().chain(&self.n).chain(std::iter::once(&self.q));
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg("powers, noise variances and Q must be finite and nonnegative"));
        }
        if !(self.n[0] <= self.n[1] && self.n[1] <= self.n[2]) {
            return Err(Error::arg(format!("noise variances must satisfy N1 ≤ N2 ≤ N3, got {:?}", self.n)));
        }
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `(Var S_k, Var W_k)` for layer `k ∈ {1,2,3}`.
    pub fn layer(&self, k: usize) -> Result<(f64, f64)> {
        let [p1, p2, p3] = self.p;
        let [n1, n2, n3] = self.n;
        match k {
            1 => Ok((self.q + p2 + p3, n1)),
            2 => Ok((self.q + p3, p1 + n2)),
            3 => Ok((self.q, p1 + p2 + n3)),
            _ => Err(Error::arg(format!("layer must be 1, 2 or 3, got {k}"))),
        }
    }
}

fn check_noise(p: &WdpParams) -> Result<()> {
    p.validate()?;
    if p.n.iter().any(|v| *v <= 0.0) {
        return Err(Error::arg("noise variances must be positive"));
    }
    Ok(())
}

/// Optimal inflation factors `(β1, β2, β3)`.
pub fn beta_star(p: &WdpParams) -> Result<[f64; 3]> {
    p.validate()?;
    let [p1, p2, p3] = p.p;
    let [n1, n2, n3] = p.n;
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::arg("zero denominator in optimal β"))
        }
    };
    Ok([
        ratio(p1, p1 + n1)?,
        ratio(p2, p1 + p2 + n2)?,
        ratio(p3, p.total_power() + n3)?,
    ])
}

/// Interference-free layer rates in nats.
pub fn wdp_rates(p: &WdpParams) -> Result<[f64; 3]> {
    check_noise(p)?;
    let [p1, p2, p3] = p.p;
    let [n1, n2, n3] = p.n;
    Ok([
        0.5 * (p1 / n1).ln_1p(),
        0.5 * (p2 / (p1 + n2)).ln_1p(),
        0.5 * (p3 / (p1 + p2 + n3)).ln_1p(),
    ])
}

/// `½ ln(Var A · Var B / det Cov(A,B))`, or 0 when either variance vanishes.
fn gaussian_mi(var_a: f64, var_b: f64, cov: f64) -> f64 {
    if var_a <= 0.0 || var_b <= 0.0 {
        return 0.0;
    }
    let det = var_a * var_b - cov * cov;
    if det <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * (var_a * var_b / det).ln()
}

/// `I(U_k;Y_k) − I(U_k;S_k)` for `U_k = X_k + β S_k`.
pub fn rate_of_beta(p: &WdpParams, layer: usize, beta: f64) -> Result<f64> {
    check_noise(p)?;
    let (vs, vw) = p.layer(layer)?;
    let px = p.p[layer - 1];
    let var_u = px + beta * beta * vs;
    let var_y = px + vs + vw;
    let cov_uy = px + beta * vs;
    let cov_us = beta * vs;
    Ok(gaussian_mi(var_u, var_y, cov_uy) - gaussian_mi(var_u, vs, cov_us))
}

/// The layer's effective state has zero variance, so its rate does not
/// depend on `β`.
pub fn is_flat(p: &WdpParams, layer: usize) -> Result<bool> {
    Ok(p.layer(layer)?.0 == 0.0)
}

/// Best `β` on the uniform grid of `points` values over `[0, 1]`.
pub fn grid_argmax(p: &WdpParams, layer: usize, points: usize) -> Result<(f64, f64)> {
    if points < 2 {
        return Err(Error::arg("grid needs at least two points"));
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..points {
        let b = i as f64 / (points - 1) as f64;
        let r = rate_of_beta(p, layer, b)?;
        if r > best.1 {
            best = (b, r);
        }
    }
    Ok(best)
}
