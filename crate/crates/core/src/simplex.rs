//! Phase-I feasibility for small dense systems `A x = b, x ≥ 0`.
//!
//! Used by the degradedness checker (per-state stochastic-map search) and by
//! convex-hull membership tests.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOne {
    /// Best point found; exactly feasible up to rounding when
    /// `infeasibility` is ~0.
    pub x: Vec<f64>,
    /// Minimum of `Σ |A x − b|_1` over `x ≥ 0`.
    pub infeasibility: f64,
}

/// Minimize the total artificial slack of `A x = b` over `x ≥ 0`.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> PhaseOne {
    let m = a.len();
    assert_eq!(m, b.len(), "row count mismatch");
    let n = a.first().map_or(0, Vec::len);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let xs: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (row, &bi) in a.iter().zip(b) {
        assert_eq!(row.len(), n, "ragged constraint matrix");
        let up = lp.add_var(1.0, (0.0, f64::INFINITY));
        let down = lp.add_var(1.0, (0.0, f64::INFINITY));
        let mut terms: Vec<_> = xs.iter().zip(row).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
        terms.push((up, 1.0));
        terms.push((down, -1.0));
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, bi);
    }
    let x: Vec<f64> = match lp.solve() {
        Ok(sol) => xs.iter().map(|v| sol[*v].max(0.0)).collect(),
        Err(_) => vec![0.0; n],
    };
    let infeasibility = a
        .iter()
        .zip(b)
        .map(|(row, bi)| (row.iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>() - bi).abs())
        .sum();
    PhaseOne { x, infeasibility }
}

/// Is `p` dominated by a convex combination of `points`, i.e. inside their
/// downward-closed convex hull (restricted to the nonnegative orthant)?
pub fn in_downward_hull(points: &[Vec<f64>], p: &[f64], tol: f64) -> bool {
    if points.is_empty() {
        return p.iter().all(|v| *v <= tol);
    }
    let d = p.len();
    let k = points.len();
    // Variables: λ_1..λ_k, slack_1..slack_d.  Σλ v − slack = p, Σλ = 1.
    let mut a = vec![vec![0.0; k + d]; d + 1];
    for (j, pt) in points.iter().enumerate() {
        for c in 0..d {
            a[c][j] = pt[c];
        }
        a[d][j] = 1.0;
    }
    for c in 0..d {
        a[c][k + c] = -1.0;
    }
    let mut b: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    b.push(1.0);
    phase_one(&a, &b).infeasibility <= tol
}

/// Is `p` a convex combination of `points` (exact hull, no downward closure)?
pub fn in_convex_hull(points: &[Vec<f64>], p: &[f64], tol: f64) -> bool {
    if points.is_empty() {
        return false;
    }
    let d = p.len();
    let mut a = vec![vec![0.0; points.len()]; d + 1];
    for (j, pt) in points.iter().enumerate() {
        for c in 0..d {
            a[c][j] = pt[c];
        }
        a[d][j] = 1.0;
    }
    let mut b = p.to_vec();
    b.push(1.0);
    phase_one(&a, &b).infeasibility <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_system() {
        // x + y = 1, x − y = 0.2
        let r = phase_one(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[1.0, 0.2]);
        assert!(r.infeasibility < 1e-12);
        assert!((r.x[0] - 0.6).abs() < 1e-12 && (r.x[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_reports_residual() {
        // x = −1 has no nonnegative solution; best is x = 0 with residual 1.
        let r = phase_one(&[vec![1.0]], &[-1.0]);
        assert!((r.infeasibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_are_fine() {
        let r = phase_one(&[vec![1.0, 1.0], vec![2.0, 2.0]], &[1.0, 2.0]);
        assert!(r.infeasibility < 1e-12);
    }

    #[test]
    fn hull_membership() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(in_downward_hull(&pts, &[0.4, 0.4], 1e-9));
        assert!(!in_downward_hull(&pts, &[0.6, 0.6], 1e-9));
        assert!(in_convex_hull(&pts, &[0.5, 0.5], 1e-9));
        assert!(!in_convex_hull(&pts, &[0.2, 0.2], 1e-9));
    }
}
