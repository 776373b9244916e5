//! Tie-sharing ranks and rank correlation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance under which two values share a rank.
pub const TIE_TOL: f64 = 1e-12;

fn tied(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// 1-based ranks, lower value = better; tied values share the minimum rank.
pub fn min_ranks(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&u| u < v && !tied(u, v, tol)).count())
        .collect()
}

/// Pearson correlation of two rank vectors. Two constant vectors correlate
/// perfectly (1); one constant vector against a varying one gives 0.
pub fn rank_correlation(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Argument("rank vectors must be nonempty and of equal length".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<usize>() as f64 / n;
    let my = y.iter().sum::<usize>() as f64 / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a as f64 - mx, b as f64 - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(match (sxx == 0.0, syy == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => sxy / (sxx * syy).sqrt(),
    })
}

/// Two criteria evaluated on the same designs, ranked and correlated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub labels: Vec<String>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub first_ranks: Vec<usize>,
    pub second_ranks: Vec<usize>,
    pub correlation: f64,
}

impl RankReport {
    pub fn new(labels: Vec<String>, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if labels.len() != first.len() || labels.len() != second.len() {
            return Err(Error::Argument("labels and value vectors must have equal length".into()));
        }
        let first_ranks = min_ranks(&first, TIE_TOL);
        let second_ranks = min_ranks(&second, TIE_TOL);
        let correlation = rank_correlation(&first_ranks, &second_ranks)?;
        Ok(Self { labels, first, second, first_ranks, second_ranks, correlation })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_minimum() {
        assert_eq!(min_ranks(&[0.3, 0.1, 0.3, 0.2], TIE_TOL), vec![3, 1, 3, 2]);
        assert_eq!(min_ranks(&[0.5; 4], TIE_TOL), vec![1; 4]);
        assert_eq!(min_ranks(&[0.1, 0.1 * (1.0 + 1e-14)], TIE_TOL), vec![1, 1]);
    }

    #[test]
    fn correlation_conventions() {
        assert_eq!(rank_correlation(&[1, 1, 1], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(rank_correlation(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert!((rank_correlation(&[1, 2, 3], &[3, 2, 1]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(rank_correlation(&[1, 1, 1], &[1, 2, 3]).unwrap(), 0.0);
        assert!(rank_correlation(&[1], &[1, 2]).is_err());
    }
}
