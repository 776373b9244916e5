//! Closed-form link between the approximate criterion and the generalized
//! wordlength pattern.
//!
//! For a ±1 design and a symmetric prior, P̃_α splits into a constant that
//! depends only on (N, k, α, ξ) plus (1/N) times a nonnegative combination of
//! b_1..b_4 (second-order maximal model) or b_1, b_2 (first-order).

use serde::Serialize;

use crate::design::{gwlp_up_to, Design};
use crate::error::{Error, Result};
use crate::model::{pair_class, WeightTable};
use crate::numeric::binomial_f64;

/// Joint inclusion probabilities of the exchangeable effect-pair classes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct XiSet {
    /// One specific main effect.
    pub xi10: f64,
    /// Two specific main effects.
    pub xi20: f64,
    /// One specific interaction (and hence its parents).
    pub xi21: f64,
    /// A main effect plus an interaction not involving it.
    pub xi31: f64,
    /// Two interactions sharing a factor.
    pub xi32: f64,
    /// Two disjoint interactions.
    pub xi42: f64,
}

impl XiSet {
    /// Value for a class (distinct factors, distinct interactions) as returned
    /// by [`pair_class`].
    pub fn class_value(&self, class: (usize, usize)) -> f64 {
        match class {
            (0, 0) => 1.0,
            (1, 0) => self.xi10,
            (2, 0) => self.xi20,
            (2, 1) => self.xi21,
            (3, 1) => self.xi31,
            (3, 2) => self.xi32,
            (4, 2) => self.xi42,
            _ => unreachable!("no effect pair has class {class:?}"),
        }
    }

    fn slot(&mut self, class: (usize, usize)) -> Option<&mut f64> {
        match class {
            (1, 0) => Some(&mut self.xi10),
            (2, 0) => Some(&mut self.xi20),
            (2, 1) => Some(&mut self.xi21),
            (3, 1) => Some(&mut self.xi31),
            (3, 2) => Some(&mut self.xi32),
            (4, 2) => Some(&mut self.xi42),
            _ => None,
        }
    }
}

const CLASSES: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 1), (3, 2), (4, 2)];

/// Tolerance for agreement within a symmetry class.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Reads the ξ values off a weight table, checking every entry of each class agrees.
pub fn xi_from_weights(w: &WeightTable) -> Result<XiSet> {
    let max = w.maximal();
    if !(max.is_first_order() || max.is_full_second_order()) {
        return Err(Error::Argument(
            "ξ classes need a first-order or full second-order maximal model".into(),
        ));
    }
    let effects = max.effects();
    let mut xi = XiSet::default();
    let mut seen = [false; 6];
    for (i, &ei) in effects.iter().enumerate() {
        for (j, &ej) in effects.iter().enumerate() {
            let class = pair_class(ei, ej);
            let value = w.pair(i, j);
            let Some(slot) = xi.slot(class) else {
                if (value - 1.0).abs() > SYMMETRY_TOL {
                    return Err(Error::Symmetry { i, j, value, expected: 1.0 });
                }
                continue;
            };
            let k = CLASSES.iter().position(|&c| c == class).expect("class has a slot");
            if seen[k] {
                if (value - *slot).abs() > SYMMETRY_TOL {
                    return Err(Error::Symmetry { i, j, value, expected: *slot });
                }
            } else {
                *slot = value;
                seen[k] = true;
            }
        }
    }
    Ok(xi)
}

/// Design-dependent part of P̃_α for a first-order maximal model, in units
/// where P̃_α = constant + value / N.
pub fn bridge_first_order(b1: f64, b2: f64, xi1: f64, xi2: f64, alpha: f64) -> f64 {
    (1.0 + alpha / 3.0) * xi1 * b1 + 2.0 * (1.0 - 2.0 * alpha / 3.0) * xi2 * b2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeValue {
    pub value: f64,
    /// Multipliers of b_1, b_2, b_3, b_4.
    pub coefficients: [f64; 4],
}

/// Multipliers of b_1..b_4 for a full second-order maximal model on k factors.
pub fn second_order_coefficients(xi: &XiSet, k: usize, alpha: f64) -> [f64; 4] {
    let k = k as f64;
    [
        (1.0 + alpha / 3.0) * xi.xi10 + 2.0 * (1.0 - 7.0 * alpha / 9.0) * (k - 1.0) * xi.xi21,
        2.0 * (1.0 - 2.0 * alpha / 3.0) * xi.xi20
            + (1.0 + alpha / 9.0) * xi.xi21
            + 2.0 * (1.0 - 8.0 * alpha / 9.0) * (k - 2.0) * xi.xi32,
        6.0 * (1.0 - 7.0 * alpha / 9.0) * xi.xi31,
        6.0 * (1.0 - 8.0 * alpha / 9.0) * xi.xi42,
    ]
}

/// Multipliers of b_1, b_2 for a first-order maximal model (b_3, b_4 get 0).
pub fn first_order_coefficients(xi: &XiSet, alpha: f64) -> [f64; 4] {
    [(1.0 + alpha / 3.0) * xi.xi10, 2.0 * (1.0 - 2.0 * alpha / 3.0) * xi.xi20, 0.0, 0.0]
}

/// Second-order bridge. `b` holds b_1.. (missing entries count as 0).
pub fn bridge_second_order(b: &[f64], xi: &XiSet, k: usize, alpha: f64) -> BridgeValue {
    let coefficients = second_order_coefficients(xi, k, alpha);
    BridgeValue { value: dot(&coefficients, b), coefficients }
}

fn dot(coef: &[f64; 4], b: &[f64]) -> f64 {
    coef.iter().zip(b.iter().chain(std::iter::repeat(&0.0))).map(|(c, x)| c * x).sum()
}

/// The design-independent part of P̃_α: Σ_i α_i r_ii p_ii with r_ii = 1/N.
pub fn tilde_constant(k: usize, interactions: usize, xi: &XiSet, alpha: f64, n_runs: usize) -> f64 {
    (alpha
        + (1.0 - 2.0 * alpha / 3.0) * k as f64 * xi.xi10
        + (1.0 - 8.0 * alpha / 9.0) * interactions as f64 * xi.xi21)
        / n_runs as f64
}

/// Bridge coefficients for the weight table's maximal model.
pub fn coefficients_for(w: &WeightTable, xi: &XiSet, alpha: f64) -> [f64; 4] {
    let max = w.maximal();
    if max.is_first_order() {
        first_order_coefficients(xi, alpha)
    } else {
        second_order_coefficients(xi, max.k(), alpha)
    }
}

/// Mean P̃_α over all k-factor projections of an m-factor design, from the
/// design's b_1..b_4 alone. A word of length l lies in C(m−l, k−l) of the
/// C(m, k) projections.
pub fn averaged_tilde_from_gwlp(b: &[f64], m: usize, w: &WeightTable, xi: &XiSet, alpha: f64) -> f64 {
    let max = w.maximal();
    let k = max.k();
    let coef = coefficients_for(w, xi, alpha);
    let total = binomial_f64(m, k);
    let mut scaled = [0.0; 4];
    for (l, s) in scaled.iter_mut().enumerate() {
        let len = l + 1;
        if len <= k {
            *s = b.get(l).copied().unwrap_or(0.0) * binomial_f64(m - len, k - len) / total;
        }
    }
    tilde_constant(k, max.interactions().len(), xi, alpha, w.n_runs()) + dot(&coef, &scaled) / w.n_runs() as f64
}

/// |ΔP̃_α − Δbridge/N| between two k-factor designs with equal run size.
pub fn verify_bridge(d1: &Design, d2: &Design, w: &WeightTable, alpha: f64) -> Result<f64> {
    let k = w.maximal().k();
    if d1.runs() != d2.runs() || d1.runs() != w.n_runs() {
        return Err(Error::Argument("designs and weight table must share the run size".into()));
    }
    if d1.factors() != k || d2.factors() != k {
        return Err(Error::Argument(format!("both designs must have exactly {k} factors")));
    }
    let xi = xi_from_weights(w)?;
    let coef = coefficients_for(w, &xi, alpha);
    let side = |d: &Design| -> Result<(f64, f64)> {
        let r = crate::approx::r_table(d, w.maximal())?;
        let p = crate::approx::tilde_criteria(&r, w, alpha)?.tilde_p;
        Ok((p, dot(&coef, &gwlp_up_to(d, 4).b)))
    };
    let (p1, g1) = side(d1)?;
    let (p2, g2) = side(d2)?;
    Ok(((p1 - p2) - (g1 - g2) / d1.runs() as f64).abs())
}
