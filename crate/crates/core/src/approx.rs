//! Approximate criteria built from the maximal-model Gram matrix alone.
//!
//! Each diagonal entry of (X_s′X_s)⁻¹ is approximated by a second-order
//! expansion in the off-diagonal aliasing, giving terms
//! r_ij = a_ij² / (a_ii² a_jj) that are weighted by the pair inclusion
//! probabilities p_ij. No submodel is ever factorized.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{gram_unchecked, project, Design, Effect};
use crate::error::{Error, Result};
use crate::model::{MaximalModel, WeightTable};
use crate::numeric::{combinations, Accumulator};

/// r_ij over the ordinals of a maximal model, with the integer Gram it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RTable {
    dim: usize,
    r: Vec<f64>,
    gram: Vec<i64>,
}

impl RTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.dim + j]
    }

    /// Integer Gram entry a_ij.
    pub fn gram(&self, i: usize, j: usize) -> i64 {
        self.gram[i * self.dim + j]
    }
}

/// r table of `d` under `max`.
pub fn r_table(d: &Design, max: &MaximalModel) -> Result<RTable> {
    if max.k() > d.factors() {
        return Err(Error::Argument(format!(
            "maximal model has {} factors but the design has {}",
            max.k(),
            d.factors()
        )));
    }
    Ok(r_table_from_gram(gram_unchecked(d, &max.effects()), max.v() + 1))
}

pub(crate) fn r_table_from_gram(gram: Vec<i64>, dim: usize) -> RTable {
    let mut r = vec![0.0; dim * dim];
    for i in 0..dim {
        let aii = gram[i * dim + i] as f64;
        for j in 0..dim {
            let aij = gram[i * dim + j] as f64;
            let ajj = gram[j * dim + j] as f64;
            r[i * dim + j] = aij * aij / (aii * aii * ajj);
        }
    }
    RTable { dim, r, gram }
}

/// Per-ordinal coefficients: g_i (1, 1/3, 1/9 by effect kind) and the blended
/// α_i = α·g_i + (1 − α)·[i ≥ 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaWeights {
    pub alpha: f64,
    pub g: Vec<f64>,
    pub coef: Vec<f64>,
}

impl AlphaWeights {
    pub fn new(max: &MaximalModel, alpha: f64) -> Self {
        let g: Vec<f64> = max.effects().iter().map(Effect::moment).collect();
        let coef = g
            .iter()
            .enumerate()
            .map(|(i, &gi)| alpha * gi + if i >= 1 { 1.0 - alpha } else { 0.0 })
            .collect();
        Self { alpha, g, coef }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TildeValues {
    pub tilde_a: f64,
    pub tilde_i: f64,
    pub tilde_p: f64,
}

fn check_dims(r: &RTable, w: &WeightTable) -> Result<()> {
    if r.dim() != w.dim() {
        return Err(Error::Argument(format!(
            "r table has {} effects but the weight table has {}",
            r.dim(),
            w.dim()
        )));
    }
    Ok(())
}

/// Ã_s, Ĩ_s and P̃_α = α Ĩ_s + (1 − α) Ã_s.
pub fn tilde_criteria(r: &RTable, w: &WeightTable, alpha: f64) -> Result<TildeValues> {
    check_dims(r, w)?;
    let g = AlphaWeights::new(w.maximal(), alpha).g;
    let dim = r.dim();
    let (mut a, mut i_acc) = (Accumulator::new(), Accumulator::new());
    for i in 0..dim {
        let mut row = Accumulator::new();
        for j in 0..dim {
            row.add(r.get(i, j) * w.pair(i, j));
        }
        let row = row.value();
        i_acc.add(g[i] * row);
        if i >= 1 {
            a.add(row);
        }
    }
    let (tilde_a, tilde_i) = (a.value(), i_acc.value());
    Ok(TildeValues { tilde_a, tilde_i, tilde_p: alpha * tilde_i + (1.0 - alpha) * tilde_a })
}

/// P̃_α evaluated directly with the α_i coefficients.
pub fn tilde_p_direct(r: &RTable, w: &WeightTable, alpha: f64) -> Result<f64> {
    check_dims(r, w)?;
    let coef = AlphaWeights::new(w.maximal(), alpha).coef;
    let dim = r.dim();
    let mut acc = Accumulator::new();
    for i in 0..dim {
        for j in 0..dim {
            acc.add(coef[i] * r.get(i, j) * w.pair(i, j));
        }
    }
    Ok(acc.value())
}

fn tilde_on(d: &Design, cols: &[usize], w: &WeightTable, alpha: f64) -> Result<TildeValues> {
    let p = project(d, cols)?;
    let max = w.maximal();
    tilde_criteria(&r_table_from_gram(gram_unchecked(&p, &max.effects()), max.v() + 1), w, alpha)
}

/// Mean of Ã, Ĩ and P̃ over the given projections.
pub fn average_tilde_over(d: &Design, projections: &[Vec<usize>], w: &WeightTable, alpha: f64) -> Result<TildeValues> {
    if projections.is_empty() {
        return Err(Error::Argument("no projections to average over".into()));
    }
    let vals: Vec<TildeValues> =
        projections.par_iter().map(|cols| tilde_on(d, cols, w, alpha)).collect::<Result<_>>()?;
    let n = vals.len() as f64;
    let mean = |f: fn(&TildeValues) -> f64| vals.iter().map(f).collect::<Accumulator>().value() / n;
    Ok(TildeValues { tilde_a: mean(|v| v.tilde_a), tilde_i: mean(|v| v.tilde_i), tilde_p: mean(|v| v.tilde_p) })
}

/// Mean over all C(m, k) projections. `w` must be built for a k-factor maximal model.
pub fn projection_average_tilde(d: &Design, k: usize, w: &WeightTable, alpha: f64) -> Result<TildeValues> {
    if k == 0 || k > d.factors() {
        return Err(Error::Argument(format!("projection size {k} must be in 1..={}", d.factors())));
    }
    if w.maximal().k() != k {
        return Err(Error::Argument("weight table was built for a different number of factors".into()));
    }
    let subsets: Vec<Vec<usize>> = combinations(d.factors(), k).collect();
    average_tilde_over(d, &subsets, w, alpha)
}
