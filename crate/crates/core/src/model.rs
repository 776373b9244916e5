//! The strong-heredity submodel lattice of a maximal model and the prior
//! weights p_s / p_ij placed on it.
//!
//! Two weight engines are provided. The enumerated engine walks every
//! submodel and works for any maximal model and any prior. The exchangeable
//! engine handles symmetric priors on first-order or full second-order
//! maximal models by summing over (number of mains, number of interactions)
//! classes, which keeps it usable at k = 24 where the lattice has ~2^276 nodes.

use serde::{Deserialize, Serialize};

use crate::bridge::XiSet;
use crate::design::Effect;
use crate::error::{Error, Result};
use crate::numeric::{binomial_f64, ln_pow, Accumulator};

/// Default cap on the number of lattice nodes the enumerated engine will visit.
pub const DEFAULT_LATTICE_CAP: u128 = 10_000_000;

/// k main effects plus a set of k* two-factor interactions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaximalModel {
    k: usize,
    interactions: Vec<(usize, usize)>,
}

impl MaximalModel {
    /// Interactions are normalized to (low, high) and sorted lexicographically.
    pub fn new(k: usize, interactions: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut ints: Vec<(usize, usize)> = Vec::new();
        for (a, b) in interactions {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if a == b || b >= k {
                return Err(Error::Argument(format!(
                    "interaction ({}, {}) is not a pair of distinct factors in 1..{k}",
                    a + 1,
                    b + 1
                )));
            }
            ints.push((a, b));
        }
        ints.sort_unstable();
        let before = ints.len();
        ints.dedup();
        if ints.len() != before {
            return Err(Error::Argument("duplicate interaction in maximal model".into()));
        }
        Ok(Self { k, interactions: ints })
    }

    /// Main effects only.
    pub fn first_order(k: usize) -> Self {
        Self { k, interactions: Vec::new() }
    }

    /// All k main effects and all C(k, 2) two-factor interactions.
    pub fn second_order(k: usize) -> Self {
        let interactions = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        Self { k, interactions }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn interactions(&self) -> &[(usize, usize)] {
        &self.interactions
    }

    /// v = k + k*.
    pub fn v(&self) -> usize {
        self.k + self.interactions.len()
    }

    pub fn is_first_order(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn is_full_second_order(&self) -> bool {
        self.interactions.len() == self.k * self.k.saturating_sub(1) / 2
    }

    /// Model-matrix column order: intercept, mains, interactions.
    pub fn effects(&self) -> Vec<Effect> {
        let mut out = Vec::with_capacity(self.v() + 1);
        out.push(Effect::Intercept);
        out.extend((0..self.k).map(Effect::Main));
        out.extend(self.interactions.iter().map(|&(a, b)| Effect::Interaction(a, b)));
        out
    }

    /// Ordinal of the `t`-th interaction.
    pub fn interaction_ordinal(&self, t: usize) -> usize {
        1 + self.k + t
    }

    /// Same structure on a different number of factors, used for projections.
    pub fn same_shape(&self, k: usize) -> Result<Self> {
        if self.is_first_order() {
            Ok(Self::first_order(k))
        } else if self.is_full_second_order() {
            Ok(Self::second_order(k))
        } else {
            Err(Error::Argument(
                "only first-order and full second-order maximal models can be re-sized".into(),
            ))
        }
    }
}

/// A heredity-respecting subset of the maximal model's effects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Submodel {
    /// Main effects present, ascending.
    pub mains: Vec<usize>,
    /// Positions in `MaximalModel::interactions` of the interactions present, ascending.
    pub interactions: Vec<usize>,
    /// v_s + 1 ≤ N.
    pub eligible: bool,
}

impl Submodel {
    /// v_s = k_s + k_s*.
    pub fn v(&self) -> usize {
        self.mains.len() + self.interactions.len()
    }

    /// Ordinals (positions in the maximal model matrix), intercept first.
    pub fn ordinals(&self, max: &MaximalModel) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.v() + 1);
        out.push(0);
        out.extend(self.mains.iter().map(|&f| 1 + f));
        out.extend(self.interactions.iter().map(|&t| max.interaction_ordinal(t)));
        out
    }

    pub fn effects(&self, max: &MaximalModel) -> Vec<Effect> {
        let mut out = Vec::with_capacity(self.v() + 1);
        out.push(Effect::Intercept);
        out.extend(self.mains.iter().map(|&f| Effect::Main(f)));
        out.extend(self.interactions.iter().map(|&t| {
            let (a, b) = max.interactions()[t];
            Effect::Interaction(a, b)
        }));
        out
    }

    pub fn contains_main(&self, f: usize) -> bool {
        self.mains.binary_search(&f).is_ok()
    }

    /// Strong heredity: every interaction's parents are present.
    pub fn respects_heredity(&self, max: &MaximalModel) -> bool {
        self.interactions.iter().all(|&t| {
            let (a, b) = max.interactions()[t];
            self.contains_main(a) && self.contains_main(b)
        })
    }
}

/// Number of heredity submodels of `max`, or `None` once it exceeds `cap`.
pub fn lattice_size(max: &MaximalModel, cap: u128) -> Option<u128> {
    if max.k() >= 64 || (1u128 << max.k()) > cap {
        return None;
    }
    let mut total: u128 = 0;
    for mask in 0u64..(1u64 << max.k()) {
        let avail = available_interactions(max, mask).len() as u32;
        if avail >= 64 {
            return None;
        }
        total += 1u128 << avail;
        if total > cap {
            return None;
        }
    }
    Some(total)
}

fn available_interactions(max: &MaximalModel, mask: u64) -> Vec<usize> {
    max.interactions()
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| mask >> a & 1 == 1 && mask >> b & 1 == 1)
        .map(|(t, _)| t)
        .collect()
}

/// Every heredity submodel (intercept-only included), flagged by eligibility.
/// Order: main-effect subsets in binary counting order; within each, interaction
/// subsets in binary counting order over the available interactions.
pub fn enumerate_submodels(max: &MaximalModel, n_runs: usize) -> Result<Vec<Submodel>> {
    enumerate_submodels_capped(max, n_runs, DEFAULT_LATTICE_CAP)
}

pub fn enumerate_submodels_capped(max: &MaximalModel, n_runs: usize, cap: u128) -> Result<Vec<Submodel>> {
    let size = lattice_size(max, cap).ok_or_else(|| Error::Capacity {
        size: lattice_lower_bound(max),
        cap,
    })?;
    let mut out = Vec::with_capacity(size as usize);
    for mask in 0u64..(1u64 << max.k()) {
        let mains: Vec<usize> = (0..max.k()).filter(|&f| mask >> f & 1 == 1).collect();
        let avail = available_interactions(max, mask);
        for imask in 0u64..(1u64 << avail.len()) {
            let interactions: Vec<usize> = avail
                .iter()
                .enumerate()
                .filter(|(i, _)| imask >> i & 1 == 1)
                .map(|(_, &t)| t)
                .collect();
            let eligible = 1 + mains.len() + interactions.len() <= n_runs;
            out.push(Submodel { mains: mains.clone(), interactions, eligible });
        }
    }
    Ok(out)
}

fn lattice_lower_bound(max: &MaximalModel) -> u128 {
    if max.k() >= 127 {
        u128::MAX
    } else {
        1u128 << max.k()
    }
}

/// Prior over submodels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub enum PriorSpec {
    /// Every eligible submodel equally likely.
    Equal,
    /// Hierarchical prior with one main-effect probability and one conditional
    /// interaction probability shared by every factor / pair.
    Symmetric { pi1: f64, pi2: f64 },
    /// Hierarchical prior with per-factor and per-pair probabilities. Pairs are
    /// 0-based `(low, high, probability)`; pairs absent from the list are not
    /// allowed when the maximal model contains them.
    PerEffect { main: Vec<f64>, pair: Vec<(usize, usize, f64)> },
}

impl PriorSpec {
    pub fn hierarchical(pi1: f64, pi2: f64) -> Self {
        PriorSpec::Symmetric { pi1, pi2 }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, PriorSpec::PerEffect { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let check = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Argument(format!("{what} probability {p} is outside [0, 1]")))
            }
        };
        match self {
            PriorSpec::Equal => Ok(()),
            PriorSpec::Symmetric { pi1, pi2 } => {
                check(*pi1, "main-effect")?;
                check(*pi2, "interaction")
            }
            PriorSpec::PerEffect { main, pair } => {
                main.iter().try_for_each(|&p| check(p, "main-effect"))?;
                pair.iter().try_for_each(|&(_, _, p)| check(p, "interaction"))
            }
        }
    }

    fn main_prob(&self, f: usize) -> Result<f64> {
        match self {
            PriorSpec::Equal => Ok(1.0),
            PriorSpec::Symmetric { pi1, .. } => Ok(*pi1),
            PriorSpec::PerEffect { main, .. } => main
                .get(f)
                .copied()
                .ok_or_else(|| Error::Argument(format!("no main-effect probability for factor {}", f + 1))),
        }
    }

    fn pair_prob(&self, a: usize, b: usize) -> Result<f64> {
        match self {
            PriorSpec::Equal => Ok(1.0),
            PriorSpec::Symmetric { pi2, .. } => Ok(*pi2),
            PriorSpec::PerEffect { pair, .. } => pair
                .iter()
                .find(|&&(x, y, _)| (x, y) == (a, b) || (y, x) == (a, b))
                .map(|&(_, _, p)| p)
                .ok_or_else(|| {
                    Error::Argument(format!("no interaction probability for pair ({}, {})", a + 1, b + 1))
                }),
        }
    }
}

/// Wire form: {"mode":"equal"}, {"mode":"hierarchical","pi1":..,"pi2":..}, or
/// {"mode":"hierarchical","pi_main":[..],"pi_pair":[[i,j,p],..]} with 1-based factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPrior {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi_main: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi_pair: Option<Vec<(usize, usize, f64)>>,
}

impl TryFrom<RawPrior> for PriorSpec {
    type Error = Error;

    fn try_from(raw: RawPrior) -> Result<Self> {
        let prior = match raw.mode.as_str() {
            "equal" => PriorSpec::Equal,
            "hierarchical" => match (raw.pi1, raw.pi2, raw.pi_main, raw.pi_pair) {
                (Some(pi1), Some(pi2), None, None) => PriorSpec::Symmetric { pi1, pi2 },
                (None, None, Some(main), Some(pair)) => {
                    let pair = pair
                        .into_iter()
                        .map(|(a, b, p)| {
                            if a == 0 || b == 0 {
                                Err(Error::Argument("pi_pair factors are 1-based".into()))
                            } else {
                                Ok((a - 1, b - 1, p))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    PriorSpec::PerEffect { main, pair }
                }
                _ => {
                    return Err(Error::Argument(
                        "hierarchical prior needs either pi1 and pi2, or pi_main and pi_pair".into(),
                    ))
                }
            },
            other => return Err(Error::Argument(format!("unknown prior mode {other:?}"))),
        };
        prior.validate()?;
        Ok(prior)
    }
}

impl From<PriorSpec> for RawPrior {
    fn from(p: PriorSpec) -> Self {
        match p {
            PriorSpec::Equal => RawPrior { mode: "equal".into(), pi1: None, pi2: None, pi_main: None, pi_pair: None },
            PriorSpec::Symmetric { pi1, pi2 } => RawPrior {
                mode: "hierarchical".into(),
                pi1: Some(pi1),
                pi2: Some(pi2),
                pi_main: None,
                pi_pair: None,
            },
            PriorSpec::PerEffect { main, pair } => RawPrior {
                mode: "hierarchical".into(),
                pi1: None,
                pi2: None,
                pi_main: Some(main),
                pi_pair: Some(pair.into_iter().map(|(a, b, p)| (a + 1, b + 1, p)).collect()),
            },
        }
    }
}

/// Unnormalized prior probability of a submodel. Interactions whose parents are
/// not both present contribute a factor of 1.
pub fn model_prior(m: &Submodel, prior: &PriorSpec, max: &MaximalModel) -> Result<f64> {
    if matches!(prior, PriorSpec::Equal) {
        return Ok(1.0);
    }
    let mut pr = 1.0;
    for f in 0..max.k() {
        let p = prior.main_prob(f)?;
        pr *= if m.contains_main(f) { p } else { 1.0 - p };
    }
    for (t, &(a, b)) in max.interactions().iter().enumerate() {
        if m.contains_main(a) && m.contains_main(b) {
            let p = prior.pair_prob(a, b)?;
            pr *= if m.interactions.binary_search(&t).is_ok() { p } else { 1.0 - p };
        }
    }
    Ok(pr)
}

/// A submodel together with its normalized weight p_s (0 when ineligible).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSubmodel {
    pub model: Submodel,
    pub weight: f64,
}

/// Model weights p_s (enumerated engine only) and the pairwise table
/// p_ij = Σ_s M_s(i, j)·p_s over effect ordinals 0..=v.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    max: MaximalModel,
    n_runs: usize,
    dim: usize,
    p_pair: Vec<f64>,
    gamma: f64,
    submodels: Option<Vec<WeightedSubmodel>>,
}

impl WeightTable {
    pub fn maximal(&self) -> &MaximalModel {
        &self.max
    }

    pub fn n_runs(&self) -> usize {
        self.n_runs
    }

    /// v + 1.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.p_pair[i * self.dim + j]
    }

    pub fn pairs(&self) -> &[f64] {
        &self.p_pair
    }

    /// Sum of raw prior probabilities over eligible submodels.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Weighted submodels, present only for tables built by enumeration.
    pub fn submodels(&self) -> Option<&[WeightedSubmodel]> {
        self.submodels.as_deref()
    }

    /// Number of eligible submodels n_0 (enumerated tables only).
    pub fn eligible_count(&self) -> Option<usize> {
        self.submodels.as_ref().map(|s| s.iter().filter(|w| w.model.eligible).count())
    }
}

/// Weight table by explicit enumeration of `models`.
pub fn weight_table_enumerated(
    models: &[Submodel],
    prior: &PriorSpec,
    max: &MaximalModel,
    n_runs: usize,
) -> Result<WeightTable> {
    prior.validate()?;
    let raw: Vec<f64> = models
        .iter()
        .map(|m| {
            if !m.respects_heredity(max) {
                return Err(Error::Argument("submodel violates strong heredity".into()));
            }
            if m.eligible {
                model_prior(m, prior, max)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let gamma = raw.iter().copied().collect::<Accumulator>().value();
    if gamma <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    let dim = max.v() + 1;
    let mut acc = vec![Accumulator::new(); dim * dim];
    let mut submodels = Vec::with_capacity(models.len());
    for (m, &r) in models.iter().zip(&raw) {
        let p = r / gamma;
        if p > 0.0 {
            let ords = m.ordinals(max);
            for &i in &ords {
                for &j in &ords {
                    acc[i * dim + j].add(p);
                }
            }
        }
        submodels.push(WeightedSubmodel { model: m.clone(), weight: p });
    }
    Ok(WeightTable {
        max: max.clone(),
        n_runs,
        dim,
        p_pair: acc.iter().map(Accumulator::value).collect(),
        gamma,
        submodels: Some(submodels),
    })
}

/// Joint-inclusion class of an ordered effect pair: (distinct factors touched,
/// distinct interactions among the two).
pub fn pair_class(e1: Effect, e2: Effect) -> (usize, usize) {
    let mut factors = e1.factors();
    factors.extend(e2.factors());
    factors.sort_unstable();
    factors.dedup();
    let ints = match (e1, e2) {
        (Effect::Interaction(..), Effect::Interaction(..)) if e1 == e2 => 1,
        (Effect::Interaction(..), Effect::Interaction(..)) => 2,
        (Effect::Interaction(..), _) | (_, Effect::Interaction(..)) => 1,
        _ => 0,
    };
    (factors.len(), ints)
}

/// Inclusion probabilities for each exchangeable class, computed from
/// closed-form sums over (a, b) = (#mains, #interactions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeableSums {
    pub gamma: f64,
    pub xi: XiSet,
}

/// Closed-form class sums for a symmetric prior on a first-order or full
/// second-order maximal model with `k` factors.
pub fn exchangeable_sums(max: &MaximalModel, prior: &PriorSpec, n_runs: usize) -> Result<ExchangeableSums> {
    prior.validate()?;
    let k = max.k();
    let second = if max.is_first_order() {
        false
    } else if max.is_full_second_order() {
        true
    } else {
        return Err(Error::Argument(
            "the exchangeable engine needs a first-order or full second-order maximal model".into(),
        ));
    };
    let (pi1, pi2) = match *prior {
        PriorSpec::Equal => (None, None),
        PriorSpec::Symmetric { pi1, pi2 } => {
            if pi2 > 0.0 && k < 2 {
                return Err(Error::Argument("interaction prior given with fewer than two factors".into()));
            }
            (Some(pi1), Some(pi2))
        }
        PriorSpec::PerEffect { .. } => {
            return Err(Error::Argument("the exchangeable engine needs a symmetric prior".into()));
        }
    };
    // ln of the per-model weight for a model with a mains and b interactions
    let ln_weight = |a: usize, b: usize, pairs: usize| -> f64 {
        match (pi1, pi2) {
            (Some(p1), Some(p2)) => {
                ln_pow(p1, a) + ln_pow(1.0 - p1, k - a) + ln_pow(p2, b) + ln_pow(1.0 - p2, pairs - b)
            }
            _ => 0.0,
        }
    };
    // Σ over models containing `fm` specific mains and `fi` specific interactions
    let class_sum = |fm: usize, fi: usize| -> Vec<f64> {
        let mut logs = Vec::new();
        for a in fm..=k {
            let pairs = if second { a * a.saturating_sub(1) / 2 } else { 0 };
            for b in fi..=pairs {
                if 1 + a + b > n_runs {
                    break;
                }
                let count = binomial_f64(k - fm, a - fm) * binomial_f64(pairs - fi, b - fi);
                if count == 0.0 {
                    continue;
                }
                let lw = ln_weight(a, b, pairs);
                if lw.is_finite() {
                    logs.push(count.ln() + lw);
                }
            }
        }
        logs
    };
    let log_sum = |logs: &[f64]| -> Option<f64> {
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi == f64::NEG_INFINITY {
            return None;
        }
        let s = logs.iter().map(|&l| (l - hi).exp()).collect::<Accumulator>().value();
        Some(hi + s.ln())
    };
    let ln_gamma = log_sum(&class_sum(0, 0)).ok_or(Error::DegeneratePrior)?;
    let ratio = |fm: usize, fi: usize| -> f64 {
        if fm > k || (fi > 0 && !second) {
            return 0.0;
        }
        match log_sum(&class_sum(fm, fi)) {
            Some(l) => (l - ln_gamma).exp(),
            None => 0.0,
        }
    };
    Ok(ExchangeableSums {
        gamma: ln_gamma.exp(),
        xi: XiSet {
            xi10: ratio(1, 0),
            xi20: ratio(2, 0),
            xi21: ratio(2, 1),
            xi31: ratio(3, 1),
            xi32: ratio(3, 2),
            xi42: ratio(4, 2),
        },
    })
}

/// Weight table for a symmetric prior without enumerating submodels.
pub fn weight_table_exchangeable(max: &MaximalModel, prior: &PriorSpec, n_runs: usize) -> Result<WeightTable> {
    let sums = exchangeable_sums(max, prior, n_runs)?;
    let effects = max.effects();
    let dim = effects.len();
    let mut p_pair = vec![0.0; dim * dim];
    for (i, &ei) in effects.iter().enumerate() {
        for (j, &ej) in effects.iter().enumerate().skip(i) {
            let p = sums.xi.class_value(pair_class(ei, ej));
            p_pair[i * dim + j] = p;
            p_pair[j * dim + i] = p;
        }
    }
    Ok(WeightTable { max: max.clone(), n_runs, dim, p_pair, gamma: sums.gamma, submodels: None })
}

/// Weight table for a symmetric prior, choosing the engine automatically:
/// exchangeable when applicable, enumeration otherwise.
pub fn weight_table(max: &MaximalModel, prior: &PriorSpec, n_runs: usize) -> Result<WeightTable> {
    if prior.is_symmetric() && (max.is_first_order() || max.is_full_second_order()) {
        weight_table_exchangeable(max, prior, n_runs)
    } else {
        let models = enumerate_submodels(max, n_runs)?;
        weight_table_enumerated(&models, prior, max, n_runs)
    }
}
