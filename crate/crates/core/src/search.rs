//! Columnwise-pairwise construction of robust designs.
//!
//! Each restart starts from a random (near) level-balanced design, reorders
//! columns by their leave-one-out objective, then tries (+1, −1) swaps in the
//! first g columns. The first strict improvement is accepted and the column
//! order is recomputed. A restart stops once the first g columns admit no
//! improving swap.
//!
//! The objective is the mean P̃_α over all k-factor projections. With a
//! symmetric prior it is evaluated through the GWLP closed form, keeping the
//! signed J-characteristics of every column subset of size ≤ 4 up to date
//! after each swap. Other priors use direct projection averaging.

use rand::seq::{index, SliceRandom};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::average_tilde_over;
use crate::bridge::{averaged_tilde_from_gwlp, xi_from_weights, XiSet};
use crate::design::{gwlp_up_to, project, Design};
use crate::error::{Error, Result};
use crate::model::{weight_table, MaximalModel, PriorSpec, WeightTable};
use crate::numeric::{binomial, combinations};

/// Relative margin a candidate must beat the incumbent by to count as an improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelOrder {
    First,
    #[default]
    Second,
}

impl ModelOrder {
    pub fn maximal(self, k: usize) -> MaximalModel {
        match self {
            ModelOrder::First => MaximalModel::first_order(k),
            ModelOrder::Second => MaximalModel::second_order(k),
        }
    }
}

/// How the search objective is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveRoute {
    /// GWLP closed form for symmetric priors, direct averaging otherwise.
    #[default]
    Auto,
    /// Always average P̃ over projections explicitly.
    Direct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_runs: usize,
    pub n_factors: usize,
    /// Projection size.
    pub k: usize,
    pub alpha: f64,
    pub prior: PriorSpec,
    pub order: ModelOrder,
    /// Columns tried per sweep; clamped to the number of factors.
    pub g: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Evaluate a seeded random subset of this many projections while
    /// searching (direct route only). The final objective always uses all.
    pub projection_sample: Option<usize>,
    pub route: ObjectiveRoute,
    /// Starting design for restart 0.
    #[serde(skip)]
    pub start: Option<Design>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_runs: 0,
            n_factors: 0,
            k: 0,
            alpha: 0.5,
            prior: PriorSpec::hierarchical(0.5, 0.25),
            order: ModelOrder::Second,
            g: 5,
            restarts: 20,
            seed: 0,
            max_sweeps: 10_000,
            projection_sample: None,
            route: ObjectiveRoute::Auto,
            start: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 2 {
            return Err(Error::Argument(format!("need at least 2 runs, got {}", self.n_runs)));
        }
        if self.n_factors == 0 {
            return Err(Error::Argument("need at least one factor".into()));
        }
        if self.k == 0 || self.k > self.n_factors {
            return Err(Error::Argument(format!(
                "projection size {} must be in 1..={}",
                self.k, self.n_factors
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Argument(format!("alpha {} is outside [0, 1]", self.alpha)));
        }
        if self.restarts == 0 || self.g == 0 {
            return Err(Error::Argument("restarts and g must be positive".into()));
        }
        if self.projection_sample == Some(0) {
            return Err(Error::Argument("projection sample must be positive".into()));
        }
        if let Some(s) = &self.start {
            if s.runs() != self.n_runs || s.factors() != self.n_factors {
                return Err(Error::Argument("starting design does not match the configured size".into()));
            }
        }
        self.prior.validate()
    }

    fn effective_g(&self) -> usize {
        self.g.min(self.n_factors)
    }
}

/// One accepted swap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Move {
    /// Sweep (column reordering) during which the move was accepted, from 1.
    pub sweep: usize,
    /// Column index in the design.
    pub column: usize,
    /// Position of that column in the sweep's scan order, from 0.
    pub position: usize,
    /// Row that went from −1 to +1 and row that went from +1 to −1.
    pub rows: (usize, usize),
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub restart: usize,
    pub start_objective: f64,
    pub moves: Vec<Move>,
    pub final_objective: f64,
    pub sweeps: usize,
    pub hit_max_sweeps: bool,
    #[serde(skip)]
    pub design: Design,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: usize,
    pub traces: Vec<SearchTrace>,
}

impl SearchOutcome {
    pub fn design(&self) -> &Design {
        &self.traces[self.best].design
    }

    pub fn objective(&self) -> f64 {
        self.traces[self.best].final_objective
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.traces[self.best]
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn balanced_with(n: usize, m: usize, rng: &mut impl RngCore) -> Design {
    let columns = (0..m)
        .map(|_| {
            let mut col: Vec<i8> = (0..n).map(|i| if i < n.div_ceil(2) { 1 } else { -1 }).collect();
            col.shuffle(rng);
            col
        })
        .collect();
    Design::from_columns(format!("random_{n}x{m}"), columns).expect("n ≥ 2 and m ≥ 1")
}

/// Random design whose columns each hold ⌈N/2⌉ entries +1 and ⌊N/2⌋ entries −1.
pub fn random_balanced_design(n: usize, m: usize, seed: u64) -> Result<Design> {
    if n < 2 || m == 0 {
        return Err(Error::Argument(format!("cannot build a {n}×{m} design")));
    }
    Ok(balanced_with(n, m, &mut rng_for(seed, 0)))
}

/// Every (−1 row, +1 row) pair of a column, lexicographic.
pub fn adjustment_pairs(column: &[i8]) -> Vec<(usize, usize)> {
    let minus: Vec<usize> = (0..column.len()).filter(|&i| column[i] < 0).collect();
    let plus: Vec<usize> = (0..column.len()).filter(|&i| column[i] > 0).collect();
    minus.iter().flat_map(|&a| plus.iter().map(move |&b| (a, b))).collect()
}

/// Designs reachable by one (+1, −1) exchange within column `col`.
pub fn first_order_adjustments(d: &Design, col: usize) -> impl Iterator<Item = Design> + '_ {
    adjustment_pairs(d.column(col)).into_iter().map(move |(a, b)| {
        let mut out = d.clone();
        out.swap_in_column(col, a, b);
        out
    })
}

struct Level {
    weights: WeightTable,
    xi: Option<XiSet>,
}

impl Level {
    fn new(cfg: &SearchConfig, k: usize, bridge: bool) -> Result<Self> {
        // a one-factor projection has no interactions for π2 to act on
        let prior = match cfg.prior {
            PriorSpec::Symmetric { pi1, .. } if k < 2 => PriorSpec::hierarchical(pi1, 0.0),
            ref p => p.clone(),
        };
        let weights = weight_table(&cfg.order.maximal(k), &prior, cfg.n_runs)?;
        let xi = if bridge { Some(xi_from_weights(&weights)?) } else { None };
        Ok(Self { weights, xi })
    }

    fn k(&self) -> usize {
        self.weights.maximal().k()
    }
}

/// Mean P̃_α over k-factor projections, plus the leave-one-column-out variant
/// (k is lowered to m − 1 when k = m).
pub struct Objective {
    alpha: f64,
    m: usize,
    full: Level,
    loo: Option<Level>,
    bridge: bool,
    sample: Option<usize>,
}

impl Objective {
    pub fn new(cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let bridge = cfg.route == ObjectiveRoute::Auto && cfg.prior.is_symmetric();
        let full = Level::new(cfg, cfg.k, bridge)?;
        let loo = if cfg.n_factors >= 2 {
            Some(Level::new(cfg, cfg.k.min(cfg.n_factors - 1), bridge)?)
        } else {
            None
        };
        Ok(Self { alpha: cfg.alpha, m: cfg.n_factors, full, loo, bridge, sample: cfg.projection_sample })
    }

    /// Whether the GWLP closed form is in use.
    pub fn uses_bridge(&self) -> bool {
        self.bridge
    }

    fn level_value(&self, level: &Level, d: &Design, projections: Option<&[Vec<usize>]>) -> Result<f64> {
        match (&level.xi, projections) {
            (Some(xi), _) => Ok(averaged_tilde_from_gwlp(&gwlp_up_to(d, 4).b, d.factors(), &level.weights, xi, self.alpha)),
            (None, Some(p)) => Ok(average_tilde_over(d, p, &level.weights, self.alpha)?.tilde_p),
            (None, None) => {
                let all: Vec<Vec<usize>> = combinations(d.factors(), level.k()).collect();
                Ok(average_tilde_over(d, &all, &level.weights, self.alpha)?.tilde_p)
            }
        }
    }

    /// Objective over every projection.
    pub fn value(&self, d: &Design) -> Result<f64> {
        self.check(d)?;
        self.level_value(&self.full, d, None)
    }

    /// Objective of `d` with column `col` deleted.
    pub fn leave_one_out(&self, d: &Design, col: usize) -> Result<f64> {
        self.check(d)?;
        let level = self.loo.as_ref().ok_or_else(|| Error::Argument("need at least two columns".into()))?;
        let rest: Vec<usize> = (0..d.factors()).filter(|&c| c != col).collect();
        self.level_value(level, &project(d, &rest)?, None)
    }

    fn check(&self, d: &Design) -> Result<()> {
        if d.factors() != self.m || d.runs() != self.full.weights.n_runs() {
            return Err(Error::Argument("design size does not match the objective".into()));
        }
        Ok(())
    }

    fn sampled(&self, m: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
        let s = self.sample?;
        let total = binomial(m, k);
        if total <= s as u128 {
            return None;
        }
        let all: Vec<Vec<usize>> = combinations(m, k).collect();
        let mut picked = index::sample(rng, all.len(), s).into_vec();
        picked.sort_unstable();
        Some(picked.into_iter().map(|i| all[i].clone()).collect())
    }
}

/// Column order of `d` ascending in leave-one-out objective, ties by index.
fn scan_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Reorders columns ascending by the objective of the design with that column deleted.
pub fn reorder_columns(d: &Design, cfg: &SearchConfig) -> Result<Design> {
    let obj = Objective::new(cfg)?;
    if d.factors() < 2 {
        return Ok(d.clone());
    }
    let values: Vec<f64> = (0..d.factors()).map(|c| obj.leave_one_out(d, c)).collect::<Result<_>>()?;
    Ok(d.permute_columns(&scan_order(&values)))
}

/// Signed J-characteristics of every column subset of size 1..=4.
struct JCache {
    subsets: Vec<(Vec<usize>, i64)>,
    by_col: Vec<Vec<usize>>,
    sums: [i64; 4],
}

impl JCache {
    fn new(d: &Design) -> Self {
        let m = d.factors();
        let mut subsets = Vec::new();
        let mut by_col = vec![Vec::new(); m];
        let mut sums = [0i64; 4];
        for len in 1..=m.min(4) {
            for w in combinations(m, len) {
                let j: i64 = (0..d.runs()).map(|i| w.iter().map(|&c| d.get(i, c)).product::<i8>() as i64).sum();
                sums[len - 1] += j * j;
                for &c in &w {
                    by_col[c].push(subsets.len());
                }
                subsets.push((w, j));
            }
        }
        Self { subsets, by_col, sums }
    }

    fn b(sums: &[i64; 4], n: usize) -> [f64; 4] {
        let n2 = (n * n) as f64;
        sums.map(|s| s as f64 / n2)
    }

    fn column_sums(&self, col: usize) -> [i64; 4] {
        let mut out = [0i64; 4];
        for &t in &self.by_col[col] {
            let (w, j) = &self.subsets[t];
            out[w.len() - 1] += j * j;
        }
        out
    }

    // change in signed J for subset t if rows (minus, plus) of `col` are exchanged
    fn delta(&self, d: &Design, t: usize, col: usize, minus: usize, plus: usize) -> i64 {
        let w = &self.subsets[t].0;
        let prod = |r: usize| w.iter().filter(|&&c| c != col).map(|&c| d.get(r, c) as i64).product::<i64>();
        2 * (prod(minus) - prod(plus))
    }

    fn swapped_sums(&self, d: &Design, col: usize, minus: usize, plus: usize) -> [i64; 4] {
        let mut sums = self.sums;
        for &t in &self.by_col[col] {
            let (w, j) = &self.subsets[t];
            let nj = j + self.delta(d, t, col, minus, plus);
            sums[w.len() - 1] += nj * nj - j * j;
        }
        sums
    }

    /// Call before the swap is applied to `d`.
    fn apply(&mut self, d: &Design, col: usize, minus: usize, plus: usize) {
        for idx in 0..self.by_col[col].len() {
            let t = self.by_col[col][idx];
            let dj = self.delta(d, t, col, minus, plus);
            let (w, j) = &mut self.subsets[t];
            self.sums[w.len() - 1] += (*j + dj) * (*j + dj) - *j * *j;
            *j += dj;
        }
    }
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate < current && current - candidate > IMPROVEMENT_TOL * current.abs()
}

fn run_restart(cfg: &SearchConfig, obj: &Objective, restart: usize) -> Result<SearchTrace> {
    let mut rng = rng_for(cfg.seed, restart as u64);
    let mut d = match (&cfg.start, restart) {
        (Some(s), 0) => s.clone(),
        _ => balanced_with(cfg.n_runs, cfg.n_factors, &mut rng),
    };
    let m = cfg.n_factors;
    let n = cfg.n_runs;
    let g = cfg.effective_g();

    let full_proj = if obj.bridge { None } else { obj.sampled(m, obj.full.k(), &mut rng) };
    let loo_proj = match (&obj.loo, obj.bridge) {
        (Some(l), false) => obj.sampled(m - 1, l.k(), &mut rng),
        _ => None,
    };
    let mut cache = obj.bridge.then(|| JCache::new(&d));

    let value_from_sums = |sums: &[i64; 4], m: usize, level: &Level| -> f64 {
        averaged_tilde_from_gwlp(&JCache::b(sums, n), m, &level.weights, level.xi.as_ref().expect("bridge level"), obj.alpha)
    };
    let evaluate = |d: &Design| -> Result<f64> { obj.level_value(&obj.full, d, full_proj.as_deref()) };

    let mut current = match &cache {
        Some(c) => value_from_sums(&c.sums, m, &obj.full),
        None => evaluate(&d)?,
    };
    let start_objective = current;
    let mut moves = Vec::new();
    let mut sweeps = 0;
    let mut hit_max_sweeps = false;

    'sweep: loop {
        if sweeps >= cfg.max_sweeps {
            hit_max_sweeps = true;
            break;
        }
        sweeps += 1;
        let order: Vec<usize> = match &obj.loo {
            None => vec![0],
            Some(level) => {
                let loo: Vec<f64> = match &cache {
                    Some(c) => (0..m)
                        .map(|col| {
                            let cs = c.column_sums(col);
                            let rest: [i64; 4] = std::array::from_fn(|l| c.sums[l] - cs[l]);
                            value_from_sums(&rest, m - 1, level)
                        })
                        .collect(),
                    None => (0..m)
                        .map(|col| {
                            let rest: Vec<usize> = (0..m).filter(|&c| c != col).collect();
                            obj.level_value(level, &project(&d, &rest)?, loo_proj.as_deref())
                        })
                        .collect::<Result<_>>()?,
                };
                scan_order(&loo)
            }
        };
        for (position, &col) in order.iter().take(g).enumerate() {
            for (minus, plus) in adjustment_pairs(d.column(col)) {
                let candidate = match &cache {
                    Some(c) => value_from_sums(&c.swapped_sums(&d, col, minus, plus), m, &obj.full),
                    None => {
                        let mut trial = d.clone();
                        trial.swap_in_column(col, minus, plus);
                        evaluate(&trial)?
                    }
                };
                if improves(candidate, current) {
                    if let Some(c) = cache.as_mut() {
                        c.apply(&d, col, minus, plus);
                    }
                    d.swap_in_column(col, minus, plus);
                    current = candidate;
                    moves.push(Move { sweep: sweeps, column: col, position, rows: (minus, plus), objective: current });
                    continue 'sweep;
                }
            }
        }
        break;
    }

    let final_objective = if obj.bridge || full_proj.is_none() { current } else { obj.value(&d)? };
    Ok(SearchTrace {
        restart,
        start_objective,
        moves,
        final_objective,
        sweeps,
        hit_max_sweeps,
        design: d.with_label(format!("cpw_{n}x{m}_k{}_r{restart}", cfg.k)),
    })
}

/// Runs every restart (in parallel) and keeps the lowest final objective,
/// ties going to the lowest restart index.
pub fn cpw_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    let obj = Objective::new(cfg)?;
    let traces: Vec<SearchTrace> =
        (0..cfg.restarts).into_par_iter().map(|r| run_restart(cfg, &obj, r)).collect::<Result<_>>()?;
    let best = traces
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.final_objective.total_cmp(&b.final_objective).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    Ok(SearchOutcome { best, traces })
}
