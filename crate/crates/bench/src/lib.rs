//! Inputs shared by the benchmarks.

use robust_doe::model::{enumerate_submodels, weight_table, weight_table_enumerated, MaximalModel, PriorSpec};
use robust_doe::{fixtures, Design, WeightTable};

/// The twelve 14-run, 5-factor designs.
pub fn nonregular_suite() -> Vec<Design> {
    fixtures::NONREGULAR.iter().map(|n| fixtures::design(n).expect("fixture")).collect()
}

pub fn design(name: &str) -> Design {
    fixtures::design(name).expect("fixture")
}

/// Enumerated equal weights for the exact path.
pub fn exact_weights(k: usize, n_runs: usize) -> WeightTable {
    let max = MaximalModel::second_order(k);
    let models = enumerate_submodels(&max, n_runs).expect("lattice");
    weight_table_enumerated(&models, &PriorSpec::Equal, &max, n_runs).expect("weights")
}

/// Closed-form weights for the approximate path.
pub fn approx_weights(k: usize, n_runs: usize, prior: &PriorSpec) -> WeightTable {
    weight_table(&MaximalModel::second_order(k), prior, n_runs).expect("weights")
}
