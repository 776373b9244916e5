//! Wall-clock comparison of the exact and approximate paths on the 14×5 suite.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::approx::projection_average_tilde;
use crate::error::Result;
use crate::exact::{projection_average_exact, HarmonicPooling};
use crate::fixtures;
use crate::model::{enumerate_submodels, weight_table, weight_table_enumerated, MaximalModel, PriorSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRecord {
    pub k: usize,
    pub eligible: usize,
    /// Mean seconds per full pass over the suite.
    pub exact_secs: f64,
    pub approx_secs: f64,
    pub ratio: f64,
}

fn mean_time(min_total: Duration, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    let mut reps = 0u32;
    while reps == 0 || start.elapsed() < min_total {
        f()?;
        reps += 1;
    }
    Ok(start.elapsed().as_secs_f64() / reps as f64)
}

/// Times both paths for each k, repeating each pass until at least `min_total`
/// has elapsed. Weight construction is part of each path: enumeration for the
/// exact path, the class sums for the approximate one.
pub fn time_paths(ks: impl IntoIterator<Item = usize>, min_total: Duration) -> Result<Vec<TimingRecord>> {
    let designs = fixtures::NONREGULAR.iter().map(|n| fixtures::design(n)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for k in ks {
        let max = MaximalModel::second_order(k);
        let mut eligible = 0;
        let exact_secs = mean_time(min_total, || {
            let models = enumerate_submodels(&max, 14)?;
            let w = weight_table_enumerated(&models, &PriorSpec::Equal, &max, 14)?;
            eligible = w.eligible_count().unwrap_or(0);
            for d in &designs {
                projection_average_exact(d, k, &w, 0.5, HarmonicPooling::Pooled)?;
            }
            Ok(())
        })?;
        let approx_secs = mean_time(min_total, || {
            let w = weight_table(&max, &PriorSpec::Equal, 14)?;
            for d in &designs {
                projection_average_tilde(d, k, &w, 0.5)?;
            }
            Ok(())
        })?;
        out.push(TimingRecord { k, eligible, exact_secs, approx_secs, ratio: exact_secs / approx_secs });
    }
    Ok(out)
}
