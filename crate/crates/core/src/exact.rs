//! Exact model-robust criteria from explicit information-matrix inversion.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{gram_unchecked, project, Design, Effect};
use crate::error::{Error, Result};
use crate::linalg::PivotedCholesky;
use crate::model::{MaximalModel, Submodel, WeightTable};
use crate::numeric::{combinations, Accumulator};

/// Relative pivot threshold for the estimability test, scaled by N.
pub const ESTIMABILITY_TOL: f64 = 1e-9;

/// tr[H_s] and tr[(X′X)⁻¹G_s] for one submodel, or `None` if X′X is singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelTraces {
    pub trace_h: f64,
    pub trace_ig: f64,
}

fn check_factors(d: &Design, max: &MaximalModel) -> Result<()> {
    if max.k() > d.factors() {
        return Err(Error::Argument(format!(
            "maximal model has {} factors but the design has {}",
            max.k(),
            d.factors()
        )));
    }
    Ok(())
}

/// Traces from an integer information matrix over `effects`.
fn traces_from_gram(gram: &[i64], effects: &[Effect], n_runs: usize) -> Option<ModelTraces> {
    let p = effects.len();
    let a: Vec<f64> = gram.iter().map(|&x| x as f64).collect();
    let diag = PivotedCholesky::new(&a, p, ESTIMABILITY_TOL * n_runs as f64).inverse_diagonal()?;
    let trace_h = diag.iter().zip(effects).filter(|(_, e)| **e != Effect::Intercept).map(|(c, _)| c).sum();
    let trace_ig = diag.iter().zip(effects).map(|(c, e)| c * e.moment()).sum();
    Some(ModelTraces { trace_h, trace_ig })
}

/// Both traces for a submodel of `max`, computed from one factorization.
pub fn model_traces(d: &Design, m: &Submodel, max: &MaximalModel) -> Result<Option<ModelTraces>> {
    check_factors(d, max)?;
    let effects = m.effects(max);
    Ok(traces_from_gram(&gram_unchecked(d, &effects), &effects, d.runs()))
}

/// Trace of the non-intercept block of (X′X)⁻¹; `None` when inestimable.
pub fn trace_h(d: &Design, m: &Submodel, max: &MaximalModel) -> Result<Option<f64>> {
    Ok(model_traces(d, m, max)?.map(|t| t.trace_h))
}

/// tr[(X′X)⁻¹G_s] with G_s = diag(1, 1/3 per main, 1/9 per interaction); `None` when inestimable.
pub fn trace_ig(d: &Design, m: &Submodel, max: &MaximalModel) -> Result<Option<f64>> {
    Ok(model_traces(d, m, max)?.map(|t| t.trace_ig))
}

/// Per-submodel detail of an exact evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDetail {
    /// Position in the weight table's submodel list.
    pub id: usize,
    pub weight: f64,
    pub traces: Option<ModelTraces>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub a_s: f64,
    pub i_s: f64,
    pub p_alpha: f64,
    /// True when some positively weighted submodel is inestimable and the
    /// harmonic forms were reported instead.
    pub used_harmonic: bool,
    /// Σ p_s / tr[H_s] over estimable submodels with tr[H_s] > 0.
    pub recip_a: f64,
    /// Σ p_s / tr[(X′X)⁻¹G_s] over estimable submodels.
    pub recip_i: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_model: Option<Vec<ModelDetail>>,
}

fn blend(alpha: f64, i: f64, a: f64) -> f64 {
    alpha * i + (1.0 - alpha) * a
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Argument(format!("alpha {alpha} is outside [0, 1]")))
    }
}

fn harmonic(label: &str, recip_a: f64, recip_i: f64) -> Result<(f64, f64)> {
    if recip_a <= 0.0 || recip_i <= 0.0 {
        return Err(Error::AllInestimable(label.to_string()));
    }
    Ok((1.0 / recip_a, 1.0 / recip_i))
}

/// Exact A_s, I_s and P_α of `d` (its first k columns) over the enumerated
/// submodels in `weights`. Falls back to the weighted harmonic forms when a
/// positively weighted submodel is inestimable.
pub fn exact_criteria(d: &Design, weights: &WeightTable, alpha: f64, detail: bool) -> Result<ExactReport> {
    check_alpha(alpha)?;
    let max = weights.maximal();
    check_factors(d, max)?;
    let models = weights
        .submodels()
        .ok_or_else(|| Error::Argument("exact criteria need an enumerated weight table".into()))?;
    let all_effects = max.effects();
    let full = &gram_unchecked(d, &all_effects);
    let dim = all_effects.len();

    let (mut a_acc, mut i_acc) = (Accumulator::new(), Accumulator::new());
    let (mut ra_acc, mut ri_acc) = (Accumulator::new(), Accumulator::new());
    let mut inestimable = false;
    let mut per_model = detail.then(Vec::new);
    for (id, wm) in models.iter().enumerate() {
        if wm.weight <= 0.0 {
            if let Some(list) = per_model.as_mut() {
                list.push(ModelDetail { id, weight: wm.weight, traces: None });
            }
            continue;
        }
        let ords = wm.model.ordinals(max);
        let effects: Vec<Effect> = ords.iter().map(|&o| all_effects[o]).collect();
        let sub: Vec<i64> = ords.iter().flat_map(|&r| ords.iter().map(move |&c| full[r * dim + c])).collect();
        let traces = traces_from_gram(&sub, &effects, d.runs());
        match traces {
            Some(t) => {
                a_acc.add(t.trace_h * wm.weight);
                i_acc.add(t.trace_ig * wm.weight);
                if t.trace_h > 0.0 {
                    ra_acc.add(wm.weight / t.trace_h);
                }
                ri_acc.add(wm.weight / t.trace_ig);
            }
            None => inestimable = true,
        }
        if let Some(list) = per_model.as_mut() {
            list.push(ModelDetail { id, weight: wm.weight, traces });
        }
    }
    let (recip_a, recip_i) = (ra_acc.value(), ri_acc.value());
    let (a_s, i_s) = if inestimable {
        harmonic(d.label(), recip_a, recip_i)?
    } else {
        (a_acc.value(), i_acc.value())
    };
    Ok(ExactReport {
        a_s,
        i_s,
        p_alpha: blend(alpha, i_s, a_s),
        used_harmonic: inestimable,
        recip_a,
        recip_i,
        per_model,
    })
}

/// How projection averages treat the harmonic fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicPooling {
    /// If any projection has an inestimable submodel, average the reciprocal
    /// sums Σ p_s/tr over all projections and invert once. Reproduces the
    /// 14×5 reference table.
    #[default]
    Pooled,
    /// Arithmetic mean of each projection's own P_α (or P′_α).
    PerProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionExact {
    pub a_s: f64,
    pub i_s: f64,
    pub p_alpha: f64,
    pub used_harmonic: bool,
    pub projections: usize,
    /// Mean over projections of Σ p_s / tr(H_s) and Σ p_s / tr(I_s).
    pub recip_a: f64,
    pub recip_i: f64,
}

impl ProjectionExact {
    /// P′_α from the pooled reciprocal sums, whether or not any submodel was inestimable.
    pub fn harmonic_p(&self, alpha: f64) -> f64 {
        blend(alpha, 1.0 / self.recip_i, 1.0 / self.recip_a)
    }
}

/// Average exact criterion over all k-factor projections of `d`. `weights`
/// must be built for a k-factor maximal model.
pub fn projection_average_exact(
    d: &Design,
    k: usize,
    weights: &WeightTable,
    alpha: f64,
    pooling: HarmonicPooling,
) -> Result<ProjectionExact> {
    if k > d.factors() || k == 0 {
        return Err(Error::Argument(format!("projection size {k} must be in 1..={}", d.factors())));
    }
    if weights.maximal().k() != k {
        return Err(Error::Argument("weight table was built for a different number of factors".into()));
    }
    let subsets: Vec<Vec<usize>> = combinations(d.factors(), k).collect();
    let reports: Vec<Result<ExactReport>> = subsets
        .par_iter()
        .map(|cols| exact_criteria(&project(d, cols)?.with_label(d.label()), weights, alpha, false))
        .collect();
    let count = subsets.len() as f64;
    let mean = |f: &dyn Fn(&ExactReport) -> f64, rs: &[ExactReport]| rs.iter().map(f).collect::<Accumulator>().value() / count;

    match pooling {
        HarmonicPooling::PerProjection => {
            let rs: Vec<ExactReport> = reports.into_iter().collect::<Result<_>>()?;
            Ok(ProjectionExact {
                a_s: mean(&|r| r.a_s, &rs),
                i_s: mean(&|r| r.i_s, &rs),
                p_alpha: mean(&|r| r.p_alpha, &rs),
                used_harmonic: rs.iter().any(|r| r.used_harmonic),
                projections: rs.len(),
                recip_a: mean(&|r| r.recip_a, &rs),
                recip_i: mean(&|r| r.recip_i, &rs),
            })
        }
        HarmonicPooling::Pooled => {
            // a projection with no estimable model still contributes zero reciprocal mass
            let rs: Vec<ExactReport> = reports
                .into_iter()
                .map(|r| match r {
                    Err(Error::AllInestimable(_)) => Ok(ExactReport {
                        a_s: f64::NAN,
                        i_s: f64::NAN,
                        p_alpha: f64::NAN,
                        used_harmonic: true,
                        recip_a: 0.0,
                        recip_i: 0.0,
                        per_model: None,
                    }),
                    other => other,
                })
                .collect::<Result<_>>()?;
            let used_harmonic = rs.iter().any(|r| r.used_harmonic);
            let (a_s, i_s) = if used_harmonic {
                harmonic(d.label(), mean(&|r| r.recip_a, &rs), mean(&|r| r.recip_i, &rs))?
            } else {
                (mean(&|r| r.a_s, &rs), mean(&|r| r.i_s, &rs))
            };
            Ok(ProjectionExact {
                a_s,
                i_s,
                p_alpha: blend(alpha, i_s, a_s),
                used_harmonic,
                projections: rs.len(),
                recip_a: mean(&|r| r.recip_a, &rs),
                recip_i: mean(&|r| r.recip_i, &rs),
            })
        }
    }
}
