//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each, and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_doe::approx::{projection_average_tilde, r_table, tilde_criteria};
use robust_doe::bridge::{second_order_coefficients, verify_bridge, XiSet};
use robust_doe::design::{e_s2, gwlp_up_to, project, Design};
use robust_doe::exact::exact_criteria;
use robust_doe::fixtures;
use robust_doe::model::{
    enumerate_submodels, weight_table_enumerated, weight_table_exchangeable, MaximalModel, PriorSpec,
};
use robust_doe::reproduce::{example_regular, table_nonregular, table_saturated, ReproduceOptions, Reproduction};
use robust_doe::search::{cpw_search, SearchConfig};
use robust_doe::timing::time_paths;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn reproduction(rep: Reproduction, elapsed: Duration, budget: Duration) -> Outcome {
    let bad: Vec<String> = rep
        .mismatches()
        .map(|c| format!("{} {}: computed {:.7} printed {}", c.row, c.column, c.computed, c.printed))
        .collect();
    ensure(bad.is_empty(), bad.join("; "))?;
    ensure(elapsed < budget, format!("took {elapsed:?}, budget {budget:?}"))?;
    Ok(format!("{} cells match", rep.cells.len()))
}

fn c1_regular_example() -> Outcome {
    let start = Instant::now();
    let rep = example_regular(&ReproduceOptions::default()).map_err(err)?;
    reproduction(rep, start.elapsed(), Duration::from_secs(1))
}

fn c2_nonregular_table() -> Outcome {
    let start = Instant::now();
    let rep = table_nonregular(&ReproduceOptions::default()).map_err(err)?;
    reproduction(rep, start.elapsed(), Duration::from_secs(300))
}

fn c3_saturated_table() -> Outcome {
    let start = Instant::now();
    let rep = table_saturated(&ReproduceOptions::default()).map_err(err)?;
    reproduction(rep, start.elapsed(), Duration::from_secs(1800))
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn c4_enumeration() -> Outcome {
    for (k, eligible) in [(2usize, 5usize), (3, 18), (4, 113), (5, 1439)] {
        let max = MaximalModel::second_order(k);
        let all = enumerate_submodels(&max, 14).map_err(err)?;
        let closed: u128 = (0..=k as u128).map(|a| binom(k as u128, a) << (a * a.saturating_sub(1) / 2)).sum();
        ensure(all.len() as u128 == closed, format!("k={k}: {} nodes, closed form {closed}", all.len()))?;
        let got = all.iter().filter(|m| m.eligible).count();
        ensure(got == eligible, format!("k={k}: {got} eligible, expected {eligible}"))?;
    }
    Ok("5, 18, 113, 1439 eligible; lattice sizes match the closed form".into())
}

fn c5_cross_engine() -> Outcome {
    let mut compared = 0;
    let mut worst = 0.0f64;
    for k in 1..=5 {
        let max = MaximalModel::second_order(k);
        for pi1 in [0.3, 0.5, 0.8] {
            for pi2 in [0.0, 0.25, 0.5] {
                if k < 2 && pi2 > 0.0 {
                    continue;
                }
                let prior = PriorSpec::hierarchical(pi1, pi2);
                for n in [8, 14, 32] {
                    let models = enumerate_submodels(&max, n).map_err(err)?;
                    let e = weight_table_enumerated(&models, &prior, &max, n).map_err(err)?;
                    let x = weight_table_exchangeable(&max, &prior, n).map_err(err)?;
                    for (a, b) in e.pairs().iter().zip(x.pairs()) {
                        worst = worst.max((a - b).abs());
                    }
                    compared += 1;
                }
            }
        }
    }
    ensure(worst < 1e-12, format!("max entry difference {worst:e}"))?;
    Ok(format!("{compared} configurations, max difference {worst:.1e}"))
}

fn c6_exact_equals_approx_on_regular() -> Outcome {
    let mut compared = 0;
    let mut worst = 0.0f64;
    for name in ["A_2", "A_3", "A_4"] {
        let d = fixtures::design(name).map_err(err)?;
        for k in 1..=5 {
            let max = MaximalModel::second_order(k);
            let models = enumerate_submodels(&max, 16).map_err(err)?;
            for prior in [PriorSpec::Equal, PriorSpec::hierarchical(0.5, 0.25)] {
                let w = weight_table_enumerated(&models, &prior, &max, 16).map_err(err)?;
                for cols in robust_doe::numeric::combinations(5, k) {
                    let p = project(&d, &cols).map_err(err)?;
                    let r = r_table(&p, &max).map_err(err)?;
                    for alpha in [0.0, 0.5, 1.0] {
                        let e = exact_criteria(&p, &w, alpha, false).map_err(err)?;
                        if e.used_harmonic {
                            continue;
                        }
                        let t = tilde_criteria(&r, &w, alpha).map_err(err)?;
                        worst = worst.max((e.p_alpha - t.tilde_p).abs());
                        compared += 1;
                    }
                }
            }
        }
    }
    ensure(compared > 0, "no estimable configuration found")?;
    ensure(worst < 1e-10, format!("max |P - P~| = {worst:e}"))?;
    Ok(format!("{compared} estimable configurations, max difference {worst:.1e}"))
}

fn random_design(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Design {
    let cols = (0..m).map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).collect();
    Design::from_columns("random", cols).expect("valid size")
}

fn c7_bridge_identity() -> Outcome {
    let max = MaximalModel::second_order(5);
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w16 = weight_table_exchangeable(&max, &PriorSpec::hierarchical(0.5, 0.25), 16).map_err(err)?;
    for _ in 0..50 {
        let (d1, d2) = (random_design(&mut rng, 16, 5), random_design(&mut rng, 16, 5));
        worst = worst.max(verify_bridge(&d1, &d2, &w16, 0.5).map_err(err)?);
    }
    let e16 = weight_table_exchangeable(&max, &PriorSpec::Equal, 16).map_err(err)?;
    let a = |n: &str| fixtures::design(n).map_err(err);
    worst = worst.max(verify_bridge(&a("A_1")?, &a("A_4")?, &e16, 0.5).map_err(err)?);
    let e14 = weight_table_exchangeable(&max, &PriorSpec::Equal, 14).map_err(err)?;
    worst = worst.max(verify_bridge(&a("B_1")?, &a("B_12")?, &e14, 0.5).map_err(err)?);
    ensure(worst < 1e-10, format!("max residual {worst:e}"))?;

    // at α = 0 every α-dependent factor drops out
    let xi = XiSet { xi10: 0.61, xi20: 0.37, xi21: 0.19, xi31: 0.11, xi32: 0.07, xi42: 0.03 };
    for k in 2..=6 {
        let kf = k as f64;
        let expect = [
            xi.xi10 + 2.0 * (kf - 1.0) * xi.xi21,
            2.0 * xi.xi20 + xi.xi21 + 2.0 * (kf - 2.0) * xi.xi32,
            6.0 * xi.xi31,
            6.0 * xi.xi42,
        ];
        let got = second_order_coefficients(&xi, k, 0.0);
        for (g, e) in got.iter().zip(expect) {
            ensure((g - e).abs() < 1e-15, format!("k={k}: coefficient {g} vs {e}"))?;
        }
    }
    Ok(format!("52 pairs, max residual {worst:.1e}; alpha=0 coefficients match"))
}

fn c8_es2_identity() -> Outcome {
    let mut worst = 0.0f64;
    for name in fixtures::names() {
        let d = fixtures::design(name).map_err(err)?;
        let n = d.runs() as f64;
        let m = d.factors() as f64;
        let b2 = gwlp_up_to(&d, 2).word(2);
        worst = worst.max((e_s2(&d).map_err(err)? - n * n * b2 / (m * (m - 1.0) / 2.0)).abs());
    }
    ensure(worst < 1e-10, format!("max difference {worst:e}"))?;
    Ok(format!("{} fixtures, max difference {worst:.1e}", fixtures::names().count()))
}

fn c9_search() -> Outcome {
    let cfg = SearchConfig { n_runs: 6, n_factors: 5, k: 5, restarts: 20, seed: 7, ..SearchConfig::default() };
    let out = cpw_search(&cfg).map_err(err)?;
    let again = cpw_search(&cfg).map_err(err)?;
    ensure(out == again, "identical seeds gave different traces")?;
    for t in &out.traces {
        let mut prev = t.start_objective;
        for mv in &t.moves {
            ensure(mv.objective < prev, format!("restart {}: objective did not decrease", t.restart))?;
            prev = mv.objective;
        }
    }
    let d6 = fixtures::design("N_6").map_err(err)?;
    let w = weight_table_exchangeable(&MaximalModel::second_order(5), &PriorSpec::hierarchical(0.5, 0.25), 6)
        .map_err(err)?;
    let reference = projection_average_tilde(&d6, 5, &w, 0.5).map_err(err)?.tilde_p;
    let best = out.objective();
    let direct = projection_average_tilde(out.design(), 5, &w, 0.5).map_err(err)?.tilde_p;
    ensure((best - direct).abs() < 1e-12, format!("reported {best} but direct evaluation gives {direct}"))?;
    ensure(best <= 0.4487, format!("best objective {best:.7} above .4487"))?;
    ensure(best <= reference + 1e-12, format!("best objective {best:.7} above the reference design {reference:.7}"))?;
    Ok(format!("best {best:.7} (reference design {reference:.7}); traces strictly decreasing and reproducible"))
}

fn c10_speedup() -> Outcome {
    let records = time_paths(2..=5, Duration::from_millis(200)).map_err(err)?;
    let at5 = records.iter().find(|r| r.k == 5).ok_or("no k=5 record")?;
    let fastest = records.iter().map(|r| r.approx_secs).fold(f64::INFINITY, f64::min);
    let slowest = records.iter().map(|r| r.approx_secs).fold(0.0, f64::max);
    let spread = slowest / fastest;
    ensure(at5.ratio >= 50.0, format!("exact/approx ratio at k=5 is {:.1}", at5.ratio))?;
    ensure(spread < 5.0, format!("approximate time varies {spread:.2}x across k"))?;
    Ok(format!("ratio at k=5 {:.0}x; approximate time spread {spread:.2}x", at5.ratio))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("regular 16-run example reproduced", c1_regular_example),
        ("14-run comparison table reproduced", c2_nonregular_table),
        ("saturated design table reproduced", c3_saturated_table),
        ("eligible submodel counts", c4_enumeration),
        ("exchangeable weights match enumeration", c5_cross_engine),
        ("exact equals approximate on regular designs", c6_exact_equals_approx_on_regular),
        ("aberration bridge identity", c7_bridge_identity),
        ("E(s^2) identity", c8_es2_identity),
        ("columnwise-pairwise search", c9_search),
        ("approximate path speedup", c10_speedup),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
