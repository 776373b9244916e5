use proptest::prelude::*;

use robust_doe::approx::{r_table, tilde_criteria, tilde_p_direct};
use robust_doe::bridge::{averaged_tilde_from_gwlp, coefficients_for, tilde_constant, xi_from_weights};
use robust_doe::design::{e_s2, gram, gwlp, j_characteristic, project, Design};
use robust_doe::exact::exact_criteria;
use robust_doe::model::{enumerate_submodels, weight_table, weight_table_enumerated, MaximalModel, PriorSpec};
use robust_doe::numeric::{binomial, combinations};
use robust_doe::search::{cpw_search, ModelOrder, SearchConfig};
use robust_doe::{projection_average_tilde, Effect};

fn designs(runs: std::ops::RangeInclusive<usize>, factors: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Design> {
    (runs, factors).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(prop::bool::ANY, n), m).prop_map(|cols| {
            let cols = cols.into_iter().map(|c| c.into_iter().map(|b| if b { 1 } else { -1 }).collect()).collect();
            Design::from_columns("random", cols).unwrap()
        })
    })
}

fn columns(d: &Design) -> Vec<Vec<i8>> {
    (0..d.factors()).map(|j| d.column(j).to_vec()).collect()
}

fn permute_rows(d: &Design, shift: usize) -> Design {
    let n = d.runs();
    let cols = columns(d).into_iter().map(|c| (0..n).map(|i| c[(i + shift) % n]).rev().collect()).collect();
    Design::from_columns("permuted", cols).unwrap()
}

fn negate_column(d: &Design, j: usize) -> Design {
    let mut cols = columns(d);
    cols[j].iter_mut().for_each(|x| *x = -*x);
    Design::from_columns("negated", cols).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wordlengths_count_coincident_rows(d in designs(2..=12, 1..=6)) {
        let n = d.runs() as f64;
        let m = d.factors() as i32;
        let coincident = (0..d.runs())
            .flat_map(|i| (0..d.runs()).map(move |j| (i, j)))
            .filter(|&(i, j)| d.row(i) == d.row(j))
            .count() as f64;
        let g = gwlp(&d);
        let total: f64 = 1.0 + g.b.iter().sum::<f64>();
        prop_assert!(close(total, 2f64.powi(m) * coincident / (n * n), 1e-12));
    }

    #[test]
    fn es2_matches_second_wordlength(d in designs(2..=12, 2..=6)) {
        let n = d.runs() as f64;
        let pairs = binomial(d.factors(), 2) as f64;
        prop_assert!(close(e_s2(&d).unwrap(), n * n * gwlp(&d).word(2) / pairs, 1e-12));
    }

    #[test]
    fn j_ignores_row_order_and_sign(d in designs(2..=12, 2..=5), shift in 0usize..12, col in 0usize..5) {
        let col = col % d.factors();
        let (p, s) = (permute_rows(&d, shift), negate_column(&d, col));
        for size in 1..=d.factors() {
            for w in combinations(d.factors(), size) {
                let j = j_characteristic(&d, &w).unwrap();
                prop_assert_eq!(j, j_characteristic(&p, &w).unwrap());
                prop_assert_eq!(j, j_characteristic(&s, &w).unwrap());
            }
        }
    }

    #[test]
    fn gram_diagonal_is_run_count(d in designs(2..=12, 2..=5)) {
        let effects = MaximalModel::second_order(d.factors()).effects();
        let g = gram(&d, &effects).unwrap();
        let p = effects.len();
        for i in 0..p {
            prop_assert_eq!(g[i * p + i], d.runs() as i64);
        }
    }

    #[test]
    fn projections_share_words(d in designs(4..=10, 3..=6), k in 1usize..=6) {
        let m = d.factors();
        let k = k.min(m);
        let full = gwlp(&d);
        let total = binomial(m, k) as f64;
        for l in 1..=k {
            let mean: f64 = combinations(m, k).map(|c| gwlp(&project(&d, &c).unwrap()).word(l)).sum::<f64>() / total;
            let expect = full.word(l) * binomial(m - l, k - l) as f64 / total;
            prop_assert!(close(mean, expect, 1e-12));
        }
    }

    #[test]
    fn approximate_average_follows_wordlengths(d in designs(6..=12, 3..=6), k in 2usize..=5, alpha in 0.0f64..=1.0) {
        let k = k.min(d.factors());
        let w = weight_table(&MaximalModel::second_order(k), &PriorSpec::hierarchical(0.5, 0.25), d.runs()).unwrap();
        let xi = xi_from_weights(&w).unwrap();
        let direct = projection_average_tilde(&d, k, &w, alpha).unwrap().tilde_p;
        let g = gwlp(&d);
        let bridged = averaged_tilde_from_gwlp(&g.b, d.factors(), &w, &xi, alpha);
        prop_assert!(close(direct, bridged, 1e-12));
    }

    #[test]
    fn bridge_terms_are_nonnegative(k in 1usize..=6, pi1 in 0.05f64..0.95, pi2 in 0.0f64..0.95, n in 4usize..40, alpha in 0.0f64..=1.0) {
        let pi2 = if k < 2 { 0.0 } else { pi2 };
        let w = weight_table(&MaximalModel::second_order(k), &PriorSpec::hierarchical(pi1, pi2), n).unwrap();
        let xi = xi_from_weights(&w).unwrap();
        for c in coefficients_for(&w, &xi, alpha) {
            prop_assert!(c >= -1e-15);
        }
        prop_assert!(tilde_constant(k, w.maximal().interactions().len(), &xi, alpha, n) > 0.0);
    }

    #[test]
    fn tilde_never_below_design_free_part(d in designs(4..=12, 1..=4), alpha in 0.0f64..=1.0) {
        let k = d.factors();
        let max = MaximalModel::second_order(k);
        let w = weight_table(&max, &PriorSpec::Equal, d.runs()).unwrap();
        let xi = xi_from_weights(&w).unwrap();
        let p = tilde_criteria(&r_table(&d, &max).unwrap(), &w, alpha).unwrap().tilde_p;
        prop_assert!(p >= tilde_constant(k, max.interactions().len(), &xi, alpha, d.runs()) - 1e-15);
    }

    #[test]
    fn blend_is_affine(d in designs(8..=14, 2..=3), alpha in 0.0f64..=1.0) {
        let max = MaximalModel::second_order(d.factors());
        let models = enumerate_submodels(&max, d.runs()).unwrap();
        let w = weight_table_enumerated(&models, &PriorSpec::hierarchical(0.6, 0.4), &max, d.runs()).unwrap();
        let r = r_table(&d, &max).unwrap();
        let t = tilde_criteria(&r, &w, alpha).unwrap();
        prop_assert!(close(t.tilde_p, alpha * t.tilde_i + (1.0 - alpha) * t.tilde_a, 1e-14));
        prop_assert!(close(t.tilde_p, tilde_p_direct(&r, &w, alpha).unwrap(), 1e-13));
        if let Ok(e) = exact_criteria(&d, &w, alpha, false) {
            let (lo, hi) = (exact_criteria(&d, &w, 0.0, false).unwrap(), exact_criteria(&d, &w, 1.0, false).unwrap());
            prop_assert!(close(e.p_alpha, alpha * hi.p_alpha + (1.0 - alpha) * lo.p_alpha, 1e-12));
        }
    }

    #[test]
    fn criteria_ignore_row_order_and_sign(d in designs(8..=14, 2..=3), shift in 0usize..14, col in 0usize..3) {
        let max = MaximalModel::second_order(d.factors());
        let models = enumerate_submodels(&max, d.runs()).unwrap();
        let w = weight_table_enumerated(&models, &PriorSpec::Equal, &max, d.runs()).unwrap();
        let others = [permute_rows(&d, shift), negate_column(&d, col % d.factors())];
        let base = tilde_criteria(&r_table(&d, &max).unwrap(), &w, 0.5).unwrap().tilde_p;
        let exact = exact_criteria(&d, &w, 0.5, false).ok();
        for o in &others {
            let t = tilde_criteria(&r_table(o, &max).unwrap(), &w, 0.5).unwrap().tilde_p;
            prop_assert!(close(base, t, 1e-13));
            if let Some(e) = &exact {
                let eo = exact_criteria(o, &w, 0.5, false).unwrap();
                prop_assert_eq!(e.used_harmonic, eo.used_harmonic);
                prop_assert!(close(e.p_alpha, eo.p_alpha, 1e-9));
            }
        }
    }

    #[test]
    fn first_order_tilde_orders_like_es2(s1 in any::<u64>(), s2 in any::<u64>(), half in 2usize..=6, m in 2usize..=8, alpha in 0.0f64..=1.0) {
        let n = 2 * half;
        let d1 = robust_doe::search::random_balanced_design(n, m, s1).unwrap();
        let d2 = robust_doe::search::random_balanced_design(n, m, s2).unwrap();
        let max = MaximalModel::first_order(m);
        let w = weight_table(&max, &PriorSpec::hierarchical(0.5, 0.0), n).unwrap();
        let p = |d: &Design| tilde_criteria(&r_table(d, &max).unwrap(), &w, alpha).unwrap().tilde_p;
        let dp = p(&d1) - p(&d2);
        let ds = e_s2(&d1).unwrap() - e_s2(&d2).unwrap();
        if ds == 0.0 {
            prop_assert!(dp.abs() < 1e-14);
        } else {
            prop_assert_eq!(dp > 0.0, ds > 0.0);
        }
    }

    #[test]
    fn wordlength_dominance_orders_bridge(d1 in designs(8..=8, 5..=5), d2 in designs(8..=8, 5..=5), alpha in 0.0f64..=1.0) {
        let (g1, g2) = (gwlp(&d1), gwlp(&d2));
        prop_assume!((1..=4).all(|l| g1.word(l) <= g2.word(l)));
        let w = weight_table(&MaximalModel::second_order(5), &PriorSpec::hierarchical(0.5, 0.25), 8).unwrap();
        let xi = xi_from_weights(&w).unwrap();
        let value = |b: &[f64]| robust_doe::bridge_second_order(&b[..4], &xi, 5, alpha).value;
        prop_assert!(value(&g1.b) <= value(&g2.b) + 1e-12);
    }

    #[test]
    fn heavier_aliasing_raises_r(n in 2usize..40, a in 0i64..40, b in 0i64..40) {
        let (a, b) = (a.min(n as i64), b.min(n as i64));
        let r = |x: i64| (x * x) as f64 / (n as f64).powi(3);
        prop_assert_eq!(a.abs() <= b.abs(), r(a) <= r(b));
    }

    #[test]
    fn weights_are_normalized(k in 1usize..=4, pi1 in 0.05f64..0.95, pi2 in 0.05f64..0.95, n in 2usize..20) {
        let pi2 = if k < 2 { 0.0 } else { pi2 };
        let max = MaximalModel::second_order(k);
        let models = enumerate_submodels(&max, n).unwrap();
        let w = weight_table_enumerated(&models, &PriorSpec::hierarchical(pi1, pi2), &max, n).unwrap();
        prop_assert!(close(w.pair(0, 0), 1.0, 1e-14));
        let total: f64 = w.submodels().unwrap().iter().map(|s| s.weight).sum();
        prop_assert!(close(total, 1.0, 1e-14));
        for i in 0..w.dim() {
            for j in 0..w.dim() {
                prop_assert_eq!(w.pair(i, j), w.pair(j, i));
                prop_assert!(w.pair(i, j) <= w.pair(i, i) + 1e-15);
            }
        }
    }

    #[test]
    fn equal_weights_count_models(k in 1usize..=4, n in 2usize..20) {
        let max = MaximalModel::second_order(k);
        let models = enumerate_submodels(&max, n).unwrap();
        let w = weight_table_enumerated(&models, &PriorSpec::Equal, &max, n).unwrap();
        let effects = max.effects();
        let eligible: Vec<Vec<Effect>> = models.iter().filter(|m| m.eligible).map(|m| m.effects(&max)).collect();
        for (i, ei) in effects.iter().enumerate() {
            for (j, ej) in effects.iter().enumerate() {
                let both = eligible.iter().filter(|m| m.contains(ei) && m.contains(ej)).count();
                prop_assert!(close(w.pair(i, j), both as f64 / eligible.len() as f64, 1e-14));
            }
        }
    }

    #[test]
    fn lattice_is_closed_under_heredity(k in 1usize..=4) {
        let max = MaximalModel::second_order(k);
        let models = enumerate_submodels(&max, usize::MAX).unwrap();
        let set: std::collections::HashSet<_> = models.iter().cloned().collect();
        prop_assert_eq!(set.len(), models.len());
        for m in &models {
            prop_assert!(m.respects_heredity(&max));
            prop_assert!(m.eligible);
            for &t in &m.interactions {
                let (f, g) = max.interactions()[t];
                prop_assert!(m.contains_main(f) && m.contains_main(g));
            }
        }
        let closed: u128 = (0..=k).map(|a| binomial(k, a) << binomial(a, 2)).sum();
        prop_assert_eq!(models.len() as u128, closed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_is_deterministic_and_balanced(seed in any::<u64>(), n in 3usize..=5, m in 2usize..=5) {
        let n = 2 * n;
        let cfg = SearchConfig { n_runs: n, n_factors: m, k: m.min(3), restarts: 3, seed, ..SearchConfig::default() };
        let a = cpw_search(&cfg).unwrap();
        prop_assert_eq!(&a, &cpw_search(&cfg).unwrap());
        for t in &a.traces {
            prop_assert!(t.design.is_level_balanced());
            prop_assert!(t.final_objective <= t.start_objective);
        }
    }

    #[test]
    fn supersaturated_moves_lower_es2(seed in any::<u64>()) {
        let (n, m) = (6, 8);
        let start = robust_doe::search::random_balanced_design(n, m, seed).unwrap();
        let cfg = SearchConfig {
            n_runs: n,
            n_factors: m,
            k: m,
            order: ModelOrder::First,
            restarts: 1,
            seed,
            start: Some(start.clone()),
            ..SearchConfig::default()
        };
        let out = cpw_search(&cfg).unwrap();
        let mut cols = columns(&start);
        let mut prev = e_s2(&start).unwrap();
        for mv in &out.traces[0].moves {
            cols[mv.column][mv.rows.0] = 1;
            cols[mv.column][mv.rows.1] = -1;
            let d = Design::from_columns("replay", cols.clone()).unwrap();
            let now = e_s2(&d).unwrap();
            prop_assert!(now < prev);
            prev = now;
        }
        prop_assert_eq!(&Design::from_columns("replay", cols).unwrap().with_label(""), &out.traces[0].design.clone().with_label(""));
    }
}
