//! Checks of library outputs against independently computed values.

use anovaemu::coefficients::{beta_grid, mean_weights, solve_coefficients};
use anovaemu::db_anova::{
    fit_db, predict_db, recommend_truncation, sensitivity_report, IndexOptions, ScreeningThresholds,
};
use anovaemu::distributions::{Generator, Marginal};
use anovaemu::esp::esp_all;
use anovaemu::sobol::SobolSequence;
use anovaemu::subset::power_set;
use anovaemu::testbed::{ishigami_reference, GType, TestFunction};
use proptest::prelude::*;
use std::f64::consts::PI;

// Frozen from scipy.stats.qmc.Sobol(d, scramble=False).
#[test]
fn sobol_matches_reference_generator_5d() {
    let expected = [
        [0.5, 0.5, 0.5, 0.5, 0.5],
        [0.75, 0.25, 0.25, 0.25, 0.75],
        [0.25, 0.75, 0.75, 0.75, 0.25],
        [0.375, 0.375, 0.625, 0.875, 0.375],
        [0.875, 0.875, 0.125, 0.375, 0.875],
        [0.625, 0.125, 0.875, 0.625, 0.625],
        [0.125, 0.625, 0.375, 0.125, 0.125],
        [0.1875, 0.3125, 0.9375, 0.4375, 0.5625],
    ];
    let seq = SobolSequence::new(5).unwrap();
    let got = seq.block(1, 8);
    for (i, row) in expected.iter().enumerate() {
        assert_eq!(&got[i * 5..(i + 1) * 5], row, "index {}", i + 1);
    }
}

#[test]
fn sobol_matches_reference_generator_100d() {
    let dims = [0, 49, 50, 99];
    let cases: [(u32, [f64; 4]); 4] = [
        (2, [0.75, 0.75, 0.25, 0.75]),
        (3, [0.25, 0.25, 0.75, 0.25]),
        (17, [0.59375, 0.03125, 0.46875, 0.53125]),
        (39, [0.171875, 0.203125, 0.171875, 0.921875]),
    ];
    let seq = SobolSequence::new(100).unwrap();
    for (index, want) in cases {
        let row = seq.block(index, 1);
        let got: Vec<f64> = dims.iter().map(|&k| row[k]).collect();
        assert_eq!(got, want, "index {index}");
    }
}

/// `e_p` from power sums through Newton's identities.
fn esp_newton(r: &[f64], pmax: usize) -> Vec<f64> {
    let power: Vec<f64> = (0..=pmax).map(|k| r.iter().map(|x| x.powi(k as i32)).sum()).collect();
    let mut e = vec![1.0];
    for p in 1..=pmax {
        let mut acc = 0.0;
        for i in 1..=p {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[p - i] * power[i];
        }
        e.push(acc / p as f64);
    }
    e
}

#[test]
fn esp_agrees_with_newton_identities() {
    let r = [0.3, -1.2, 0.7, 2.0, -0.4, 1.1];
    let a = esp_all(&r, 6);
    let b = esp_newton(&r, 6);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{a:?} vs {b:?}");
    }
}

fn ishigami_analytic() -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (7.0, 0.1);
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    (vec![v1 / v, v2 / v, 0.0], vec![(v1 + v13) / v, v2 / v, v13 / v])
}

#[test]
fn published_ishigami_indices_match_closed_form() {
    let (s, st) = ishigami_analytic();
    assert!((s[0] - 0.31391).abs() < 1e-5 && (s[1] - 0.44241).abs() < 1e-5);
    assert!((st[0] - 0.55759).abs() < 1e-5 && (st[2] - 0.24368).abs() < 1e-5);
    let r = ishigami_reference();
    for j in 0..3 {
        assert!((r.first[j] - s[j]).abs() < 5e-4, "S{}", j + 1);
        // the published ST1 = 0.567 sits about 0.009 above the closed form
        assert!((r.total[j] - st[j]).abs() < 0.01, "ST{}", j + 1);
    }
}

fn gfunction_analytic(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let vj: Vec<f64> = a.iter().map(|a| 1.0 / (3.0 * (1.0 + a).powi(2))).collect();
    let v = vj.iter().map(|x| 1.0 + x).product::<f64>() - 1.0;
    let st = (0..a.len())
        .map(|j| vj[j] * vj.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| 1.0 + x).product::<f64>() / v)
        .collect();
    (vj.iter().map(|x| x / v).collect(), st)
}

#[test]
fn published_gfunction_indices_match_closed_form() {
    for (kind, tol) in [(GType::A, 0.01), (GType::B, 0.005), (GType::C, 0.01)] {
        let (s, st) = gfunction_analytic(&kind.coefficients());
        let r = kind.reference();
        for j in 0..10 {
            assert!((r.first[j] - s[j]).abs() < tol, "{kind:?} S{}: {} vs {}", j + 1, r.first[j], s[j]);
            assert!((r.total[j] - st[j]).abs() < tol, "{kind:?} ST{}: {} vs {}", j + 1, r.total[j], st[j]);
        }
    }
}

#[test]
fn estimated_indices_match_closed_form() {
    let f = TestFunction::gfunction(GType::A);
    let rep = sensitivity_report(
        &f,
        &f.marginals,
        &IndexOptions::with_n_seed(1 << 13, 3),
        0.05,
        &ScreeningThresholds::default(),
    )
    .unwrap();
    let (s, st) = gfunction_analytic(&GType::A.coefficients());
    for (j, ix) in rep.indices.iter().enumerate() {
        assert!((ix.first.value - s[j]).abs() < 0.03, "S{}", j + 1);
        assert!((ix.total.unwrap().value - st[j]).abs() < 0.03, "ST{}", j + 1);
        assert!(ix.upper.value >= st[j] - 0.03, "UB{} below ST", j + 1);
    }
}

#[test]
fn recommendations_on_published_vectors() {
    let ish = ishigami_reference();
    assert_eq!(recommend_truncation(&ish.first, &ish.total, 0.05).unwrap(), 2);
    for (kind, d0) in [(GType::A, 2), (GType::B, 1), (GType::C, 4)] {
        let r = kind.reference();
        assert_eq!(recommend_truncation(&r.first, &r.total, 0.05).unwrap(), d0, "{kind:?}");
    }
}

#[test]
fn full_db_emulator_is_unbiased_for_linear_model() {
    let f = TestFunction::linear(vec![1.0]);
    let x = [0.3];
    let r = 200;
    let preds: Vec<f64> = (0..r)
        .map(|k| {
            let em = fit_db(&f, &f.marginals, 100, k, Generator::PseudoRandom, &power_set(1)).unwrap();
            predict_db(&em, &x).unwrap()
        })
        .collect();
    let mean = preds.iter().sum::<f64>() / r as f64;
    let sd = (preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt();
    let se = sd / (r as f64).sqrt();
    assert!((mean - 0.3).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn mean_weights_reproduce_polynomials() {
    // weights sum to 1 and annihilate odd/low moments
    let betas = beta_grid(4);
    let w = mean_weights(&betas).unwrap();
    for r in 0..betas.len() as i32 {
        let m: f64 = w.iter().zip(&betas).map(|(w, b)| w * b.powi(r)).sum();
        let want = if r == 0 { 1.0 } else { 0.0 };
        assert!((m - want).abs() < 1e-12, "moment {r}: {m}");
    }
}

proptest! {
    #[test]
    fn first_order_never_exceeds_total(seed in 0u64..1000) {
        let f = TestFunction::ishigami();
        let rep = sensitivity_report(
            &f,
            &f.marginals,
            &IndexOptions::with_n_seed(1 << 11, seed),
            0.05,
            &ScreeningThresholds::default(),
        )
        .unwrap();
        for ix in &rep.indices {
            let st = ix.total.unwrap();
            prop_assert!(ix.first.value <= st.value + 3.0 * (ix.first.se + st.se) + 1e-3);
            prop_assert!(st.value <= ix.upper.value + 3.0 * (st.se + ix.upper.se) + 1e-3);
        }
    }

    #[test]
    fn coefficient_rows_satisfy_their_constraints(d0 in 1usize..=6, extra in 1usize..=3) {
        let l = d0 + extra;
        let plan = solve_coefficients(&beta_grid(l), d0, d0 - 1).unwrap();
        for row in &plan.rows {
            let scale = 1.0 + row.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for &r in &row.exponents {
                let lhs: f64 = row.coefficients.iter().zip(&plan.betas).map(|(c, b)| c * b.powi(r as i32)).sum();
                let want = if r as usize == row.p { 1.0 } else { 0.0 };
                prop_assert!((lhs - want).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn uniform_quantile_inverts_cdf(lo in -5.0f64..5.0, w in 0.1f64..10.0, u in 0.001f64..0.999) {
        let m = Marginal::uniform(lo, lo + w).unwrap();
        prop_assert!((m.cdf(m.quantile(u)) - u).abs() < 1e-12);
    }
}
