use proptest::prelude::*;

use bcsi::aen_bounds::{aen_inner, aen_outer, erlang2_entropy, AenParams, EntropyMode, OuterMode};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_shifts_by_log_scale(m in 1e-3f64..1e3) {
        for mode in [EntropyMode::PaperClosedForm, EntropyMode::NumericalOracle] {
            let shift = erlang2_entropy(m, mode).unwrap() - erlang2_entropy(1.0, mode).unwrap();
            prop_assert!((shift - m.ln()).abs() <= 1e-8, "{mode:?} at m = {m}: shift {shift}");
        }
    }

    #[test]
    fn outer_grows_with_input_mean(m in 1e-2f64..10.0, mx in 1e-2f64..1e3, step in 1e-3f64..10.0) {
        for mode in [OuterMode::PaperConstant, OuterMode::CorrectedConstant] {
            let lo = aen_outer(&AenParams::new(mx, m, [m; 3]).unwrap(), mode).unwrap();
            let hi = aen_outer(&AenParams::new(mx + step, m, [m; 3]).unwrap(), mode).unwrap();
            prop_assert!((0..3).all(|k| hi[k] > lo[k]));
        }
    }

    #[test]
    fn corrected_outer_closed_form(m in 1e-2f64..10.0, mx in 1e-2f64..1e3) {
        let v = aen_outer(&AenParams::new(mx, m, [m; 3]).unwrap(), OuterMode::CorrectedConstant).unwrap();
        let expected = (mx + 2.0 * m).ln() + 1.0 - (1.0 + EULER_GAMMA + m.ln());
        prop_assert!((v[0] - expected).abs() <= 1e-8, "{} vs {expected}", v[0]);
    }
}

#[test]
fn inner_grows_with_input_mean() {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=200 {
        let mx = 10f64 * 100f64.powf(i as f64 / 200.0);
        let r = aen_inner(&AenParams::new(mx, 0.01, [0.01, 0.02, 0.03]).unwrap()).unwrap().rates[0];
        assert!(r > prev, "not increasing at m_x = {mx}");
        prev = r;
    }
}

#[test]
fn inner_versus_outer_diagnostic() {
    let mut above = 0;
    let mut total = 0;
    for m in [1e-3, 1e-2, 5e-2] {
        for mx in [1.0, 10.0, 100.0, 1000.0] {
            let p = AenParams::new(mx, m, [m; 3]).unwrap();
            let inner = aen_inner(&p).unwrap().rates[0];
            for mode in [OuterMode::PaperConstant, OuterMode::CorrectedConstant] {
                let outer = aen_outer(&p, mode).unwrap()[0];
                total += 1;
                if inner > outer {
                    above += 1;
                    println!("m = {m}, m_x = {mx}, {mode:?}: inner {inner:.6} exceeds outer {outer:.6}");
                }
            }
        }
    }
    println!("inner above outer in {above} of {total} cases");
}
