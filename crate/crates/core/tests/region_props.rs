use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bcsi::channels::gen;
use bcsi::fmelim::{build_pre_fm, fm_eliminate, fm_verify, minimal_2d, same_vertices, LinIneqSystem, Sense, PRE_FM_DROP};
use bcsi::geometry::VERTEX_TOL;
use bcsi::regions::{
    ln_inner_fixed, ln_inner_region, mbc_inner_fixed, mbc_inner_region, mbc_inner_terms, AuxScheme, SchemeShape,
    SearchConfig, NO_SI,
};
use bcsi::Exec;

const FREE2: SchemeShape = SchemeShape { nu: 2, nv: 2, tie_v_to_u: false };

fn small_search(seed: u64, restarts: usize) -> SearchConfig {
    SearchConfig {
        aux_cards: Some((2, 2)),
        restarts,
        hillclimb_steps: 30,
        seed,
        ..SearchConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emitted_bounds_are_nonnegative(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ch = gen::random_mbc(&mut r);
        let sch = AuxScheme::random(FREE2, 2, 2, &mut r);
        let reg = mbc_inner_fixed(&ch, &sch).unwrap();
        prop_assert!(reg.halfspaces.iter().all(|h| h.b >= 0.0));
        prop_assert!(reg.vertices.iter().all(|v| v[0] >= 0.0 && v[1] >= 0.0));
        let t = mbc_inner_terms(&ch, &sch, NO_SI).unwrap();
        if t.b < 0.0 {
            prop_assert!(reg.vertices.iter().all(|v| v[1] == 0.0));
        }
        let ln = gen::random_less_noisy([2, 2, 2, 2, 2], [false; 3], &mut r);
        prop_assert!(ln_inner_fixed(&ln, &sch).unwrap().c.iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn state_blind_schemes_project_to_closed_form(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ch = gen::random_mbc(&mut r);
        let sch = AuxScheme::random_blended(FREE2, 2, 2, 0.0, &mut r);
        let v = fm_verify(&ch, &sch).unwrap();
        prop_assert!(v.matches);
        prop_assert!(v.combined_row_redundant);
    }

    #[test]
    fn elimination_order_does_not_matter(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ch = gen::random_mbc(&mut r);
        let sch = AuxScheme::random_blended(FREE2, 2, 2, r.gen_range(0.0..0.05), &mut r);
        let mut pre = build_pre_fm(&ch, &sch).unwrap();
        pre.add_variable("R1").unwrap();
        pre.push(&[("R1", 1), ("R11", -1), ("R12", -1)], Sense::Le, 0.0, "split").unwrap();
        pre.push(&[("R1", 1), ("R11", -1), ("R12", -1)], Sense::Ge, 0.0, "split").unwrap();
        let mut order = PRE_FM_DROP.to_vec();
        let base = minimal_2d(&fm_eliminate(&pre, &order).unwrap()).unwrap().vertices;
        for _ in 0..3 {
            for i in (1..order.len()).rev() {
                order.swap(i, r.gen_range(0..=i));
            }
            let other = minimal_2d(&fm_eliminate(&pre, &order).unwrap()).unwrap().vertices;
            prop_assert!(same_vertices(&base, &other, VERTEX_TOL));
        }
    }

    #[test]
    fn projection_is_sound_on_a_grid(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut sys = LinIneqSystem::new(&["x", "y", "t"]);
        for k in 0..4 {
            let c = [r.gen_range(-2..=2), r.gen_range(-2..=2), r.gen_range(-2i64..=2)];
            let terms = [("x", c[0]), ("y", c[1]), ("t", c[2])];
            sys.push(&terms, Sense::Le, r.gen_range(0.0..1.0), &format!("row {k}")).unwrap();
        }
        sys.push(&[("t", 1)], Sense::Le, 1.0, "t cap").unwrap();
        for v in ["x", "y", "t"] {
            sys.push(&[(v, 1)], Sense::Ge, 0.0, "nonnegative").unwrap();
        }
        let proj = fm_eliminate(&sys, &["t"]).unwrap();
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        for i in 0..=60 {
            for j in 0..=60 {
                let (x, y) = (i as f64 * 0.01, j as f64 * 0.01);
                let lifted = ts.iter().any(|&t| sys.satisfied_by(&[x, y, t], 1e-9));
                if lifted {
                    prop_assert!(proj.satisfied_by(&[x, y], 1e-9), "({x}, {y}) lost by projection");
                }
            }
        }
    }
}

#[test]
fn constant_state_terms_vanish_exactly() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let ch = gen::random_mbc_det([2, 1, 2, 2, 2], [false; 3], &mut r);
        let sch = AuxScheme::random(FREE2, 2, 1, &mut r);
        let k = bcsi::regions::mbc_constants(&ch, &sch, NO_SI).unwrap();
        assert_eq!([k.i_u_s, k.i_v_s_given_u, k.i_x_s_given_v, k.i_uv_s], [0.0; 4]);
    }
}

#[test]
fn doubling_restarts_keeps_every_vertex() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..4 {
        let ch = gen::random_mbc(&mut r);
        let small = mbc_inner_region(&ch, &small_search(seed, 6)).unwrap();
        let big = mbc_inner_region(&ch, &small_search(seed, 12)).unwrap();
        for v in &small.vertices {
            assert!(big.contains(v, 1e-9), "vertex {v:?} lost");
        }
        let ln = gen::random_less_noisy([2, 2, 2, 2, 2], [false; 3], &mut r);
        let small = ln_inner_region(&ln, &small_search(seed, 6), NO_SI).unwrap();
        let big = ln_inner_region(&ln, &small_search(seed, 12), NO_SI).unwrap();
        for v in &small.vertices {
            assert!(big.contains(v, 1e-9), "vertex {v:?} lost");
        }
    }
}

#[test]
fn search_is_schedule_independent() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let ch = gen::random_mbc(&mut r);
    let mut cfg = small_search(9, 10);
    cfg.exec = Exec::Sequential;
    let a = mbc_inner_region(&ch, &cfg).unwrap();
    cfg.exec = Exec::Parallel;
    let b = mbc_inner_region(&ch, &cfg).unwrap();
    assert_eq!(a.vertices, b.vertices);
    assert_eq!(a.schemes, b.schemes);
}

#[test]
fn searched_hull_covers_fresh_schemes() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let ch = gen::random_mbc(&mut r);
    let cfg = SearchConfig {
        aux_cards: Some((2, 2)),
        restarts: 200,
        seed: 1,
        ..SearchConfig::default()
    };
    let hull = mbc_inner_region(&ch, &cfg).unwrap();
    let mut fresh = ChaCha8Rng::seed_from_u64(0xFEED);
    for _ in 0..50 {
        let sch = AuxScheme::random(FREE2, 2, 2, &mut fresh);
        for v in mbc_inner_fixed(&ch, &sch).unwrap().vertices {
            assert!(hull.contains(&v, 1e-9), "fresh vertex {v:?} outside searched hull");
        }
    }
}
