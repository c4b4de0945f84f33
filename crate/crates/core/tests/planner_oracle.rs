//! Planner formulas against a frozen 50-digit evaluation
//! (`tests/oracles/planner_grid.py`).

#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use tfhh::planner::{self, PlanInput, Strategy as PlanStrategy};

struct Row {
    phi: f64,
    eps: f64,
    delta_g: f64,
    p_star: f64,
    r_min_real: f64,
    r_min: u32,
    eps_star: f64,
    w_real: f64,
    w: usize,
    tolerance: f64,
    w_min: usize,
    space_eps_star: f64,
    space_rounds: u32,
}

const GAMMA: f64 = 0.30326532985631671;
const LN_GAMMA: f64 = -1.1931471805599453;
const GRID: &[Row] = &[
    Row { phi: 0.02, eps: 0.01, delta_g: 0.01, p_star: 100.0, r_min_real: 14.533835547349903, r_min: 15, eps_star: 0.12991841853910834, w_real: 562.92282559477947, w: 563, tolerance: 9.9997451448519204e-3, w_min: 136, space_eps_star: 1.0528381265779112e-4, space_rounds: 27 },
    Row { phi: 0.02, eps: 0.01, delta_g: 0.01, p_star: 5000.0, r_min_real: 21.091321613054269, r_min: 22, eps_star: 0.099774693321876636, w_real: 327.1549569079799, w: 328, tolerance: 9.9912388021298175e-3, w_min: 136, space_eps_star: 1.0528381265779112e-4, space_rounds: 34 },
    Row { phi: 0.02, eps: 0.01, delta_g: 0.05, p_star: 100.0, r_min_real: 13.184934138825609, r_min: 14, eps_star: 0.1055053157420772, w_real: 355.46513355456119, w: 356, tolerance: 9.9953518539885682e-3, w_min: 136, space_eps_star: 1.0528381265779112e-4, space_rounds: 26 },
    Row { phi: 0.02, eps: 0.01, delta_g: 0.05, p_star: 5000.0, r_min_real: 19.742420204529975, r_min: 20, eps_star: 0.14713386248775213, w_real: 957.69802473835608, w: 958, tolerance: 9.999667410508522e-3, w_min: 136, space_eps_star: 1.0528381265779112e-4, space_rounds: 33 },
    Row { phi: 0.02, eps: 5.0e-3, delta_g: 0.01, p_star: 100.0, r_min_real: 15.994122482615856, r_min: 16, eps_star: 0.071545464409117892, w_real: 7.7661461840055596e+4, w: 77662, tolerance: 4.9999998949220082e-3, w_min: 272, space_eps_star: 4.5120341713627076e-5, space_rounds: 29 },
    Row { phi: 0.02, eps: 5.0e-3, delta_g: 0.01, p_star: 5000.0, r_min_real: 22.551608548320221, r_min: 23, eps_star: 0.054945456158259438, w_real: 1.1592287581339975e+3, w: 1160, tolerance: 4.9993016794607884e-3, w_min: 272, space_eps_star: 4.5120341713627076e-5, space_rounds: 35 },
    Row { phi: 0.02, eps: 5.0e-3, delta_g: 0.05, p_star: 100.0, r_min_real: 14.645221074091562, r_min: 15, eps_star: 0.058101283076543033, w_real: 1.4261618215015389e+3, w: 1427, tolerance: 4.999501706540151e-3, w_min: 272, space_eps_star: 4.5120341713627076e-5, space_rounds: 28 },
    Row { phi: 0.02, eps: 5.0e-3, delta_g: 0.05, p_star: 5000.0, r_min_real: 21.202707139795927, r_min: 22, eps_star: 0.044620599340382092, w_real: 719.01695983312851, w: 720, tolerance: 4.9976396228258221e-3, w_min: 272, space_eps_star: 4.5120341713627076e-5, space_rounds: 34 },
    Row { phi: 0.05, eps: 0.025, delta_g: 0.01, p_star: 100.0, r_min_real: 14.533835547349903, r_min: 15, eps_star: 0.12991841853910834, w_real: 225.16913023791179, w: 226, tolerance: 0.024982911929071343, w_min: 55, space_eps_star: 1.9235396490828585e-3, space_rounds: 23 },
    Row { phi: 0.05, eps: 0.025, delta_g: 0.01, p_star: 5000.0, r_min_real: 21.091321613054269, r_min: 22, eps_star: 0.099774693321876636, w_real: 130.86198276319196, w: 131, tolerance: 0.024991043042406203, w_min: 55, space_eps_star: 1.9235396490828585e-3, space_rounds: 29 },
    Row { phi: 0.05, eps: 0.025, delta_g: 0.05, p_star: 100.0, r_min_real: 13.184934138825609, r_min: 14, eps_star: 0.1055053157420772, w_real: 142.18605342182448, w: 143, tolerance: 0.024955976529182122, w_min: 55, space_eps_star: 1.9235396490828585e-3, space_rounds: 21 },
    Row { phi: 0.05, eps: 0.025, delta_g: 0.05, p_star: 5000.0, r_min_real: 19.742420204529975, r_min: 20, eps_star: 0.14713386248775213, w_real: 383.07920989534243, w: 384, tolerance: 0.024993674831583245, w_min: 55, space_eps_star: 1.9235396490828585e-3, space_rounds: 28 },
    Row { phi: 0.05, eps: 0.0125, delta_g: 0.01, p_star: 100.0, r_min_real: 15.994122482615856, r_min: 16, eps_star: 0.071545464409117892, w_real: 3.1064584736022238e+4, w: 31065, tolerance: 0.012499999493240528, w_min: 109, space_eps_star: 1.7610328571454303e-4, space_rounds: 27 },
    Row { phi: 0.05, eps: 0.0125, delta_g: 0.01, p_star: 5000.0, r_min_real: 22.551608548320221, r_min: 23, eps_star: 0.054945456158259438, w_real: 463.691503253599, w: 464, tolerance: 0.012498254198651971, w_min: 109, space_eps_star: 1.7610328571454303e-4, space_rounds: 33 },
    Row { phi: 0.05, eps: 0.0125, delta_g: 0.05, p_star: 100.0, r_min_real: 14.645221074091562, r_min: 15, eps_star: 0.058101283076543033, w_real: 570.46472860061557, w: 571, tolerance: 0.012498011843425977, w_min: 109, space_eps_star: 1.7610328571454303e-4, space_rounds: 25 },
    Row { phi: 0.05, eps: 0.0125, delta_g: 0.05, p_star: 5000.0, r_min_real: 21.202707139795927, r_min: 22, eps_star: 0.044620599340382092, w_real: 287.6067839332514, w: 288, tolerance: 0.012494099057064555, w_min: 109, space_eps_star: 1.7610328571454303e-4, space_rounds: 32 },
    Row { phi: 0.1, eps: 0.05, delta_g: 0.01, p_star: 100.0, r_min_real: 14.533835547349903, r_min: 15, eps_star: 0.12991841853910834, w_real: 112.58456511895589, w: 113, tolerance: 0.049965823858142686, w_min: 28, space_eps_star: 4.8719734625318959e-3, space_rounds: 21 },
    Row { phi: 0.1, eps: 0.05, delta_g: 0.01, p_star: 5000.0, r_min_real: 21.091321613054269, r_min: 22, eps_star: 0.099774693321876636, w_real: 65.430991381595981, w: 66, tolerance: 0.049853410322303789, w_min: 28, space_eps_star: 4.8719734625318959e-3, space_rounds: 28 },
    Row { phi: 0.1, eps: 0.05, delta_g: 0.05, p_star: 100.0, r_min_real: 13.184934138825609, r_min: 14, eps_star: 0.1055053157420772, w_real: 71.093026710912238, w: 72, tolerance: 0.049805142820762483, w_min: 28, space_eps_star: 4.8719734625318959e-3, space_rounds: 20 },
    Row { phi: 0.1, eps: 0.05, delta_g: 0.05, p_star: 5000.0, r_min_real: 19.742420204529975, r_min: 20, eps_star: 0.14713386248775213, w_real: 191.53960494767122, w: 192, tolerance: 0.04998734966316649, w_min: 28, space_eps_star: 4.8719734625318959e-3, space_rounds: 26 },
    Row { phi: 0.1, eps: 0.025, delta_g: 0.01, p_star: 100.0, r_min_real: 15.994122482615856, r_min: 16, eps_star: 0.071545464409117892, w_real: 1.5532292368011119e+4, w: 15533, tolerance: 0.024999996545930402, w_min: 55, space_eps_star: 8.239450357862721e-4, space_rounds: 24 },
    Row { phi: 0.1, eps: 0.025, delta_g: 0.01, p_star: 5000.0, r_min_real: 22.551608548320221, r_min: 23, eps_star: 0.054945456158259438, w_real: 231.8457516267995, w: 232, tolerance: 0.024996508397303942, w_min: 55, space_eps_star: 8.239450357862721e-4, space_rounds: 31 },
    Row { phi: 0.1, eps: 0.025, delta_g: 0.05, p_star: 100.0, r_min_real: 14.645221074091562, r_min: 15, eps_star: 0.058101283076543033, w_real: 285.23236430030779, w: 286, tolerance: 0.024988615032914056, w_min: 55, space_eps_star: 8.239450357862721e-4, space_rounds: 23 },
    Row { phi: 0.1, eps: 0.025, delta_g: 0.05, p_star: 5000.0, r_min_real: 21.202707139795927, r_min: 22, eps_star: 0.044620599340382092, w_real: 143.8033919666257, w: 144, tolerance: 0.02498819811412911, w_min: 55, space_eps_star: 8.239450357862721e-4, space_rounds: 29 },
];

fn close(actual: f64, expected: f64) -> bool {
    (actual - expected).abs() <= 5e-11 * expected.abs()
}

fn input(row: &Row) -> PlanInput {
    PlanInput {
        phi: row.phi,
        eps: row.eps,
        delta_g: row.delta_g,
        delta: (row.delta_g + 0.01).min(0.99),
        p_star: row.p_star,
    }
}

#[test]
fn constants_match_high_precision() {
    assert!(close(planner::gamma(), GAMMA));
    assert!(close(planner::gamma().ln(), LN_GAMMA));
}

#[test]
fn grid_matches_high_precision() {
    for row in GRID {
        let inp = input(row);
        assert!(close(planner::r_min_real(&inp), row.r_min_real), "r_min_real {}", row.r_min_real);
        assert_eq!(planner::r_min(&inp).unwrap(), row.r_min);
        let es = planner::epsilon_star(row.p_star, row.delta_g, row.r_min);
        assert!(close(es, row.eps_star), "eps* {es} vs {}", row.eps_star);
        let wr = planner::w_real(row.phi, row.eps, es).unwrap();
        assert!((wr - row.w_real).abs() <= 1e-9 * row.w_real, "w_real {wr} vs {}", row.w_real);
        assert_eq!(planner::w_given_r(&inp, row.r_min).unwrap(), row.w);
        assert!(close(planner::predicted_tolerance(row.w, es, row.phi), row.tolerance));
        assert_eq!(planner::w_min(row.eps).unwrap(), row.w_min);
        let (rounds, target) = planner::r_for_space_dominant(&inp).unwrap();
        assert!(close(target, row.space_eps_star), "space eps* {target} vs {}", row.space_eps_star);
        assert_eq!(rounds, row.space_rounds);
    }
}

#[test]
fn boundary_below_r_min_is_insufficient() {
    for row in GRID {
        let inp = input(row);
        assert!(planner::w_given_r(&inp, row.r_min - 1).is_err());
    }
}

#[test]
fn reference_plans() {
    let inp = PlanInput {
        phi: 0.02,
        eps: 0.01,
        delta_g: 0.01,
        delta: 0.02,
        p_star: 5000.0,
    };
    let time = planner::plan(&inp, PlanStrategy::TimeDominant).unwrap();
    assert_eq!((time.d, time.w, time.rounds), (5, 328, 22));
    let space = planner::plan(&inp, PlanStrategy::SpaceDominant).unwrap();
    assert_eq!((space.d, space.w, space.rounds), (5, 136, 34));
    for p in [time, space] {
        assert!(p.predicted_tolerance <= inp.eps);
        assert!(p.w as f64 > planner::false_negative_width_bound(inp.phi, p.eps_star));
        assert!(planner::failure_probability(p.d, inp.delta_g) <= inp.delta);
    }
}

#[test]
fn width_is_non_increasing_in_rounds() {
    let inp = PlanInput {
        phi: 0.02,
        eps: 0.01,
        delta_g: 0.05,
        delta: 0.1,
        p_star: 100.0,
    };
    let r0 = planner::r_min(&inp).unwrap();
    let widths: Vec<usize> = (r0..r0 + 40).map(|r| planner::w_given_r(&inp, r).unwrap()).collect();
    assert!(widths.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*widths.last().unwrap(), planner::w_min(0.01).unwrap());
}

#[test]
fn rounds_grow_with_p_star() {
    let mut last_time = 0;
    let mut last_space = 0;
    for p_star in [10.0, 100.0, 1e3, 1e4, 1e5] {
        let inp = PlanInput {
            phi: 0.02,
            eps: 0.01,
            delta_g: 0.05,
            delta: 0.1,
            p_star,
        };
        let t = planner::r_min(&inp).unwrap();
        let (s, _) = planner::r_for_space_dominant(&inp).unwrap();
        assert!(t >= last_time && s >= last_space);
        last_time = t;
        last_space = s;
    }
}

fn plan_input() -> impl Strategy<Value = PlanInput> {
    (1e-3f64..0.5, 0.01f64..0.99, 1e-4f64..0.5, 1.0f64..1e6).prop_map(|(phi, frac, delta_g, p_star)| PlanInput {
        phi,
        eps: phi * frac,
        delta_g,
        delta: delta_g + (1.0 - delta_g) / 2.0,
        p_star,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tolerance_round_trip(inp in plan_input(), extra in 0u32..20) {
        let r = planner::r_min(&inp).unwrap() + extra;
        let w = planner::w_given_r(&inp, r).unwrap();
        let es = planner::epsilon_star(inp.p_star, inp.delta_g, r);
        prop_assert!(planner::predicted_tolerance(w, es, inp.phi) <= inp.eps * (1.0 + 1e-12));
    }

    #[test]
    fn both_strategies_meet_tolerance(inp in plan_input()) {
        for s in [PlanStrategy::TimeDominant, PlanStrategy::SpaceDominant] {
            let p = planner::plan(&inp, s).unwrap();
            prop_assert!(p.predicted_tolerance <= inp.eps * (1.0 + 1e-12));
            prop_assert!(p.w as f64 > planner::false_negative_width_bound(inp.phi, p.eps_star));
            prop_assert!(planner::failure_probability(p.d, inp.delta_g) <= inp.delta * (1.0 + 1e-12));
        }
    }
}
