use conecut::blowup::{self, chart_phi, chart_phi_inv, covering_chart, point_distance, BlowupPoint};
use conecut::dnc::{DncChart, DncMap, DncPoint, NonZero};
use conecut::dnc_algebra::{self as alg, LaurentElement};
use conecut::groupoid;
use conecut::pairs::PairDims;
use conecut::poly::rational;
use conecut::sampling;
use conecut::verify;
use proptest::prelude::*;

const SPACE: PairDims = PairDims { n: 3, p: 0 };

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn body_points_survive_their_covering_chart(x in coords(3)) {
        prop_assume!(x.iter().any(|c| c.abs() > 1e-3));
        let z = BlowupPoint::body(SPACE, x).unwrap();
        let c = covering_chart(SPACE, &z);
        let back = chart_phi_inv(SPACE, c, &chart_phi(SPACE, c, &z).unwrap()).unwrap();
        prop_assert!(point_distance(&back, &z) <= 1e-12);
        prop_assert!(blowup::blowdown(SPACE, &back).iter().zip(blowup::blowdown(SPACE, &z)).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn exceptional_directions_are_projective(d in coords(3), scale in 0.1f64..5.0, flip in any::<bool>()) {
        prop_assume!(d.iter().map(|c| c * c).sum::<f64>() > 1e-2);
        let s = if flip { -scale } else { scale };
        let scaled: Vec<f64> = d.iter().map(|c| c * s).collect();
        let a = BlowupPoint::exceptional(vec![], &d).unwrap();
        let b = BlowupPoint::exceptional(vec![], &scaled).unwrap();
        prop_assert!(point_distance(&a, &b) <= 1e-12);
    }

    #[test]
    fn dnc_action_commutes_with_induced_maps(
        y in -0.5f64..0.5, xi in -1.0f64..1.0, t in -0.5f64..0.5, l in 0.25f64..4.0, neg in any::<bool>()
    ) {
        let (_, f, _) = verify::suite_map_pairs().remove(1);
        let h = DncMap::new(f).unwrap();
        let chart = DncChart::new(h.source());
        let lambda = NonZero::new(if neg { -l } else { l }).unwrap();
        let z = DncPoint::new(vec![y], vec![xi], t);
        let lhs = h.eval(&chart.rx_action(lambda, &z).unwrap()).unwrap();
        let rhs = DncChart::new(h.target()).rx_action(lambda, &h.eval(&z).unwrap()).unwrap();
        for (a, b) in lhs.to_vec().iter().zip(rhs.to_vec()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn polar_and_action_arrows_correspond(theta in coords(2), t in -3.0f64..3.0) {
        prop_assume!(theta[0].abs() > 1e-2 && theta[1].abs() > 1e-2);
        let arrow = groupoid::polar_to_action([theta[0], theta[1]], t).unwrap();
        let (th, tt) = groupoid::action_to_polar(arrow).unwrap();
        let again = groupoid::polar_to_action(th, tt).unwrap();
        prop_assert!((again[0] - arrow[0]).abs() <= 1e-12 * (1.0 + arrow[0].abs()));
        prop_assert!((again[1] - arrow[1]).abs() <= 1e-12 * (1.0 + arrow[1].abs()));
        prop_assert!(th[0] > 0.0);
    }

    #[test]
    fn ring_characters_are_multiplicative(seed in any::<u64>()) {
        let dims = PairDims { n: 2, p: 1 };
        let mut rng = sampling::rng(seed);
        let a = alg::random_element(dims, &mut rng);
        let b = alg::random_element(dims, &mut rng);
        let ab = a.mul(&b).unwrap();
        prop_assert!(ab.satisfies_filtration());
        let x = [rational(1, 3), rational(-2, 1)];
        let s = rational(5, 7);
        prop_assert_eq!(
            alg::char_xs(&ab, &x, &s).unwrap(),
            alg::char_xs(&a, &x, &s).unwrap() * alg::char_xs(&b, &x, &s).unwrap()
        );
        let (y, xi) = ([rational(3, 2)], [rational(-1, 4)]);
        prop_assert_eq!(
            alg::char_yxi(&ab, &y, &xi).unwrap(),
            alg::char_yxi(&a, &y, &xi).unwrap() * alg::char_yxi(&b, &y, &xi).unwrap()
        );
    }
}

#[test]
fn t_times_its_inverse_term_is_one_on_the_body() {
    let dims = PairDims { n: 2, p: 1 };
    let inv = alg::parse_element(dims, "x1*t^-1").unwrap();
    let prod = inv.mul(&LaurentElement::t(dims)).unwrap();
    assert_eq!(prod, alg::parse_element(dims, "x1").unwrap());
}

#[test]
fn every_suite_passes_at_small_size() {
    let cfg = verify::VerifyConfig {
        samples: 50,
        seed: 3,
        ..verify::VerifyConfig::default()
    };
    let report = verify::run_all(&cfg);
    let failed: Vec<_> = report
        .suites
        .iter()
        .flat_map(|s| {
            s.failures()
                .map(move |c| format!("{}/{}: {:e}", s.name, c.name, c.value))
        })
        .collect();
    assert!(failed.is_empty(), "{failed:?}");
    let names: Vec<&str> = report.suites.iter().map(|s| s.name.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}
