use lrkam::kam::{run_iteration, KamConfig, KamSchedule};
use lrkam::mechanics::*;
use lrkam::series::MassVector;

fn duffing() -> Potential {
    Potential::Duffing { alpha: 1.0, beta: -1.0 }
}

#[test]
fn normal_form_feeds_the_iteration() {
    let domain = ChartDomain {
        energy: (0.1, 40.0),
        angular_momentum: None,
        center: 0.0,
    };
    let chart = action_map(&duffing(), &domain, &QuadratureConfig::default()).unwrap();
    let m = MassVector::exponential(1.0, 3).unwrap();
    let model = HamiltonianModel::new(1, duffing(), m.clone(), Coupling::CosDifference { strength: 0.5 }, 1e-6).unwrap();
    let xi = [1.0, 3.71, 3.29];
    let cfg = NormalFormConfig {
        max_l1: 4,
        drop_tol: 1e-10,
        ..NormalFormConfig::default()
    };
    let nf = to_normal_form(&model, &chart, &xi, &cfg).unwrap();
    assert!(nf.coupling_norm > 0.0);
    let sched = KamSchedule::build(1e-6, 0.5, 1.4, 0.25, 3).unwrap();
    let mut kam = KamConfig::default();
    kam.caps.max_l1 = 4;
    let run = run_iteration(&nf.series, &xi, &sched, &m, &kam).unwrap();
    let norms = run.tracked_norms();
    assert_eq!(norms.len(), 4);
    // each stage at least squares down to the 5/4 law
    for w in norms.windows(2) {
        assert!(w[1] < w[0].powf(1.2), "{norms:?}");
    }
}

#[test]
fn duffing_conditions() {
    let domain = ChartDomain {
        energy: (0.1, 2.0),
        angular_momentum: None,
        center: 0.0,
    };
    let chart = action_map(&duffing(), &domain, &QuadratureConfig::default()).unwrap();
    let xi = [1.0, 0.5 * (1.0 + 5f64.sqrt())];
    let twists: Vec<f64> = xi
        .iter()
        .map(|w| {
            let nf_h = (0..60).fold((0.1, 2.0), |(a, b): (f64, f64), _| {
                let mid = 0.5 * (a + b);
                if chart.frequency(mid, 0.0).unwrap() < *w {
                    (mid, b)
                } else {
                    (a, mid)
                }
            });
            let l = chart.action(nf_h.0, 0.0).unwrap();
            chart.fitted_derivative(l, 2).unwrap()
        })
        .collect();
    let report = check_p1_p2(Some((&xi, &twists)), Some((&duffing(), &[0.6][..])), &ConditionConfig::default()).unwrap();
    let p1 = report.p1.unwrap();
    assert!(p1.pass, "{p1:?}");
    assert!(p1.twist_bound.is_finite());
    let p2 = report.p2.unwrap();
    assert!((p2.omega[0] - 2.0).abs() < 1e-6);
    assert!(p2.pass);
}

#[test]
fn planar_duffing_frequency_map_is_nondegenerate() {
    let domain = ChartDomain {
        energy: (1.0, 2.0),
        angular_momentum: Some((0.5, 1.0)),
        center: 1.0,
    };
    let chart = action_map(&duffing(), &domain, &QuadratureConfig::default()).unwrap();
    let fc = frequency_chart(&chart, &FrequencyChartConfig::default()).unwrap();
    assert_eq!(fc.flagged, 0);
    assert!(fc.min_abs_det > 1e-3, "{}", fc.min_abs_det);
    assert!(fc.max_gradient_error <= 1e-7);
    assert!(fc.max_richardson_gap <= 1e-6);
}
