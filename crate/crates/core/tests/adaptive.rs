use dln_core::problem::registry_lookup;
use dln_core::{integrate_adaptive, ControllerConfig, DlnParameters, Error, NewtonConfig};

fn params() -> DlnParameters {
    DlnParameters::new(2.0 / 3.0).unwrap()
}

#[test]
fn quadratic_steps_grow_to_the_cap() {
    let inst = registry_lookup("quadratic")
        .unwrap()
        .with_t_end(20.0)
        .unwrap();
    let ctrl = ControllerConfig {
        k_max: 0.5,
        ..Default::default()
    };
    let run = integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).unwrap();
    assert_eq!(run.rejected, 0);
    let ks: Vec<f64> = run.trajectory.records.iter().map(|r| r.k).collect();
    assert!(ks.contains(&0.5));
    for (t, y) in run.trajectory.times.iter().zip(&run.trajectory.states) {
        assert!((y[0] - t * t).abs() <= 1e-10);
    }
    assert_eq!(run.trajectory.last_time(), 20.0);
}

#[test]
fn stiff_vanderpol_completes() {
    let inst = registry_lookup("vanderpol:10")
        .unwrap()
        .with_t_end(5.0)
        .unwrap();
    let ctrl = ControllerConfig {
        tol_abs: 1e-5,
        tol_rel: 1e-5,
        ..Default::default()
    };
    let run = integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).unwrap();
    assert_eq!(run.trajectory.last_time(), 5.0);
    for r in &run.trajectory.records {
        assert!(r.accepted);
        assert!(r.lte.as_ref().is_none_or(|e| e.scalar_error <= 1.0));
        assert!(r.ledger.relative_residual() <= 1e-12);
    }
}

#[test]
fn step_ratios_stay_in_bounds_without_rejections() {
    let inst = registry_lookup("oscillator").unwrap();
    let ctrl = ControllerConfig {
        k_initial: 0.01,
        ..Default::default()
    };
    let run = integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).unwrap();
    assert_eq!(run.rejected, 0);
    for w in run.trajectory.records.windows(2) {
        let r = w[1].k / w[0].k;
        assert!(
            (ctrl.ratio_min * (1.0 - 1e-12)..=ctrl.ratio_max * (1.0 + 1e-12)).contains(&r),
            "{r}"
        );
    }
}

#[test]
fn rejections_retry_from_the_same_node() {
    let inst = registry_lookup("vanderpol:10").unwrap();
    let ctrl = ControllerConfig {
        tol_abs: 1e-6,
        tol_rel: 1e-6,
        k_initial: 0.01,
        ..Default::default()
    };
    let run = integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).unwrap();
    assert!(run.rejected > 0);
    assert_eq!(
        run.attempts.iter().filter(|a| !a.accepted).count(),
        run.rejected
    );
    for w in run.attempts.windows(2) {
        if !w[0].accepted {
            let start0 = w[0].t - w[0].k;
            let start1 = w[1].t - w[1].k;
            assert!((start0 - start1).abs() <= 1e-12, "{start0} vs {start1}");
            assert!(w[1].k < w[0].k);
        }
    }
    // Only accepted steps reach the trajectory, and time moves forward.
    assert!(run.trajectory.records.iter().all(|r| r.accepted));
    assert!(run.trajectory.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn impossible_tolerance_is_reported() {
    let inst = registry_lookup("vanderpol").unwrap();
    let ctrl = ControllerConfig {
        tol_abs: 1e-15,
        tol_rel: 0.0,
        ..Default::default()
    };
    let err = integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).unwrap_err();
    assert!(matches!(
        err,
        Error::TooManyRejections { .. } | Error::StepSizeUnderflow { .. }
    ));
}

#[test]
fn invalid_controller_is_rejected() {
    let inst = registry_lookup("decay").unwrap();
    let ctrl = ControllerConfig {
        safety: 1.5,
        ..Default::default()
    };
    assert!(integrate_adaptive(&inst, params(), &ctrl, &NewtonConfig::default()).is_err());
}
