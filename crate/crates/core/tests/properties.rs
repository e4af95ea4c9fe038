use kssim_core::analysis::{check_gradv_bound, gap_series, DiagnosticsSpec};
use kssim_core::grid::integrate;
use kssim_core::solver::run;
use kssim_core::{Grid64, KsError, ModelParams, RunStatus, ScalarField64, Scheme, SolverConfig};
use proptest::prelude::*;
use std::f64::consts::PI;

fn smooth_field(grid: Grid64, coeffs: &[f64], mass: f64) -> ScalarField64 {
    let raw = ScalarField64::from_fn(grid, |x| {
        1.0 + coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * PI * x[0]).cos() * if grid.dim() == 2 { (PI * x[1]).cos() } else { 1.0 })
            .sum::<f64>()
    })
    .unwrap();
    let total = integrate(&raw);
    raw.scaled(mass / total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_conserve_mass_and_stay_nonnegative(
        dim in 1usize..=2,
        chi in 0.0f64..2.0,
        p in 1.2f64..3.0,
        theta in 0.2f64..1.0,
        eps in 1e-3f64..0.1,
        mass in 0.05f64..2.0,
        coeffs in proptest::collection::vec(-0.3f64..0.3, 3),
        explicit in any::<bool>(),
    ) {
        let grid = if dim == 1 {
            Grid64::new(1, &[1.0], &[24]).unwrap()
        } else {
            Grid64::new(2, &[1.0, 1.0], &[8, 8]).unwrap()
        };
        let u0 = smooth_field(grid, &coeffs, mass);
        let v0 = u0.map(|x| x.powf(theta)).unwrap();
        let params = ModelParams::new(chi, p, theta, eps).unwrap();
        let mut cfg = SolverConfig::new(0.01, 0.002);
        cfg.dt_max = 5e-5;
        if explicit {
            cfg.scheme = Scheme::FullyExplicit;
        }
        let traj = run(&u0, &v0, &params, &cfg, &DiagnosticsSpec::default(), 0.0).unwrap();
        prop_assert_eq!(traj.status, RunStatus::Completed);
        let m0 = integrate(&u0);
        let u0_max = u0.max_abs();
        for row in &traj.rows {
            prop_assert!((row.mass - m0).abs() <= 1e-12 * m0, "mass {} vs {}", row.mass, m0);
            prop_assert!(row.min_u >= -1e-12 * u0_max);
            prop_assert!(row.min_v >= -1e-12 * (v0.max_abs() + row.u_linf.powf(theta) * cfg.t_end));
        }
    }

    #[test]
    fn gap_is_unchanged_by_a_common_shift(
        values in proptest::collection::vec(0.0f64..5.0, 16),
        shift in 0.0f64..10.0,
    ) {
        let grid = Grid64::unit_interval(16).unwrap();
        let u = ScalarField64::new(grid, values).unwrap();
        let u_bar = integrate(&u);
        let spec = DiagnosticsSpec::default();
        let base = spec.row(0.0, &u, &u, u_bar, 0.0).unwrap();
        let moved = u.map(|x| x + shift).unwrap();
        let shifted = spec.row(0.0, &moved, &u, u_bar + shift, 0.0).unwrap();
        prop_assert!((base.linf_gap - shifted.linf_gap).abs() <= 4.0 * f64::EPSILON * (u_bar + shift + 5.0));
    }

    #[test]
    fn gradient_bound_refuses_exactly_past_the_admissible_range(theta in 0.51f64..=1.0, below in 1e-9f64..0.5) {
        let grid = Grid64::new(2, &[1.0, 1.0], &[4, 4]).unwrap();
        let sup = 2.0 / (2.0 * theta - 1.0);
        let q_in = (sup * (1.0 - below)).max(1.0);
        let u0 = smooth_field(grid, &[0.2], 1.0);
        let spec = DiagnosticsSpec { q_list: vec![q_in, sup, sup + 1.0], r_list: vec![] };
        let traj = run(
            &u0,
            &u0.map(|x| x.powf(theta)).unwrap(),
            &ModelParams::new(1.0, 2.0, theta, 0.0).unwrap(),
            &SolverConfig::new(1e-3, 5e-4),
            &spec,
            0.0,
        )
        .unwrap();
        let runs = std::slice::from_ref(&traj);
        prop_assert!(check_gradv_bound(runs, q_in, theta, 0.0).is_ok());
        for q in [sup, sup + 1.0] {
            let refused = matches!(check_gradv_bound(runs, q, theta, 0.0), Err(KsError::InadmissibleExponent { .. }));
            prop_assert!(refused);
        }
    }
}

#[test]
fn heat_flow_gap_follows_first_eigenmode() {
    let a = 0.3;
    let grid = Grid64::unit_interval(128).unwrap();
    let u0 = ScalarField64::from_fn(grid, |x| 1.0 + a * (PI * x[0]).cos()).unwrap();
    let params = ModelParams::new(0.0, 2.0, 0.5, 0.0).unwrap();
    let cfg = SolverConfig::new(0.6, 0.01);
    let traj = run(&u0, &u0, &params, &cfg, &DiagnosticsSpec::default(), 0.05).unwrap();
    let series = gap_series(&traj, 0.05).unwrap();
    let lambda1 = PI * PI;
    for &(t, gap) in series.points.iter().filter(|p| p.0 <= 0.5 + 1e-12) {
        let ratio = gap / (a * (-lambda1 * t).exp());
        assert!((0.95..=1.05).contains(&ratio), "t = {t}: ratio {ratio}");
    }
}

#[test]
fn single_precision_run_conserves_mass() {
    use kssim_core::{Grid32, ModelParams32, ScalarField32};
    let grid = Grid32::unit_interval(32).unwrap();
    let u0 = ScalarField32::from_fn(grid, |x| 1.0 + 0.5 * (std::f32::consts::PI * x[0]).cos()).unwrap();
    let v0 = u0.map(|x| x.sqrt()).unwrap();
    let params = ModelParams32::new(1.0, 1.5, 0.5, 1e-2).unwrap();
    let traj = run(&u0, &v0, &params, &SolverConfig::new(0.05f32, 0.01), &DiagnosticsSpec::default(), 0.0).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    let m0 = integrate(&u0);
    assert!((integrate(&traj.final_state.u) - m0).abs() <= 1e-5 * m0);
    assert!(traj.final_state.u.min() >= 0.0);
}
