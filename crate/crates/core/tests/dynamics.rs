use approx::assert_relative_eq;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigid_formation::analysis::transformed_coords;
use rigid_formation::controller::{
    consistent_errors, estimator_control, gradient_control, ControlMode, ControllerConfig, EstimatorBank,
    MeasurementView,
};
use rigid_formation::disturbance::{DisturbanceSpec, InternalModelBasis};
use rigid_formation::rigidity::{random_henneberg, rigidity_matrix, s1_matrix, Framework};
use rigid_formation::scenario::builtin;
use rigid_formation::sim::{closed_loop_derivative, integrate, ClosedLoop, SimConfig, SimState};

fn perturbed(fw: &Framework, rng: &mut ChaCha8Rng, size: f64) -> Framework {
    let x: Vec<f64> = fw.positions().iter().map(|x| x + rng.gen_range(-size..size)).collect();
    fw.with_positions(x).unwrap()
}

fn gradient_system(fw: &Framework, offsets: &[f64]) -> ClosedLoop {
    let cfg = ControllerConfig::new(ControlMode::GradientOnly, 1.0, InternalModelBasis::default_for(&[]).unwrap())
        .unwrap();
    ClosedLoop::new(
        fw.graph().clone(),
        fw.dim(),
        fw.target_distances().to_vec(),
        DisturbanceSpec::constant(offsets).unwrap(),
        cfg,
    )
    .unwrap()
}

#[test]
fn stacked_control_matches_matrix_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for dim in [2, 3] {
        let (_, target) = random_henneberg(7, dim, &mut rng).unwrap();
        let fw = perturbed(&target, &mut rng, 0.3);
        let ne = fw.graph().edge_count();
        let e = consistent_errors(&fw);
        let mu = DVector::from_fn(ne, |_, _| rng.gen_range(-1.0..1.0));
        let view = MeasurementView::from_errors(e.as_slice(), mu.as_slice());
        let r = rigidity_matrix(&fw);
        let s1 = s1_matrix(&fw);

        let u = gradient_control(&fw, &view).unwrap();
        let oracle = -r.transpose() * &e - s1.transpose() * &mu;
        assert_relative_eq!(u, oracle, epsilon = 1e-12, max_relative = 1e-12);

        let basis = InternalModelBasis::default_for(&[0.7]).unwrap();
        let cfg = ControllerConfig::new(ControlMode::Estimator, 2.0, basis.clone()).unwrap();
        let xi: Vec<f64> = (0..ne * basis.state_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bank = EstimatorBank::from_states(ne, &basis, xi.clone()).unwrap();
        let mu_hat = bank.outputs(&basis);
        let (u, xi_dot) = estimator_control(&fw, &view, &bank, &cfg).unwrap();
        let oracle = -r.transpose() * &e - s1.transpose() * (&mu - &mu_hat);
        assert_relative_eq!(u, oracle, epsilon = 1e-12, max_relative = 1e-12);

        // ξ̇_k = Λ ξ_k + κ B (e_k + μ_k - μ̂_k)
        let d = basis.state_dim();
        let b = basis.output_vector();
        for k in 0..ne {
            let xk = DVector::from_column_slice(&xi[k * d..(k + 1) * d]);
            let want = basis.lambda() * &xk + &b * (2.0 * (e[k] + mu[k] - mu_hat[k]));
            assert_relative_eq!(xi_dot.rows(k * d, d).into_owned(), want, epsilon = 1e-12);
        }
    }
}

#[test]
fn error_rate_is_twice_r_times_velocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = builtin("tetra3d").unwrap();
    let sys = s.closed_loop().unwrap();
    let mut state = s.initial_state().unwrap();
    state.t = 1.3;
    state.xi.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    let fw = s.target_framework().unwrap().unwrap().with_positions(state.x.clone()).unwrap();
    let xdot = DVector::from_vec(closed_loop_derivative(&sys, &state).unwrap().x);

    let h = 1e-6;
    let err_at = |x: &[f64]| consistent_errors(&fw.with_positions(x.to_vec()).unwrap());
    let xp: Vec<f64> = state.x.iter().zip(xdot.iter()).map(|(x, v)| x + h * v).collect();
    let xm: Vec<f64> = state.x.iter().zip(xdot.iter()).map(|(x, v)| x - h * v).collect();
    let fd = (err_at(&xp) - err_at(&xm)) / (2.0 * h);
    let want = 2.0 * rigidity_matrix(&fw) * xdot;
    assert!((&fd - &want).amax() < 1e-6 * want.amax(), "{fd} vs {want}");
}

#[test]
fn potential_decreases_at_the_gradient_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (_, target) = random_henneberg(6, 2, &mut rng).unwrap();
    let fw = perturbed(&target, &mut rng, 0.2);
    let sys = gradient_system(&target, &vec![0.0; target.graph().edge_count()]);
    let state = sys.initial_state(fw.positions().as_slice().to_vec(), None).unwrap();
    let xdot = DVector::from_vec(closed_loop_derivative(&sys, &state).unwrap().x);

    // d/dt ¼Σe² = ½ eᵀė = eᵀ R ẋ, which must equal -||Rᵀe||²
    let e = consistent_errors(&fw);
    let r = rigidity_matrix(&fw);
    let rate = e.dot(&(&r * &xdot));
    let want = -(r.transpose() * &e).norm_squared();
    assert_relative_eq!(rate, want, max_relative = 1e-10);
}

#[test]
fn translation_equivariance() {
    let s = builtin("epuck2d").unwrap();
    let sys = s.closed_loop().unwrap();
    let init = s.initial_state().unwrap();
    let cfg = SimConfig::new(1e-3, 5.0, 100).unwrap();
    let a = integrate(&sys, &init, &cfg).unwrap();
    let shift = [37.0, -12.5];
    let mut moved = init.clone();
    moved.x.iter_mut().enumerate().for_each(|(i, x)| *x += shift[i % 2]);
    let b = integrate(&sys, &moved, &cfg).unwrap();
    for (p, q) in a.samples.iter().zip(&b.samples) {
        for i in 0..p.x.len() {
            assert!((p.x[i] + shift[i % 2] - q.x[i]).abs() < 1e-8);
        }
        assert_relative_eq!(
            DVector::from_column_slice(&p.e),
            DVector::from_column_slice(&q.e),
            epsilon = 1e-7
        );
    }
}

#[test]
fn halving_the_step_agrees_to_fourth_order() {
    let s = builtin("tetra3d").unwrap();
    let sys = s.closed_loop().unwrap();
    let init = s.initial_state().unwrap();
    let final_x = |dt: f64| {
        let steps = (2.0 / dt).round() as usize;
        integrate(&sys, &init, &SimConfig::new(dt, 2.0, steps).unwrap())
            .unwrap()
            .final_state
            .x
    };
    let (coarse, fine, finer) = (final_x(4e-3), final_x(2e-3), final_x(1e-3));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (d1, d2) = (diff(&coarse, &fine), diff(&fine, &finer));
    // RK4: halving the step cuts the difference by about 2⁴
    let ratio = d1 / d2;
    assert!((12.0..24.0).contains(&ratio), "ratio {ratio}");
    // Richardson estimate of the dt = 1e-3 error relative to the motion
    let travel = diff(&init.x, &finer);
    assert!(d2 / 15.0 < 1e-6 * travel, "error {} vs travel {travel}", d2 / 15.0);
}

#[test]
fn transformed_coordinates_vanish_on_convergence() {
    let s = builtin("epuck2d").unwrap();
    let sys = s.closed_loop().unwrap();
    let traj = integrate(&sys, &s.initial_state().unwrap(), &s.sim_config().unwrap()).unwrap();
    let fin = &traj.final_state;
    let tc = transformed_coords(&sys, fin);
    assert!(tc.e.amax() < 1e-9);
    assert!(tc.alpha.amax() < 1e-9);
    assert!(tc.theta.amax() < 1e-6);
    let start = transformed_coords(&sys, &s.initial_state().unwrap());
    assert!(start.theta.amax() > 1.0);
}

#[test]
fn divergence_guard_trips() {
    let s = builtin("triangle").unwrap();
    let sys = s.closed_loop().unwrap();
    let init = SimState {
        x: vec![0.0, 0.0, 1e10, 0.0, 0.0, 1.0],
        ..s.initial_state().unwrap()
    };
    let traj = integrate(&sys, &init, &SimConfig::new(1e-3, 1.0, 10).unwrap()).unwrap();
    assert!(traj.divergence.is_some());
}
