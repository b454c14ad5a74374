use std::sync::Arc;

use dissipwave::analysis::{basic_energy, EnergyLedger};
use dissipwave::grid::{make_grid, Field, Grid};
use dissipwave::io::{read_snapshot_on, write_snapshot};
use dissipwave::oracle::{dalembert, heat_reference, mode_ode};
use dissipwave::solver::{
    linear_solution, solve, time_derivative, Forcing, Integrator, Observer, SolverConfig, SolverState,
};
use dissipwave::symbols::{apply_free_wave, green_hat, green_hat_dt};
use dissipwave::Result;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(grid: &Arc<Grid<f64>>, amp: f64, center: f64) -> Field<f64> {
    Field::from_fn(grid.clone(), |x| {
        amp * (-x.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / 4.0).exp()
    })
    .unwrap()
}

fn max_diff(a: &Field<f64>, b: &Field<f64>) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Default)]
struct Keep {
    states: Vec<SolverState<f64>>,
}

impl Observer<f64> for Keep {
    fn on_snapshot(&mut self, state: &SolverState<f64>) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

fn final_state(u0: &Field<f64>, u1: &Field<f64>, config: &SolverConfig<f64>) -> SolverState<f64> {
    solve(u0, u1, config, &mut []).unwrap().final_state
}

#[test]
fn symbol_agrees_with_ode_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let k2: f64 = rng.random_range(0.0..4.0);
        let t: f64 = rng.random_range(0.0..10.0);
        let r = mode_ode(k2, t, 1e-11).unwrap();
        assert!((green_hat(k2, t) - r.value).abs() <= 1e-8, "G at ({k2}, {t})");
        assert!((green_hat_dt(k2, t) - r.derivative).abs() <= 1e-8, "G_t at ({k2}, {t})");
    }
}

#[test]
fn free_wave_multiplier_matches_dalembert() {
    let g = make_grid::<f64>(1, 512, 20.0).unwrap();
    let h = gaussian(&g, 1.0, 0.7);
    for t in [0.5, 3.0, 9.5] {
        let (w, wt) = apply_free_wave(&h, t).unwrap();
        let (ow, owt) = dalembert(&h, t).unwrap();
        assert!(max_diff(&w, &ow) <= 1e-8, "W at t = {t}");
        assert!(max_diff(&wt, &owt) <= 1e-8, "W_t at t = {t}");
    }
}

#[test]
fn damped_solution_approaches_heat_flow() {
    let g = make_grid::<f64>(1, 1024, 100.0).unwrap();
    let u0 = gaussian(&g, 1.0, 0.0);
    let u1 = u0.map(|v| 0.1 * v).unwrap();
    let data = u0.combine(1.0, &u1, 1.0).unwrap();
    let gap = |t: f64| {
        let (u, _) = linear_solution(&u0, &u1, t).unwrap();
        max_diff(&u, &heat_reference(&data, t).unwrap())
    };
    let (a, b) = (gap(10.0), gap(40.0));
    // the gap decays at least like (1+t)^{-1}, faster than u itself
    let slope = (b / a).ln() / (41.0f64 / 11.0).ln();
    assert!(slope < -0.9, "slope {slope}");
}

#[test]
fn semilinear_flow_commutes_with_cyclic_shift() {
    let g = make_grid::<f64>(1, 128, 16.0).unwrap();
    let u0 = gaussian(&g, 0.4, 1.0);
    let u1 = gaussian(&g, -0.2, -2.0);
    let config = SolverConfig::new(3, 0.05, 2.0);
    let base = final_state(&u0, &u1, &config).u().unwrap();
    let shifted = final_state(&u0.shift_cyclic(&[11]), &u1.shift_cyclic(&[11]), &config)
        .u()
        .unwrap();
    assert!(max_diff(&shifted, &base.shift_cyclic(&[11])) <= 1e-12);
}

#[test]
fn integrators_cross_validate() {
    let g = make_grid::<f64>(1, 128, 16.0).unwrap();
    let u0 = gaussian(&g, 0.5, 0.0);
    let u1 = u0.map(|v| 0.1 * v).unwrap();
    let mut cfg = SolverConfig::new(3, 0.01, 1.0);
    let exp = final_state(&u0, &u1, &cfg).u().unwrap();
    cfg.integrator = Integrator::ReferenceRk4;
    let rk = final_state(&u0, &u1, &cfg).u().unwrap();
    assert!(max_diff(&exp, &rk) <= 1e-5, "gap {}", max_diff(&exp, &rk));
}

#[test]
fn second_time_derivative_matches_finite_difference() {
    let g = make_grid::<f64>(1, 128, 16.0).unwrap();
    let u0 = gaussian(&g, 0.6, 0.0);
    let u1 = gaussian(&g, 0.2, 1.0);
    let dt = 1e-3;
    let mut cfg = SolverConfig::new(3, dt, 0.5);
    cfg.integrator = Integrator::ReferenceRk4;
    cfg.snapshot_times = vec![0.5 - 2.0 * dt, 0.5 - dt, 0.5];
    let mut keep = Keep::default();
    solve(&u0, &u1, &cfg, &mut [&mut keep]).unwrap();
    let [a, _, c] = [0, 1, 2].map(|i| time_derivative(&keep.states[i], 1).unwrap());
    let fd = c.combine(0.5 / dt, &a, -0.5 / dt).unwrap();
    let exact = time_derivative(&keep.states[1], 2).unwrap();
    assert!(max_diff(&fd, &exact) <= 1e-5, "gap {}", max_diff(&fd, &exact));
}

fn convergence_order(integrator: Integrator, dt: f64) -> f64 {
    let g = make_grid::<f64>(1, 128, 16.0).unwrap();
    let u0 = gaussian(&g, 0.5, 0.0);
    let u1 = u0.map(|v| 0.1 * v).unwrap();
    let run = |step: f64| {
        let mut cfg = SolverConfig::new(3, step, 1.0);
        cfg.integrator = integrator;
        final_state(&u0, &u1, &cfg).u().unwrap()
    };
    let reference = run(dt / 16.0);
    let e1 = max_diff(&run(dt), &reference);
    let e2 = max_diff(&run(dt / 2.0), &reference);
    (e1 / e2).log2()
}

#[test]
fn observed_convergence_orders() {
    let rk = convergence_order(Integrator::ReferenceRk4, 0.05);
    let exp = convergence_order(Integrator::ExponentialDuhamel, 0.1);
    assert!(rk >= 3.5, "rk4 order {rk}");
    assert!(exp >= 1.8, "exponential order {exp}");
}

#[test]
fn absorbing_energy_decreases_and_focusing_energy_grows() {
    let g = make_grid::<f64>(1, 256, 32.0).unwrap();
    let u0 = gaussian(&g, 0.5, 0.0);
    let u1 = u0.map(|v| 0.1 * v).unwrap();
    let mut cfg = SolverConfig::new(3, 0.01, 2.0);
    let mut ledger = EnergyLedger::new(&g, &[], 0.0);
    solve(&u0, &u1, &cfg, &mut [&mut ledger]).unwrap();
    let e0 = ledger.initial_energy();
    assert!(ledger.max_step_increase() <= 1e-8 * e0);
    assert!(ledger.max_balance_residual() <= 1e-4 * e0);

    cfg.forcing = Forcing::Focusing;
    let mut focusing = EnergyLedger::new(&g, &[], 0.0);
    solve(&u0, &u1, &cfg, &mut [&mut focusing]).unwrap();
    assert!(focusing.max_step_increase() > 0.0);
}

#[test]
fn zero_data_stays_zero() {
    let g = make_grid::<f64>(2, 16, 4.0).unwrap();
    let z = Field::zeros(g.clone());
    let state = final_state(&z, &z, &SolverConfig::new(2, 0.1, 1.0));
    assert_eq!(state.u().unwrap().max_abs(), 0.0);
    assert_eq!(basic_energy(&state).unwrap(), 0.0);
}

#[test]
fn snapshots_survive_a_file_round_trip() {
    let g = make_grid::<f64>(1, 64, 8.0).unwrap();
    let u0 = gaussian(&g, 0.3, 0.0);
    let mut cfg = SolverConfig::new(3, 0.1, 1.0);
    cfg.snapshot_times = vec![0.5, 1.0];
    let mut keep = Keep::default();
    solve(&u0, &Field::zeros(g.clone()), &cfg, &mut [&mut keep]).unwrap();
    let dir = std::env::temp_dir().join(format!("dissipwave-snap-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for state in &keep.states {
        let path = dir.join(format!("u_{:.1}.dwf", state.time));
        let u = state.u().unwrap();
        write_snapshot(std::fs::File::create(&path).unwrap(), &u, state.time).unwrap();
        let back = read_snapshot_on(std::fs::File::open(&path).unwrap(), &g).unwrap();
        assert_eq!(back.time, state.time);
        assert_eq!(back.field.values(), u.values());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
