use mems_core::evolution::{ModelParams, Outcome};
use mems_core::small_aspect::*;
use mems_core::{Error, Grid1D, Grid2D, MembraneState};

#[test]
fn psi0_examples() {
    let grid = Grid2D::with_cells(8, 8).unwrap();
    let flat = MembraneState::zero(grid.gx().clone());
    let f = psi0(&flat, &grid).unwrap();
    for (k, v) in f.values.iter().enumerate() {
        let (_, j) = grid.ij(k);
        assert!((v - grid.eta_nodes()[j]).abs() < 1e-15);
        assert!(f.inside[k]);
    }
    assert_eq!(psi0_at(-0.5, -0.5), 1.0);
    assert_eq!(psi0_at(-0.3, -1.0), 0.0);

    let touching = MembraneState::parabola(grid.gx().clone(), 1.0);
    assert!(matches!(psi0(&touching, &grid), Err(Error::DegenerateGeometry { .. })));
}

#[test]
fn run0_rest_and_touchdown() {
    let g = Grid1D::new(64).unwrap();
    let zero = MembraneState::zero(g.clone());
    let rest = run0(&zero, &ModelParams::new(1.0, 0.0)).unwrap();
    assert_eq!(rest.outcome, Outcome::Converged);
    assert!(rest.final_state().values().iter().all(|&x| x == 0.0));

    let p = ModelParams {
        dt: 1e-3,
        ..ModelParams::new(1.0, 5.0)
    };
    let t = run0(&zero, &p).unwrap();
    assert_eq!(t.outcome, Outcome::Touchdown);
}

#[test]
fn run0_limit_matches_steady0() {
    let g = Grid1D::new(64).unwrap();
    let p = ModelParams {
        dt: 1e-2,
        max_time: 100.0,
        equilibrium_tol: 1e-10,
        store_every: 100_000,
        ..ModelParams::new(1.0, 0.3)
    };
    let t = run0(&MembraneState::zero(g.clone()), &p).unwrap();
    assert_eq!(t.outcome, Outcome::Converged);
    let s = steady0(0.3, 1e-11, &g).unwrap();
    let d = t
        .final_state()
        .values()
        .iter()
        .zip(s.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(d <= 1e-8, "{d}");
    let v = s.values();
    assert!(v[1..64].iter().all(|&x| x < 0.0));
    assert!(s.asymmetry() <= 1e-12);
    assert!(v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= 0.0));
}

#[test]
fn steady0_at_zero_and_residual() {
    let g = Grid1D::new(100).unwrap();
    assert!(steady0(0.0, 1e-12, &g).unwrap().values().iter().all(|&x| x == 0.0));
    let s = steady0(0.34, 1e-10, &g).unwrap();
    let h = g.h();
    let v = s.values();
    for i in 1..100 {
        let r = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h) - 0.34 / ((1.0 + v[i]) * (1.0 + v[i]));
        assert!(r.abs() <= 1e-10);
    }
}

#[test]
fn pullin_bracket_contract() {
    let g = Grid1D::new(400).unwrap();
    let p = pullin0(1e-3, &g).unwrap();
    assert!(p.upper - p.lower <= 1e-3);
    assert!(steady0(p.lambda_star - 1e-3, 1e-10, &g).is_ok());
    assert!(steady0(p.lambda_star + 1e-3, 1e-10, &g).is_err());
    assert!((p.lambda_star - pullin0_shooting(1e-6)).abs() < 2e-3);
}

#[test]
fn resting_limit_study_is_exact() {
    let grid = Grid2D::with_cells(16, 8).unwrap();
    let u0 = MembraneState::zero(grid.gx().clone());
    let r = limit_study(&LimitSetup {
        u0: &u0,
        lambda: 0.0,
        eps_values: &[0.2, 0.1],
        tau: 0.1,
        dt: 1e-2,
        grid: &grid,
    })
    .unwrap();
    assert!(r.complete);
    assert_eq!(r.sample_times.len(), 4);
    assert!(r.sup_errors.iter().all(|&e| e == 0.0));
    assert!(r.potential_errors.iter().flatten().all(|&e| e < 1e-14));
}

#[test]
fn touchdown_shortens_the_horizon() {
    let grid = Grid2D::with_cells(16, 8).unwrap();
    let u0 = MembraneState::zero(grid.gx().clone());
    let r = limit_study(&LimitSetup {
        u0: &u0,
        lambda: 5.0,
        eps_values: &[0.2],
        tau: 1.0,
        dt: 1e-2,
        grid: &grid,
    })
    .unwrap();
    assert!(!r.complete);
    assert!(r.sample_times.len() < 4);
    assert_eq!(r.potential_errors[0].len(), r.sample_times.len());
}
