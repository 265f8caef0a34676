//! Dense linear solves and quadrature for the connecting polynomials.

use nalgebra::{DMatrix, DVector};
use overtake_core::polynomial::{solve_quartic, solve_quintic, Curve, Kinematics};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Row of `d^k/dt^k t^i` for `i < degree + 1`.
pub fn derivative_row(degree: usize, k: usize, t: f64) -> Vec<f64> {
    (0..=degree)
        .map(|i| {
            if i < k {
                return 0.0;
            }
            let falling: f64 = (0..k).map(|j| (i - j) as f64).product();
            falling * t.powi((i - k) as i32)
        })
        .collect()
}

pub fn solve_dense(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    let a = DMatrix::from_row_slice(n, n, &rows.concat());
    let x = a
        .lu()
        .solve(&DVector::from_vec(rhs))
        .expect("non-singular boundary system");
    x.iter().copied().collect()
}

pub fn quintic_oracle(start: Kinematics<f64>, end: Kinematics<f64>, t: f64) -> Vec<f64> {
    let rows = vec![
        derivative_row(5, 0, 0.0),
        derivative_row(5, 1, 0.0),
        derivative_row(5, 2, 0.0),
        derivative_row(5, 0, t),
        derivative_row(5, 1, t),
        derivative_row(5, 2, t),
    ];
    solve_dense(rows, vec![start.pos, start.vel, start.acc, end.pos, end.vel, end.acc])
}

pub fn quartic_oracle(start: Kinematics<f64>, end_vel: f64, end_acc: f64, t: f64) -> Vec<f64> {
    let rows = vec![
        derivative_row(4, 0, 0.0),
        derivative_row(4, 1, 0.0),
        derivative_row(4, 2, 0.0),
        derivative_row(4, 1, t),
        derivative_row(4, 2, t),
    ];
    solve_dense(rows, vec![start.pos, start.vel, start.acc, end_vel, end_acc])
}

pub fn eval(coeffs: &[f64], k: usize, t: f64) -> f64 {
    let row = derivative_row(coeffs.len() - 1, k, t);
    row.iter().zip(coeffs).map(|(r, c)| r * c).sum()
}

/// Integral of the squared third derivative over `[0, t]`, 8-point
/// Gauss-Legendre (exact for the degrees used here).
pub fn jerk_cost(coeffs: &[f64], t: f64) -> f64 {
    const NODES: [(f64, f64); 8] = [
        (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
        (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
        (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
        (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    ];
    NODES
        .iter()
        .map(|&(x, w)| {
            let tau = 0.5 * t * (x + 1.0);
            let j = eval(coeffs, 3, tau);
            0.5 * t * w * j * j
        })
        .sum()
}

pub fn add_scaled(base: &[f64], other: &[f64], eps: f64) -> Vec<f64> {
    let len = base.len().max(other.len());
    (0..len)
        .map(|i| base.get(i).copied().unwrap_or(0.0) + eps * other.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Expands `t^3 (T - t)^3`, which vanishes with two derivatives at both ends.
pub fn bump(t: f64) -> Vec<f64> {
    // (T - t)^3 = T^3 - 3 T^2 t + 3 T t^2 - t^3
    vec![0.0, 0.0, 0.0, t.powi(3), -3.0 * t * t, 3.0 * t, -1.0]
}

/// Quintic `t^3 (a + b t + c t^2)` with zero velocity and acceleration at
/// `T` but a non-zero end position.
pub fn free_end_shift(t: f64) -> Vec<f64> {
    // 3a + 4bT + 5cT^2 = 0 and 3a + 6bT + 10cT^2 = 0
    let c = 1.0;
    let b = -2.5 * c * t;
    let a = 5.0 * c * t * t / 3.0;
    vec![0.0, 0.0, 0.0, a, b, c]
}

fn random_kin(rng: &mut ChaCha8Rng, pos: f64, vel: f64, acc: f64) -> Kinematics<f64> {
    Kinematics::new(
        rng.random_range(-pos..=pos),
        rng.random_range(-vel..=vel),
        rng.random_range(-acc..=acc),
    )
}

/// Boundary reproduction and agreement with the dense solve on `sets`
/// random boundary sets.
pub fn check_boundaries(seed: u64, sets: usize) -> Result<(), String> {
    let mut rng = super::rng(seed);
    for case in 0..sets {
        let t = rng.random_range(0.5..=5.0);
        let start = random_kin(&mut rng, 10.0, 20.0, 25.0);
        let end = random_kin(&mut rng, 10.0, 20.0, 25.0);
        let q = solve_quintic(start, end, t).map_err(|e| e.to_string())?;
        let checks = [
            (eval(&q.coeffs, 0, 0.0), start.pos),
            (eval(&q.coeffs, 1, 0.0), start.vel),
            (eval(&q.coeffs, 2, 0.0), start.acc),
            (eval(&q.coeffs, 0, t), end.pos),
            (eval(&q.coeffs, 1, t), end.vel),
            (eval(&q.coeffs, 2, t), end.acc),
        ];
        for (k, (got, want)) in checks.iter().enumerate() {
            if (got - want).abs() > 1e-9 {
                return Err(format!("set {case}: quintic condition {k}: {got} vs {want}"));
            }
        }
        for (c, o) in q.coeffs.iter().zip(&quintic_oracle(start, end, t)) {
            if (c - o).abs() > 1e-9 * (1.0 + o.abs()) {
                return Err(format!("set {case}: quintic coefficient {c} vs {o}"));
            }
        }

        let lon = Kinematics::new(
            rng.random_range(0.0..=1500.0),
            rng.random_range(0.0..=85.0),
            rng.random_range(-25.0..=25.0),
        );
        let end_vel = rng.random_range(0.0..=85.0);
        let end_acc = rng.random_range(-5.0..=5.0);
        let p = solve_quartic(lon, end_vel, end_acc, t).map_err(|e| e.to_string())?;
        let (k0, kt) = (p.kinematics(0.0), p.kinematics(t));
        let checks = [
            (k0.pos, lon.pos),
            (k0.vel, lon.vel),
            (k0.acc, lon.acc),
            (kt.vel, end_vel),
            (kt.acc, end_acc),
        ];
        for (k, (got, want)) in checks.iter().enumerate() {
            if (got - want).abs() > 1e-9 {
                return Err(format!("set {case}: quartic condition {k}: {got} vs {want}"));
            }
        }
        for (c, o) in p.coeffs.iter().zip(&quartic_oracle(lon, end_vel, end_acc, t)) {
            if (c - o).abs() > 1e-9 * (1.0 + o.abs()) {
                return Err(format!("set {case}: quartic coefficient {c} vs {o}"));
            }
        }
    }
    Ok(())
}

/// Every same-boundary perturbation has a larger squared-jerk integral.
pub fn check_jerk_dominance(seed: u64, sets: usize) -> Result<(), String> {
    let mut rng = super::rng(seed);
    for case in 0..sets {
        let t = rng.random_range(1.0..=4.0);
        let start = random_kin(&mut rng, 6.0, 10.0, 10.0);
        let end = random_kin(&mut rng, 6.0, 10.0, 10.0);
        let q = solve_quintic(start, end, t).map_err(|e| e.to_string())?;
        let base = jerk_cost(&q.coeffs, t);
        for eps in [1e-3, -1e-3, 0.05, -0.05, 1.0] {
            let perturbed = add_scaled(&q.coeffs, &bump(t), eps);
            for k in 0..3 {
                if (eval(&perturbed, k, t) - eval(&q.coeffs, k, t)).abs() > 1e-9 {
                    return Err(format!("set {case}: perturbation moved the boundary"));
                }
            }
            if jerk_cost(&perturbed, t) <= base {
                return Err(format!("set {case}: quintic beaten by eps {eps}"));
            }
        }

        let lon = Kinematics::new(0.0, rng.random_range(20.0..=85.0), rng.random_range(-10.0..=10.0));
        let end_vel = rng.random_range(20.0..=85.0);
        let p = solve_quartic(lon, end_vel, 0.0, t).map_err(|e| e.to_string())?;
        let base = jerk_cost(&p.coeffs, t);
        for eps in [1e-3, -1e-3, 0.05, -0.05, 1.0] {
            for shape in [bump(t), free_end_shift(t)] {
                let perturbed = add_scaled(&p.coeffs, &shape, eps);
                if (eval(&perturbed, 1, t) - end_vel).abs() > 1e-9 || eval(&perturbed, 2, t).abs() > 1e-9 {
                    return Err(format!("set {case}: perturbation moved the boundary"));
                }
                if jerk_cost(&perturbed, t) <= base {
                    return Err(format!("set {case}: quartic beaten by eps {eps}"));
                }
            }
        }
    }
    Ok(())
}
