//! The fixed benchmark problems: a box-constrained quartic in one dimension,
//! a quartic on a rotated Rastrigin feasible set in two dimensions, and the
//! five-dimensional quartic and Ackley objectives restricted to a sphere or a
//! torus.

use std::f64::consts::{E, PI, TAU};

use super::{InitSpec, Problem};
use crate::error::{Error, Result};

/// Per-coordinate quartic shared by the 1-D, 2-D and `j1` objectives.
#[inline]
fn quartic(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 / 5.0 - 2.0 * x2 + x
}

/// `min x^4/5 - 2x^2 + x + 10` subject to `x >= -1.5`, with the l1 penalty
/// `max(0, -x - 1.5)`. The unconstrained minimum sits near `-2.3519`; the
/// constrained one is the boundary point `-1.5`, where `|j'| = 4.3`.
pub fn make_test1() -> Problem {
    Problem::new(
        "test1",
        1,
        |x| quartic(x[0]) + 10.0,
        |x| (-x[0] - 1.5).max(0.0),
        InitSpec::Uniform { low: -3.0, high: 3.0 },
    )
    .with_solution(vec![-1.5])
    .with_beta_bar(4.3)
}

/// Constraint function of the two-dimensional problem:
/// `g(x) = 1/2 sum_i (z_i^2 - 10 cos(2 pi z_i)) + 5`, where `z` rotates
/// `x - (1, 1)` by `pi / 6`. The feasible set `g <= 0` is a union of
/// disjoint discs.
pub fn rastrigin_constraint(x: &[f64]) -> f64 {
    let (s, c) = (PI / 6.0).sin_cos();
    let (u, v) = (x[0] - 1.0, x[1] - 1.0);
    let z = [c * u - s * v, s * u + c * v];
    0.5 * z
        .iter()
        .map(|&zi| zi * zi - 10.0 * (TAU * zi).cos())
        .sum::<f64>()
        + 5.0
}

/// Constrained minimizer of the two-dimensional problem, from a fine grid
/// search refined with SLSQP; see the `rastrigin2d_solution` test.
const RASTRIGIN2D_SOLUTION: [f64; 2] = [-2.093_744_88, 1.642_037_35];

/// `min 1/2 sum_i (x_i^4/5 - 2x_i^2 + x_i) + 10` subject to
/// `rastrigin_constraint(x) <= 0`, penalized by the positive part of `g`.
///
/// The penalty threshold is a numerical estimate (a lower bound on
/// `sup (j* - j(x)) / r(x)` from multi-start maximization, rounded up).
pub fn make_rastrigin2d() -> Problem {
    Problem::new(
        "rastrigin2d",
        2,
        |x| 0.5 * (quartic(x[0]) + quartic(x[1])) + 10.0,
        |x| rastrigin_constraint(x).max(0.0),
        InitSpec::Uniform { low: -3.0, high: 3.0 },
    )
    .with_solution(RASTRIGIN2D_SOLUTION.to_vec())
    .with_beta_bar(0.55)
}

/// `j1(x) = 1/d sum_i (x_i^4/5 - 2x_i^2 + x_i) + 10`.
pub fn make_j1(d: usize) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + Clone> {
    if d == 0 {
        return Err(Error::invalid("d", "j1 needs d >= 1"));
    }
    Ok(move |x: &[f64]| x.iter().map(|&xi| quartic(xi)).sum::<f64>() / d as f64 + 10.0)
}

/// Shift of the Ackley objective: the repeating decimals 1.7(6), 1.5(3),
/// 1.(3), 1.0(6), 0.8(3) as exact fractions.
pub fn ackley_shift() -> [f64; 5] {
    [53.0 / 30.0, 23.0 / 15.0, 4.0 / 3.0, 16.0 / 15.0, 5.0 / 6.0]
}

/// Shifted Ackley function in five dimensions; zero at the shift.
pub fn make_j2(d: usize) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + Clone> {
    if d != 5 {
        return Err(Error::invalid("d", format!("j2 is defined for d = 5, got {d}")));
    }
    let shift = ackley_shift();
    Ok(move |x: &[f64]| {
        let n = shift.len() as f64;
        let (mut sq, mut cos) = (0.0, 0.0);
        for (xi, oi) in x.iter().zip(&shift) {
            let y = xi - oi;
            sq += y * y;
            cos += (TAU * y).cos();
        }
        -20.0 * (-0.2 * (sq / n).sqrt()).exp() - (cos / n).exp() + 20.0 + E
    })
}

/// Distance to the unit sphere, `| |x| - 1 |`.
pub fn sphere_penalty(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs()
}

/// Distance to the torus of tube radius 0.5 around the unit sphere of the
/// first `d - 1` coordinates, with the last coordinate as the tube's height:
/// `| sqrt((sqrt(|x|^2 - x_d^2) - 1)^2 + x_d^2) - 0.5 |`.
pub fn torus_penalty(x: &[f64]) -> f64 {
    let (head, last) = x.split_at(x.len() - 1);
    let ring = head.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = last[0];
    (((ring - 1.0).powi(2) + h * h).sqrt() - 0.5).abs()
}

const D5_INIT: InitSpec = InitSpec::Uniform { low: -2.0, high: 2.0 };

pub fn make_j1_sphere() -> Problem {
    let x = -(0.2f64.sqrt());
    Problem::new("j1-sphere", 5, make_j1(5).expect("d = 5"), sphere_penalty, D5_INIT)
        .with_solution(vec![x; 5])
        .with_beta_bar(1.78)
}

pub fn make_j1_torus() -> Problem {
    // four equal coordinates by symmetry; a 1-D search over the tube angle
    let a = -0.745_728_145_358_203_5;
    Problem::new("j1-torus", 5, make_j1(5).expect("d = 5"), torus_penalty, D5_INIT)
        .with_solution(vec![a, a, a, a, -0.092_036_483_609_872_43])
        .with_beta_bar(1.80)
}

pub fn make_j2_sphere() -> Problem {
    Problem::new("j2-sphere", 5, make_j2(5).expect("d = 5"), sphere_penalty, D5_INIT)
        .with_solution(vec![
            0.755_418_755_887_194_8,
            0.534_262_532_500_785_1,
            0.344_701_566_918_407_75,
            0.092_031_452_440_182_21,
            -0.128_907_296_711_379_35,
        ])
        .with_beta_bar(1.80)
}

pub fn make_j2_torus() -> Problem {
    Problem::new("j2-torus", 5, make_j2(5).expect("d = 5"), torus_penalty, D5_INIT)
        .with_solution(vec![
            0.795_061_392_975_395_7,
            0.563_890_840_300_836,
            0.365_748_993_421_726_1,
            1.056_935_510_123_134_1,
            -0.127_121_497_405_517_65,
        ])
        .with_beta_bar(2.06)
}

/// Unconstrained convex quadratic `1/2 |x - c|^2` with
/// `c = (0.5, -0.5, 0.5, ...)` and a zero penalty.
pub fn make_quadratic(d: usize) -> Result<Problem> {
    if d == 0 {
        return Err(Error::invalid("d", "quadratic needs d >= 1"));
    }
    let center: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let c = center.clone();
    Ok(Problem::new(
        format!("quadratic-{d}"),
        d,
        move |x| 0.5 * x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
        |_| 0.0,
        InitSpec::Uniform { low: -2.0, high: 2.0 },
    )
    .with_solution(center)
    .with_beta_bar(0.0))
}
