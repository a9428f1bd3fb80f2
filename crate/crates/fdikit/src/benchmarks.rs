//! Small reference systems used in documentation, tests and the command line tool.

use crate::poly::{tf_matrix, Poly};
use crate::sslib::{fdimodset, mdmodset, LtiModel, ModSelection, MultiModel};
use crate::{Mat, Result};

fn lin(c: f64) -> Poly {
    Poly::linear(c)
}

/// Four-state system with one control and eight faults (four actuator-like, four
/// difference-type), measured through three states.
pub fn yuan() -> LtiModel {
    let a = Mat::from_row_slice(4, 4, &[-1., 1., 0., 0., 1., -2., 1., 0., 0., 1., -2., 1., 0., 0., 1., -2.]);
    let bu = Mat::from_row_slice(4, 1, &[1., 0., 0., 0.]);
    #[rustfmt::skip]
    let bf = Mat::from_row_slice(4, 8, &[
        1., 0., 0., 0., 1., 0., 0., 0.,
        0., 1., 0., 0., -1., 1., 0., 0.,
        0., 0., 1., 0., 0., -1., 1., 0.,
        0., 0., 0., 1., 0., 0., -1., 1.,
    ]);
    let c = Mat::from_row_slice(3, 4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.]);
    let b = crate::numkern::dense::hstack(&[&bu, &bf]);
    LtiModel::new(a, b, c, Mat::zeros(3, 9), 0.0)
        .and_then(|g| g.with_groups(&[("controls", vec![0]), ("faults", (1..9).collect())]))
        .expect("valid model")
}

/// Unstable plant `Gu = [(s+1)/(s-2); (s+2)/(s-3)]` with disturbance
/// `Gd = [(s-1)/(s+2); 0]`, an actuator fault and a fault on the second sensor.
pub fn unstable_plant() -> Result<LtiModel> {
    let nums = vec![vec![lin(1.), lin(-1.)], vec![lin(2.), Poly::zero()]];
    let dens = vec![vec![lin(-2.), lin(2.)], vec![lin(-3.), Poly::one()]];
    let g = tf_matrix(&nums, &dens, 0.0)?;
    fdimodset(
        &g,
        &ModSelection { controls: vec![0], disturbances: vec![1], faults: vec![0], sensor_faults: vec![1], ..Default::default() },
    )
}

/// Plant `Gu = [(s+1)/(s+2); (s+2)/(s+3)]` with noise `Gw = [(s-1)/(s+2); 0]`, an
/// actuator fault and faults on both sensors.
pub fn noisy_plant() -> Result<LtiModel> {
    let nums = vec![vec![lin(1.), lin(-1.)], vec![lin(2.), Poly::zero()]];
    let dens = vec![vec![lin(2.), lin(2.)], vec![lin(3.), Poly::one()]];
    let g = tf_matrix(&nums, &dens, 0.0)?;
    fdimodset(
        &g,
        &ModSelection { controls: vec![0], noise: vec![1], faults: vec![0], sensor_faults: vec![0, 1], ..Default::default() },
    )
}

/// Three-output, two-input plant with actuator faults:
/// `Gu = [s/((s+1)(s+2)) 1/(s+2); s/(s+1) 0; 0 1/(s+2)]`, `Gf = Gu`.
pub fn actuator_plant() -> Result<LtiModel> {
    let s = Poly(vec![0., 1.]);
    let nums = vec![vec![s.clone(), Poly::one()], vec![s, Poly::zero()], vec![Poly::zero(), Poly::one()]];
    let dens = vec![
        vec![lin(1.).mul(&lin(2.)), lin(2.)],
        vec![lin(1.), Poly::one()],
        vec![Poly::one(), lin(2.)],
    ];
    let g = tf_matrix(&nums, &dens, 0.0)?;
    fdimodset(&g, &ModSelection { controls: vec![0, 1], faults: vec![0, 1], ..Default::default() })
}

/// Lateral aircraft dynamics with actuator efficiency losses on a 3 x 3 grid of
/// `(rho1, rho2)` in `{0, 0.5, 1}`; component `i` scales the inputs by `diag(1 - rho)`.
pub fn aircraft_grid() -> Result<MultiModel> {
    #[rustfmt::skip]
    let a = Mat::from_row_slice(4, 4, &[
        -0.4492, 0.046, 0.0053, -0.9926,
        0., 0., 1.0, 0.0067,
        -50.8436, 0., -5.2184, 0.722,
        16.4148, 0., 0.0026, -0.6627,
    ]);
    let bu = Mat::from_row_slice(4, 2, &[0.0004, 0.0011, 0., 0., -1.4161, 0.2621, -0.0633, -0.1205]);
    let mut models = Vec::with_capacity(9);
    for (r1, r2) in aircraft_grid_points() {
        let gamma = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1. - r1, 1. - r2]));
        models.push(LtiModel::new(a.clone(), &bu * gamma, Mat::identity(4, 4), Mat::zeros(4, 2), 0.0)?);
    }
    mdmodset(&models, &[0, 1], &[], &[])
}

/// Grid points `(rho1, rho2)` of [`aircraft_grid`], in component order.
pub fn aircraft_grid_points() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(9);
    for r1 in [0., 0.5, 1.] {
        for r2 in [0., 0.5, 1.] {
            out.push((r1, r2));
        }
    }
    out
}
