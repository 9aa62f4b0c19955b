//! The h-homogeneous infinity Laplacian on jets and the viscosity
//! inequalities, including the zero-gradient cases.
//!
//! ```bash
//! cargo run --example operators
//! ```

use carnot_lab::operators::{extreme_directional_second, infinity_laplacian, viscosity_inequality};
use carnot_lab::{Jet, OperatorParams, Role};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grad = DVector::from_row_slice(&[1.0, 1.0]);
    let x = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
    for h in [1.0, 2.0, 3.0, 5.0] {
        let v = infinity_laplacian(&OperatorParams::new(h)?, &grad, &x)?;
        println!("h = {h}: Delta_inf^h = {v:.6}");
    }

    let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let (lo, hi) = extreme_directional_second(&swap)?;
    println!("extreme directional second derivatives of [[0,1],[1,0]]: {lo}, {hi}");

    // Zero gradient, time derivative 0.5: h = 1 compares against the
    // eigenvalue extremes, larger h against zero.
    let jet = Jet::new(0.5, DVector::zeros(3), swap)?;
    for h in [1.0, 2.0, 4.0] {
        let params = OperatorParams::new(h)?;
        let sub = viscosity_inequality(&params, Role::Sub, &jet, true)?;
        let sup = viscosity_inequality(&params, Role::Super, &jet, true)?;
        println!("h = {h}: subsolution test {sub:?}, supersolution test {sup:?}");
    }
    println!("h = 0.5 rejected: {}", OperatorParams::new(0.5).unwrap_err());
    Ok(())
}
