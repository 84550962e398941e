//! Checking the Euler–Lagrange equations of the 1 2 and 1 2 3 models on grids.

use permutons::optimizer::{maximize_entropy, pde_residual_12, pde_residual_123, ConstraintSet, OptimizerOptions};
use permutons::starmodel::star12_grid;

fn main() -> permutons::Result<()> {
    let fit = pde_residual_12(&star12_grid(-2.0, 128)?)?;
    println!("closed-form model r = -2: alpha = {:.5}, rms = {:.2e}", fit.alpha, fit.rms_residual);

    let res = maximize_entropy(&ConstraintSet::single("123", 0.25)?, 32, &OptimizerOptions::default())?;
    let fit = pde_residual_123(res.grid())?;
    println!("optimized 123 = 0.25: alpha = {:.5}, rms = {:.2e}, multiplier {:.5}",
        fit.alpha, fit.rms_residual, res.multipliers[0]);
    Ok(())
}
