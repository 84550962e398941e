//! Direct entropy maximization on a grid under pattern-density constraints.

use permutons::optimizer::{maximize_entropy, ConstraintSet, OptimizerOptions};
use permutons::starmodel::star12_entropy_of_rho;

fn main() -> permutons::Result<()> {
    let opts = OptimizerOptions::default();

    let res = maximize_entropy(&ConstraintSet::single("12", 0.3)?, 32, &opts)?;
    println!(
        "12 = 0.3 at m = 32: H = {:.6} (closed form {:.6}), residual {:.1e}, {} steps",
        res.entropy,
        star12_entropy_of_rho(0.3)?,
        res.max_residual(),
        res.iterations
    );

    let cons: ConstraintSet = "12=0.55,123=0.22".parse()?;
    let res = maximize_entropy(&cons, 24, &opts)?;
    println!(
        "{cons} at m = 24: H = {:.6}, achieved {:?}, multipliers {:?}, converged = {}",
        res.entropy, res.achieved, res.multipliers, res.converged
    );
    Ok(())
}
