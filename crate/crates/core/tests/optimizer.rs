use permutons::entropy::entropy_grid;
use permutons::measure::{rect_distance, GridPermuton};
use permutons::optimizer::{maximize_entropy, pde_residual_12, pde_residual_123, ConstraintSet, OptimizerOptions};
use permutons::starmodel::{star12_entropy_of_rho, star12_grid, star12_r_from_rho};

fn solve(cons: &str, m: usize) -> permutons::optimizer::OptimizerResult {
    maximize_entropy(&cons.parse().unwrap(), m, &OptimizerOptions::default()).unwrap()
}

#[test]
fn single_12_targets_match_closed_form() {
    for rho in [0.2, 0.3, 0.4, 0.6, 0.8] {
        let res = solve(&format!("12={rho}"), 32);
        assert!(res.converged, "rho = {rho}");
        assert!((res.achieved[0] - rho).abs() <= 1e-4);
        let h = star12_entropy_of_rho(rho).unwrap();
        assert!((res.entropy - h).abs() <= 5e-3, "rho = {rho}: {} vs {h}", res.entropy);
        let analytic = star12_grid(star12_r_from_rho(rho).unwrap(), 32).unwrap();
        assert!(rect_distance(res.grid(), &analytic).unwrap() <= 0.02);
    }
}

#[test]
fn uniform_is_the_unconstrained_optimum() {
    let res = solve("12=0.5", 16);
    assert!(res.converged);
    assert!(res.entropy.abs() < 1e-10);
    assert!(rect_distance(res.grid(), &GridPermuton::uniform(16)).unwrap() < 1e-8);
    assert!(res.multipliers[0].abs() < 1e-6);
}

#[test]
fn optimizer_output_solves_the_euler_lagrange_equations() {
    let res = solve("12=0.3", 64);
    assert!(res.converged);
    let fit = pde_residual_12(res.grid()).unwrap();
    assert!(fit.rms_residual <= 5e-2, "{fit:?}");
    // the fitted coefficient is the 1 2 model parameter
    let r = star12_r_from_rho(0.3).unwrap();
    assert!((fit.alpha - r).abs() < 0.05 * r.abs(), "{fit:?} vs r = {r}");

    let res = solve("123=0.25", 64);
    assert!(res.converged);
    let fit = pde_residual_123(res.grid()).unwrap();
    assert!(fit.rms_residual <= 5e-2, "{fit:?}");
}

#[test]
fn two_constraints_converge_and_restarts_agree() {
    let cons: ConstraintSet = "12=0.55,123=0.22".parse().unwrap();
    let opts = OptimizerOptions { restarts: 2, seed: 3, ..Default::default() };
    let res = maximize_entropy(&cons, 24, &opts).unwrap();
    assert!(res.converged);
    assert!(res.max_residual() <= 1e-6);
    assert!(res.restart_spread.unwrap() < 1e-4, "{:?}", res.restart_spread);
    assert!((entropy_grid(res.grid()) - res.entropy).abs() < 1e-15);
    assert!(res.entropy < 0.0);
}

#[test]
fn boundary_targets_report_non_convergence() {
    let res = solve("12=0.4,123=0.25", 16);
    assert!(!res.converged);
    assert!(res.max_residual() > 1e-4);
    // still a valid permuton
    assert!(res.grid().marginal_error() < 1e-10);
}

#[test]
fn rejects_bad_inputs() {
    let cons: ConstraintSet = "12=0.3".parse().unwrap();
    assert!(maximize_entropy(&cons, 4, &OptimizerOptions::default()).is_err());
}
