//! Solving a two-term star model for target densities and reading off its entropy.

use permutons::starmodel::{solve_star, star23_bounds, star_shape};

fn main() -> permutons::Result<()> {
    let shape = [star_shape("*2")?, star_shape("**3")?];
    let (lo, hi) = star23_bounds(0.5);
    println!("at rho(*2) = 0.5 the feasible rho(**3) lies in [{lo:.5}, {hi:.5}]");
    for target in [0.22, 0.3, 0.4] {
        let sol = solve_star(&shape, &[0.5, target])?;
        println!(
            "targets (0.5, {target}): alpha = [{:+.5}, {:+.5}]  H = {:.6}  newton steps = {}",
            sol.alpha[0], sol.alpha[1], sol.entropy, sol.newton_iterations
        );
    }
    match solve_star(&shape, &[0.5, 0.2]) {
        Ok(_) => println!("(0.5, 0.2) unexpectedly solved"),
        Err(e) => println!("(0.5, 0.2): {e}"),
    }
    Ok(())
}
