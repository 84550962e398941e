//! The closed-form 1 2 model: parameter, density, entropy and a rasterized grid.

use permutons::entropy::entropy_grid;
use permutons::patterns::density_grid_exact;
use permutons::starmodel::{star12_entropy, star12_grid, star12_r_from_rho, star12_rho};

fn main() -> permutons::Result<()> {
    for rho in [0.2, 0.4, 0.5, 0.7] {
        let r = star12_r_from_rho(rho)?;
        let g = star12_grid(r, 64)?;
        println!(
            "rho = {rho:.2}  r = {r:+.6}  rho(r) = {:.6}  H = {:.6}  grid: rho = {:.6}, H = {:.6}",
            star12_rho(r),
            star12_entropy(r),
            density_grid_exact(&g, &"12".parse()?)?,
            entropy_grid(&g),
        );
    }
    Ok(())
}
