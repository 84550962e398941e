//! Grid entropy along a refinement sequence, and heat-flow smoothing of a
//! singular permuton.

use permutons::entropy::{entropy_grid, heat_flow, is_nonincreasing, riemann_refinement, HeatFlowSpec};
use permutons::starmodel::{star12_entropy, star12_grid};
use permutons::GridPermuton;

fn main() -> permutons::Result<()> {
    let g = star12_grid(3.0, 128)?;
    let levels = riemann_refinement(&g, &[4, 8, 16, 32, 64, 128])?;
    for (m, h) in &levels {
        println!("m = {m:3}: H = {h:.6}");
    }
    println!("limit {:.6}, nonincreasing: {}", star12_entropy(3.0), is_nonincreasing(&levels, 1e-12));

    let id = GridPermuton::identity(64);
    for t in [0.001, 0.01, 0.1] {
        let s = heat_flow(&id, &HeatFlowSpec::new(t, 64))?;
        println!("identity after t = {t}: H = {:.4}", entropy_grid(&s));
    }
    Ok(())
}
