//! Seeded sampling of random permutations from permutons.

use permutons::measure::{gamma_ab, sample_permutation};
use permutons::patterns::pattern_count;
use permutons::starmodel::{star12_grid, star12_r_from_rho};

fn main() -> permutons::Result<()> {
    let g = star12_grid(star12_r_from_rho(0.3)?, 128)?;
    let n = 400;
    let pi = sample_permutation(&g, n, 42)?;
    let inc = pattern_count(&pi, &"12".parse()?)? as f64 / (n * (n - 1) / 2) as f64;
    println!("n = {n} sample of the rho = 0.3 model has 1 2 density {inc:.4}");
    assert_eq!(pi, sample_permutation(&g, n, 42)?);

    let small = sample_permutation(&gamma_ab(0.6, 0.2)?, 12, 3)?;
    println!("gamma(0.6, 0.2), n = 12: {:?}", small.one_based());
    Ok(())
}
