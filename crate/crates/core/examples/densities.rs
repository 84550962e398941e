//! Pattern densities: exact counts in permutations, exact grid values and
//! Monte-Carlo estimates on segment permutons.

use permutons::measure::gamma_ab;
use permutons::patterns::{density_grid_exact, density_mc, pattern_count, PatternSpec};
use permutons::{GridPermuton, Permutation};

fn main() -> permutons::Result<()> {
    let pi: Permutation = "2413".parse()?;
    for spec in ["12", "123", "*2", "**3", "**1"] {
        let tau: PatternSpec = spec.parse()?;
        println!("2413: occurrences of {spec} = {}", pattern_count(&pi, &tau)?);
    }

    let g = GridPermuton::from_permutation(&"3142".parse()?, 4)?;
    for spec in ["12", "123", "321"] {
        println!("grid of 3142: density of {spec} = {:.6}", density_grid_exact(&g, &spec.parse()?)?);
    }

    let seg = gamma_ab(0.5, 0.2)?;
    for spec in ["12", "123", "321"] {
        let est = density_mc(&seg, &spec.parse()?, 200_000, 7)?;
        println!("gamma(0.5, 0.2): {spec} = {:.4} ± {:.4}", est.value, est.stderr);
    }
    Ok(())
}
