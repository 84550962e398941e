//! Insertion measures: extraction from a grid, the closed form of the 1 2
//! model, and reconstruction of the permuton by characteristic flow.

use permutons::insertion::{insertion_entropy, insertion_from_permuton, permuton_from_insertion, InsertionFamily};
use permutons::measure::rect_distance;
use permutons::starmodel::{star12_entropy, star12_grid};

fn main() -> permutons::Result<()> {
    let r = 2.0;
    let exact = InsertionFamily::truncated_exponential(r, 64, 64)?;
    println!("closed form: normalization error {:.1e}, entropy {:.5} (model {:.5})",
        exact.normalization_error(), insertion_entropy(&exact), star12_entropy(r));

    let g = star12_grid(r, 64)?;
    let fam = insertion_from_permuton(&g, 64)?;
    println!("extracted from grid: entropy {:.5}", insertion_entropy(&fam));

    let rec = permuton_from_insertion(&exact, 32)?;
    println!(
        "reconstruction at m = 32: rect distance to the model {:.1e}, rebalancing {:.1e}",
        rect_distance(&rec.grid, &star12_grid(r, 32)?)?,
        rec.correction
    );
    Ok(())
}
