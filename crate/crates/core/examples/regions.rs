//! Feasible-region boundaries: the ∗2/∗∗3 region of star models and the
//! 1 2 3 / 3 2 1 region with its dimple.

use permutons::regions::{dimple, inside_123_321, region_123_321};
use permutons::starmodel::region_star23_boundary;

fn main() {
    let (lower, upper) = region_star23_boundary(5);
    for (lo, hi) in lower.points.iter().zip(&upper.points) {
        println!("{}: ({:.4}, {:.4})   {}: ({:.4}, {:.4})", lower.label, lo.x, lo.y, upper.label, hi.x, hi.y);
    }

    let curves = region_123_321(100);
    for c in curves.all() {
        let (a, b) = (c.first(), c.last());
        println!("{}: ({:.4}, {:.4}) -> ({:.4}, {:.4})", c.label, a.0, a.1, b.0, b.1);
    }
    let (x, y) = dimple();
    println!("dimple at ({x:.6}, {y:.6})");
    for (px, py) in [(1.0 / 6.0, 1.0 / 6.0), (0.1, 0.1), (0.3, 0.2), (0.3, 0.6)] {
        println!("({px:.3}, {py:.3}) inside: {}", inside_123_321(px, py, 1e-9, 1e-9));
    }
}
