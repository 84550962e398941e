//! Large deviations of the inversion count, computed exactly from Mahonian numbers.

use permutons::oracle::ldp_report;

fn main() -> permutons::Result<()> {
    let rep = ldp_report(&[50, 100, 200, 400], 0.4, 0.05)?;
    for p in &rep.points {
        println!("n = {:3}: {:.6}", p.n, p.estimate);
    }
    println!("s({}) = {:.6}, fixed-window limit {:.6}, increasing: {}",
        rep.rho, rep.limit, rep.window_limit, rep.is_increasing());
    Ok(())
}
