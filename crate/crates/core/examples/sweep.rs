//! Monte-Carlo densities of 1 2, 1 2 3 and 3 2 1 over the γ_{a,b} family.

use permutons::regions::gamma_ab_sweep;

fn main() -> permutons::Result<()> {
    println!("{:>6} {:>6} {:>8} {:>8} {:>8}", "a", "b", "12", "123", "321");
    for p in gamma_ab_sweep(5, 3, 20_000, 1)? {
        println!("{:6.3} {:6.3} {:8.4} {:8.4} {:8.4}", p.a, p.b, p.rho12, p.rho123, p.rho321);
    }
    Ok(())
}
