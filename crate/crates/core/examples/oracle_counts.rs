//! Exact joint star-pattern statistics over all permutations of small size.

use permutons::oracle::{insertion_rule_holds, joint_star_counts, marginal};

fn main() -> permutons::Result<()> {
    let n = 5;
    let counts = joint_star_counts(n)?;
    println!("n = {n}: {} distinct (*2, **3, **2, **1) values", counts.len());
    for (k, c) in counts.iter().take(8) {
        println!("  {k:?}: {c}");
    }
    for (name, i) in [("*2", 0), ("**3", 1)] {
        println!("marginal of {name}: {:?}", marginal(&counts, i).into_values().collect::<Vec<_>>());
    }
    println!("insertion rule holds for n = 1..=7: {}", (1..=7).all(|n| insertion_rule_holds(n).unwrap_or(false)));
    Ok(())
}
