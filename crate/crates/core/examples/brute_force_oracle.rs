//! Exhaustive enumeration over piecewise-constant grid controls, compared
//! with closed-form values, and the on-disk oracle cache.
//!
//! cargo run --release --example brute_force_oracle

use evoctrl::problem::{scalar_toy, vintage, VintageSpec};
use evoctrl::value::{brute_force_value, vintage_value, OracleCache, OracleKey};
use evoctrl::StateVec;

fn main() -> evoctrl::Result<()> {
    let toy = scalar_toy(1.0, 5)?;
    let x = StateVec::zeros(1);
    let grid = toy.controls().grid().to_vec();
    let (v, u) = brute_force_value(&toy, 0.0, &x, 4, &grid, 0.25)?;
    println!("scalar toy: oracle {v}, closed form {}", x[0] - 0.5);
    println!("  minimizing pieces {:?}", u.values());

    let spec = VintageSpec::degenerate();
    let problem = vintage(&spec)?.with_control_points(5)?;
    let mut y = StateVec::zeros(spec.dim());
    y[0] = -1.0;
    let grid = problem.controls().grid().to_vec();
    for n in [1, 2, 4] {
        let (v, _) = brute_force_value(&problem, 0.0, &y, n, &grid, 1e-3)?;
        println!("degenerate vintage, {n} pieces: {v:.9} (closed form {})", vintage_value(&spec, 0.0, &y));
    }

    let dir = std::env::temp_dir().join("evoctrl-oracle-example");
    std::fs::create_dir_all(&dir)?;
    let cache = OracleCache::new(dir.join("cache.csv"));
    let key = OracleKey::new(&problem, 0.0, &y, 4, &grid);
    match cache.lookup(&key)? {
        Some(v) => println!("cached value {v}"),
        None => {
            let (v, _) = brute_force_value(&problem, 0.0, &y, 4, &grid, 1e-3)?;
            cache.store(&key, v)?;
            println!("stored {v} in {}", dir.display());
        }
    }
    Ok(())
}
