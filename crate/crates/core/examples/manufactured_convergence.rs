//! Convergence table for the manufactured solution g(t) sin(pi x) sin(pi y).

use mucor::fem::manufactured::{ManufacturedCase, TimeProfile};

fn main() -> mucor::Result<()> {
    let linear = ManufacturedCase::default();
    println!("space, g = t, 10 steps");
    let mut prev = None;
    for n in [4, 8, 16, 32, 64] {
        let e = linear.errors(n, 10)?.0;
        let ratio = prev.map(|p: f64| format!("{:.3}", p / e)).unwrap_or_default();
        println!("  h = 1/{n:<3} L2 error {e:.4e}  {ratio}");
        prev = Some(e);
    }

    let quad = ManufacturedCase { profile: TimeProfile::Quadratic, ..linear };
    println!("time, g = t^2, h = 1/64");
    let mut prev = None;
    for steps in [5, 10, 20, 40] {
        let e = quad.errors(64, steps)?.0;
        let ratio = prev.map(|p: f64| format!("{:.3}", p / e)).unwrap_or_default();
        println!("  tau = 1/{steps:<3} L2 error {e:.4e}  {ratio}");
        prev = Some(e);
    }
    Ok(())
}
