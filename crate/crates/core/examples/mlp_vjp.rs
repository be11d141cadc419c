//! A small network: forward pass, vector-Jacobian product, and a finite
//! difference check of one parameter derivative.

use mucor::neural::{Activation, Mlp};
use ndarray::array;

fn main() -> mucor::Result<()> {
    let mut net = Mlp::new(&[2, 8, 8, 2], Activation::Tanh, Activation::Abs, 3)?;
    let x = array![[0.1, 0.2], [0.5, 0.5], [0.9, 0.3]];
    let tape = net.forward_tape(&x)?;
    println!("outputs:\n{:.5}", tape.output());

    let w = array![[1.0, 0.0], [0.5, -1.0], [0.0, 2.0]];
    let g = net.vjp(&tape, &w)?;
    let objective = |net: &Mlp| -> mucor::Result<f64> { Ok((net.forward(&x)? * &w).sum()) };

    let k = 5;
    let h = 1e-6;
    let p0 = net.params()[k];
    net.params_mut()[k] = p0 + h;
    let up = objective(&net)?;
    net.params_mut()[k] = p0 - h;
    let down = objective(&net)?;
    net.params_mut()[k] = p0;
    println!("{} parameters; d<w, f>/dp[{k}]: vjp {:.10}, central difference {:.10}", net.param_count(), g[k], (up - down) / (2.0 * h));
    Ok(())
}
