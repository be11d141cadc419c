//! The two learned closures: a diagonal permeability and a transfer coefficient.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use crate::field::Tensor2;
use crate::{Error, Result};

/// Lower bound applied to learned permeability entries.
pub const KAPPA_FLOOR: f64 = 1e-8;

/// Architecture of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub seed: u64,
}

impl NetSpec {
    /// `input -> hidden x depth -> 2`, tanh hidden, abs output.
    pub fn kappa(input: usize, hidden: usize, depth: usize, seed: u64) -> Self {
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(hidden, depth));
        widths.push(2);
        Self { widths, hidden: Activation::Tanh, output: Activation::Abs, seed }
    }

    /// `input -> hidden x depth -> 1`, leaky-ReLU(0.2) hidden, identity output.
    pub fn sigma(input: usize, hidden: usize, depth: usize, seed: u64) -> Self {
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(hidden, depth));
        widths.push(1);
        Self { widths, hidden: Activation::LeakyRelu { slope: 0.2 }, output: Activation::Identity, seed }
    }

    pub fn build(&self) -> Result<Mlp> {
        Mlp::new(&self.widths, self.hidden, self.output, self.seed)
    }
}

/// Network inputs for nodal points, with time appended when `t` is given.
pub fn input_batch(points: &[[f64; 2]], t: Option<f64>) -> Array2<f64> {
    let d = if t.is_some() { 3 } else { 2 };
    Array2::from_shape_fn((points.len(), d), |(i, k)| if k < 2 { points[i][k] } else { t.unwrap() })
}

/// Diagonal tensors `diag(max(|o1|, floor), max(|o2|, floor))` and the
/// number of entries that hit the floor.
pub fn kappa_from_outputs(out: &Array2<f64>) -> Result<(Vec<Tensor2>, usize)> {
    if out.ncols() != 2 {
        return Err(Error::Dimension(format!("kappa network must have 2 outputs, has {}", out.ncols())));
    }
    let mut floored = 0;
    let mut clamp = |v: f64| {
        let a = v.abs();
        if a < KAPPA_FLOOR {
            floored += 1;
            KAPPA_FLOOR
        } else {
            a
        }
    };
    let tensors = out.rows().into_iter().map(|r| Tensor2::diag(clamp(r[0]), clamp(r[1]))).collect();
    if floored > 0 {
        log::debug!("{floored} learned permeability entries floored at {KAPPA_FLOOR}");
    }
    Ok((tensors, floored))
}

pub fn kappa_net_eval(net: &Mlp, inputs: &Array2<f64>) -> Result<Vec<Tensor2>> {
    Ok(kappa_from_outputs(&net.forward(inputs)?)?.0)
}

/// Output cotangent for a kappa net from cotangents on `[k11, k12, k22]`.
/// Entries clamped at the floor get zero sensitivity.
pub fn kappa_cotangent(out: &Array2<f64>, dk: &[[f64; 3]]) -> Array2<f64> {
    Array2::from_shape_fn(out.dim(), |(i, k)| {
        let o = out[[i, k]];
        let d = if k == 0 { dk[i][0] } else { dk[i][2] };
        if o.abs() < KAPPA_FLOOR {
            0.0
        } else {
            d * o.signum()
        }
    })
}

pub fn sigma_from_outputs(out: &Array2<f64>) -> Result<Vec<f64>> {
    if out.ncols() != 1 {
        return Err(Error::Dimension(format!("sigma network must have 1 output, has {}", out.ncols())));
    }
    Ok(out.column(0).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kappa_outputs_to_tensors() {
        let (t, floored) = kappa_from_outputs(&array![[3.0, 4.0], [-3.0, 4.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t[0], Tensor2::diag(3.0, 4.0));
        assert_eq!(t[1], Tensor2::diag(3.0, 4.0));
        assert_eq!(t[2], Tensor2::diag(KAPPA_FLOOR, 1.0));
        assert_eq!(floored, 1);
        assert!(kappa_from_outputs(&array![[1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn paper_architectures() {
        let k = NetSpec::kappa(2, 100, 5, 0);
        assert_eq!(k.widths, vec![2, 100, 100, 100, 100, 100, 2]);
        let s = NetSpec::sigma(3, 100, 5, 0);
        assert_eq!(s.widths, vec![3, 100, 100, 100, 100, 100, 1]);
        assert_eq!(s.hidden, Activation::LeakyRelu { slope: 0.2 });
    }

    #[test]
    fn inputs_with_time() {
        let b = input_batch(&[[0.1, 0.2], [0.3, 0.4]], Some(0.5));
        assert_eq!(b, array![[0.1, 0.2, 0.5], [0.3, 0.4, 0.5]]);
        assert_eq!(input_batch(&[[0.1, 0.2]], None), array![[0.1, 0.2]]);
    }

    #[test]
    fn kappa_cotangent_uses_diagonal_and_sign() {
        let out = array![[2.0, -1.0], [0.0, 3.0]];
        let c = kappa_cotangent(&out, &[[1.0, 9.0, 2.0], [5.0, 9.0, 7.0]]);
        assert_eq!(c, array![[1.0, -2.0], [0.0, 7.0]]);
    }
}
