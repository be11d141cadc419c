//! Dense feed-forward networks over a flat parameter vector.
//!
//! Layer `l` maps `fan_in -> fan_out` and owns `fan_out * fan_in` weights
//! (row-major, one row per output) followed by `fan_out` biases. Batches
//! are matrices with one point per row.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Activation {
    Identity,
    Tanh,
    /// `x` for `x > 0`, `slope * x` otherwise.
    LeakyRelu { slope: f64 },
    Abs,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Abs => z.abs(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Abs => {
                if z > 0.0 {
                    1.0
                } else if z < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    hidden: Activation,
    output: Activation,
    seed: u64,
    params: Vec<f64>,
}

/// Intermediate values kept by [`Mlp::forward_tape`] for the reverse pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Layer inputs: the batch, then each hidden activation.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations per layer.
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl Mlp {
    /// Weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidInput(format!("network needs at least two positive widths, got {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(widths));
        for w in widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self { widths: widths.to_vec(), hidden, output, seed, params })
    }

    /// Network with given parameters.
    pub fn from_params(widths: &[usize], hidden: Activation, output: Activation, seed: u64, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::new(widths, hidden, output, seed)?;
        net.set_params(&params)?;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn hidden(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension(format!("{} parameters for a network of {}", params.len(), self.params.len())));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize, Activation)> + '_ {
        let last = self.widths.len() - 2;
        let mut offset = 0;
        self.widths.windows(2).enumerate().map(move |(l, w)| {
            let start = offset;
            offset += (w[0] + 1) * w[1];
            (start, w[0], w[1], if l == last { self.output } else { self.hidden })
        })
    }

    fn weights<'a>(params: &'a [f64], start: usize, fan_in: usize, fan_out: usize) -> (ArrayView2<'a, f64>, &'a [f64]) {
        let w = ArrayView2::from_shape((fan_out, fan_in), &params[start..start + fan_in * fan_out]).expect("layout");
        let b = &params[start + fan_in * fan_out..start + (fan_in + 1) * fan_out];
        (w, b)
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!("input has {} columns, network expects {}", x.ncols(), self.input_dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_tape(x)?.output)
    }

    pub fn forward_tape(&self, x: &Array2<f64>) -> Result<Tape> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.widths.len() - 1);
        let mut pre = Vec::with_capacity(self.widths.len() - 1);
        let mut a = x.clone();
        for (start, fan_in, fan_out, act) in self.layers() {
            let (w, b) = Self::weights(&self.params, start, fan_in, fan_out);
            let mut z = a.dot(&w.t());
            z += &ArrayView2::from_shape((1, fan_out), b).expect("bias");
            let next = z.mapv(|v| act.apply(v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(Tape { inputs, pre, output: a })
    }

    /// Reverse pass: `sum over the batch of (d output / d theta)^T cotangent`.
    pub fn vjp(&self, tape: &Tape, cotangent: &Array2<f64>) -> Result<Vec<f64>> {
        if cotangent.dim() != tape.output.dim() {
            return Err(Error::Dimension(format!(
                "cotangent shape {:?} does not match output {:?}",
                cotangent.dim(),
                tape.output.dim()
            )));
        }
        let mut grad = vec![0.0; self.params.len()];
        let layers: Vec<_> = self.layers().collect();
        let mut delta = cotangent.clone();
        for (l, &(start, fan_in, fan_out, act)) in layers.iter().enumerate().rev() {
            let z = &tape.pre[l];
            let a = if l + 1 == layers.len() { &tape.output } else { &tape.inputs[l + 1] };
            ndarray::Zip::from(&mut delta).and(z).and(a).for_each(|d, &z, &a| *d *= act.derivative(z, a));
            let gw = delta.t().dot(&tape.inputs[l]);
            let gb: Array1<f64> = delta.sum_axis(Axis(0));
            grad[start..start + fan_in * fan_out].copy_from_slice(gw.as_slice().expect("contiguous"));
            grad[start + fan_in * fan_out..start + (fan_in + 1) * fan_out].copy_from_slice(gb.as_slice().unwrap());
            if l > 0 {
                let (w, _) = Self::weights(&self.params, start, fan_in, fan_out);
                delta = delta.dot(&w);
            }
        }
        Ok(grad)
    }

    /// Forward-mode product `(d output / d theta) v` at a batch.
    pub fn jvp(&self, x: &Array2<f64>, v: &[f64]) -> Result<Array2<f64>> {
        self.check_input(x)?;
        if v.len() != self.params.len() {
            return Err(Error::Dimension("tangent length differs from parameter count".into()));
        }
        let mut a = x.clone();
        let mut da = Array2::<f64>::zeros(x.dim());
        for (start, fan_in, fan_out, act) in self.layers() {
            let (w, b) = Self::weights(&self.params, start, fan_in, fan_out);
            let (dw, db) = Self::weights(v, start, fan_in, fan_out);
            let mut z = a.dot(&w.t());
            z += &ArrayView2::from_shape((1, fan_out), b).unwrap();
            let mut dz = da.dot(&w.t()) + a.dot(&dw.t());
            dz += &ArrayView2::from_shape((1, fan_out), db).unwrap();
            let next = z.mapv(|v| act.apply(v));
            ndarray::Zip::from(&mut dz).and(&z).and(&next).for_each(|d, &z, &a| *d *= act.derivative(z, a));
            a = next;
            da = dz;
        }
        Ok(da)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    const TANH: Activation = Activation::Tanh;
    const LEAKY: Activation = Activation::LeakyRelu { slope: 0.2 };

    fn points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..1.0))
    }

    #[test]
    fn paper_sized_networks() {
        let k = Mlp::new(&[2, 100, 100, 100, 100, 100, 2], TANH, Activation::Abs, 1).unwrap();
        assert_eq!(k.param_count(), 3 * 100 + 4 * 101 * 100 + 101 * 2);
        let s = Mlp::new(&[2, 100, 100, 100, 100, 100, 1], LEAKY, Activation::Identity, 2).unwrap();
        assert_eq!(s.param_count(), param_count(&[2, 100, 100, 100, 100, 100, 1]));
        assert!(Mlp::new(&[3], TANH, TANH, 0).is_err());
        assert!(Mlp::new(&[3, 0, 1], TANH, TANH, 0).is_err());
    }

    #[test]
    fn init_is_deterministic_and_scaled() {
        let a = Mlp::new(&[2, 16, 3], TANH, Activation::Abs, 42).unwrap();
        let b = Mlp::new(&[2, 16, 3], TANH, Activation::Abs, 42).unwrap();
        assert_eq!(a.params(), b.params());
        let c = Mlp::new(&[2, 16, 3], TANH, Activation::Abs, 43).unwrap();
        assert_ne!(a.params(), c.params());
        let bound = 1.0 / 2f64.sqrt();
        assert!(a.params()[..32].iter().all(|w| w.abs() < bound));
        assert!(a.params()[32..48].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn output_bias_only() {
        let mut net = Mlp::new(&[2, 3, 1], TANH, Activation::Identity, 0).unwrap();
        let n = net.param_count();
        let mut p = vec![0.0; n];
        p[n - 1] = 1.25;
        net.set_params(&p).unwrap();
        let out = net.forward(&points(5, 2, 1)).unwrap();
        assert!(out.iter().all(|&v| v == 1.25));
    }

    #[test]
    fn identity_layer_passes_input() {
        let net = Mlp::from_params(&[2, 2], TANH, Activation::Identity, 0, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = array![[0.3, -0.7], [2.0, 5.0]];
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn leaky_relu_of_minus_one() {
        assert_eq!(LEAKY.apply(-1.0), -0.2);
        assert_eq!(LEAKY.apply(0.0), 0.0);
        assert_eq!(LEAKY.apply(3.0), 3.0);
    }

    #[test]
    fn single_neuron_gradient() {
        let net = Mlp::from_params(&[1, 1], TANH, Activation::Identity, 0, vec![0.7, -0.1]).unwrap();
        let x = array![[0.4]];
        let tape = net.forward_tape(&x).unwrap();
        let g = net.vjp(&tape, &array![[1.0]]).unwrap();
        assert_eq!(g, vec![0.4, 1.0]);
        let zero = net.vjp(&tape, &array![[0.0]]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        let net = Mlp::new(&[2, 3, 1], TANH, Activation::Identity, 0).unwrap();
        assert!(net.forward(&points(3, 3, 0)).is_err());
        let mut bad = points(3, 2, 0);
        bad[[1, 1]] = f64::NAN;
        assert!(net.forward(&bad).is_err());
        let tape = net.forward_tape(&points(3, 2, 0)).unwrap();
        assert!(net.vjp(&tape, &Array2::zeros((3, 2))).is_err());
    }

    fn fd_check(net: &Mlp, x: &Array2<f64>, cot: &Array2<f64>) {
        let tape = net.forward_tape(x).unwrap();
        let g = net.vjp(&tape, cot).unwrap();
        let h = 1e-6;
        let mut p = net.clone();
        for i in 0..net.param_count() {
            let orig = net.params()[i];
            p.params_mut()[i] = orig + h;
            let fp = (&p.forward(x).unwrap() * cot).sum();
            p.params_mut()[i] = orig - h;
            let fm = (&p.forward(x).unwrap() * cot).sum();
            p.params_mut()[i] = orig;
            let fd = (fp - fm) / (2.0 * h);
            let scale = g[i].abs().max(fd.abs()).max(1e-3);
            assert!((fd - g[i]).abs() / scale < 1e-7, "param {i}: vjp {} fd {fd}", g[i]);
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let x = points(7, 2, 3);
        let net = Mlp::new(&[2, 5, 4, 2], TANH, Activation::Abs, 9).unwrap();
        fd_check(&net, &x, &points(7, 2, 4));
        let net = Mlp::new(&[2, 6, 6, 1], LEAKY, Activation::Identity, 10).unwrap();
        fd_check(&net, &x, &points(7, 1, 5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn jvp_vjp_adjoint_identity(seed in any::<u64>()) {
            let net = Mlp::new(&[3, 8, 8, 2], TANH, Activation::Abs, seed).unwrap();
            let x = points(6, 3, seed ^ 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let u: Vec<f64> = (0..net.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = points(6, 2, seed ^ 3);
            let ju = net.jvp(&x, &u).unwrap();
            let jtv = net.vjp(&net.forward_tape(&x).unwrap(), &v).unwrap();
            let lhs = (&ju * &v).sum();
            let rhs: f64 = jtv.iter().zip(&u).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-12));
        }

        #[test]
        fn abs_output_is_nonnegative(seed in any::<u64>()) {
            let net = Mlp::new(&[2, 10, 2], TANH, Activation::Abs, seed).unwrap();
            let x = points(20, 2, seed).mapv(|v| 4.0 * v - 2.0);
            prop_assert!(net.forward(&x).unwrap().iter().all(|&v| v >= 0.0));
        }
    }
}
