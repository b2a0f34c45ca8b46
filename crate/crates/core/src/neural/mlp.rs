use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::bits::BitSet;
use crate::Scalar;

use super::NeuralError;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Logits, trained with softmax cross-entropy.
    Classifier,
    /// Linear outputs, trained with mean squared error.
    Regressor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A batch of network inputs: dense rows or packed binary rows.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a, T> {
    Dense(ArrayView2<'a, T>),
    Binary(&'a [BitSet]),
}

impl<T: Scalar> Input<'_, T> {
    pub fn rows(&self) -> usize {
        match self {
            Input::Dense(x) => x.nrows(),
            Input::Binary(b) => b.len(),
        }
    }

    fn width(&self) -> Option<usize> {
        match self {
            Input::Dense(x) => Some(x.ncols()),
            Input::Binary(b) => {
                let w = b.first()?.len();
                b.iter().all(|r| r.len() == w).then_some(w)
            }
        }
    }

    fn matmul(&self, w: &Array2<T>) -> Array2<T> {
        match self {
            Input::Dense(x) => x.dot(w),
            Input::Binary(rows) => {
                let mut z = Array2::zeros((rows.len(), w.ncols()));
                for (r, bits) in rows.iter().enumerate() {
                    let mut zr = z.row_mut(r);
                    for i in bits.ones() {
                        zr.scaled_add(T::one(), &w.row(i));
                    }
                }
                z
            }
        }
    }

    /// `xᵀ·dz`.
    fn tmatmul(&self, dz: &Array2<T>, in_dim: usize) -> Array2<T> {
        match self {
            Input::Dense(x) => x.t().dot(dz),
            Input::Binary(rows) => {
                let mut g = Array2::zeros((in_dim, dz.ncols()));
                for (r, bits) in rows.iter().enumerate() {
                    let dzr = dz.row(r);
                    for i in bits.ones() {
                        let mut gr = g.row_mut(i);
                        gr.scaled_add(T::one(), &dzr);
                    }
                }
                g
            }
        }
    }
}

/// Affine map without bias, batch normalization, rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Hidden<T> {
    pub w: Array2<T>,
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
    pub running_mean: Array1<T>,
    pub running_var: Array1<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub kind: HeadKind,
    pub hidden: Vec<Hidden<T>>,
    pub w_out: Array2<T>,
    pub b_out: Array1<T>,
}

#[derive(Debug, Clone)]
struct LayerCache<T> {
    xhat: Array2<T>,
    inv_std: Array1<T>,
    mean: Array1<T>,
    var: Array1<T>,
    /// Normalized, scaled and shifted pre-activation.
    pre: Array2<T>,
    /// Post-rectifier output, the next layer's input.
    out: Array2<T>,
}

/// Train-mode intermediates for backpropagation and running-stat updates.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    layers: Vec<LayerCache<T>>,
}

impl<T> Cache<T> {
    /// Post-rectifier activations of hidden layer `i`.
    pub fn activations(&self, i: usize) -> &Array2<T> {
        &self.layers[i].out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenGrads<T> {
    pub w: Array2<T>,
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub hidden: Vec<HiddenGrads<T>>,
    pub w_out: Array2<T>,
    pub b_out: Array1<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Fan-in scaled uniform weights (He bound for rectified layers), zero
    /// biases, unit batch-norm scale and zero shift.
    pub fn new(
        kind: HeadKind,
        input: usize,
        hidden: &[usize],
        output: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, NeuralError> {
        if input == 0 || output == 0 || hidden.contains(&0) {
            return Err(NeuralError::Dimension("layer widths must be positive".into()));
        }
        let mut uniform = |rows: usize, cols: usize, bound: f64| {
            let d = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            Array2::from_shape_simple_fn((rows, cols), || T::of(d.sample(rng)))
        };
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = input;
        for &h in hidden {
            layers.push(Hidden {
                w: uniform(fan_in, h, (6.0 / fan_in as f64).sqrt()),
                gamma: Array1::ones(h),
                beta: Array1::zeros(h),
                running_mean: Array1::zeros(h),
                running_var: Array1::ones(h),
            });
            fan_in = h;
        }
        Ok(Self {
            kind,
            hidden: layers,
            w_out: uniform(fan_in, output, (1.0 / fan_in as f64).sqrt()),
            b_out: Array1::zeros(output),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().map_or(self.w_out.nrows(), |h| h.w.nrows())
    }

    pub fn output_dim(&self) -> usize {
        self.w_out.ncols()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden.iter().map(|h| h.w.ncols()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.hidden.iter().map(|h| h.w.len() + 2 * h.gamma.len()).sum::<usize>() + self.w_out.len() + self.b_out.len()
    }

    fn check_input(&self, x: &Input<T>) -> Result<(), NeuralError> {
        if x.rows() == 0 {
            return Err(NeuralError::Dimension("empty batch".into()));
        }
        match x.width() {
            Some(w) if w == self.input_dim() => Ok(()),
            w => Err(NeuralError::Dimension(format!(
                "input width {w:?}, network expects {}",
                self.input_dim()
            ))),
        }
    }

    /// Outputs; in train mode also the cache. Pure: running statistics
    /// change only through [`update_running_stats`](Self::update_running_stats).
    pub fn forward(&self, x: Input<T>, mode: Mode) -> Result<(Array2<T>, Option<Cache<T>>), NeuralError> {
        self.check_input(&x)?;
        let n = x.rows();
        if mode == Mode::Train && n < 2 && !self.hidden.is_empty() {
            return Err(NeuralError::Dimension("train-mode batch needs at least 2 rows".into()));
        }
        let eps = T::of(BN_EPS);
        let mut caches = Vec::new();
        let mut h: Option<Array2<T>> = None;
        for layer in &self.hidden {
            let z = match &h {
                None => x.matmul(&layer.w),
                Some(a) => a.dot(&layer.w),
            };
            let (mean, var) = match mode {
                Mode::Train => {
                    let mean = z.mean_axis(Axis(0)).expect("nonempty batch");
                    let var = z.var_axis(Axis(0), T::zero());
                    (mean, var)
                }
                Mode::Eval => (layer.running_mean.clone(), layer.running_var.clone()),
            };
            let inv_std = var.mapv(|v| T::one() / (v + eps).sqrt());
            let xhat = (&z - &mean) * &inv_std;
            let pre = &xhat * &layer.gamma + &layer.beta;
            let out = pre.mapv(|v| v.max(T::zero()));
            if mode == Mode::Train {
                caches.push(LayerCache {
                    xhat,
                    inv_std,
                    mean,
                    var,
                    pre,
                    out: out.clone(),
                });
            }
            h = Some(out);
        }
        let y = match &h {
            None => x.matmul(&self.w_out),
            Some(a) => a.dot(&self.w_out),
        } + &self.b_out;
        let cache = (mode == Mode::Train).then_some(Cache { layers: caches });
        Ok((y, cache))
    }

    /// Eval-mode outputs.
    pub fn predict(&self, x: Input<T>) -> Result<Array2<T>, NeuralError> {
        Ok(self.forward(x, Mode::Eval)?.0)
    }

    /// Exponential moving average of batch statistics (unbiased variance).
    pub fn update_running_stats(&mut self, cache: &Cache<T>, batch: usize) {
        let m = T::of(BN_MOMENTUM);
        let keep = T::one() - m;
        let correction = if batch > 1 {
            T::of(batch as f64 / (batch - 1) as f64)
        } else {
            T::one()
        };
        for (layer, c) in self.hidden.iter_mut().zip(&cache.layers) {
            Zip::from(&mut layer.running_mean)
                .and(&c.mean)
                .for_each(|r, &b| *r = keep * *r + m * b);
            Zip::from(&mut layer.running_var)
                .and(&c.var)
                .for_each(|r, &b| *r = keep * *r + m * b * correction);
        }
    }

    /// Backpropagates `dy` (gradient of the loss w.r.t. the outputs).
    pub fn backward(&self, x: Input<T>, cache: &Cache<T>, dy: &Array2<T>) -> Grads<T> {
        let n = T::of(dy.nrows() as f64);
        let last_in = cache.layers.last().map(|c| &c.out);
        let w_out = match last_in {
            Some(a) => a.t().dot(dy),
            None => x.tmatmul(dy, self.input_dim()),
        };
        let b_out = dy.sum_axis(Axis(0));
        let mut grad_h = dy.dot(&self.w_out.t());
        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (i, (layer, c)) in self.hidden.iter().zip(&cache.layers).enumerate().rev() {
            // Rectifier.
            Zip::from(&mut grad_h).and(&c.pre).for_each(|g, &p| {
                if p <= T::zero() {
                    *g = T::zero();
                }
            });
            let gamma = (&grad_h * &c.xhat).sum_axis(Axis(0));
            let beta = grad_h.sum_axis(Axis(0));
            // Batch norm: dz = inv_std/n * (n*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)).
            let dxhat = &grad_h * &layer.gamma;
            let s1 = dxhat.sum_axis(Axis(0));
            let s2 = (&dxhat * &c.xhat).sum_axis(Axis(0));
            let dz = ((&dxhat * n) - &s1 - &(&c.xhat * &s2)) * &(&c.inv_std / n);
            let w = if i == 0 {
                x.tmatmul(&dz, self.input_dim())
            } else {
                cache.layers[i - 1].out.t().dot(&dz)
            };
            if i > 0 {
                grad_h = dz.dot(&layer.w.t());
            }
            hidden.push(HiddenGrads { w, gamma, beta });
        }
        hidden.reverse();
        Grads { hidden, w_out, b_out }
    }

    /// Visits (parameter, gradient) slices in a fixed order.
    pub fn for_each_param(&mut self, grads: &Grads<T>, mut f: impl FnMut(usize, &mut [T], &[T])) {
        let mut k = 0;
        let mut visit = |p: &mut [T], g: &[T]| {
            f(k, p, g);
            k += 1;
        };
        for (layer, g) in self.hidden.iter_mut().zip(&grads.hidden) {
            visit(layer.w.as_slice_mut().unwrap(), g.w.as_slice().unwrap());
            visit(layer.gamma.as_slice_mut().unwrap(), g.gamma.as_slice().unwrap());
            visit(layer.beta.as_slice_mut().unwrap(), g.beta.as_slice().unwrap());
        }
        visit(self.w_out.as_slice_mut().unwrap(), grads.w_out.as_slice().unwrap());
        visit(self.b_out.as_slice_mut().unwrap(), grads.b_out.as_slice().unwrap());
    }

    pub fn all_finite(&self) -> bool {
        self.hidden.iter().all(|h| {
            h.w.iter()
                .chain(&h.gamma)
                .chain(&h.beta)
                .chain(&h.running_mean)
                .chain(&h.running_var)
                .all(|v| v.is_finite())
        }) && self.w_out.iter().chain(&self.b_out).all(|v| v.is_finite())
    }
}
