use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Affine map `y = x·W + b` with `W` stored as (in × out).
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    /// He-normal weights, zero bias.
    pub fn he(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
        Self {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || normal.sample(rng)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        general_mat_mul(1.0, &x.t(), dy, 1.0, &mut grad.weight);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight.t())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

pub(crate) struct BnCache {
    xhat: Array2<f64>,
    invstd: Array1<f64>,
}

/// Batch mean and unbiased variance seen by one normalization layer.
#[derive(Debug, Clone)]
pub struct BatchMoments {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl BatchNorm {
    pub fn identity(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }

    pub fn zeros(width: usize) -> Self {
        Self {
            gamma: Array1::zeros(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::zeros(width),
        }
    }

    pub(crate) fn forward_train(&self, x: &Array2<f64>, eps: f64) -> (Array2<f64>, BnCache, BatchMoments) {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
        let invstd = var.mapv(|v| 1.0 / (v + eps).sqrt());
        let xhat = &centered * &invstd;
        let y = &xhat * &self.gamma + &self.beta;
        let unbiased = if n > 1.0 { &var * (n / (n - 1.0)) } else { var };
        (y, BnCache { xhat, invstd }, BatchMoments { mean, var: unbiased })
    }

    pub(crate) fn forward_eval(&self, x: &Array2<f64>, eps: f64) -> Array2<f64> {
        let invstd = self.running_var.mapv(|v| 1.0 / (v + eps).sqrt());
        (x - &self.running_mean) * &(&invstd * &self.gamma) + &self.beta
    }

    pub(crate) fn backward(&self, cache: &BnCache, dy: &Array2<f64>, grad: &mut BatchNorm) -> Array2<f64> {
        let n = dy.nrows() as f64;
        grad.beta += &dy.sum_axis(Axis(0));
        grad.gamma += &(dy * &cache.xhat).sum_axis(Axis(0));
        let dxhat = dy * &self.gamma;
        let sum_dxhat = dxhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&dxhat * &cache.xhat).sum_axis(Axis(0));
        let mut dx = dxhat * n - &sum_dxhat - &(&cache.xhat * &sum_dxhat_xhat);
        dx *= &(&cache.invstd / n);
        dx
    }

    pub(crate) fn update_running(&mut self, moments: &BatchMoments, momentum: f64) {
        Zip::from(&mut self.running_mean)
            .and(&moments.mean)
            .for_each(|r, &m| *r = momentum * *r + (1.0 - momentum) * m);
        Zip::from(&mut self.running_var)
            .and(&moments.var)
            .for_each(|r, &v| *r = momentum * *r + (1.0 - momentum) * v);
    }
}

/// Linear → batch norm → ReLU → dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnit {
    pub linear: Linear,
    pub bn: BatchNorm,
}

pub(crate) struct UnitCache {
    input: Array2<f64>,
    bn: BnCache,
    pre_relu: Array2<f64>,
    mask: Option<Array2<f64>>,
}

impl DenseUnit {
    pub fn he(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        Self { linear: Linear::he(fan_in, fan_out, rng), bn: BatchNorm::identity(fan_out) }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { linear: Linear::zeros(fan_in, fan_out), bn: BatchNorm::zeros(fan_out) }
    }

    /// `mask` holds inverted-dropout multipliers (0 or 1/keep); `None` disables dropout.
    pub(crate) fn forward_train(
        &self,
        x: &Array2<f64>,
        mask: Option<Array2<f64>>,
        eps: f64,
    ) -> (Array2<f64>, UnitCache, BatchMoments) {
        let z = self.linear.forward(x);
        let (pre_relu, bn, moments) = self.bn.forward_train(&z, eps);
        let mut out = pre_relu.mapv(|v| v.max(0.0));
        if let Some(m) = &mask {
            out *= m;
        }
        (out, UnitCache { input: x.clone(), bn, pre_relu, mask }, moments)
    }

    pub(crate) fn forward_eval(&self, x: &Array2<f64>, eps: f64) -> Array2<f64> {
        self.bn.forward_eval(&self.linear.forward(x), eps).mapv(|v| v.max(0.0))
    }

    pub(crate) fn backward(&self, cache: &UnitCache, dy: &Array2<f64>, grad: &mut DenseUnit) -> Array2<f64> {
        let mut d = dy.clone();
        if let Some(m) = &cache.mask {
            d *= m;
        }
        Zip::from(&mut d).and(&cache.pre_relu).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let dz = self.bn.backward(&cache.bn, &d, &mut grad.bn);
        self.linear.backward(&cache.input, &dz, &mut grad.linear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn batchnorm_normalizes_in_training() {
        let bn = BatchNorm::identity(2);
        let x = array![[1.0, 10.0], [3.0, 20.0], [5.0, 60.0]];
        let (y, _, moments) = bn.forward_train(&x, 0.0);
        for col in y.columns() {
            assert!(col.sum().abs() < 1e-12);
            assert!((col.mapv(|v| v * v).sum() / 3.0 - 1.0).abs() < 1e-12);
        }
        assert_eq!(moments.mean, array![3.0, 30.0]);
        assert!((moments.var[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_backward_matches_definition() {
        let lin = Linear { weight: array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], bias: array![0.5, -0.5] };
        let x = array![[1.0, 0.0, 2.0]];
        assert_eq!(lin.forward(&x), array![[11.5, 13.5]]);
        let mut g = Linear::zeros(3, 2);
        let dx = lin.backward(&x, &array![[1.0, 1.0]], &mut g);
        assert_eq!(dx, array![[3.0, 7.0, 11.0]]);
        assert_eq!(g.weight, array![[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]]);
        assert_eq!(g.bias, array![1.0, 1.0]);
    }
}
