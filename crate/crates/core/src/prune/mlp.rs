use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Two affine layers with a tanh hidden layer and one linear output.
///
/// Parameters live in one flat vector: `W1 (hidden × input, row-major)`,
/// `b1`, `w2`, `b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Hidden activations kept from a forward pass.
pub struct MlpCache {
    hidden: Vec<f64>,
}

impl Mlp {
    pub fn param_len(input: usize, hidden: usize) -> usize {
        hidden * input + 2 * hidden + 1
    }

    /// Fan-in uniform initialisation for the hidden layer and a small
    /// `U(−3e−3, 3e−3)` output layer.
    pub fn new(input: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Argument("mlp sizes must be positive".into()));
        }
        let bound = 1.0 / (input as f64).sqrt();
        let mut params = Vec::with_capacity(Self::param_len(input, hidden));
        for _ in 0..hidden * input + hidden {
            params.push(rng.uniform(-bound, bound)?);
        }
        for _ in 0..hidden + 1 {
            params.push(rng.uniform(-3e-3, 3e-3)?);
        }
        Ok(Self {
            input,
            hidden,
            params,
        })
    }

    pub fn from_params(input: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::param_len(input, hidden) {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                Self::param_len(input, hidden),
                params.len()
            )));
        }
        Ok(Self {
            input,
            hidden,
            params,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, i) = (self.hidden, self.input);
        let (w1, rest) = self.params.split_at(h * i);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    pub fn forward_cached(&self, x: &[f64]) -> (f64, MlpCache) {
        assert_eq!(x.len(), self.input, "mlp input length");
        let (w1, b1, w2, b2) = self.split();
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &w1[j * self.input..(j + 1) * self.input];
                let z: f64 = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                z.tanh()
            })
            .collect();
        let y = b2 + hidden.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>();
        (y, MlpCache { hidden })
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.forward_cached(x).0
    }

    /// Adds `dy · ∂y/∂θ` into `grad` and returns `dy · ∂y/∂x`.
    pub fn backward(&self, x: &[f64], cache: &MlpCache, dy: f64, grad: &mut [f64]) -> Vec<f64> {
        let (w1, _, w2, _) = self.split();
        let (h, i) = (self.hidden, self.input);
        let mut dx = vec![0.0; i];
        let (gw1, rest) = grad.split_at_mut(h * i);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(h);
        gb2[0] += dy;
        for j in 0..h {
            let a = cache.hidden[j];
            gw2[j] += dy * a;
            let dz = dy * w2[j] * (1.0 - a * a);
            gb1[j] += dz;
            let row = &w1[j * i..(j + 1) * i];
            for k in 0..i {
                gw1[j * i + k] += dz * x[k];
                dx[k] += dz * row[k];
            }
        }
        dx
    }
}

/// Adam optimiser over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(len: usize, step_size: f64) -> Self {
        Self {
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One descent step along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= self.step_size * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// `θ′ ← τθ + (1−τ)θ′` for every parameter.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) {
    assert_eq!(target.params.len(), online.params.len());
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + (1.0 - tau) * *t;
    }
}
