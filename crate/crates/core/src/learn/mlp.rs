use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Identity,
    Sigmoid,
    Softmax,
}

/// Two-layer rectifier network with a flat parameter vector laid out as
/// `W1 (hidden x input), b1, W2 (output x hidden), b2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    output: usize,
    head: Head,
    params: Vec<f64>,
    #[serde(skip)]
    version: u64,
}

/// Activations kept by [`Mlp::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    version: u64,
    input: Array2<f64>,
    pre: Array2<f64>,
    hidden: Array2<f64>,
    pub output: Array2<f64>,
}

fn param_count(input: usize, hidden: usize, output: usize) -> usize {
    hidden * input + hidden + output * hidden + output
}

impl Mlp {
    /// Uniform initialisation in `+-1/sqrt(fan_in)` per layer.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, head: Head, rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(param_count(input, hidden, output));
        let b1 = 1.0 / (input.max(1) as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        for _ in 0..hidden * input + hidden {
            params.push(rng.gen_range(-b1..b1));
        }
        for _ in 0..output * hidden + output {
            params.push(rng.gen_range(-b2..b2));
        }
        Mlp {
            input,
            hidden,
            output,
            head,
            params,
            version: 0,
        }
    }

    pub fn zeros(input: usize, hidden: usize, output: usize, head: Head) -> Self {
        Mlp {
            input,
            hidden,
            output,
            head,
            params: vec![0.0; param_count(input, hidden, output)],
            version: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::arg("parameter vector length mismatch"));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters".into()));
        }
        self.params = params;
        self.version += 1;
        Ok(())
    }

    /// Mutable access; invalidates caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    fn layers(&self) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>, ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (i, h, o) = (self.input, self.hidden, self.output);
        let p = &self.params;
        let w1 = ArrayView2::from_shape((h, i), &p[..h * i]).expect("layout");
        let b1 = ArrayView1::from(&p[h * i..h * i + h]);
        let off = h * i + h;
        let w2 = ArrayView2::from_shape((o, h), &p[off..off + o * h]).expect("layout");
        let b2 = ArrayView1::from(&p[off + o * h..]);
        (w1, b1, w2, b2)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Cache)> {
        if x.ncols() != self.input {
            return Err(Error::arg(format!("input width {} but model expects {}", x.ncols(), self.input)));
        }
        let (w1, b1, w2, b2) = self.layers();
        let mut pre = x.dot(&w1.t());
        pre += &b1;
        let hidden = pre.mapv(|v| v.max(0.0));
        let mut logits = hidden.dot(&w2.t());
        logits += &b2;
        let output = match self.head {
            Head::Identity => logits,
            Head::Sigmoid => logits.mapv(crate::scm::sigmoid),
            Head::Softmax => {
                let mut out = logits;
                for mut row in out.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row /= s;
                }
                out
            }
        };
        Ok((
            output.clone(),
            Cache {
                version: self.version,
                input: x.to_owned(),
                pre,
                hidden,
                output,
            },
        ))
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Parameter gradient given the derivative with respect to the head
    /// output.
    pub fn backward(&self, cache: &Cache, grad_out: ArrayView2<f64>) -> Result<Vec<f64>> {
        if grad_out.dim() != cache.output.dim() {
            return Err(Error::arg("output gradient shape mismatch"));
        }
        let grad_logits = match self.head {
            Head::Identity => grad_out.to_owned(),
            Head::Sigmoid => &grad_out * &cache.output.mapv(|s| s * (1.0 - s)),
            Head::Softmax => {
                let mut g = grad_out.to_owned();
                for (mut gr, sr) in g.rows_mut().into_iter().zip(cache.output.rows()) {
                    let dot: f64 = gr.iter().zip(sr).map(|(a, b)| a * b).sum();
                    for (gv, &s) in gr.iter_mut().zip(sr) {
                        *gv = s * (*gv - dot);
                    }
                }
                g
            }
        };
        self.backward_logits(cache, grad_logits.view())
    }

    /// Parameter gradient given the derivative with respect to the
    /// pre-head outputs (for fused cross-entropy losses).
    pub fn backward_logits(&self, cache: &Cache, grad_logits: ArrayView2<f64>) -> Result<Vec<f64>> {
        if cache.version != self.version {
            return Err(Error::arg("stale forward cache"));
        }
        if grad_logits.dim() != cache.output.dim() {
            return Err(Error::arg("output gradient shape mismatch"));
        }
        let (_, _, w2, _) = self.layers();
        let gw2 = grad_logits.t().dot(&cache.hidden);
        let gb2 = grad_logits.sum_axis(Axis(0));
        let mut gh = grad_logits.dot(&w2);
        gh.zip_mut_with(&cache.pre, |g, &p| {
            if p <= 0.0 {
                *g = 0.0
            }
        });
        let gw1 = gh.t().dot(&cache.input);
        let gb1 = gh.sum_axis(Axis(0));
        let mut out = Vec::with_capacity(self.params.len());
        out.extend(gw1.iter());
        out.extend(gb1.iter());
        out.extend(gw2.iter());
        out.extend(gb2.iter());
        Ok(out)
    }
}

/// Column-wise affine rescaling fitted on training data; binary columns
/// pass through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>, continuous: &[bool]) -> Result<Standardizer> {
        if continuous.len() != x.ncols() || x.nrows() < 2 {
            return Err(Error::arg("standardizer needs matching columns and two rows"));
        }
        let mut mean = vec![0.0; x.ncols()];
        let mut scale = vec![1.0; x.ncols()];
        for (j, col) in x.columns().into_iter().enumerate() {
            if !continuous[j] {
                continue;
            }
            let m = col.mean().expect("nonempty");
            let sd = col.std(1.0);
            mean[j] = m;
            scale[j] = if sd > 0.0 { sd } else { 1.0 };
        }
        Ok(Standardizer { mean, scale })
    }

    pub fn fit_vector(y: ArrayView1<f64>) -> Result<Standardizer> {
        Standardizer::fit(y.insert_axis(Axis(1)), &[true])
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::arg("standardizer width mismatch"));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn transform_vector(&self, y: ArrayView1<f64>) -> Array1<f64> {
        y.mapv(|v| (v - self.mean[0]) / self.scale[0])
    }
}
