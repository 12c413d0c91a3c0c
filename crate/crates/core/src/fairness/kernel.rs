use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Lower median of pairwise Euclidean distances between the rows of
/// `points`. A zero median (all points identical, say) gives 1.0.
pub fn median_heuristic(points: ArrayView2<f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::arg("median heuristic needs at least two points"));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let pi = points.row(i);
        for j in i + 1..n {
            let d2: f64 = pi.iter().zip(points.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(d2);
        }
    }
    let k = (dists.len() - 1) / 2;
    let (_, med, _) = dists.select_nth_unstable_by(k, f64::total_cmp);
    let med = med.sqrt();
    if !med.is_finite() {
        return Err(Error::NonFinite("median pairwise distance".into()));
    }
    Ok(if med > 0.0 { med } else { 1.0 })
}

/// `log(mean(exp(omega * v))) / omega`, shifted by the maximum.
pub fn mellowmax(values: &[f64], omega: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::arg("mellowmax of an empty list"));
    }
    if !(omega > 0.0) {
        return Err(Error::arg("mellowmax temperature must be positive"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().map(|v| (omega * (v - max)).exp()).sum::<f64>() / values.len() as f64;
    Ok(max + mean.ln() / omega)
}

/// Gradient of [`mellowmax`] with respect to `values`: a softmax.
pub fn mellowmax_weights(values: &[f64], omega: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = values.iter().map(|v| (omega * (v - max)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Random Fourier features for a sum of Gaussian kernels with bandwidths
/// `c * gamma`, one block of `d_rff` features per multiplier `c`.
///
/// Base frequencies are standard normal and get divided by `c * gamma`, so
/// the bandwidth can be reset without redrawing.
#[derive(Clone, Debug)]
pub struct RffMap {
    dim: usize,
    d_rff: usize,
    multipliers: Vec<f64>,
    base: Array2<f64>,
    phases: Array1<f64>,
    gamma: f64,
}

impl RffMap {
    pub fn new<R: Rng + ?Sized>(dim: usize, d_rff: usize, multipliers: &[f64], gamma: f64, rng: &mut R) -> Result<Self> {
        let total = d_rff * multipliers.len();
        let base = Array2::from_shape_simple_fn((total, dim), || rng.sample(StandardNormal));
        let phases = Array1::from_shape_simple_fn(total, || rng.gen_range(0.0..std::f64::consts::TAU));
        RffMap::from_parts(dim, d_rff, multipliers.to_vec(), base, phases, gamma)
    }

    /// Builds a map from explicit base frequencies (rows) and phases.
    pub fn from_parts(
        dim: usize,
        d_rff: usize,
        multipliers: Vec<f64>,
        base: Array2<f64>,
        phases: Array1<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let total = d_rff * multipliers.len();
        if d_rff == 0 || multipliers.is_empty() {
            return Err(Error::arg("feature map needs at least one feature"));
        }
        if base.dim() != (total, dim) || phases.len() != total {
            return Err(Error::arg("frequency or phase shape mismatch"));
        }
        if multipliers.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::arg("bandwidth multipliers must be positive"));
        }
        let mut map = RffMap {
            dim,
            d_rff,
            multipliers,
            base,
            phases,
            gamma: 1.0,
        };
        map.set_gamma(gamma)?;
        Ok(map)
    }

    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::arg(format!("bandwidth {gamma} must be positive")));
        }
        self.gamma = gamma;
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn d_rff(&self) -> usize {
        self.d_rff
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// Total feature count, `d_rff` times the number of bandwidths.
    pub fn width(&self) -> usize {
        self.phases.len()
    }

    /// Effective frequencies, one row per feature.
    pub fn frequencies(&self) -> Array2<f64> {
        let mut f = self.base.clone();
        for (b, &c) in self.multipliers.iter().enumerate() {
            let scale = 1.0 / (c * self.gamma);
            f.slice_mut(ndarray::s![b * self.d_rff..(b + 1) * self.d_rff, ..])
                .mapv_inplace(|w| w * scale);
        }
        f
    }

    pub fn features(&self, y: &[f64]) -> Result<Vec<f64>> {
        let m = ArrayView2::from_shape((1, y.len()), y).map_err(|e| Error::arg(e.to_string()))?;
        Ok(self.features_batch(m)?.into_raw_vec())
    }

    /// `sqrt(2/d_rff) cos(w_i . y + b_i)` for every row of `y`.
    pub fn features_batch(&self, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.project(y)?.0)
    }

    /// Features together with their phase derivatives
    /// `-sqrt(2/d_rff) sin(w_i . y + b_i)`, and the frequencies used.
    pub(crate) fn project(&self, y: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
        if y.ncols() != self.dim {
            return Err(Error::arg(format!("input dimension {} does not match map dimension {}", y.ncols(), self.dim)));
        }
        let freqs = self.frequencies();
        let mut arg = y.dot(&freqs.t());
        arg += &self.phases;
        let scale = (2.0 / self.d_rff as f64).sqrt();
        let mut cos = Array2::zeros(arg.raw_dim());
        let mut sin = Array2::zeros(arg.raw_dim());
        for ((c, s), &t) in cos.iter_mut().zip(sin.iter_mut()).zip(arg.iter()) {
            let (sn, cs) = t.sin_cos();
            *c = scale * cs;
            *s = -scale * sn;
        }
        Ok((cos, sin, freqs))
    }
}

/// Exact Gaussian kernel `exp(-|y - y'|^2 / (2 gamma^2))`.
pub fn gaussian_kernel(y: &[f64], y2: &[f64], gamma: f64) -> f64 {
    let d2: f64 = y.iter().zip(y2).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * gamma * gamma)).exp()
}

/// `sum_a |mu_a - mean(mu)|^2` over equally long vectors.
pub fn barycenter_spread(embeddings: &[Array1<f64>]) -> f64 {
    if embeddings.is_empty() {
        return 0.0;
    }
    let mut bar = Array1::zeros(embeddings[0].len());
    for e in embeddings {
        bar += e;
    }
    bar /= embeddings.len() as f64;
    embeddings.iter().map(|e| (e - &bar).mapv(|v| v * v).sum()).sum()
}

/// `sum_{a, a'} |mu_a - mu_a'|^2` over ordered pairs.
pub fn pairwise_spread(embeddings: &[Array1<f64>]) -> f64 {
    let mut total = 0.0;
    for a in embeddings {
        for b in embeddings {
            total += (a - b).mapv(|v| v * v).sum();
        }
    }
    total
}
