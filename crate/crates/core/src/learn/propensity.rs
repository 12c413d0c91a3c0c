use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Head, Mlp, Standardizer};
use super::optim::AdamW;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropensityConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
}

impl Default for PropensityConfig {
    fn default() -> Self {
        PropensityConfig {
            hidden: 64,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 256,
            weight_decay: 1e-2,
        }
    }
}

/// `P(class | z)` for the joint sensitive and admissible classes.
#[derive(Clone, Debug)]
pub enum PropensityModel {
    /// Class frequencies; used when the adjustment set is empty.
    Marginal(Vec<f64>),
    Network { mlp: Mlp, scaler: Standardizer },
    /// Smoothed frequencies per discrete `z` pattern.
    Table {
        cells: HashMap<Vec<u64>, Vec<f64>>,
        fallback: Vec<f64>,
    },
}

fn frequencies(classes: &[usize], k: usize) -> Result<Vec<f64>> {
    if classes.is_empty() {
        return Err(Error::arg("no rows to fit a propensity model"));
    }
    let mut f = vec![0.0; k];
    for &c in classes {
        if c >= k {
            return Err(Error::arg(format!("class {c} out of range")));
        }
        f[c] += 1.0;
    }
    let n = classes.len() as f64;
    Ok(f.into_iter().map(|c| c / n).collect())
}

/// Fits a softmax network on standardized `z`, or class frequencies when
/// `z` has no columns.
pub fn fit_propensity<R: Rng + ?Sized>(
    z: ArrayView2<f64>,
    continuous: &[bool],
    classes: &[usize],
    n_classes: usize,
    cfg: &PropensityConfig,
    rng: &mut R,
) -> Result<PropensityModel> {
    if z.nrows() != classes.len() {
        return Err(Error::arg("propensity inputs and classes differ in length"));
    }
    if z.ncols() == 0 {
        return Ok(PropensityModel::Marginal(frequencies(classes, n_classes)?));
    }
    frequencies(classes, n_classes)?;
    let scaler = Standardizer::fit(z, continuous)?;
    let zs = scaler.transform(z)?;
    let mut mlp = Mlp::new(z.ncols(), cfg.hidden, n_classes, Head::Softmax, rng);
    let mut opt = AdamW::new(mlp.param_count(), cfg.weight_decay);
    let mut idx: Vec<usize> = (0..classes.len()).collect();
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.batch_size.max(1)) {
            let xb = zs.select(Axis(0), chunk);
            let (p, cache) = mlp.forward(xb.view())?;
            let mut g = p;
            let n = chunk.len() as f64;
            for (r, &i) in chunk.iter().enumerate() {
                g[[r, classes[i]]] -= 1.0;
            }
            g /= n;
            let grads = mlp.backward_logits(&cache, g.view())?;
            let mut params = mlp.params().to_vec();
            opt.step(&mut params, &grads, cfg.learning_rate)?;
            mlp.set_params(params)?;
        }
    }
    Ok(PropensityModel::Network { mlp, scaler })
}

/// Frequency table over exact `z` patterns with additive smoothing `alpha`.
pub fn fit_propensity_table(z: ArrayView2<f64>, classes: &[usize], n_classes: usize, alpha: f64) -> Result<PropensityModel> {
    if z.nrows() != classes.len() {
        return Err(Error::arg("propensity inputs and classes differ in length"));
    }
    let fallback = frequencies(classes, n_classes)?;
    let mut counts: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
    for (row, &c) in z.rows().into_iter().zip(classes) {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        counts.entry(key).or_insert_with(|| vec![0.0; n_classes])[c] += 1.0;
    }
    let cells = counts
        .into_iter()
        .map(|(k, c)| {
            let total: f64 = c.iter().sum::<f64>() + alpha * n_classes as f64;
            (k, c.into_iter().map(|x| (x + alpha) / total).collect())
        })
        .collect();
    Ok(PropensityModel::Table { cells, fallback })
}

impl PropensityModel {
    /// Class probabilities, one row per row of `z`.
    pub fn predict(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self {
            PropensityModel::Marginal(f) => Ok(Array2::from_shape_fn((z.nrows(), f.len()), |(_, j)| f[j])),
            PropensityModel::Network { mlp, scaler } => mlp.predict(scaler.transform(z)?.view()),
            PropensityModel::Table { cells, fallback } => {
                let mut out = Array2::zeros((z.nrows(), fallback.len()));
                for (mut o, row) in out.rows_mut().into_iter().zip(z.rows()) {
                    let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
                    let p = cells.get(&key).unwrap_or(fallback);
                    for (a, &b) in o.iter_mut().zip(p) {
                        *a = b;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Probability of each row's own class.
    pub fn own_class(&self, z: ArrayView2<f64>, classes: &[usize]) -> Result<Vec<f64>> {
        let p = self.predict(z)?;
        if p.nrows() != classes.len() {
            return Err(Error::arg("propensity inputs and classes differ in length"));
        }
        Ok(classes.iter().enumerate().map(|(i, &c)| p[[i, c]]).collect())
    }
}
