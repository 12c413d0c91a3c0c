use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ipw::group_weights;
use super::kernel::{mellowmax, mellowmax_weights, RffMap};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub mellowmax_omega: f64,
    pub clip_quantile: f64,
    pub d_rff: usize,
    pub bandwidths: Vec<f64>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            lambda: 0.0,
            mellowmax_omega: 10.0,
            clip_quantile: 1.0,
            d_rff: 128,
            bandwidths: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.mellowmax_omega > 0.0) {
            return Err(Error::arg("lambda must be nonnegative and omega positive"));
        }
        if !(self.clip_quantile > 0.0 && self.clip_quantile <= 1.0) {
            return Err(Error::arg("clip quantile must lie in (0, 1]"));
        }
        if self.d_rff == 0 || self.bandwidths.is_empty() {
            return Err(Error::arg("need at least one random feature and bandwidth"));
        }
        Ok(())
    }
}

/// One minibatch as seen by the penalty: the group class of every row and,
/// per adjustment candidate, the propensity of the row's own class.
#[derive(Clone, Debug)]
pub struct PenaltyBatch<'a> {
    pub classes: &'a [usize],
    pub n_a: usize,
    pub n_x: usize,
    pub own_propensity: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct PenaltyValue {
    pub value: f64,
    pub per_candidate: Vec<f64>,
    pub softmax: Vec<f64>,
    /// Derivative of `value` with respect to each prediction.
    pub grad: Array2<f64>,
    /// Groups absent from the batch, summed over candidates.
    pub skipped_groups: usize,
    pub floored: usize,
    /// Multiply-adds spent on embeddings and their gradients.
    pub madds: u64,
}

/// Worst case over candidates (through mellowmax) of
/// `sum_x sum_a |mu_{a,x} - mean_a mu_{a,x}|^2` with IPW-weighted RFF
/// embeddings. The bandwidth of `map` is treated as a constant.
pub fn penalty(preds: ArrayView2<f64>, batch: &PenaltyBatch, map: &RffMap, cfg: &PenaltyConfig) -> Result<PenaltyValue> {
    let n = preds.nrows();
    if batch.classes.len() != n {
        return Err(Error::arg("class vector does not match the batch"));
    }
    if batch.own_propensity.is_empty() {
        return Err(Error::Identification("no completed adjustment candidate".into()));
    }
    if batch.own_propensity.iter().any(|p| p.len() != n) {
        return Err(Error::arg("propensity vector does not match the batch"));
    }
    let n_classes = batch.n_a * batch.n_x;
    if batch.classes.iter().any(|&k| k >= n_classes) {
        return Err(Error::arg("class id out of range"));
    }
    let (phi, dphi, freqs) = map.project(preds)?;
    let width = phi.ncols();
    let dim = preds.ncols();
    let phi = phi.as_slice().expect("standard layout");
    let dphi = dphi.as_slice().expect("standard layout");
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &k) in batch.classes.iter().enumerate() {
        rows_of[k].push(i);
    }
    let mut madds = 0u64;
    let mut skipped = 0;
    let mut floored = 0;
    let m = batch.own_propensity.len();
    let mut inner = Vec::with_capacity(m);
    // per candidate: row weight (normalized within its group) and group id
    let mut row_w = vec![vec![0.0; n]; m];
    // per candidate and class: mu - barycenter
    let mut diffs: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; n_classes]; m];
    for (c, prop) in batch.own_propensity.iter().enumerate() {
        let mut value = 0.0;
        for x in 0..batch.n_x {
            let mut present: Vec<(usize, Vec<f64>)> = Vec::new();
            for a in 0..batch.n_a {
                let k = x * batch.n_a + a;
                let rows = &rows_of[k];
                if rows.is_empty() {
                    skipped += 1;
                    log::debug!("group (a={a}, x={x}) empty in batch; skipped");
                    continue;
                }
                let cls = vec![k; rows.len()];
                let p: Vec<f64> = rows.iter().map(|&i| prop[i]).collect();
                let w = group_weights(&cls, k, &p, cfg.clip_quantile)?;
                floored += w.floored;
                let total: f64 = w.weights.iter().sum();
                let mut mu = vec![0.0; width];
                for (&i, &wi) in rows.iter().zip(&w.weights) {
                    let wn = wi / total;
                    row_w[c][i] = wn;
                    for (u, &f) in mu.iter_mut().zip(&phi[i * width..(i + 1) * width]) {
                        *u += wn * f;
                    }
                }
                madds += (rows.len() * width) as u64;
                present.push((k, mu));
            }
            if present.is_empty() {
                continue;
            }
            let mut bar = vec![0.0; width];
            for (_, mu) in &present {
                for (b, &u) in bar.iter_mut().zip(mu) {
                    *b += u;
                }
            }
            let inv = 1.0 / present.len() as f64;
            for (k, mut mu) in present {
                for (u, &b) in mu.iter_mut().zip(&bar) {
                    *u -= b * inv;
                    value += *u * *u;
                }
                madds += (rows_of[k].len() * width) as u64;
                diffs[c][k] = Some(mu);
            }
        }
        inner.push(value);
    }
    let value = mellowmax(&inner, cfg.mellowmax_omega)?;
    let softmax = mellowmax_weights(&inner, cfg.mellowmax_omega);
    let mut grad = Array2::<f64>::zeros((n, dim));
    let mut acc = vec![0.0; width];
    for i in 0..n {
        let k = batch.classes[i];
        acc.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..m {
            if let Some(diff) = &diffs[c][k] {
                let s = 2.0 * softmax[c] * row_w[c][i];
                for (v, &d) in acc.iter_mut().zip(diff) {
                    *v += s * d;
                }
            }
        }
        for (v, &dp) in acc.iter_mut().zip(&dphi[i * width..(i + 1) * width]) {
            *v *= dp;
        }
        for d in 0..dim {
            grad[[i, d]] = acc.iter().zip(freqs.column(d)).map(|(v, f)| v * f).sum();
        }
    }
    Ok(PenaltyValue {
        value,
        per_candidate: inner,
        softmax,
        grad,
        skipped_groups: skipped,
        floored,
        madds,
    })
}
