use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};

/// Smallest propensity used before inversion.
pub const PROPENSITY_FLOOR: f64 = 1e-6;

/// Rows grouped by the joint value of the sensitive and admissible
/// clusters. Both are binary, so a cluster of `k` variables has `2^k`
/// values; class ids are `x * n_a + a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupIndex {
    n_a: usize,
    n_x: usize,
    classes: Vec<usize>,
}

impl GroupIndex {
    /// `a_codes[i]` and `x_codes[i]` are the joint binary codes of row `i`.
    /// Without an admissible cluster pass `x_bits = 0` and all-zero codes.
    pub fn new(a_codes: &[u32], a_bits: usize, x_codes: &[u32], x_bits: usize) -> Result<Self> {
        if a_codes.len() != x_codes.len() {
            return Err(Error::arg("code vectors differ in length"));
        }
        if a_bits == 0 || a_bits + x_bits > 16 {
            return Err(Error::arg("sensitive cluster needs between 1 and 16 bits in total"));
        }
        let (n_a, n_x) = (1usize << a_bits, 1usize << x_bits);
        let mut classes = Vec::with_capacity(a_codes.len());
        for (&a, &x) in a_codes.iter().zip(x_codes) {
            if a as usize >= n_a || x as usize >= n_x {
                return Err(Error::arg(format!("code ({a},{x}) out of range")));
            }
            classes.push(x as usize * n_a + a as usize);
        }
        Ok(GroupIndex { n_a, n_x, classes })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_classes(&self) -> usize {
        self.n_a * self.n_x
    }

    pub fn class_of(a: usize, x: usize, n_a: usize) -> usize {
        x * n_a + a
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &k in &self.classes {
            c[k] += 1;
        }
        c
    }

    /// Classes without any row.
    pub fn empty_groups(&self) -> Vec<usize> {
        self.counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn select(&self, idx: &[usize]) -> GroupIndex {
        GroupIndex {
            n_a: self.n_a,
            n_x: self.n_x,
            classes: idx.iter().map(|&i| self.classes[i]).collect(),
        }
    }
}

/// Weights for one group with the number of floored propensities.
#[derive(Clone, Debug)]
pub struct IpwWeights {
    pub weights: Vec<f64>,
    pub floored: usize,
}

/// `1{class_i = group} / pi_group(z_i)`, clipped at the `clip_quantile`
/// quantile of the nonzero weights when below one, then scaled so that the
/// nonzero weights average one.
pub fn ipw_weights(classes: &[usize], group: usize, probs: ArrayView2<f64>, clip_quantile: f64) -> Result<IpwWeights> {
    if probs.nrows() != classes.len() || group >= probs.ncols() {
        return Err(Error::arg("propensity matrix does not match the rows or group"));
    }
    let own: Vec<f64> = classes.iter().enumerate().map(|(i, _)| probs[[i, group]]).collect();
    group_weights(classes, group, &own, clip_quantile)
}

/// [`ipw_weights`] from the propensity of `group` per row.
pub fn group_weights(classes: &[usize], group: usize, prob: &[f64], clip_quantile: f64) -> Result<IpwWeights> {
    if !(clip_quantile > 0.0 && clip_quantile <= 1.0) {
        return Err(Error::arg("clip quantile must lie in (0, 1]"));
    }
    let mut floored = 0;
    let mut weights: Vec<f64> = classes
        .iter()
        .zip(prob)
        .map(|(&k, &p)| {
            if k != group {
                return 0.0;
            }
            if !(p >= PROPENSITY_FLOOR) {
                floored += 1;
                1.0 / PROPENSITY_FLOOR
            } else {
                1.0 / p
            }
        })
        .collect();
    let mut nonzero: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::EmptyGroup(format!("group {group} has no rows")));
    }
    if clip_quantile < 1.0 {
        nonzero.sort_by(f64::total_cmp);
        let cap = quantile_sorted(&nonzero, clip_quantile);
        for w in weights.iter_mut() {
            *w = w.min(cap);
        }
    }
    let mean = weights.iter().filter(|&&w| w > 0.0).sum::<f64>() / nonzero.len() as f64;
    for w in weights.iter_mut() {
        *w /= mean;
    }
    Ok(IpwWeights { weights, floored })
}

/// Linear-interpolation quantile of ascending data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Weighted mean of feature rows, `sum_i w_i phi_i / sum_i w_i`. With
/// weights averaging one over the rows this is `(1/n) sum_i w_i phi_i`.
pub fn weighted_embedding(features: ArrayView2<f64>, weights: &[f64]) -> Result<Array1<f64>> {
    if features.nrows() != weights.len() {
        return Err(Error::arg("feature rows and weights differ in length"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyGroup("all weights are zero".into()));
    }
    let mut mu = Array1::zeros(features.ncols());
    for (row, &w) in features.rows().into_iter().zip(weights) {
        if w != 0.0 {
            mu.scaled_add(w / total, &row);
        }
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};

    #[test]
    fn constant_propensity_gives_unit_weights() {
        let classes = [0, 1, 0, 1, 1, 0];
        let probs = Array2::from_elem((6, 2), 0.5);
        let w = ipw_weights(&classes, 1, probs.view(), 1.0).unwrap().weights;
        assert_eq!(w, vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn clipping_and_floor() {
        let classes = [0, 0, 0, 0, 1];
        let prob = [0.5, 0.25, 0.1, 0.0, 0.3];
        let r = group_weights(&classes, 0, &prob, 1.0).unwrap();
        assert_eq!(r.floored, 1);
        let r = group_weights(&classes, 0, &[0.5, 0.25, 0.1, 0.05, 0.3], 0.5).unwrap();
        // raw 2, 4, 10, 20 capped at the median 7
        let raw = [2.0, 4.0, 7.0, 7.0];
        let mean = raw.iter().sum::<f64>() / 4.0;
        for (w, r) in r.weights.iter().zip(raw) {
            assert_relative_eq!(*w, r / mean, epsilon = 1e-12);
        }
        assert_eq!(r.weights[4], 0.0);
        assert!(group_weights(&classes, 2, &prob, 1.0).is_err());
    }

    #[test]
    fn embedding_cases() {
        let f = array![[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
        assert_eq!(weighted_embedding(f.view(), &[1.0, 1.0, 1.0]).unwrap(), array![1.0, 1.0]);
        assert_eq!(weighted_embedding(f.view(), &[0.0, 3.0, 0.0]).unwrap(), array![0.0, 1.0]);
        assert!(weighted_embedding(f.view(), &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn group_index_classes() {
        let g = GroupIndex::new(&[0, 3, 1], 2, &[1, 0, 0], 1).unwrap();
        assert_eq!(g.classes(), &[4, 3, 1]);
        assert_eq!(g.n_classes(), 8);
        assert_eq!(g.empty_groups(), vec![0, 2, 5, 6, 7]);
        assert!(GroupIndex::new(&[4], 2, &[0], 0).is_err());
    }
}
