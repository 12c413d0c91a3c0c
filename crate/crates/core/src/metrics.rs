//! Accuracy and interventional unfairness against the true model.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::median_heuristic;
use crate::scm::{sample_with_noise, Intervention, Scm};

/// Anything mapping raw feature rows to scalar predictions.
pub trait Predictor {
    fn predict(&self, features: ArrayView2<f64>) -> Result<Array1<f64>>;
}

impl<F> Predictor for F
where
    F: Fn(ArrayView2<f64>) -> Result<Array1<f64>>,
{
    fn predict(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        self(features)
    }
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(Error::arg("rmse needs equally long nonempty vectors"));
    }
    let mse = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / targets.len() as f64;
    Ok(mse.sqrt())
}

fn mean_kernel(x: &[f64], y: &[f64], inv: f64) -> f64 {
    let mut s = 0.0;
    for &a in x {
        for &b in y {
            let d = a - b;
            s += (-d * d * inv).exp();
        }
    }
    s / (x.len() * y.len()) as f64
}

/// Biased squared MMD between scalar samples under a Gaussian kernel.
pub fn mmd2_biased(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.is_empty() || y.is_empty() || !(gamma > 0.0) {
        return Err(Error::arg("mmd needs nonempty samples and a positive bandwidth"));
    }
    let inv = 1.0 / (2.0 * gamma * gamma);
    Ok((mean_kernel(x, x, inv) + mean_kernel(y, y, inv) - 2.0 * mean_kernel(x, y, inv)).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMmd {
    pub a: u32,
    pub a2: u32,
    pub x: u32,
    pub mmd2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unfairness {
    /// Mean squared MMD over unordered pairs of sensitive values and over
    /// admissible values.
    pub value: f64,
    pub pairs: Vec<PairMmd>,
    pub bandwidths: Vec<f64>,
}

const MEDIAN_SUBSAMPLE: usize = 2000;

/// Interventional unfairness of `model`: for every admissible value `x`,
/// one shared noise draw of `n_eval` rows is pushed through `do(A = a,
/// X^ad = x)` for every sensitive value `a`, and the prediction samples are
/// compared pairwise by squared MMD with a median-heuristic bandwidth on
/// their pooled values.
pub fn unfairness<P: Predictor + ?Sized, R: Rng + ?Sized>(model: &P, scm: &Scm, n_eval: usize, rng: &mut R) -> Result<Unfairness> {
    if n_eval < 2 {
        return Err(Error::arg("n_eval must be at least two"));
    }
    let a_vars = scm.sensitive_vars();
    let x_vars = scm.admissible_vars();
    let n_a = 1u32 << a_vars.len();
    let n_x = 1u32 << x_vars.len();
    let mut pairs = Vec::new();
    let mut bandwidths = Vec::new();
    for x in 0..n_x {
        let noise = scm.draw_noise(n_eval, rng);
        let mut samples = Vec::with_capacity(n_a as usize);
        for a in 0..n_a {
            let iv = Intervention::binary(a_vars, a).and(&Intervention::binary(x_vars, x));
            let data = sample_with_noise(scm, &noise, Some(&iv))?;
            let p = model.predict(data.x.view())?;
            if p.len() != n_eval || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("predictions under intervention".into()));
            }
            samples.push(p.to_vec());
        }
        let pooled: Vec<f64> = samples.iter().flatten().copied().collect();
        let stride = pooled.len().div_ceil(MEDIAN_SUBSAMPLE);
        let sub: Vec<f64> = pooled.iter().step_by(stride).copied().collect();
        let gamma = median_heuristic(Array2::from_shape_vec((sub.len(), 1), sub).expect("shape").view())?;
        bandwidths.push(gamma);
        let inv = 1.0 / (2.0 * gamma * gamma);
        let selfk: Vec<f64> = samples.iter().map(|s| mean_kernel(s, s, inv)).collect();
        for a in 0..n_a as usize {
            for b in a + 1..n_a as usize {
                let cross = mean_kernel(&samples[a], &samples[b], inv);
                pairs.push(PairMmd {
                    a: a as u32,
                    a2: b as u32,
                    x,
                    mmd2: (selfk[a] + selfk[b] - 2.0 * cross).max(0.0),
                });
            }
        }
    }
    let value = pairs.iter().map(|p| p.mmd2).sum::<f64>() / pairs.len() as f64;
    Ok(Unfairness {
        value,
        pairs,
        bandwidths,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    /// Squared MMD, averaged over pairs.
    pub unfairness: f64,
    pub pairs: Vec<PairMmd>,
    pub n_test: usize,
    pub n_eval: usize,
    pub seed: u64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "seed,rmse,unfairness_mmd2,n_test,n_eval";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.seed, self.rmse, self.unfairness, self.n_test, self.n_eval)
    }

    /// Appends one summary row, writing the header first for a new file.
    pub fn append_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let fresh = !path.exists();
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{}", Self::CSV_HEADER)?;
        }
        writeln!(f, "{}", self.csv_row())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{ClusterPartition, NodeKind, Role, VariableDag};
    use crate::scm::{Equation, ScmKind};
    use crate::set::NodeSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // A (binary) -> X -> Y, W -> Y with W independent of A.
    fn toy() -> Scm {
        let dag = VariableDag::new(
            vec![NodeKind::Binary, NodeKind::Continuous, NodeKind::Continuous, NodeKind::Continuous],
            &[(0, 1), (1, 3), (2, 3)],
        )
        .unwrap();
        let part = ClusterPartition::new(
            4,
            (0..4).map(NodeSet::singleton).collect(),
            vec![Role::Sensitive, Role::Plain, Role::Plain, Role::Target],
        )
        .unwrap();
        let eqs = vec![
            Equation { parents: vec![], weights: vec![], xi: None },
            Equation { parents: vec![0], weights: vec![2.0], xi: None },
            Equation { parents: vec![], weights: vec![], xi: None },
            Equation { parents: vec![1, 2], weights: vec![1.0, 1.0], xi: None },
        ];
        Scm::from_parts(dag, part, ScmKind::Linear, eqs).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.5, 1.5], &[1.0, -1.0]).unwrap() - 2.5).abs() < 1e-12);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - (12.5f64).sqrt()).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_predictor_is_fair() {
        let scm = toy();
        let f = |x: ArrayView2<f64>| Ok(Array1::from_elem(x.nrows(), 0.7));
        let u = unfairness(&f, &scm, 200, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(u.value, 0.0);
    }

    #[test]
    fn sensitive_copy_is_unfair() {
        let scm = toy();
        let f = |x: ArrayView2<f64>| Ok(x.column(0).to_owned());
        let u = unfairness(&f, &scm, 2000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        // point masses at 0 and 1 with bandwidth 1: 2 - 2 exp(-1/2)
        assert!((u.value - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-9, "{}", u.value);
        assert!(u.value > 0.1);
    }

    #[test]
    fn non_descendant_predictor_is_fair() {
        let scm = toy();
        let f = |x: ArrayView2<f64>| Ok(x.column(2).mapv(|v| 3.0 * v));
        let u = unfairness(&f, &scm, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(u.value < 1e-12);
    }

    #[test]
    fn mmd_is_symmetric_and_nonnegative() {
        let x = [0.1, 0.5, -0.3];
        let y = [1.0, 0.2];
        let a = mmd2_biased(&x, &y, 0.8).unwrap();
        let b = mmd2_biased(&y, &x, 0.8).unwrap();
        assert!((a - b).abs() < 1e-15 && a >= 0.0);
        assert!(mmd2_biased(&x, &x, 0.8).unwrap().abs() < 1e-15);
    }
}
