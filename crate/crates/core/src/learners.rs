//! Base classifiers: closed-form ridge regression classifiers (full space,
//! weighted, and in a random subspace) and decision stumps.
//!
//! All ridge systems are `(AᵀWA + λI) b = AᵀWy` with `+λ` on the diagonal.
//! Weights are used as given; λ is never rescaled by their sum.

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::linalg::{self, DenseMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("ridge system could not be solved ({0}); try a larger lambda")]
    Solver(#[source] LinalgError),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("{weights} weights for {instances} instances")]
    WeightCount { weights: usize, instances: usize },
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("all instance weights are zero")]
    ZeroWeights,
    #[error("projection has shape {rows}x{cols}, data has {d} features")]
    ProjectionShape { rows: usize, cols: usize, d: usize },
    #[error("no subspace fits to recover from")]
    NoFits,
    #[error("subspace fit {index} has shape {found:?}, expected {expected:?}")]
    MismatchedFits {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("input has {found} features, model expects {expected}")]
    FeatureCount { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, LearnerError>;

impl From<LinalgError> for LearnerError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotPositiveDefinite { .. } => LearnerError::Solver(e),
            other => LearnerError::Linalg(other),
        }
    }
}

/// Sign rule shared by every classifier: strictly positive scores are `+1`,
/// everything else (including an exact zero) is `-1`.
#[inline]
pub fn sign_label(score: f64) -> f64 {
    if score > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A linear classifier `h(x) = sign(xᵀβ)` in the original feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub beta: Vec<f64>,
    pub lambda: f64,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(linalg::dot(x, &self.beta))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.score(x).map(sign_label)
    }

    /// Labels for every row of `x`.
    pub fn predict_rows(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        self.check_dim(x.cols())?;
        Ok(x.row_iter()
            .map(|r| sign_label(linalg::dot(r, &self.beta)))
            .collect())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.beta.len() {
            return Err(LearnerError::FeatureCount {
                expected: self.beta.len(),
                found,
            });
        }
        Ok(())
    }
}

/// A ridge solution in an `m`-dimensional random subspace together with the
/// `d x m` projection that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFit {
    pub coefficients: Vec<f64>,
    pub projection: DenseMatrix,
    pub lambda: f64,
}

impl SubspaceFit {
    /// The subspace classifier mapped back to feature space, `R b`.
    pub fn recovered(&self) -> Vec<f64> {
        self.projection
            .matvec(&self.coefficients)
            .expect("projection columns match coefficients")
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(LearnerError::InvalidLambda(lambda))
    }
}

fn check_weights(ds: &Dataset, w: &[f64]) -> Result<()> {
    if w.len() != ds.len() {
        return Err(LearnerError::WeightCount {
            weights: w.len(),
            instances: ds.len(),
        });
    }
    if let Some(index) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(LearnerError::InvalidWeight {
            index,
            value: w[index],
        });
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(LearnerError::ZeroWeights);
    }
    Ok(())
}

/// Solves `(AᵀWA + λI) b = AᵀWy`.
fn solve_weighted_ridge(a: &DenseMatrix, w: &[f64], y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mut gram = linalg::gram_weighted(a, w)?;
    linalg::add_ridge_in_place(&mut gram, lambda)?;
    let rhs = linalg::tr_matvec_weighted(a, w, y)?;
    Ok(linalg::solve_spd_owned(gram, &rhs)?)
}

/// Full-space ridge regression classifier: `(XᵀX + λI) β = Xᵀy`.
pub fn ridge_fit(ds: &Dataset, lambda: f64) -> Result<LinearClassifier> {
    check_lambda(lambda)?;
    ds.check_two_classes()?;
    let ones = vec![1.0; ds.len()];
    let beta = solve_weighted_ridge(ds.features(), &ones, ds.labels(), lambda)?;
    Ok(LinearClassifier { beta, lambda })
}

/// Instance-weighted ridge in the original space: `(XᵀWX + λI) β = XᵀWy`.
pub fn weighted_ridge_fit(ds: &Dataset, w: &[f64], lambda: f64) -> Result<LinearClassifier> {
    check_lambda(lambda)?;
    check_weights(ds, w)?;
    ds.check_two_classes()?;
    let beta = solve_weighted_ridge(ds.features(), w, ds.labels(), lambda)?;
    Ok(LinearClassifier { beta, lambda })
}

/// Instance-weighted ridge on the projected data `Z = XR`:
/// `(ZᵀWZ + λI) b = ZᵀWy`.
pub fn weighted_subspace_fit(
    ds: &Dataset,
    w: &[f64],
    lambda: f64,
    projection: DenseMatrix,
) -> Result<SubspaceFit> {
    check_lambda(lambda)?;
    check_weights(ds, w)?;
    ds.check_two_classes()?;
    let (rows, cols) = projection.shape();
    if rows != ds.feature_count() || cols == 0 {
        return Err(LearnerError::ProjectionShape {
            rows,
            cols,
            d: ds.feature_count(),
        });
    }
    let z = linalg::matmul(ds.features(), &projection)?;
    let coefficients = solve_weighted_ridge(&z, w, ds.labels(), lambda)?;
    Ok(SubspaceFit {
        coefficients,
        projection,
        lambda,
    })
}

/// Averages subspace classifiers after mapping each back to feature space:
/// `β = (1/P) Σₚ Rₚ bₚ`.
pub fn recover(fits: &[SubspaceFit]) -> Result<LinearClassifier> {
    let first = fits.first().ok_or(LearnerError::NoFits)?;
    let expected = first.projection.shape();
    let mut beta = vec![0.0; expected.0];
    for (index, fit) in fits.iter().enumerate() {
        let found = fit.projection.shape();
        if found != expected || fit.coefficients.len() != expected.1 {
            return Err(LearnerError::MismatchedFits {
                index,
                expected,
                found,
            });
        }
        linalg::axpy(1.0, &fit.recovered(), &mut beta);
    }
    let p = fits.len() as f64;
    beta.iter_mut().for_each(|b| *b /= p);
    Ok(LinearClassifier {
        beta,
        lambda: first.lambda,
    })
}

/// One-feature threshold classifier: `polarity` if `x[feature] > threshold`,
/// otherwise `-polarity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let v = x.get(self.feature).ok_or(LearnerError::FeatureCount {
            expected: self.feature + 1,
            found: x.len(),
        })?;
        Ok(self.predict_value(*v))
    }

    #[inline]
    pub fn predict_value(&self, v: f64) -> f64 {
        if v > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }

    pub fn predict_rows(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if self.feature >= x.cols() {
            return Err(LearnerError::FeatureCount {
                expected: self.feature + 1,
                found: x.cols(),
            });
        }
        Ok(x.row_iter()
            .map(|r| self.predict_value(r[self.feature]))
            .collect())
    }
}

/// Per-feature sort orders, computed once and reused for every set of weights.
#[derive(Debug, Clone)]
pub struct StumpFitter<'a> {
    ds: &'a Dataset,
    order: Vec<Vec<usize>>,
}

impl<'a> StumpFitter<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        let x = ds.features();
        let order = (0..x.cols())
            .map(|j| {
                let mut idx: Vec<usize> = (0..x.rows()).collect();
                idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
                idx
            })
            .collect();
        Self { ds, order }
    }

    /// The stump minimizing weighted 0/1 error, and that error.
    ///
    /// Candidates are every feature with thresholds at `-inf`, `+inf` and the
    /// midpoints between consecutive distinct values, each with both
    /// polarities. Ties keep the first candidate in (feature, threshold,
    /// polarity +1 before -1) order.
    pub fn fit(&self, w: &[f64]) -> Result<(Stump, f64)> {
        check_weights(self.ds, w)?;
        self.ds.check_two_classes()?;
        let x = self.ds.features();
        let y = self.ds.labels();
        let total: f64 = w.iter().sum();
        let neg_mass: f64 = w
            .iter()
            .zip(y)
            .filter(|(_, &yi)| yi < 0.0)
            .map(|(wi, _)| wi)
            .sum();

        let mut best = (
            Stump {
                feature: 0,
                threshold: f64::NEG_INFINITY,
                polarity: 1.0,
            },
            f64::INFINITY,
        );
        let mut consider = |feature: usize, threshold: f64, err_pos: f64| {
            let err_neg = total - err_pos;
            if err_pos < best.1 {
                best = (
                    Stump {
                        feature,
                        threshold,
                        polarity: 1.0,
                    },
                    err_pos,
                );
            }
            if err_neg < best.1 {
                best = (
                    Stump {
                        feature,
                        threshold,
                        polarity: -1.0,
                    },
                    err_neg,
                );
            }
        };

        for (j, order) in self.order.iter().enumerate() {
            // polarity +1 error with threshold -inf: every negative is wrong
            let mut err = neg_mass;
            consider(j, f64::NEG_INFINITY, err);
            let mut k = 0;
            while k < order.len() {
                let v = x.get(order[k], j);
                while k < order.len() && x.get(order[k], j) == v {
                    let i = order[k];
                    err += y[i] * w[i];
                    k += 1;
                }
                let threshold = match order.get(k) {
                    Some(&next) => midpoint(v, x.get(next, j)),
                    None => f64::INFINITY,
                };
                consider(j, threshold, err);
            }
        }
        let (stump, err) = best;
        Ok((stump, err.clamp(0.0, total)))
    }
}

/// A threshold `t` with `a <= t < b`, so `x > t` holds exactly for `x >= b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= a && t < b {
        t
    } else {
        a
    }
}

/// Decision stump minimizing weighted 0/1 error.
pub fn stump_fit(ds: &Dataset, w: &[f64]) -> Result<Stump> {
    StumpFitter::new(ds).fit(w).map(|(s, _)| s)
}
