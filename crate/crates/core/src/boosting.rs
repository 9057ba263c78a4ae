//! AdaBoost over ridge classifiers and stumps, and the averaging baseline.
//!
//! Four training routines share one boosting loop:
//!
//! - [`train_rpboost`]: each round averages `P` ridge fits, each in its own
//!   `m`-dimensional Gaussian random subspace, mapped back to feature space.
//! - [`train_rrcboost`]: each round fits one weighted ridge in feature space.
//! - [`train_stumpboost`]: each round fits one decision stump.
//! - [`train_rprrc`]: no boosting; averages `L = rounds` unweighted subspace fits.
//!
//! Instance weights start at `1/N` and are renormalized to sum to one after
//! every update. The weighted error is clamped to `[clamp, 1 - clamp]` before
//! computing `α = ½ ln((1 - ε) / ε)`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;
use crate::learners::{
    self, sign_label, LearnerError, LinearClassifier, Stump, StumpFitter, SubspaceFit,
};
use crate::linalg::{self, DenseMatrix};
use crate::randomness::{RandomError, SeededRng};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("round {round}{}: {source}", projection.map(|p| format!(", projection {p}")).unwrap_or_default())]
    Fit {
        round: usize,
        projection: Option<usize>,
        #[source]
        source: LearnerError,
    },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Random(#[from] RandomError),
    #[error("instance weights sum to {0}, expected 1")]
    UnnormalizedWeights(f64),
    #[error("{weights} weights for {instances} instances")]
    WeightCount { weights: usize, instances: usize },
    #[error("identity projections need m == d, got m={m}, d={d}")]
    IdentityShape { d: usize, m: usize },
}

pub type Result<T> = std::result::Result<T, BoostError>;

/// The training strategies compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum Method {
    Rrc,
    RrcBoost,
    RpBoost,
    RpRrc,
    StumpBoost,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Rrc,
        Method::RrcBoost,
        Method::RpBoost,
        Method::RpRrc,
        Method::StumpBoost,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::Rrc => "rrc",
            Method::RrcBoost => "rrc-boost",
            Method::RpBoost => "rpboost",
            Method::RpRrc => "rprrc",
            Method::StumpBoost => "stump-boost",
        }
    }

    /// Column label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Rrc => "RRC",
            Method::RrcBoost => "RRC-Boost",
            Method::RpBoost => "rpBoost",
            Method::RpRrc => "rpRRC",
            Method::StumpBoost => "Stump",
        }
    }

    /// Whether training draws random projections.
    pub fn is_randomized(self) -> bool {
        matches!(self, Method::RpBoost | Method::RpRrc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.token().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method {0:?} (expected one of rrc, rrc-boost, rpboost, rprrc, stump-boost)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoostConfig {
    /// Boosting rounds `K` (also the number of averaged fits for rpRRC).
    pub rounds: usize,
    /// Subspace fits averaged per rpBoost round, `P`.
    pub projections: usize,
    /// Subspace dimension `m`.
    pub subspace_dim: usize,
    pub lambda: f64,
    pub epsilon_clamp: f64,
    pub seed: u64,
    /// Stop after a round whose weighted error is exactly zero.
    pub stop_on_perfect: bool,
    /// Stop after a round whose weighted error is at least one half.
    pub stop_on_weak: bool,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 300,
            projections: 3,
            subspace_dim: 3,
            lambda: 0.3,
            epsilon_clamp: 1e-10,
            seed: 42,
            stop_on_perfect: true,
            stop_on_weak: false,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BoostError::InvalidConfig(msg));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.projections == 0 {
            return bad("projections must be at least 1".into());
        }
        if self.subspace_dim == 0 {
            return bad("subspace dimension must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.epsilon_clamp > 0.0 && self.epsilon_clamp < 0.5) {
            return bad(format!(
                "epsilon clamp must lie in (0, 0.5), got {}",
                self.epsilon_clamp
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Linear(LinearClassifier),
    Stump(Stump),
}

impl Learner {
    pub fn predict(&self, x: &[f64]) -> std::result::Result<f64, LearnerError> {
        match self {
            Learner::Linear(c) => c.predict(x),
            Learner::Stump(s) => s.predict(x),
        }
    }

    pub fn predict_rows(&self, x: &DenseMatrix) -> std::result::Result<Vec<f64>, LearnerError> {
        match self {
            Learner::Linear(c) => c.predict_rows(x),
            Learner::Stump(s) => s.predict_rows(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub alpha: f64,
    pub learner: Learner,
}

/// An α-weighted vote of base classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub method: Method,
    pub config: BoostConfig,
    /// Feature count the members were trained on.
    pub feature_count: usize,
    pub members: Vec<Member>,
}

impl Ensemble {
    /// A single classifier with unit weight.
    pub fn single(method: Method, config: BoostConfig, learner: LinearClassifier) -> Self {
        Self {
            method,
            config,
            feature_count: learner.dim(),
            members: vec![Member {
                alpha: 1.0,
                learner: Learner::Linear(learner),
            }],
        }
    }

    fn check_dim(&self, found: usize) -> std::result::Result<(), LearnerError> {
        if found != self.feature_count {
            return Err(LearnerError::FeatureCount {
                expected: self.feature_count,
                found,
            });
        }
        Ok(())
    }

    /// `Σₖ αₖ hₖ(x)`.
    pub fn vote(&self, x: &[f64]) -> std::result::Result<f64, LearnerError> {
        self.check_dim(x.len())?;
        self.members
            .iter()
            .try_fold(0.0, |acc, m| Ok(acc + m.alpha * m.learner.predict(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> std::result::Result<f64, LearnerError> {
        self.vote(x).map(sign_label)
    }

    pub fn votes(&self, x: &DenseMatrix) -> std::result::Result<Vec<f64>, LearnerError> {
        self.check_dim(x.cols())?;
        let mut out = vec![0.0; x.rows()];
        for m in &self.members {
            let h = m.learner.predict_rows(x)?;
            linalg::axpy(m.alpha, &h, &mut out);
        }
        Ok(out)
    }

    pub fn predict_rows(&self, x: &DenseMatrix) -> std::result::Result<Vec<f64>, LearnerError> {
        Ok(self.votes(x)?.into_iter().map(sign_label).collect())
    }

    /// Fraction of rows of `ds` that are misclassified.
    pub fn error_rate(&self, ds: &Dataset) -> std::result::Result<f64, LearnerError> {
        let pred = self.predict_rows(ds.features())?;
        Ok(misclassification_rate(&pred, ds.labels()))
    }
}

pub fn misclassification_rate(pred: &[f64], labels: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = pred.iter().zip(labels).filter(|(p, y)| p != y).count();
    wrong as f64 / labels.len() as f64
}

/// Exponential loss `Σᵢ w0ᵢ exp(-yᵢ Σₖ αₖ hₖ(xᵢ))`.
pub fn exponential_loss(e: &Ensemble, ds: &Dataset, w0: &[f64]) -> Result<f64> {
    if w0.len() != ds.len() {
        return Err(BoostError::WeightCount {
            weights: w0.len(),
            instances: ds.len(),
        });
    }
    let votes = e.votes(ds.features())?;
    Ok(votes
        .iter()
        .zip(ds.labels())
        .zip(w0)
        .map(|((f, y), w)| w * (-y * f).exp())
        .sum())
}

/// One round of the boosting trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    /// Weighted misclassification error before clamping.
    pub epsilon: f64,
    pub alpha: f64,
    /// Whether `epsilon` fell outside `[clamp, 1 - clamp]`.
    pub clamped: bool,
    /// Exponential loss of the ensemble after this round, with weights `1/N`.
    pub loss: f64,
    /// Wall-clock seconds spent fitting this round's learner.
    pub fit_seconds: f64,
    /// Sum of the updated weights.
    pub weight_sum: f64,
    /// Updated weight mass on the instances this round's learner misclassified.
    pub misclassified_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoostTrace {
    pub rounds: Vec<RoundRecord>,
}

impl BoostTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,epsilon,alpha,clamped,loss,fit_seconds\n");
        for (k, r) in self.rounds.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k + 1,
                r.epsilon,
                r.alpha,
                r.clamped,
                r.loss,
                r.fit_seconds
            ));
        }
        out
    }
}

fn check_normalized(w: &[f64]) -> Result<()> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || w.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(BoostError::UnnormalizedWeights(sum));
    }
    Ok(())
}

fn weighted_error_of(pred: &[f64], labels: &[f64], w: &[f64]) -> f64 {
    pred.iter()
        .zip(labels)
        .zip(w)
        .filter(|((p, y), _)| p != y)
        .map(|(_, wi)| wi)
        .sum()
}

/// `ε = Σᵢ wᵢ 1(h(xᵢ) ≠ yᵢ)` for normalized weights.
pub fn weighted_error(h: &Learner, ds: &Dataset, w: &[f64]) -> Result<f64> {
    if w.len() != ds.len() {
        return Err(BoostError::WeightCount {
            weights: w.len(),
            instances: ds.len(),
        });
    }
    check_normalized(w)?;
    let pred = h.predict_rows(ds.features())?;
    Ok(weighted_error_of(&pred, ds.labels(), w).clamp(0.0, 1.0))
}

/// `½ ln((1 - ε′) / ε′)` with `ε′ = ε` clamped to `[clamp, 1 - clamp]`.
pub fn alpha_from_error(epsilon: f64, clamp: f64) -> f64 {
    let e = epsilon.max(clamp).min(1.0 - clamp);
    0.5 * ((1.0 - e) / e).ln()
}

fn reweight(w: &[f64], pred: &[f64], labels: &[f64], alpha: f64) -> Vec<f64> {
    let mut out: Vec<f64> = w
        .iter()
        .zip(pred)
        .zip(labels)
        .map(|((wi, h), y)| wi * (-y * alpha * h).exp())
        .collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// `wᵢ ← wᵢ exp(-yᵢ α h(xᵢ))`, renormalized to sum to one.
pub fn update_weights(w: &[f64], h: &Learner, alpha: f64, ds: &Dataset) -> Result<Vec<f64>> {
    if w.len() != ds.len() {
        return Err(BoostError::WeightCount {
            weights: w.len(),
            instances: ds.len(),
        });
    }
    check_normalized(w)?;
    let pred = h.predict_rows(ds.features())?;
    Ok(reweight(w, &pred, ds.labels(), alpha))
}

/// Supplies the `d x m` projection for subspace fit `index` of round `round`.
pub trait ProjectionSource {
    fn projection(&mut self, round: usize, index: usize, d: usize, m: usize)
        -> Result<DenseMatrix>;
}

/// `N(0, 1/d)` projections, each from its own stream `(seed, round, index)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianProjections {
    pub seed: u64,
}

impl ProjectionSource for GaussianProjections {
    fn projection(
        &mut self,
        round: usize,
        index: usize,
        d: usize,
        m: usize,
    ) -> Result<DenseMatrix> {
        let mut rng = SeededRng::derived(self.seed, &[round as u64, index as u64]);
        Ok(rng.projection_matrix(d, m)?)
    }
}

/// Identity projections (requires `m == d`); reduces subspace fits to
/// full-space fits. Used to check the reduction chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProjections;

impl ProjectionSource for IdentityProjections {
    fn projection(
        &mut self,
        _round: usize,
        _index: usize,
        d: usize,
        m: usize,
    ) -> Result<DenseMatrix> {
        if d != m {
            return Err(BoostError::IdentityShape { d, m });
        }
        Ok(DenseMatrix::identity(d))
    }
}

/// The shared AdaBoost loop. `fit_round(k, w)` returns round `k`'s learner.
fn boost<F>(
    ds: &Dataset,
    cfg: &BoostConfig,
    method: Method,
    mut fit_round: F,
) -> Result<(Ensemble, BoostTrace)>
where
    F: FnMut(usize, &[f64]) -> Result<Learner>,
{
    cfg.validate()?;
    ds.check_two_classes().map_err(LearnerError::from)?;
    let n = ds.len();
    let y = ds.labels();
    let x = ds.features();
    let mut w = vec![1.0 / n as f64; n];
    let mut margins = vec![0.0; n];
    let mut members = Vec::with_capacity(cfg.rounds);
    let mut trace = BoostTrace::default();

    for k in 0..cfg.rounds {
        let start = Instant::now();
        let learner = fit_round(k, &w)?;
        let fit_seconds = start.elapsed().as_secs_f64();

        let pred = learner.predict_rows(x)?;
        let epsilon = weighted_error_of(&pred, y, &w).clamp(0.0, 1.0);
        let alpha = alpha_from_error(epsilon, cfg.epsilon_clamp);
        let clamped = !(epsilon >= cfg.epsilon_clamp && epsilon <= 1.0 - cfg.epsilon_clamp);
        let next = reweight(&w, &pred, y, alpha);

        linalg::axpy(alpha, &pred, &mut margins);
        let loss = margins
            .iter()
            .zip(y)
            .map(|(f, yi)| (-yi * f).exp())
            .sum::<f64>()
            / n as f64;
        trace.rounds.push(RoundRecord {
            epsilon,
            alpha,
            clamped,
            loss,
            fit_seconds,
            weight_sum: next.iter().sum(),
            misclassified_mass: weighted_error_of(&pred, y, &next),
        });
        members.push(Member { alpha, learner });

        if (epsilon == 0.0 && cfg.stop_on_perfect) || (epsilon >= 0.5 && cfg.stop_on_weak) {
            break;
        }
        w = next;
    }

    let ensemble = Ensemble {
        method,
        config: *cfg,
        feature_count: ds.feature_count(),
        members,
    };
    Ok((ensemble, trace))
}

fn fit_context(round: usize, projection: Option<usize>) -> impl FnOnce(LearnerError) -> BoostError {
    move |source| BoostError::Fit {
        round,
        projection,
        source,
    }
}

/// Boosted subspace ridge classifiers with projections from `source`.
pub fn train_rpboost_with(
    ds: &Dataset,
    cfg: &BoostConfig,
    source: &mut dyn ProjectionSource,
) -> Result<(Ensemble, BoostTrace)> {
    let d = ds.feature_count();
    boost(ds, cfg, Method::RpBoost, |k, w| {
        let mut fits: Vec<SubspaceFit> = Vec::with_capacity(cfg.projections);
        for p in 0..cfg.projections {
            let r = source.projection(k, p, d, cfg.subspace_dim)?;
            let fit = learners::weighted_subspace_fit(ds, w, cfg.lambda, r)
                .map_err(fit_context(k, Some(p)))?;
            fits.push(fit);
        }
        let beta = learners::recover(&fits).map_err(fit_context(k, None))?;
        Ok(Learner::Linear(beta))
    })
}

/// Boosted subspace ridge classifiers with fresh Gaussian projections for
/// every (round, projection) pair, seeded from `rng`.
pub fn train_rpboost(
    ds: &Dataset,
    cfg: &BoostConfig,
    rng: &mut SeededRng,
) -> Result<(Ensemble, BoostTrace)> {
    let mut source = GaussianProjections {
        seed: rng.next_u64(),
    };
    train_rpboost_with(ds, cfg, &mut source)
}

/// Boosted weighted ridge classifiers fitted in the original feature space.
pub fn train_rrcboost(ds: &Dataset, cfg: &BoostConfig) -> Result<(Ensemble, BoostTrace)> {
    boost(ds, cfg, Method::RrcBoost, |k, w| {
        learners::weighted_ridge_fit(ds, w, cfg.lambda)
            .map(Learner::Linear)
            .map_err(fit_context(k, None))
    })
}

/// Boosted decision stumps.
pub fn train_stumpboost(ds: &Dataset, cfg: &BoostConfig) -> Result<(Ensemble, BoostTrace)> {
    let fitter = StumpFitter::new(ds);
    boost(ds, cfg, Method::StumpBoost, |k, w| {
        fitter
            .fit(w)
            .map(|(s, _)| Learner::Stump(s))
            .map_err(fit_context(k, None))
    })
}

/// Average of `L = cfg.rounds` subspace ridge fits with uniform `1/N` weights.
pub fn train_rprrc_with(
    ds: &Dataset,
    cfg: &BoostConfig,
    source: &mut dyn ProjectionSource,
) -> Result<LinearClassifier> {
    cfg.validate()?;
    let n = ds.len();
    let d = ds.feature_count();
    let w = vec![1.0 / n as f64; n];
    let mut beta = vec![0.0; d];
    for l in 0..cfg.rounds {
        let r = source.projection(l, 0, d, cfg.subspace_dim)?;
        let fit = learners::weighted_subspace_fit(ds, &w, cfg.lambda, r)
            .map_err(fit_context(l, Some(0)))?;
        linalg::axpy(1.0, &fit.recovered(), &mut beta);
    }
    let scale = cfg.rounds as f64;
    beta.iter_mut().for_each(|b| *b /= scale);
    Ok(LinearClassifier {
        beta,
        lambda: cfg.lambda,
    })
}

pub fn train_rprrc(
    ds: &Dataset,
    cfg: &BoostConfig,
    rng: &mut SeededRng,
) -> Result<LinearClassifier> {
    let mut source = GaussianProjections {
        seed: rng.next_u64(),
    };
    train_rprrc_with(ds, cfg, &mut source)
}

/// Trains `method` on `ds`; randomized methods draw from `SeededRng::new(cfg.seed)`.
///
/// Single-classifier methods (RRC, rpRRC) return a one-member ensemble with
/// `α = 1` and no trace.
pub fn train(
    method: Method,
    ds: &Dataset,
    cfg: &BoostConfig,
) -> Result<(Ensemble, Option<BoostTrace>)> {
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);
    match method {
        Method::Rrc => {
            let c = learners::ridge_fit(ds, cfg.lambda)?;
            Ok((Ensemble::single(method, *cfg, c), None))
        }
        Method::RpRrc => {
            let c = train_rprrc(ds, cfg, &mut rng)?;
            Ok((Ensemble::single(method, *cfg, c), None))
        }
        Method::RrcBoost => train_rrcboost(ds, cfg).map(|(e, t)| (e, Some(t))),
        Method::RpBoost => train_rpboost(ds, cfg, &mut rng).map(|(e, t)| (e, Some(t))),
        Method::StumpBoost => train_stumpboost(ds, cfg).map(|(e, t)| (e, Some(t))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_gaussian, SynthSpec};

    fn ds(rows: &[&[f64]], y: &[f64]) -> Dataset {
        Dataset::new(DenseMatrix::from_rows(rows), y.to_vec()).unwrap()
    }

    /// Predicts `label` everywhere.
    fn constant(label: f64) -> Learner {
        Learner::Stump(Stump {
            feature: 0,
            threshold: f64::NEG_INFINITY,
            polarity: label,
        })
    }

    #[test]
    fn method_tokens_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.token().parse::<Method>().unwrap(), m);
        }
        assert!("adaboost".parse::<Method>().is_err());
    }

    #[test]
    fn weighted_error_examples() {
        let d = ds(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[-1.0, -1.0, 1.0, 1.0]);
        let perfect = Learner::Stump(Stump {
            feature: 0,
            threshold: 2.5,
            polarity: 1.0,
        });
        assert_eq!(weighted_error(&perfect, &d, &[0.25; 4]).unwrap(), 0.0);
        assert_eq!(weighted_error(&constant(1.0), &d, &[0.25; 4]).unwrap(), 0.5);

        // misclassifies the first and the fourth instance
        let two_wrong = ds(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[1.0, -1.0, 1.0, -1.0]);
        let h = Learner::Stump(Stump {
            feature: 0,
            threshold: 2.5,
            polarity: 1.0,
        });
        let e = weighted_error(&h, &two_wrong, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!((e - 0.5).abs() < 1e-15);

        assert!(matches!(
            weighted_error(&h, &d, &[0.5; 4]),
            Err(BoostError::UnnormalizedWeights(_))
        ));
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_from_error(0.5, 1e-10), 0.0);
        assert!((alpha_from_error(0.1, 1e-10) - 0.5 * 9f64.ln()).abs() < 1e-15);
        assert!((alpha_from_error(0.1, 1e-10) - 1.098612).abs() < 1e-6);
        let a0 = alpha_from_error(0.0, 1e-10);
        assert!((a0 - 0.5 * ((1.0 - 1e-10) / 1e-10f64).ln()).abs() < 1e-12);
        assert!((a0 - 11.5129).abs() < 1e-4);
        assert!((alpha_from_error(1.0, 1e-10) + a0).abs() < 1e-6);
        assert!(alpha_from_error(0.3, 1e-10) > alpha_from_error(0.4, 1e-10));
    }

    #[test]
    fn update_weights_examples() {
        let d = ds(&[&[1.0], &[2.0]], &[1.0, -1.0]);
        let h = constant(1.0);
        assert_eq!(
            update_weights(&[0.5, 0.5], &h, 0.0, &d).unwrap(),
            vec![0.5, 0.5]
        );

        let w = update_weights(&[0.5, 0.5], &h, 0.5 * 9f64.ln(), &d).unwrap();
        assert!(
            (w[0] - 0.1).abs() < 1e-15 && (w[1] - 0.9).abs() < 1e-15,
            "{w:?}"
        );

        let perfect = Learner::Stump(Stump {
            feature: 0,
            threshold: 1.5,
            polarity: -1.0,
        });
        let d2 = ds(&[&[1.0], &[2.0]], &[1.0, -1.0]);
        let w = update_weights(&[0.5, 0.5], &perfect, 3.7, &d2).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn ensemble_vote_rules() {
        let plus = constant(1.0);
        let minus = constant(-1.0);
        let mk = |alphas: [f64; 2]| Ensemble {
            method: Method::StumpBoost,
            config: BoostConfig::default(),
            feature_count: 1,
            members: vec![
                Member {
                    alpha: alphas[0],
                    learner: plus.clone(),
                },
                Member {
                    alpha: alphas[1],
                    learner: minus.clone(),
                },
            ],
        };
        assert_eq!(mk([2.0, 1.0]).predict(&[0.0]).unwrap(), 1.0);
        assert_eq!(mk([1.0, 2.0]).predict(&[0.0]).unwrap(), -1.0);
        // zero-sum tie
        assert_eq!(mk([1.0, 1.0]).predict(&[0.0]).unwrap(), -1.0);
        assert!(mk([1.0, 1.0]).predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn exponential_loss_examples() {
        let d = ds(&[&[1.0], &[2.0]], &[-1.0, 1.0]);
        let perfect = Learner::Stump(Stump {
            feature: 0,
            threshold: 1.5,
            polarity: 1.0,
        });
        let mut e = Ensemble {
            method: Method::StumpBoost,
            config: BoostConfig::default(),
            feature_count: 1,
            members: vec![Member {
                alpha: 0.0,
                learner: perfect,
            }],
        };
        assert_eq!(exponential_loss(&e, &d, &[0.5, 0.5]).unwrap(), 1.0);
        e.members[0].alpha = 0.5 * 9f64.ln();
        let l = exponential_loss(&e, &d, &[0.5, 0.5]).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(BoostConfig::default().validate().is_ok());
        for cfg in [
            BoostConfig {
                rounds: 0,
                ..Default::default()
            },
            BoostConfig {
                projections: 0,
                ..Default::default()
            },
            BoostConfig {
                subspace_dim: 0,
                ..Default::default()
            },
            BoostConfig {
                lambda: 0.0,
                ..Default::default()
            },
            BoostConfig {
                epsilon_clamp: 0.5,
                ..Default::default()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(BoostError::InvalidConfig(_))));
        }
    }

    fn small_synth(seed: u64, d: usize, shift: f64) -> Dataset {
        let spec = SynthSpec {
            n_per_class: 15,
            d,
            informative: d.min(3),
            shift,
        };
        synth_gaussian(&mut SeededRng::new(seed), &spec).unwrap()
    }

    #[test]
    fn single_round_rrcboost_is_ridge_with_scaled_lambda() {
        let d = small_synth(1, 5, 1.0);
        let cfg = BoostConfig {
            rounds: 1,
            ..Default::default()
        };
        let (e, trace) = train_rrcboost(&d, &cfg).unwrap();
        assert_eq!(trace.len(), 1);
        // uniform weights 1/N with λ equal plain ridge with λ·N
        let plain = learners::ridge_fit(&d, cfg.lambda * d.len() as f64).unwrap();
        match &e.members[0].learner {
            Learner::Linear(c) => {
                for (a, b) in c.beta.iter().zip(&plain.beta) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
            _ => panic!("expected linear member"),
        }
    }

    #[test]
    fn identity_rpboost_single_round_matches_ridge() {
        let d = small_synth(2, 4, 1.0);
        let cfg = BoostConfig {
            rounds: 1,
            projections: 1,
            subspace_dim: 4,
            ..Default::default()
        };
        let (e, _) = train_rpboost_with(&d, &cfg, &mut IdentityProjections).unwrap();
        let plain = learners::ridge_fit(&d, cfg.lambda * d.len() as f64).unwrap();
        let Learner::Linear(c) = &e.members[0].learner else {
            panic!("expected linear member")
        };
        for (a, b) in c.beta.iter().zip(&plain.beta) {
            assert!((a - b).abs() < 1e-10);
        }
        let bad = BoostConfig {
            subspace_dim: 3,
            ..cfg
        };
        assert!(matches!(
            train_rpboost_with(&d, &bad, &mut IdentityProjections),
            Err(BoostError::IdentityShape { d: 4, m: 3 })
        ));
    }

    #[test]
    fn identity_rprrc_single_fit_matches_ridge() {
        let d = small_synth(3, 4, 1.0);
        let cfg = BoostConfig {
            rounds: 1,
            subspace_dim: 4,
            ..Default::default()
        };
        let c = train_rprrc_with(&d, &cfg, &mut IdentityProjections).unwrap();
        let plain = learners::ridge_fit(&d, cfg.lambda * d.len() as f64).unwrap();
        for (a, b) in c.beta.iter().zip(&plain.beta) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rpboost_is_deterministic() {
        let d = small_synth(4, 40, 1.0);
        let cfg = BoostConfig {
            rounds: 20,
            ..Default::default()
        };
        let (e1, t1) = train_rpboost(&d, &cfg, &mut SeededRng::new(9)).unwrap();
        let (e2, t2) = train_rpboost(&d, &cfg, &mut SeededRng::new(9)).unwrap();
        assert_eq!(e1, e2);
        let strip = |t: &BoostTrace| {
            t.rounds
                .iter()
                .map(|r| (r.epsilon, r.alpha, r.loss))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&t1), strip(&t2));
        assert!(t1.len() <= 20 && !t1.is_empty());
    }

    #[test]
    fn stumpboost_stops_on_perfect_round() {
        let d = ds(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[-1.0, -1.0, 1.0, 1.0]);
        let cfg = BoostConfig {
            rounds: 10,
            ..Default::default()
        };
        let (e, t) = train_stumpboost(&d, &cfg).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.rounds[0].epsilon, 0.0);
        assert!(t.rounds[0].clamped);
        assert_eq!(e.error_rate(&d).unwrap(), 0.0);
    }

    #[test]
    fn stumpboost_improves_on_xor_like_data() {
        // XOR-like: two stumps cannot separate it alone
        let rows: Vec<[f64; 2]> = vec![
            [0.0, 0.0],
            [0.1, 0.2],
            [1.0, 1.0],
            [0.9, 1.1],
            [0.0, 1.0],
            [0.2, 0.9],
            [1.0, 0.0],
            [1.1, 0.1],
            [0.5, 0.6],
            [0.45, 0.4],
        ];
        let y = vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0, -1.0];
        let d = Dataset::new(DenseMatrix::from_rows(&rows), y).unwrap();
        let single = StumpFitter::new(&d).fit(&[0.1; 10]).unwrap().1;
        assert!(single >= 0.3, "single stump error {single}");
        let cfg = BoostConfig {
            rounds: 50,
            ..Default::default()
        };
        let (e, _) = train_stumpboost(&d, &cfg).unwrap();
        assert!(e.error_rate(&d).unwrap() < single);
    }

    #[test]
    fn rrcboost_separates_easy_two_dimensional_data() {
        let d = small_synth(5, 2, 10.0);
        let cfg = BoostConfig {
            rounds: 5,
            ..Default::default()
        };
        let (e, _) = train_rrcboost(&d, &cfg).unwrap();
        assert_eq!(e.error_rate(&d).unwrap(), 0.0);
    }

    #[test]
    fn stop_on_weak_is_configurable() {
        // only noise features: learners are weak at some point
        let d = small_synth(6, 3, 1e-9);
        let cfg = BoostConfig {
            rounds: 40,
            stop_on_weak: true,
            ..Default::default()
        };
        let (_, t) = train_stumpboost(&d, &cfg).unwrap();
        if let Some(pos) = t.rounds.iter().position(|r| r.epsilon >= 0.5) {
            assert_eq!(pos + 1, t.len());
        }
    }

    #[test]
    fn fit_errors_carry_round_context() {
        let d = ds(&[&[1.0, 1.0], &[2.0, 2.0]], &[1.0, -1.0]);
        let cfg = BoostConfig {
            rounds: 2,
            ..Default::default()
        };
        // projection with the wrong row count triggers a shape error in round 0
        struct Bad;
        impl ProjectionSource for Bad {
            fn projection(
                &mut self,
                _: usize,
                _: usize,
                _d: usize,
                m: usize,
            ) -> Result<DenseMatrix> {
                Ok(DenseMatrix::zeros(5, m))
            }
        }
        let err = train_rpboost_with(&d, &cfg, &mut Bad).unwrap_err();
        assert!(matches!(
            err,
            BoostError::Fit {
                round: 0,
                projection: Some(0),
                ..
            }
        ));
        assert!(err.to_string().starts_with("round 0, projection 0"));
    }
}
