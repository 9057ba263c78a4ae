//! Plain-text model files.
//!
//! ```text
//! rpboost-model v1 method=rpboost K=300 lambda=0.3 m=3 P=3 seed=42 d=2000 clamp=0.0000000001 intercept=0 members=2
//! 0.42 0.013 -0.2 ...          # alpha, then d coefficients
//! 0.31 stump 17 2.5 -1         # alpha, "stump", feature, threshold, polarity
//! ```
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::boosting::{BoostConfig, Ensemble, Learner, Member, Method};
use crate::learners::{LearnerError, LinearClassifier, Stump};
use crate::linalg::DenseMatrix;

pub const FORMAT_VERSION: &str = "v1";
const MAGIC: &str = "rpboost-model";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model line {line}: {message}")]
    Format { line: usize, message: String },
}

fn format_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Format {
        line,
        message: message.into(),
    }
}

/// A trained ensemble plus the input transformation it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub ensemble: Ensemble,
    /// A constant-1 feature was appended to the inputs before training.
    pub intercept: bool,
}

impl Model {
    /// Number of raw input features (before any intercept column).
    pub fn input_dim(&self) -> usize {
        self.ensemble.feature_count - usize::from(self.intercept)
    }

    pub fn predict_rows(&self, x: &DenseMatrix) -> Result<Vec<f64>, LearnerError> {
        if x.cols() != self.input_dim() {
            return Err(LearnerError::FeatureCount {
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        if self.intercept {
            self.ensemble.predict_rows(&x.with_constant_column(1.0))
        } else {
            self.ensemble.predict_rows(x)
        }
    }

    pub fn to_text(&self) -> String {
        let e = &self.ensemble;
        let c = &e.config;
        let mut out = String::new();
        writeln!(
            out,
            "{MAGIC} {FORMAT_VERSION} method={} K={} lambda={} m={} P={} seed={} d={} clamp={} intercept={} members={}",
            e.method,
            c.rounds,
            c.lambda,
            c.subspace_dim,
            c.projections,
            c.seed,
            e.feature_count,
            c.epsilon_clamp,
            u8::from(self.intercept),
            e.members.len()
        )
        .unwrap();
        for m in &e.members {
            write!(out, "{}", m.alpha).unwrap();
            match &m.learner {
                Learner::Linear(l) => {
                    for b in &l.beta {
                        write!(out, " {b}").unwrap();
                    }
                }
                Learner::Stump(s) => {
                    write!(out, " stump {} {} {}", s.feature, s.threshold, s.polarity).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| format_err(1, "empty model file"))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some(MAGIC) {
            return Err(format_err(1, format!("missing {MAGIC:?} header")));
        }
        match tokens.next() {
            Some(FORMAT_VERSION) => {}
            other => {
                return Err(format_err(
                    1,
                    format!("unsupported format version {other:?}"),
                ));
            }
        }
        let mut fields = std::collections::HashMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| format_err(1, format!("malformed header field {tok:?}")))?;
            fields.insert(k, v);
        }
        fn field<T: std::str::FromStr>(
            fields: &std::collections::HashMap<&str, &str>,
            key: &str,
        ) -> Result<T, ModelError> {
            let raw = fields
                .get(key)
                .ok_or_else(|| format_err(1, format!("header lacks {key}")))?;
            raw.parse()
                .map_err(|_| format_err(1, format!("bad value {raw:?} for {key}")))
        }
        let method: Method = {
            let raw: String = field(&fields, "method")?;
            raw.parse().map_err(|e| format_err(1, format!("{e}")))?
        };
        let d: usize = field(&fields, "d")?;
        let count: usize = field(&fields, "members")?;
        let intercept: u8 = field(&fields, "intercept")?;
        let config = BoostConfig {
            rounds: field(&fields, "K")?,
            projections: field(&fields, "P")?,
            subspace_dim: field(&fields, "m")?,
            lambda: field(&fields, "lambda")?,
            epsilon_clamp: field(&fields, "clamp")?,
            seed: field(&fields, "seed")?,
            ..BoostConfig::default()
        };

        let mut members = Vec::with_capacity(count);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let bad = |msg: &str| format_err(lineno, msg.to_string());
            let mut toks = line.split_whitespace();
            let alpha: f64 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("missing or malformed alpha"))?;
            let rest: Vec<&str> = toks.collect();
            let learner = if rest.first() == Some(&"stump") {
                if rest.len() != 4 {
                    return Err(bad("stump line needs feature, threshold and polarity"));
                }
                let feature: usize = rest[1].parse().map_err(|_| bad("bad stump feature"))?;
                let threshold: f64 = rest[2].parse().map_err(|_| bad("bad stump threshold"))?;
                let polarity: f64 = rest[3].parse().map_err(|_| bad("bad stump polarity"))?;
                if feature >= d || (polarity != 1.0 && polarity != -1.0) {
                    return Err(bad("stump feature out of range or polarity not ±1"));
                }
                Learner::Stump(Stump {
                    feature,
                    threshold,
                    polarity,
                })
            } else {
                if rest.len() != d {
                    return Err(format_err(
                        lineno,
                        format!("expected {d} coefficients, found {}", rest.len()),
                    ));
                }
                let beta = rest
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("malformed coefficient"))?;
                Learner::Linear(LinearClassifier {
                    beta,
                    lambda: config.lambda,
                })
            };
            members.push(Member { alpha, learner });
        }
        if members.len() != count {
            return Err(format_err(
                1,
                format!(
                    "header declares {count} members, file has {}",
                    members.len()
                ),
            ));
        }
        if intercept > 1 || (intercept == 1 && d == 0) {
            return Err(format_err(1, "intercept must be 0 or 1"));
        }
        Ok(Self {
            ensemble: Ensemble {
                method,
                config,
                feature_count: d,
                members,
            },
            intercept: intercept == 1,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_model(alpha: f64, beta: Vec<f64>) -> Model {
        let d = beta.len();
        Model {
            ensemble: Ensemble {
                method: Method::RpBoost,
                config: BoostConfig::default(),
                feature_count: d,
                members: vec![Member {
                    alpha,
                    learner: Learner::Linear(LinearClassifier { beta, lambda: 0.3 }),
                }],
            },
            intercept: false,
        }
    }

    #[test]
    fn header_carries_config() {
        let text = linear_model(1.0, vec![0.5, -0.25]).to_text();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "rpboost-model v1 method=rpboost K=300 lambda=0.3 m=3 P=3 seed=42 d=2 clamp=0.0000000001 intercept=0 members=1"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "1 0.5 -0.25");
    }

    #[test]
    fn stump_models_round_trip_with_infinite_thresholds() {
        let m = Model {
            ensemble: Ensemble {
                method: Method::StumpBoost,
                config: BoostConfig::default(),
                feature_count: 3,
                members: vec![
                    Member {
                        alpha: 0.7,
                        learner: Learner::Stump(Stump {
                            feature: 2,
                            threshold: f64::NEG_INFINITY,
                            polarity: -1.0,
                        }),
                    },
                    Member {
                        alpha: 0.1,
                        learner: Learner::Stump(Stump {
                            feature: 0,
                            threshold: 2.5,
                            polarity: 1.0,
                        }),
                    },
                ],
            },
            intercept: true,
        };
        assert_eq!(Model::parse(&m.to_text()).unwrap(), m);
        assert_eq!(m.input_dim(), 2);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(Model::parse("").is_err());
        assert!(Model::parse("something else\n").is_err());
        let good = linear_model(1.0, vec![0.5, -0.25]).to_text();
        let short = good.replace("1 0.5 -0.25", "1 0.5");
        assert!(matches!(
            Model::parse(&short),
            Err(ModelError::Format { line: 2, .. })
        ));
        let v2 = good.replace(" v1 ", " v2 ");
        assert!(Model::parse(&v2).is_err());
        let count = good.replace("members=1", "members=2");
        assert!(Model::parse(&count).is_err());
    }

    #[test]
    fn intercept_column_is_appended_at_prediction() {
        let mut m = linear_model(1.0, vec![0.0, 1.0]);
        m.intercept = true;
        let x = DenseMatrix::from_rows(&[[5.0]]);
        assert_eq!(m.predict_rows(&x).unwrap(), vec![1.0]);
        assert!(m
            .predict_rows(&DenseMatrix::from_rows(&[[5.0, 1.0]]))
            .is_err());
    }

    proptest! {
        #[test]
        fn linear_models_round_trip_bit_exactly(
            alpha in -1e6f64..1e6,
            beta in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..20),
        ) {
            let m = linear_model(alpha, beta);
            let back = Model::parse(&m.to_text()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
