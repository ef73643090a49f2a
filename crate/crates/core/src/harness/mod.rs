mod bridge;
mod eval;
mod scorer;
pub mod tfidf;

pub use bridge::{BridgeClient, BridgeDisambiguator, BridgeOptions, BridgeScorer, BridgeTarget};
pub use eval::{check_dataset, run_eval, score_hypothesis, EvalResult, HypothesisResult, HypothesisScore, Retriever};
pub use scorer::{Capabilities, ConstantScorer, Evidence, Scorer, ScoringItem, Statement, DEFAULT_ARG_TYPE};
