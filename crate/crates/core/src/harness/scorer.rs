use serde::{Deserialize, Serialize};

use crate::corpus::RelationTriple;
use crate::error::Result;
use crate::graph::TypedPredicate;
use crate::text::normalize_arg;

pub const DEFAULT_ARG_TYPE: &str = "thing";

/// A binary proposition as seen by a scorer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub subject: String,
    pub predicate: Vec<String>,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_predicate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
}

impl Statement {
    pub fn new(subject: &str, predicate: &[&str], object: &str) -> Self {
        Statement {
            subject: normalize_arg(subject),
            predicate: predicate.iter().map(|t| t.to_lowercase()).collect(),
            object: normalize_arg(object),
            typed_predicate: None,
            subject_type: None,
            object_type: None,
        }
    }

    pub fn render(&self) -> String {
        format!("{} {} {}", self.subject, self.predicate.join(" "), self.object)
    }

    pub fn types(&self) -> (String, String) {
        (
            self.subject_type.clone().unwrap_or_else(|| DEFAULT_ARG_TYPE.into()),
            self.object_type.clone().unwrap_or_else(|| DEFAULT_ARG_TYPE.into()),
        )
    }

    /// Graph node for this statement: the given typed form if any, else the
    /// default role assignment derived from the predicate tokens.
    pub fn typed(&self) -> TypedPredicate {
        let types = self.types();
        self.typed_predicate
            .as_deref()
            .and_then(|t| TypedPredicate::parse_with_types(t, types.clone()).ok())
            .unwrap_or_else(|| TypedPredicate::from_surface(&self.predicate, types))
    }

    /// True when `other` mentions the same two arguments in swapped roles.
    pub fn is_reversed_of(&self, other: &Statement) -> bool {
        self.subject == other.object && self.object == other.subject && self.subject != self.object
    }
}

impl From<&RelationTriple> for Statement {
    fn from(t: &RelationTriple) -> Self {
        Statement {
            subject: t.subject.clone(),
            predicate: t.predicate.clone(),
            object: t.object.clone(),
            typed_predicate: t.typed_predicate.clone(),
            subject_type: t.subject_type.clone(),
            object_type: t.object_type.clone(),
        }
    }
}

/// A piece of retrieved context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Relation {
        statement: Statement,
        article_id: String,
        sentence_id: String,
    },
    Sentence {
        article_id: String,
        sentence_id: String,
        text: String,
    },
    Article {
        article_id: String,
        text: String,
    },
}

impl Evidence {
    pub fn text(&self) -> String {
        match self {
            Evidence::Relation { statement, .. } => statement.render(),
            Evidence::Sentence { text, .. } | Evidence::Article { text, .. } => text.clone(),
        }
    }

    pub fn statement(&self) -> Option<&Statement> {
        match self {
            Evidence::Relation { statement, .. } => Some(statement),
            _ => None,
        }
    }

    pub fn article_id(&self) -> &str {
        match self {
            Evidence::Relation { article_id, .. }
            | Evidence::Sentence { article_id, .. }
            | Evidence::Article { article_id, .. } => article_id,
        }
    }

    pub fn sentence_id(&self) -> Option<&str> {
        match self {
            Evidence::Relation { sentence_id, .. } | Evidence::Sentence { sentence_id, .. } => Some(sentence_id),
            Evidence::Article { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoringItem<'a> {
    pub premise: &'a Evidence,
    pub hypothesis: &'a Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub max_batch: usize,
    /// Whether score(p, h) == score(h, p) by construction.
    pub symmetric: bool,
}

impl Default for Capabilities {
    fn default() -> Self {
        Capabilities {
            max_batch: 64,
            symmetric: false,
        }
    }
}

/// Premise-to-hypothesis entailment scorer.
///
/// `None` in the returned vector is an abstention, which is distinct from a
/// score of 0. An `Err` fails the whole batch.
pub trait Scorer: Send + Sync {
    fn id(&self) -> &str;

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn score_batch(&self, items: &[ScoringItem<'_>]) -> Result<Vec<Option<f64>>>;
}

/// Scores every item with the same value.
#[derive(Debug, Clone)]
pub struct ConstantScorer {
    pub value: f64,
}

impl Scorer for ConstantScorer {
    fn id(&self) -> &str {
        "constant"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_batch: usize::MAX,
            symmetric: true,
        }
    }

    fn score_batch(&self, items: &[ScoringItem<'_>]) -> Result<Vec<Option<f64>>> {
        Ok(vec![Some(self.value); items.len()])
    }
}
