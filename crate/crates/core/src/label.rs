use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Attitude label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Pos,
    Neg,
    Neu,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pos => "pos",
            Label::Neg => "neg",
            Label::Neu => "neu",
        }
    }

    pub fn is_sentiment(self) -> bool {
        self != Label::Neu
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pos" | "positive" => Ok(Label::Pos),
            "neg" | "negative" => Ok(Label::Neg),
            "neu" | "neutral" => Ok(Label::Neu),
            other => Err(Error::InvalidArgument(format!("unknown label `{other}`"))),
        }
    }
}

/// Two-scale (pos/neg) or three-scale (pos/neg/neu) classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Two,
    Three,
}

impl Scale {
    pub fn class_count(self) -> usize {
        match self {
            Scale::Two => 2,
            Scale::Three => 3,
        }
    }

    pub fn from_class_count(c: usize) -> Option<Self> {
        match c {
            2 => Some(Scale::Two),
            3 => Some(Scale::Three),
            _ => None,
        }
    }

    /// Class id of `label`, or `None` for neutral in the two-scale task.
    pub fn class_of(self, label: Label) -> Option<usize> {
        match (self, label) {
            (_, Label::Pos) => Some(0),
            (_, Label::Neg) => Some(1),
            (Scale::Three, Label::Neu) => Some(2),
            (Scale::Two, Label::Neu) => None,
        }
    }

    pub fn label_of(self, class: usize) -> Option<Label> {
        match (self, class) {
            (_, 0) => Some(Label::Pos),
            (_, 1) => Some(Label::Neg),
            (Scale::Three, 2) => Some(Label::Neu),
            _ => None,
        }
    }

    pub fn labels(self) -> &'static [Label] {
        match self {
            Scale::Two => &[Label::Pos, Label::Neg],
            Scale::Three => &[Label::Pos, Label::Neg, Label::Neu],
        }
    }
}
