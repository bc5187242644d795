//! Response filters: corrections for observations known to be impossible.
//!
//! Config format, one rule per line, `#` starts a comment:
//!
//! ```text
//! INIT-CHLO HTTP -> RETRY
//! CLOSE PRST -> REPLACE:EXP
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::symbol::{Output, Symbol};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterAction {
    /// Re-isolate the request and send it again.
    DiscardAndRetry,
    Replace(Output),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterRule {
    pub input: Symbol,
    pub observed: Output,
    pub action: FilterAction,
}

/// Result of running an observation through the filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filtered {
    Keep(Output),
    Retry,
}

impl FilterRule {
    pub fn retry(input: &str, observed: &str) -> Self {
        Self {
            input: Symbol::new(input),
            observed: Output::new(observed),
            action: FilterAction::DiscardAndRetry,
        }
    }

    pub fn replace(input: &str, observed: &str, with: &str) -> Self {
        Self {
            input: Symbol::new(input),
            observed: Output::new(observed),
            action: FilterAction::Replace(Output::new(with)),
        }
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> ", self.input, self.observed)?;
        match &self.action {
            FilterAction::DiscardAndRetry => f.write_str("RETRY"),
            FilterAction::Replace(o) => write!(f, "REPLACE:{o}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("filter config line {line}: {msg}")]
pub struct FilterParseError {
    pub line: usize,
    pub msg: String,
}

/// Ordered rule list; the first matching rule wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSet {
    rules: Vec<FilterRule>,
}

impl FilterSet {
    pub fn new(rules: Vec<FilterRule>) -> Self {
        Self { rules }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// An HTTP response can never answer an initial CHLO; such an observation
    /// is a retransmission of an earlier response.
    pub fn standard() -> Self {
        Self::new(vec![FilterRule::retry("INIT-CHLO", "HTTP")])
    }

    pub fn rules(&self) -> &[FilterRule] {
        &self.rules
    }

    pub fn push(&mut self, rule: FilterRule) {
        self.rules.push(rule);
    }

    pub fn apply(&self, input: &Symbol, observed: &Output) -> Filtered {
        match self
            .rules
            .iter()
            .find(|r| &r.input == input && &r.observed == observed)
        {
            None => Filtered::Keep(observed.clone()),
            Some(r) => match &r.action {
                FilterAction::DiscardAndRetry => Filtered::Retry,
                FilterAction::Replace(o) => Filtered::Keep(o.clone()),
            },
        }
    }
}

impl FromStr for FilterSet {
    type Err = FilterParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| FilterParseError {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err("expected `INPUT OBSERVED -> ACTION`"))?;
            let mut lhs = lhs.split_whitespace();
            let (Some(input), Some(observed), None) = (lhs.next(), lhs.next(), lhs.next()) else {
                return Err(err(
                    "expected exactly an input and an observed output before `->`",
                ));
            };
            let action = match rhs.trim() {
                "RETRY" => FilterAction::DiscardAndRetry,
                other => match other.strip_prefix("REPLACE:") {
                    Some(o) if !o.is_empty() && !o.contains(char::is_whitespace) => {
                        FilterAction::Replace(Output::new(o))
                    }
                    _ => return Err(err("action must be RETRY or REPLACE:<OUTPUT>")),
                },
            };
            rules.push(FilterRule {
                input: Symbol::new(input),
                observed: Output::new(observed),
                action,
            });
        }
        Ok(Self { rules })
    }
}
