//! Learning alphabets.
//!
//! Inputs and outputs are open sets of short strings, so an external system
//! under learning can emit responses nobody has seen before.

use std::borrow::Borrow;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

macro_rules! string_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                Self(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(Arc::from(s))
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl PartialEq<str> for $name {
            fn eq(&self, other: &str) -> bool {
                &*self.0 == other
            }
        }

        impl PartialEq<&str> for $name {
            fn eq(&self, other: &&str) -> bool {
                &*self.0 == *other
            }
        }
    };
}

string_newtype!(
    /// An abstract input symbol, e.g. `INIT-CHLO`.
    Symbol
);

string_newtype!(
    /// An abstract output symbol, e.g. `REJ` or `EXP`.
    Output
);

/// A finite input word.
pub type Word = Vec<Symbol>;

/// Builds a word from string slices.
pub fn word<S: AsRef<str>>(symbols: impl IntoIterator<Item = S>) -> Word {
    symbols.into_iter().map(Symbol::new).collect()
}

/// Builds an output sequence from string slices.
pub fn outputs<S: AsRef<str>>(symbols: impl IntoIterator<Item = S>) -> Vec<Output> {
    symbols.into_iter().map(Output::new).collect()
}

/// Renders a word as space-separated symbols; the empty word renders as `ε`.
pub fn display_word(w: &[Symbol]) -> String {
    if w.is_empty() {
        return "ε".to_string();
    }
    w.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_compare_against_str() {
        let s = Symbol::new("GET");
        assert_eq!(s, "GET");
        assert_eq!(format!("{s:?}"), "GET");
        assert_eq!(display_word(&word(["INIT-CHLO", "GET"])), "INIT-CHLO GET");
        assert_eq!(display_word(&[]), "ε");
    }

    #[test]
    fn serde_is_transparent() {
        let json = serde_json::to_string(&outputs(["REJ", "SHLO"])).unwrap();
        assert_eq!(json, r#"["REJ","SHLO"]"#);
    }
}
