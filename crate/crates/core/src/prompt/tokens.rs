//! Token counting schemes.

use std::fmt::Debug;

/// Deterministic, monotone token count: `count(a + b) >= count(a)`.
pub trait TokenCounter: Debug + Send + Sync {
    fn id(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// `ceil(chars / 4)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CharApproxCounter;

impl TokenCounter for CharApproxCounter {
    fn id(&self) -> &str {
        "char4"
    }

    fn count(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// Whitespace-separated words; a coarser alternative scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordCounter;

impl TokenCounter for WordCounter {
    fn id(&self) -> &str {
        "words"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}
