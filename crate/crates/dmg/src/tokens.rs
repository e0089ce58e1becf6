//! Token counting. Counts are only used for budgeting and cost reports, so
//! the default is plain whitespace splitting; callers can plug in a model
//! tokenizer.

pub trait TokenCounter: Send + Sync {
    /// Label printed in reports next to the counts.
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
    /// Keeps the first `budget` tokens of `text`.
    fn truncate(&self, text: &str, budget: usize) -> String;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WhitespaceTokens;

impl TokenCounter for WhitespaceTokens {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn truncate(&self, text: &str, budget: usize) -> String {
        text.split_whitespace().take(budget).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_counting() {
        let t = WhitespaceTokens;
        assert_eq!(t.count("  a b\n c\t"), 3);
        assert_eq!(t.count(""), 0);
        assert_eq!(t.truncate("a  b c d", 2), "a b");
        assert_eq!(t.truncate("a b", 5), "a b");
    }
}
