//! The shared token definition.
//!
//! A token is a maximal run of alphanumeric characters after lowercasing.
//! Length statistics, trimming and every vocabulary use this one definition.

/// Splits `text` into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Number of tokens in `text`, without allocating them.
pub fn token_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_token = false;
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            if !in_token {
                count += 1;
                in_token = true;
            }
        } else {
            in_token = false;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_lowercases() {
        assert_eq!(tokenize("Great product!! 10/10, Would BUY"), vec!["great", "product", "10", "10", "would", "buy"]);
    }

    #[test]
    fn empty_and_symbol_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ...!? ").is_empty());
        assert_eq!(token_count("--"), 0);
    }

    #[test]
    fn unicode_alphanumerics_are_tokens() {
        assert_eq!(tokenize("Café très-bien"), vec!["café", "très", "bien"]);
        assert_eq!(tokenize("很好"), vec!["很好"]);
    }

    #[test]
    fn count_agrees_with_tokenize() {
        for s in ["a b  c", "don't stop", "ÀB-cd e1", "", "x"] {
            assert_eq!(token_count(s), tokenize(s).len(), "{s:?}");
        }
    }
}
