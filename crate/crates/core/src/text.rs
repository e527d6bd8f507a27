//! Whitespace tokenization shared by clue extraction and tweet metadata.

/// A whitespace-delimited token with surrounding punctuation removed.
///
/// `@` and `#` prefixes survive trimming so handles and hashtags stay
/// recognizable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub raw: &'a str,
    pub word: &'a str,
}

impl<'a> Token<'a> {
    pub fn is_handle(&self) -> bool {
        self.word.starts_with('@')
    }

    pub fn is_hashtag(&self) -> bool {
        self.word.starts_with('#')
    }

    pub fn is_url(&self) -> bool {
        let lower = self.raw.to_ascii_lowercase();
        lower.contains("://") || lower.contains("www.")
    }

    /// The word without its `@`/`#` prefix.
    pub fn bare(&self) -> &'a str {
        self.word.trim_start_matches(['@', '#'])
    }

    pub fn alphabetic_len(&self) -> usize {
        self.word.chars().filter(|c| c.is_alphabetic()).count()
    }
}

pub fn tokens(text: &str) -> impl Iterator<Item = Token<'_>> {
    text.split_whitespace().filter_map(|raw| {
        let word = raw.trim_matches(|c: char| !(c.is_alphanumeric() || c == '@' || c == '#'));
        (!word.is_empty()).then_some(Token { raw, word })
    })
}

/// Alphabetic token of at least two letters that is not a URL, handle,
/// hashtag or retweet marker. Internal apostrophes and hyphens are allowed.
pub fn is_proper_word(token: &Token<'_>) -> bool {
    if token.is_url() || token.is_handle() || token.is_hashtag() {
        return false;
    }
    if token.word.eq_ignore_ascii_case("rt") {
        return false;
    }
    token.alphabetic_len() >= 2
        && token
            .word
            .chars()
            .all(|c| c.is_alphabetic() || c == '\'' || c == '’' || c == '-')
}

pub fn proper_word_count(text: &str) -> usize {
    tokens(text).filter(is_proper_word).count()
}

pub fn has_link(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    lower.contains("http://") || lower.contains("https://") || lower.contains("www.")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_punctuation_keeps_prefixes() {
        let toks: Vec<_> = tokens("\"Hello, @World!\" #Tag... :)").map(|t| t.word).collect();
        assert_eq!(toks, vec!["Hello", "@World", "#Tag"]);
    }

    #[test]
    fn proper_words() {
        assert_eq!(proper_word_count("Cruz wins"), 2);
        assert_eq!(proper_word_count("RT @user #tag https://t.co/x a 2016 he'd"), 1);
        assert_eq!(proper_word_count(""), 0);
    }

    #[test]
    fn links() {
        assert!(has_link("see https://t.co/x"));
        assert!(has_link("WWW.example.com"));
        assert!(!has_link("no link here"));
    }
}
