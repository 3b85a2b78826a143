//! Tokenization and text normalization shared by every module.

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Lowercases `text`, splits on Unicode whitespace and peels leading and
/// trailing punctuation off each chunk as single-character tokens.
///
/// Punctuation inside a word (`science-based`, `u.s`) stays attached.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        let chars: Vec<char> = lower.chars().collect();
        let start = chars.iter().position(|&c| !is_punct(c));
        let Some(start) = start else {
            tokens.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_punct(c)).unwrap() + 1;
        tokens.extend(chars[..start].iter().map(|c| c.to_string()));
        tokens.push(chars[start..end].iter().collect());
        tokens.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    tokens
}

/// Lowercase and collapse whitespace runs; used for identical-pair detection
/// and character n-gram extraction.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
