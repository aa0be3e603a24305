//! Small text utilities shared across the workspace.

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Byte spans of case-insensitive, word-bounded occurrences of `needle` in `haystack`.
pub fn find_word_spans(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    let needle: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let chars: Vec<(usize, char)> = haystack.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if let Some(end) = match_at(&chars, i, &needle) {
            let before_ok = i == 0 || !chars[i - 1].1.is_alphanumeric();
            let after_ok = end == chars.len() || !chars[end].1.is_alphanumeric();
            if before_ok && after_ok {
                let start_byte = chars[i].0;
                let end_byte = chars.get(end).map_or(haystack.len(), |c| c.0);
                spans.push((start_byte, end_byte));
                i = end;
                continue;
            }
        }
        i += 1;
    }
    spans
}

// Returns the exclusive char index where the match ends.
fn match_at(chars: &[(usize, char)], start: usize, needle: &[char]) -> Option<usize> {
    let mut pos = start;
    let mut n = 0;
    while n < needle.len() {
        let (_, c) = *chars.get(pos)?;
        for lc in c.to_lowercase() {
            if needle.get(n) != Some(&lc) {
                return None;
            }
            n += 1;
        }
        pos += 1;
    }
    Some(pos)
}

/// Whitespace and punctuation tokenization; punctuation characters become their own tokens.
pub fn word_tokens(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let is_word = c.is_alphanumeric() || c == '\'' || c == '-';
        if is_word {
            if start.is_none() {
                start = Some(i);
            }
        } else {
            if let Some(s) = start.take() {
                tokens.push(&text[s..i]);
            }
            if !c.is_whitespace() {
                tokens.push(&text[i..i + c.len_utf8()]);
            }
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "e.g", "i.e", "a.m", "p.m", "u.s", "no",
    "inc", "ltd", "co",
];

/// Rule-based sentence splitter: breaks after `.`, `!` or `?` (plus closing quotes)
/// when followed by whitespace, except after known abbreviations and single initials.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | '”' | '’') {
                j += 1;
            }
            let at_end = j == chars.len();
            let followed_by_space = !at_end && chars[j].1.is_whitespace();
            if (at_end || followed_by_space) && !(c == '.' && is_abbreviation(text, chars[i].0)) {
                let end_byte = chars.get(j).map_or(text.len(), |c| c.0);
                push_trimmed(&mut sentences, &text[start..end_byte]);
                start = end_byte;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

fn is_abbreviation(text: &str, dot_byte: usize) -> bool {
    let before = &text[..dot_byte];
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.chars().count() == 1 && word.chars().all(|c| c.is_uppercase()) {
        return true;
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}
