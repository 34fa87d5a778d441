//! Dependency-free token proxy used for context budgeting, chunking, ROUGE-L
//! and training masks.
//!
//! Latin-script text splits on whitespace. CJK code points (ideographs, kana,
//! hangul, CJK punctuation and fullwidth forms) are one token each, and also
//! terminate any Latin run they touch.

/// Whether `c` is tokenized one character at a time.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F      // CJK symbols and punctuation
        | 0x3040..=0x30FF    // hiragana, katakana
        | 0x3400..=0x4DBF    // extension A
        | 0x4E00..=0x9FFF    // unified ideographs
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0xFF00..=0xFFEF    // fullwidth forms
        | 0x20000..=0x2FA1F) // supplementary ideographic planes
}

/// Byte spans `(start, end)` of each token in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = run_start.take() {
                spans.push((s, i));
            }
        } else if is_cjk(c) {
            if let Some(s) = run_start.take() {
                spans.push((s, i));
            }
            spans.push((i, i + c.len_utf8()));
        } else if run_start.is_none() {
            run_start = Some(i);
        }
    }
    if let Some(s) = run_start {
        spans.push((s, text.len()));
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<&str> {
    token_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

pub fn count_tokens(text: &str) -> usize {
    token_spans(text).len()
}
