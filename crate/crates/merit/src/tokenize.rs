//! Script-aware token segmentation shared by feature extraction and the
//! evaluation metrics.
//!
//! Whitespace tokenization is degenerate for Chinese, so after splitting on
//! whitespace every CJK run is further split into single characters. Latin,
//! digits and other non-CJK runs stay whole.

/// True for scalar values treated as CJK for segmentation purposes:
/// unified ideographs (including extensions), CJK symbols and punctuation,
/// kana, and the fullwidth forms block.
pub(crate) fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{3000}'..='\u{303F}'   // CJK symbols and punctuation
        | '\u{3040}'..='\u{30FF}' // hiragana, katakana
        | '\u{3400}'..='\u{4DBF}' // ideograph extension A
        | '\u{4E00}'..='\u{9FFF}' // unified ideographs
        | '\u{F900}'..='\u{FAFF}' // compatibility ideographs
        | '\u{FF00}'..='\u{FFEF}' // halfwidth and fullwidth forms
        | '\u{20000}'..='\u{2FA1F}' // extensions B..F and supplement
    )
}

/// Splits text into tokens: whitespace-separated words, with CJK characters
/// always standing alone.
pub(crate) fn mixed_tokens(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut run_start = None::<usize>;
        for (idx, c) in word.char_indices() {
            if is_cjk(c) {
                if let Some(start) = run_start.take() {
                    tokens.push(&word[start..idx]);
                }
                tokens.push(&word[idx..idx + c.len_utf8()]);
            } else if run_start.is_none() {
                run_start = Some(idx);
            }
        }
        if let Some(start) = run_start {
            tokens.push(&word[start..]);
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_cjk_runs_to_chars() {
        assert_eq!(mixed_tokens("你好 world"), ["你", "好", "world"]);
        assert_eq!(mixed_tokens("你好。"), ["你", "好", "。"]);
    }

    #[test]
    fn digits_are_not_cjk() {
        assert_eq!(mixed_tokens("2024年"), ["2024", "年"]);
    }

    #[test]
    fn plain_whitespace_words() {
        assert_eq!(mixed_tokens("xin chào thế giới"), ["xin", "chào", "thế", "giới"]);
        assert!(mixed_tokens("   ").is_empty());
    }

    #[test]
    fn mixed_runs_inside_word() {
        assert_eq!(mixed_tokens("abc中def"), ["abc", "中", "def"]);
    }
}
