//! Subword unit extraction. A form is wrapped in boundary markers, every
//! contiguous character n-gram within the configured bounds is a unit, and
//! the whole bracketed form is one additional unit. The full-length string
//! is left out of the n-gram enumeration so it is never counted twice.

pub fn bracket(form: &str) -> String {
    format!("<{form}>")
}

/// Units in deterministic order: n-grams by start position, then length,
/// with the whole bracketed form appended last.
pub fn extract_ngrams(form: &str, ngram_min: usize, ngram_max: usize) -> Vec<String> {
    let chars: Vec<char> = bracket(form).chars().collect();
    let len = chars.len();
    let mut units = Vec::new();
    for start in 0..len {
        for n in ngram_min..=ngram_max {
            let end = start + n;
            if end > len {
                break;
            }
            if n == len {
                continue;
            }
            units.push(chars[start..end].iter().collect());
        }
    }
    units.push(chars.iter().collect());
    units
}
