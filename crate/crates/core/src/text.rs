//! Deterministic text heuristics used by the dataset filters and the segmenter.
//!
//! Everything here is rule-based: a sentence splitter driven by a shipped
//! abbreviation list, a quote-initial dialogue detector, and an allow-list
//! check for unusual characters. The two data files live in `data/` and are
//! compiled into the binary so filtering is reproducible across machines.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Shipped abbreviation list, one lowercase entry per line.
pub const ABBREVIATIONS_DATA: &str = include_str!("../data/abbreviations.txt");
/// Shipped character allow-list.
pub const ALLOWED_CHARS_DATA: &str = include_str!("../data/allowed_chars.txt");

/// Default fraction of quote-initial sentences at which a text counts as dialogue.
pub const DEFAULT_DIALOGUE_THRESHOLD: f64 = 0.5;

const CLOSING_CHARS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']'];
const OPENING_QUOTES: &[char] = &[
    '"', '\'', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{00AB}',
];

/// Collapse every whitespace run to a single space and trim both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Number of Unicode scalar values in the whitespace-normalized text.
pub fn char_count(text: &str) -> usize {
    normalize_whitespace(text).chars().count()
}

/// An ordered run of sentences. Boundary `i` (1-based) sits between
/// sentence `i` and sentence `i + 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceSeq {
    sentences: Vec<String>,
}

impl SentenceSeq {
    /// Wraps pre-split sentences, dropping empty entries and normalizing whitespace.
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sentences = sentences
            .into_iter()
            .map(|s| normalize_whitespace(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        SentenceSeq { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.sentences
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.sentences.iter()
    }

    /// Number of interior boundaries, `len - 1` for non-empty sequences.
    pub fn boundary_count(&self) -> usize {
        self.sentences.len().saturating_sub(1)
    }

    /// Joins a range of sentences with single spaces.
    pub fn join_range(&self, range: Range<usize>) -> String {
        self.sentences[range].join(" ")
    }

    /// Joins all sentences with single spaces.
    pub fn joined(&self) -> String {
        self.sentences.join(" ")
    }
}

impl<'a> IntoIterator for &'a SentenceSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

/// Rule-based sentence splitter.
///
/// A sentence ends after a run of `.`, `!`, `?` or `…`, optionally followed
/// by closing quotes or brackets, when the next character is whitespace or
/// the end of the text. A single period does not end a sentence after a word
/// on the abbreviation list or after a single-letter initial other than `I`.
/// An ellipsis ends a sentence only when the following word starts with an
/// uppercase letter or an opening quote, and a quotation closed by terminal
/// punctuation does not end one when a lowercase speech tag follows.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl SentenceSplitter {
    /// Builds a splitter from a newline-separated abbreviation list. Lines
    /// starting with `#` are comments; entries are compared lowercase.
    pub fn from_abbreviation_list(data: &str) -> Self {
        let abbreviations = data_lines(data).map(|line| line.to_lowercase()).collect();
        SentenceSplitter { abbreviations }
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(&word.to_lowercase())
    }

    pub fn split(&self, text: &str) -> SentenceSeq {
        let normalized = normalize_whitespace(text);
        let chars: Vec<char> = normalized.chars().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;

        while i < chars.len() {
            if !is_terminal(chars[i]) {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < chars.len() && is_terminal(chars[i]) {
                i += 1;
            }
            let run = &chars[run_start..i];
            let closing_start = i;
            while i < chars.len() && CLOSING_CHARS.contains(&chars[i]) {
                i += 1;
            }
            if i < chars.len() && chars[i] != ' ' {
                continue;
            }
            let next = chars.get(i + 1).copied();
            // "Run!" she cried. keeps the speech tag with the quote.
            let quote_closed = i > closing_start;
            if quote_closed && next.is_some_and(|c| c.is_lowercase()) {
                continue;
            }
            if self.is_boundary(&chars[start..run_start], run, next) {
                let sentence: String = chars[start..i].iter().collect();
                sentences.push(sentence);
                start = i + 1;
            }
        }
        if start < chars.len() {
            sentences.push(chars[start..].iter().collect());
        }
        SentenceSeq { sentences }
    }

    fn is_boundary(&self, before: &[char], run: &[char], next: Option<char>) -> bool {
        let is_ellipsis = run.contains(&'\u{2026}') || run.iter().filter(|&&c| c == '.').count() >= 2;
        if is_ellipsis {
            return match next {
                None => true,
                Some(c) => c.is_uppercase() || OPENING_QUOTES.contains(&c),
            };
        }
        if run != ['.'] {
            return true;
        }
        let word: String = before
            .iter()
            .rev()
            .take_while(|c| **c != ' ')
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        if word.is_empty() {
            return true;
        }
        if self.is_abbreviation(word) {
            return false;
        }
        let mut letters = word.chars();
        !matches!((letters.next(), letters.next()), (Some(c), None) if c.is_uppercase() && c != 'I')
    }
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::from_abbreviation_list(ABBREVIATIONS_DATA)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

fn data_lines(data: &str) -> impl Iterator<Item = &str> {
    data.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
}

fn default_splitter() -> &'static SentenceSplitter {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

/// Splits text into sentences with the shipped abbreviation list.
pub fn split_sentences(text: &str) -> SentenceSeq {
    default_splitter().split(text)
}

/// Fraction of sentences that begin with a quotation character. Empty text yields 0.
pub fn dialogue_fraction(text: &str) -> f64 {
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return 0.0;
    }
    let quoted = sentences
        .iter()
        .filter(|s| s.starts_with(OPENING_QUOTES))
        .count();
    quoted as f64 / sentences.len() as f64
}

/// True when at least half the sentences open with a quotation mark.
pub fn is_dialogue(text: &str) -> bool {
    is_dialogue_with(text, DEFAULT_DIALOGUE_THRESHOLD)
}

pub fn is_dialogue_with(text: &str, threshold: f64) -> bool {
    !text.trim().is_empty() && dialogue_fraction(text) >= threshold
}

/// Inclusive code point ranges a text may draw from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllowList {
    ranges: Vec<(u32, u32)>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("allow-list line {line}: cannot parse `{entry}`")]
pub struct AllowListError {
    pub line: usize,
    pub entry: String,
}

impl AllowList {
    pub fn parse(data: &str) -> Result<Self, AllowListError> {
        let mut ranges = Vec::new();
        for (idx, raw) in data.lines().enumerate() {
            let entry = raw.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            let err = || AllowListError {
                line: idx + 1,
                entry: entry.to_string(),
            };
            let range = match entry.split_once("..") {
                Some((lo, hi)) => (parse_code_point(lo).ok_or_else(err)?, parse_code_point(hi).ok_or_else(err)?),
                None => {
                    let cp = parse_code_point(entry).ok_or_else(err)?;
                    (cp, cp)
                }
            };
            if range.0 > range.1 {
                return Err(err());
            }
            ranges.push(range);
        }
        ranges.sort_unstable();
        Ok(AllowList { ranges })
    }

    pub fn allows(&self, c: char) -> bool {
        let cp = c as u32;
        self.ranges.iter().any(|&(lo, hi)| lo <= cp && cp <= hi)
    }
}

impl Default for AllowList {
    fn default() -> Self {
        AllowList::parse(ALLOWED_CHARS_DATA).expect("shipped allow-list parses")
    }
}

fn parse_code_point(s: &str) -> Option<u32> {
    let hex = s.trim().strip_prefix("U+")?;
    u32::from_str_radix(hex, 16).ok()
}

fn default_allow_list() -> &'static AllowList {
    static ALLOW: OnceLock<AllowList> = OnceLock::new();
    ALLOW.get_or_init(AllowList::default)
}

/// True if any character falls outside the shipped allow-list.
pub fn has_unusual_chars(text: &str) -> bool {
    let allow = default_allow_list();
    text.chars().any(|c| !allow.allows(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_blank_text_has_no_sentences() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n\t ").is_empty());
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        let s = split_sentences("Hello. World.");
        assert_eq!(s.as_slice(), ["Hello.", "World."]);
        let s = split_sentences("Is it? Yes! Fine.");
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn abbreviation_does_not_split() {
        // "Mr" is on the shipped list.
        assert!(ABBREVIATIONS_DATA.lines().any(|l| l.trim() == "mr"));
        let s = split_sentences("Mr. Smith left. He ran.");
        assert_eq!(s.as_slice(), ["Mr. Smith left.", "He ran."]);
        let s = split_sentences("We met Dr. Jones at St. Paul's. It rained.");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn non_abbreviation_words_split() {
        let s = split_sentences("She saw Mrsx. Then left.");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn initials_do_not_split_but_pronoun_i_does() {
        let s = split_sentences("J. R. Smith wrote it. So did I. Then we left.");
        assert_eq!(s.as_slice(), ["J. R. Smith wrote it.", "So did I.", "Then we left."]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        let s = split_sentences("\"Hi.\" \"Bye.\" He left.");
        assert_eq!(s.as_slice(), ["\"Hi.\"", "\"Bye.\"", "He left."]);
        let s = split_sentences("\u{201C}Run!\u{201D} she cried. They ran.");
        assert_eq!(s.as_slice(), ["\u{201C}Run!\u{201D} she cried.", "They ran."]);
    }

    #[test]
    fn ellipsis_rules() {
        let s = split_sentences("He waited... and waited. Nothing came.");
        assert_eq!(s.as_slice(), ["He waited... and waited.", "Nothing came."]);
        let s = split_sentences("He waited... Then he left.");
        assert_eq!(s.len(), 2);
        let s = split_sentences("Well\u{2026} maybe. Or not.");
        assert_eq!(s.len(), 2);
        let s = split_sentences("It trailed off...");
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn decimals_and_inner_periods_do_not_split() {
        let s = split_sentences("It cost 3.50 gold. See e.g. the map. Done.");
        assert_eq!(s.as_slice(), ["It cost 3.50 gold.", "See e.g. the map.", "Done."]);
    }

    #[test]
    fn trailing_text_without_punctuation_is_a_sentence() {
        let s = split_sentences("First one. and then some");
        assert_eq!(s.as_slice(), ["First one.", "and then some"]);
    }

    #[test]
    fn join_matches_normalized_source() {
        let text = "  One.\n\nTwo!   Three?  ";
        assert_eq!(split_sentences(text).joined(), normalize_whitespace(text));
    }

    #[test]
    fn dialogue_detection() {
        assert!(is_dialogue("\"Hi.\" \"Bye.\""));
        assert!(!is_dialogue("He ran. He hid."));
        // 1 of 3 quote-initial: 1/3 < 0.5
        assert!(!is_dialogue("\"Hi,\" he said. He ran. He hid."));
        assert!((dialogue_fraction("\"Hi,\" he said. He ran. He hid.") - 1.0 / 3.0).abs() < 1e-12);
        assert!(!is_dialogue(""));
        // exactly half counts
        assert!(is_dialogue("\u{201C}Go.\u{201D} He went."));
    }

    #[test]
    fn unusual_characters() {
        assert!(!has_unusual_chars("plain text."));
        assert!(has_unusual_chars("bad\u{0000}byte"));
        assert!(has_unusual_chars("a \u{2605} star"));
        assert!(!has_unusual_chars("Caf\u{00E9} \u{201C}quoted\u{201D} \u{2014} wait\u{2026}"));
        assert!(!has_unusual_chars("line one\nline two\ttabbed"));
        assert!(has_unusual_chars("emoji \u{1F600}"));
        assert!(has_unusual_chars("times \u{00D7}"));
    }

    #[test]
    fn star_is_outside_every_shipped_range() {
        let allow = AllowList::default();
        assert!(!allow.ranges.iter().any(|&(lo, hi)| lo <= 0x2605 && 0x2605 <= hi));
    }

    #[test]
    fn allow_list_parse_errors() {
        assert!(AllowList::parse("U+0041..U+0040").is_err());
        let err = AllowList::parse("# c\nU+0041\nbogus").unwrap_err();
        assert_eq!(err.line, 3);
        let list = AllowList::parse("U+0041 # A\nU+0061..U+007A").unwrap();
        assert!(list.allows('A') && list.allows('q') && !list.allows('B'));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn token() -> impl Strategy<Value = String> {
            prop_oneof![
                "[A-Za-z]{1,8}",
                Just("Mr.".to_string()),
                Just("...".to_string()),
                Just("\u{2026}".to_string()),
                Just("end.".to_string()),
                Just("Why?".to_string()),
                Just("\"Go!\"".to_string()),
                Just("J.".to_string()),
                Just("\n\n".to_string()),
            ]
        }

        fn text() -> impl Strategy<Value = String> {
            proptest::collection::vec(token(), 0..40).prop_map(|t| t.join(" "))
        }

        proptest! {
            #[test]
            fn rejoin_then_resplit_is_identity(t in text()) {
                let first = split_sentences(&t);
                prop_assert_eq!(split_sentences(&first.joined()), first.clone());
                prop_assert_eq!(first.joined(), normalize_whitespace(&t));
                prop_assert!(first.iter().all(|s| !s.is_empty()));
            }

            #[test]
            fn appending_a_sentence_never_lowers_the_count(t in text(), extra in "[A-Z][a-z]{1,8}( [a-z]{1,8}){0,4}[.!?]") {
                let before = split_sentences(&t).len();
                let after = split_sentences(&format!("{t} {extra}")).len();
                prop_assert!(after >= before);
            }

            #[test]
            fn predicates_are_total(t in "\\PC{0,60}") {
                let _ = is_dialogue(&t);
                let _ = has_unusual_chars(&t);
            }
        }
    }
}
