//! Deterministic text annotation: tokenization, lemmatization, a small
//! noun/verb tagger and Levenshtein distance.

use std::collections::HashSet;
use std::ops::Range;

use crate::model::{PosConstraint, PosTag, SynonymLexicon, Utterance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub folded: String,
    pub lemma: String,
    pub pos: PosTag,
    /// Byte range of `surface` in the utterance text.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedUtterance {
    pub source: Utterance,
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedUtterance {
    /// Index of the first token at or after `from` whose lemma sequence
    /// starts with `lemmas`.
    pub fn find_lemmas(&self, lemmas: &[String], from: usize) -> Option<usize> {
        if lemmas.is_empty() {
            return None;
        }
        (from..self.tokens.len()).find(|&i| {
            i + lemmas.len() <= self.tokens.len()
                && lemmas
                    .iter()
                    .zip(&self.tokens[i..])
                    .all(|(l, t)| *l == t.lemma)
        })
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits text into maximal runs of letters, digits and apostrophes.
/// Apostrophes at the edge of a run are separators.
pub fn tokenize(text: &str) -> Vec<(String, Range<usize>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |s: usize, e: usize, out: &mut Vec<(String, Range<usize>)>| {
        let run = &text[s..e];
        let trimmed = run.trim_matches(is_apostrophe);
        if !trimmed.is_empty() {
            let lead = run.len() - run.trim_start_matches(is_apostrophe).len();
            let s = s + lead;
            out.push((trimmed.to_string(), s..s + trimmed.len()));
        }
    };
    for (i, c) in text.char_indices() {
        let word = c.is_alphanumeric() || is_apostrophe(c);
        match (word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                push(s, i, &mut out);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push(s, text.len(), &mut out);
    }
    out
}

pub fn fold(word: &str) -> String {
    word.to_lowercase()
}

const EXCEPTIONS: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "people"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("went", "go"),
    ("gone", "go"),
    ("goes", "go"),
    ("is", "be"),
    ("am", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("bought", "buy"),
    ("brought", "bring"),
    ("thought", "think"),
    ("took", "take"),
    ("taken", "take"),
    ("saw", "see"),
    ("seen", "see"),
    ("stayed", "stay"),
    ("news", "news"),
    ("always", "always"),
    ("perhaps", "perhaps"),
    ("series", "series"),
    ("species", "species"),
    ("sometimes", "sometimes"),
    ("during", "during"),
    ("something", "something"),
    ("nothing", "nothing"),
    ("anything", "anything"),
    ("everything", "everything"),
];

fn is_vowel_at(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel_at(w, i - 1),
        _ => false,
    }
}

/// Number of vowel-consonant sequences in `w`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let v = is_vowel_at(w, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| is_vowel_at(w, i))
}

/// consonant-vowel-consonant ending, last consonant not w/x/y
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && !is_vowel_at(w, n - 3)
        && is_vowel_at(w, n - 2)
        && !is_vowel_at(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Repairs a stem after removing -ed/-ing.
fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        return format!("{stem}e");
    }
    if n >= 2
        && b[n - 1] == b[n - 2]
        && !is_vowel_at(b, n - 1)
        && !matches!(b[n - 1], b'l' | b's' | b'z')
    {
        return stem[..n - 1].to_string();
    }
    if measure(b) == 1 && ends_cvc(b) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// One suffix-rule step; `None` when no rule applies.
fn suffix_step(w: &str) -> Option<String> {
    if !w.is_ascii() {
        return None;
    }
    if let Some(stem) = w.strip_suffix("'s").or_else(|| w.strip_suffix('\'')) {
        return (!stem.is_empty()).then(|| stem.to_string());
    }
    if w.len() > 4 {
        if let Some(stem) = w.strip_suffix("ies") {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = w.strip_suffix("es") {
        if stem.ends_with("ss")
            || stem.ends_with("us")
            || stem.ends_with('x')
            || stem.ends_with('z')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
        {
            return Some(stem.to_string());
        }
    }
    if w.len() > 3
        && w.ends_with('s')
        && !w.ends_with("ss")
        && !w.ends_with("us")
        && !w.ends_with("is")
    {
        return Some(w[..w.len() - 1].to_string());
    }
    if let Some(stem) = w.strip_suffix("eed") {
        return (measure(stem.as_bytes()) > 0).then(|| format!("{stem}ee"));
    }
    for suffix in ["ed", "ing"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if stem.len() >= 2 && has_vowel(stem.as_bytes()) {
                return Some(restore_stem(stem));
            }
        }
    }
    None
}

/// Lowercase lemma of a folded word: exception table first, then suffix
/// rules applied until none fires. Each suffix step shortens the word, so
/// the loop terminates, and its result is a fixed point.
pub fn lemmatize(folded_word: &str) -> String {
    let mut word = folded_word.to_string();
    loop {
        if let Some((_, lemma)) = EXCEPTIONS.iter().find(|(w, _)| *w == word) {
            return lemma.to_string();
        }
        match suffix_step(&word) {
            Some(next) if !next.is_empty() && next != word => word = next,
            _ => return word,
        }
    }
}

/// Lemma of an arbitrary-case word.
pub fn lemma_of(word: &str) -> String {
    lemmatize(&fold(word))
}

const FUNCTION_WORDS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
    "our", "his", "their", "its", "mine", "yours", "ours", "theirs", "myself", "yourself", "a",
    "an", "the", "this", "that", "these", "those", "to", "of", "in", "on", "at", "by", "for",
    "with", "from", "into", "towards", "toward", "about", "as", "and", "or", "but", "if", "so",
    "not", "no", "is", "am", "are", "was", "were", "be", "been", "being", "do", "does", "did",
    "have", "has", "had", "will", "would", "can", "could", "may", "might", "shall", "should",
    "must", "here", "there", "what", "which", "who", "whom", "where", "when", "why", "how", "yes",
    "very", "also", "too", "just", "then", "than", "some", "any", "all", "many", "much", "more",
    "most", "before", "after", "up", "down", "out", "over", "there's", "it's", "i'm", "don't",
    "okay", "ok", "oh", "um", "uh", "yeah",
];

const MODALS: &[&str] = &[
    "will", "would", "can", "could", "may", "might", "shall", "should", "must",
];

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "our", "his", "her", "their",
];

/// Heuristic noun/verb/other tagger. Verbs named by POS-constrained lexicon
/// terms seed the verb list.
#[derive(Debug, Clone, Default)]
pub struct Tagger {
    verb_seeds: HashSet<String>,
}

impl Tagger {
    pub fn new<I, S>(verb_lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            verb_seeds: verb_lemmas
                .into_iter()
                .map(|s| lemma_of(s.as_ref()))
                .collect(),
        }
    }

    pub fn from_lexicon(lexicon: &SynonymLexicon) -> Self {
        Self::new(
            lexicon
                .entries()
                .flat_map(|(_, syns)| syns.iter())
                .flat_map(|s| s.terms.iter())
                .filter(|t| t.pos == Some(PosConstraint::Verb))
                .map(|t| t.word.as_str()),
        )
    }

    /// Tags tokens. `overrides[i]`, when present, wins for token `i`.
    pub fn pos_tag(
        &self,
        tokens: &[(String, Range<usize>)],
        overrides: Option<&[(Option<String>, Option<PosTag>)]>,
    ) -> Vec<AnnotatedToken> {
        let mut out: Vec<AnnotatedToken> = Vec::with_capacity(tokens.len());
        for (i, (surface, span)) in tokens.iter().enumerate() {
            let folded = fold(surface);
            let (lemma_override, pos_override) = overrides
                .and_then(|o| o.get(i))
                .cloned()
                .unwrap_or((None, None));
            let lemma = lemma_override.unwrap_or_else(|| lemmatize(&folded));
            let pos = pos_override.unwrap_or_else(|| {
                let prev = i.checked_sub(1).map(|j| out[j].folded.as_str());
                self.heuristic_tag(&folded, &lemma, prev)
            });
            out.push(AnnotatedToken {
                surface: surface.clone(),
                folded,
                lemma,
                pos,
                span: span.clone(),
            });
        }
        out
    }

    fn heuristic_tag(&self, folded: &str, lemma: &str, prev: Option<&str>) -> PosTag {
        if FUNCTION_WORDS.contains(&folded) {
            return PosTag::Other;
        }
        if let Some(prev) = prev {
            if prev == "to" || MODALS.contains(&prev) {
                return PosTag::Verb;
            }
            if DETERMINERS.contains(&prev) {
                return PosTag::Noun;
            }
        }
        if self.verb_seeds.contains(lemma) {
            return PosTag::Verb;
        }
        PosTag::Noun
    }

    /// tokenize, fold, lemmatize and tag, honoring supplied tokens.
    pub fn annotate(&self, utterance: &Utterance) -> AnnotatedUtterance {
        let tokens = match &utterance.supplied_tokens {
            Some(supplied) => {
                let mut cursor = 0;
                let mut tokens = Vec::with_capacity(supplied.len());
                let mut overrides = Vec::with_capacity(supplied.len());
                for tok in supplied {
                    let start = utterance.text[cursor..]
                        .find(&tok.surface)
                        .map_or(cursor, |off| cursor + off);
                    let end = start + tok.surface.len();
                    cursor = end.min(utterance.text.len());
                    tokens.push((tok.surface.clone(), start..end));
                    overrides.push((tok.lemma.as_deref().map(fold), tok.pos));
                }
                self.pos_tag(&tokens, Some(&overrides))
            }
            None => self.pos_tag(&tokenize(&utterance.text), None),
        };
        AnnotatedUtterance {
            source: utterance.clone(),
            tokens,
        }
    }
}

/// Levenshtein distance over chars (unit insert, delete, substitute).
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance_chars(&a, &b)
}

pub(crate) fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=a.len()).collect();
    for (j, cb) in b.iter().enumerate() {
        let mut diag = row[0];
        row[0] = j + 1;
        for (i, ca) in a.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[i + 1];
            row[i + 1] = sub.min(row[i] + 1).min(diag + 1);
        }
    }
    row[a.len()]
}
