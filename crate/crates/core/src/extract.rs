//! Rule-based entity and fact extraction. Deterministic, language-agnostic,
//! and pluggable; nothing here calls a model.

use std::collections::BTreeSet;

/// Sentence-leading function words that are capitalized only by position.
const LEADING_STOPWORDS: [&str; 24] = [
    "the", "a", "an", "this", "that", "these", "those", "it", "he", "she", "they", "we", "i",
    "you", "what", "who", "whom", "when", "where", "why", "how", "which", "is", "are",
];

/// Canonical entity id: lowercase, words joined by underscores.
pub fn canonical_entity(words: &[&str]) -> String {
    words
        .iter()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

fn is_capitalized(word: &str) -> bool {
    word.chars()
        .find(|c| c.is_alphanumeric())
        .map_or(false, |c| c.is_uppercase())
}

fn strip_word(word: &str) -> String {
    word.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Extracts entity ids from text: runs of capitalized words (a lone
/// sentence-initial function word does not count), plus case-insensitive
/// hits against the known-entity dictionary.
pub fn extract_entities(content: &str, known: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for sentence in content.split(['.', '!', '?', ';', '\n']) {
        let words: Vec<&str> = sentence.split_whitespace().collect();
        let mut i = 0;
        while i < words.len() {
            if is_capitalized(words[i]) {
                let start = i;
                let mut end = i + 1;
                while end < words.len() && is_capitalized(words[end]) {
                    end += 1;
                }
                let run: Vec<&str> = words[start..end].to_vec();
                let id = canonical_entity(&run);
                let lone_leading = start == 0
                    && run.len() == 1
                    && LEADING_STOPWORDS.contains(&strip_word(run[0]).to_lowercase().as_str());
                if !id.is_empty() && !lone_leading {
                    out.insert(id);
                }
                i = end;
            } else {
                i += 1;
            }
        }
    }
    // dictionary pass: known entities matched as word sequences, any case
    let lower_tokens: Vec<String> = content
        .split_whitespace()
        .map(|w| strip_word(w).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    for entity in known {
        let parts: Vec<&str> = entity.split('_').collect();
        if parts.is_empty() {
            continue;
        }
        let hit = lower_tokens
            .windows(parts.len())
            .any(|w| w.iter().map(String::as_str).eq(parts.iter().copied()));
        if hit {
            out.insert(entity.clone());
        }
    }
    out
}

/// A subject–predicate–object assertion extracted from one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedFact {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl ExtractedFact {
    /// The string form handed to the embedder.
    pub fn surface(&self) -> String {
        format!(
            "{} {} {}",
            self.subject,
            self.predicate.replace('_', " "),
            self.object.replace('_', " ")
        )
    }
}

/// Extracts facts anchored on recognized entities: within each sentence the
/// first entity becomes the subject; the object is the next entity if one
/// follows, otherwise the trailing words; the words in between form the
/// predicate.
pub fn extract_facts(content: &str, entities: &BTreeSet<String>) -> Vec<ExtractedFact> {
    if entities.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for sentence in content.split(['.', '!', '?', ';', '\n']) {
        let words: Vec<&str> = sentence.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let spans = entity_spans(&words, entities);
        let Some((_, subj_end, subject)) = spans.first().cloned() else {
            continue;
        };
        let (pred_words, object) = if let Some((obj_start, _, object)) = spans.get(1).cloned() {
            (&words[subj_end..obj_start], object)
        } else {
            let after = &words[subj_end..];
            if after.len() < 2 {
                continue;
            }
            // single verb word, remainder is the object
            let obj_words: Vec<String> = after[1..]
                .iter()
                .map(|w| strip_word(w).to_lowercase())
                .filter(|w| !w.is_empty() && !["a", "an", "the"].contains(&w.as_str()))
                .collect();
            if obj_words.is_empty() {
                continue;
            }
            out.push(ExtractedFact {
                subject,
                predicate: strip_word(after[0]).to_lowercase(),
                object: obj_words.join("_"),
            });
            continue;
        };
        let predicate: Vec<String> = pred_words
            .iter()
            .map(|w| strip_word(w).to_lowercase())
            .filter(|w| !w.is_empty() && !["a", "an", "the"].contains(&w.as_str()))
            .collect();
        if predicate.is_empty() {
            continue;
        }
        out.push(ExtractedFact {
            subject,
            predicate: predicate.join("_"),
            object,
        });
    }
    out
}

/// (start, end, id) spans of known entities inside a word slice, leftmost
/// and longest first.
fn entity_spans(
    words: &[&str],
    entities: &BTreeSet<String>,
) -> Vec<(usize, usize, String)> {
    let lower: Vec<String> = words
        .iter()
        .map(|w| strip_word(w).to_lowercase())
        .collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut matched = None;
        // longest match wins
        for len in (1..=3.min(words.len() - i)).rev() {
            let candidate = lower[i..i + len].join("_");
            if entities.contains(&candidate) {
                matched = Some((i, i + len, candidate));
                break;
            }
        }
        if let Some(span) = matched {
            i = span.1;
            spans.push(span);
        } else {
            i += 1;
        }
    }
    spans
}
