//! Shared text utilities: the tokenizer used by indexing, gating and the
//! built-in adapters, token-distribution entropy, and date recognition.

use std::collections::HashMap;

/// Lowercases, splits on non-alphanumerics, drops tokens shorter than two
/// characters. No stemming, no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(|t| t.to_lowercase())
        .collect()
}

/// Token frequency map over `tokenize` output.
pub fn term_frequencies(text: &str) -> HashMap<String, u32> {
    let mut tf = HashMap::new();
    for t in tokenize(text) {
        *tf.entry(t).or_insert(0) += 1;
    }
    tf
}

/// Shannon entropy (bits) of the token frequency distribution.
pub fn token_entropy_bits(text: &str) -> (f64, usize) {
    let tf = term_frequencies(text);
    let total: u32 = tf.values().sum();
    if total == 0 {
        return (0.0, 0);
    }
    let mut h = 0.0;
    for &count in tf.values() {
        let p = count as f64 / total as f64;
        h -= p * p.log2();
    }
    (h, total as usize)
}

/// Days between two unix-second timestamps, as a real number.
pub fn days_between(a: i64, b: i64) -> f64 {
    (a - b).abs() as f64 / 86_400.0
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

/// Extracts the first explicit date in the text as a unix timestamp (UTC
/// midnight). Recognizes ISO `YYYY-MM-DD` and `<month name> YYYY` /
/// `<month name> D, YYYY` forms.
pub fn extract_date(text: &str) -> Option<i64> {
    if let Some(ts) = extract_iso_date(text) {
        return Some(ts);
    }
    extract_month_date(text)
}

/// True when the text contains any explicit date/time expression.
pub fn has_temporal_expression(text: &str) -> bool {
    if extract_date(text).is_some() {
        return true;
    }
    let lower = text.to_lowercase();
    let keywords = [
        "when", "yesterday", "today", "tomorrow", "last week", "last month", "last year",
        "next week", "next month", "ago",
    ];
    keywords.iter().any(|k| contains_word(&lower, k)) || contains_year(&lower)
}

fn contains_word(lower: &str, needle: &str) -> bool {
    lower
        .split(|c: char| !c.is_alphanumeric() && c != ' ')
        .any(|chunk| {
            if needle.contains(' ') {
                chunk.contains(needle)
            } else {
                chunk.split_whitespace().any(|w| w == needle)
            }
        })
}

fn contains_year(lower: &str) -> bool {
    lower
        .split(|c: char| !c.is_ascii_digit())
        .any(|chunk| chunk.len() == 4 && chunk.parse::<i32>().map_or(false, |y| (1900..2100).contains(&y)))
}

fn extract_iso_date(text: &str) -> Option<i64> {
    let bytes = text.as_bytes();
    for i in 0..bytes.len().saturating_sub(9) {
        let window = &text[i..];
        if let Some(ts) = parse_iso_prefix(window) {
            // require a non-digit boundary on the left
            if i == 0 || !bytes[i - 1].is_ascii_digit() {
                return Some(ts);
            }
        }
    }
    None
}

fn parse_iso_prefix(s: &str) -> Option<i64> {
    let b = s.as_bytes();
    if b.len() < 10 {
        return None;
    }
    if !(b[0..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit))
    {
        return None;
    }
    if b.len() > 10 && b[10].is_ascii_digit() {
        return None;
    }
    let year: i32 = s[0..4].parse().ok()?;
    let month: u32 = s[5..7].parse().ok()?;
    let day: u32 = s[8..10].parse().ok()?;
    timestamp_utc(year, month, day)
}

fn extract_month_date(text: &str) -> Option<i64> {
    let words: Vec<&str> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .collect();
    for (i, w) in words.iter().enumerate() {
        let lower = w.to_lowercase();
        if let Some(month_ix) = MONTHS.iter().position(|m| *m == lower) {
            // "<month> D, YYYY" or "<month> YYYY"
            let rest: Vec<&str> = words[i + 1..].iter().take(2).copied().collect();
            let clean = |s: &str| -> Option<u32> {
                let t: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
                t.parse().ok()
            };
            match rest.as_slice() {
                [a, b] => {
                    if let (Some(day), Some(year)) = (clean(a), clean(b)) {
                        if (1..=31).contains(&day) && (1900..2100).contains(&(year as i32)) {
                            return timestamp_utc(year as i32, month_ix as u32 + 1, day);
                        }
                    }
                    if let Some(year) = clean(a) {
                        if (1900..2100).contains(&(year as i32)) {
                            return timestamp_utc(year as i32, month_ix as u32 + 1, 1);
                        }
                    }
                }
                [a] => {
                    if let Some(year) = clean(a) {
                        if (1900..2100).contains(&(year as i32)) {
                            return timestamp_utc(year as i32, month_ix as u32 + 1, 1);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Unix timestamp for UTC midnight of a calendar date (proleptic Gregorian).
pub fn timestamp_utc(year: i32, month: u32, day: u32) -> Option<i64> {
    if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) {
        return None;
    }
    // days since 1970-01-01 via the civil-from-days inverse
    let y = year as i64 - if month <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (month as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    let days = era * 146_097 + doe - 719_468;
    Some(days * 86_400)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 {
                29
            } else {
                28
            }
        }
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tokenizer_basics() {
        assert_eq!(
            tokenize("Alice MET Bob-Smith, twice!"),
            vec!["alice", "met", "bob", "smith", "twice"]
        );
        assert_eq!(tokenize("a b c"), Vec::<String>::new());
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn entropy_examples() {
        let (h, n) = token_entropy_bits("alpha beta gamma delta");
        assert_relative_eq!(h, 2.0, epsilon = 1e-12);
        assert_eq!(n, 4);

        let (h, _) = token_entropy_bits("aaaa aaaa aaaa");
        assert_eq!(h, 0.0);

        let (h, _) = token_entropy_bits("aa bb");
        assert_relative_eq!(h, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_increases_when_splitting_a_symbol() {
        // refining a distribution by splitting one symbol into two distinct
        // ones strictly increases entropy
        let (before, _) = token_entropy_bits("aa aa bb cc");
        let (after, _) = token_entropy_bits("aa dd bb cc");
        assert!(after > before);
    }

    #[test]
    fn iso_date_extraction() {
        let ts = extract_date("moved on 2024-03-15 to Berlin").unwrap();
        assert_eq!(ts, timestamp_utc(2024, 3, 15).unwrap());
        assert!(extract_date("no dates here").is_none());
        assert!(extract_date("version 12024-03-155 is not a date").is_none());
    }

    #[test]
    fn month_name_extraction() {
        assert_eq!(
            extract_date("back in March 2024 it rained"),
            timestamp_utc(2024, 3, 1)
        );
        assert_eq!(
            extract_date("on January 15, 2021 we met"),
            timestamp_utc(2021, 1, 15)
        );
    }

    #[test]
    fn epoch_arithmetic() {
        assert_eq!(timestamp_utc(1970, 1, 1), Some(0));
        assert_eq!(timestamp_utc(1970, 1, 2), Some(86_400));
        assert_eq!(timestamp_utc(2000, 3, 1), Some(951_868_800));
        assert_eq!(timestamp_utc(2024, 2, 30), None);
    }

    #[test]
    fn temporal_expression_detection() {
        assert!(has_temporal_expression("When did Alice move?"));
        assert!(has_temporal_expression("it happened in 2019"));
        assert!(has_temporal_expression("see you tomorrow"));
        assert!(!has_temporal_expression("what is a good breakfast"));
    }
}
