//! Recovering the chosen option letter from a model reply.

use std::sync::LazyLock;

use regex::Regex;

static PROTOCOL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)the\s+answer\s+is").expect("valid regex"));
static STANDALONE_CAPITAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[A-Z]\b").expect("valid regex"));

const LEAD_IN: &[char] = &[':', '*', '"', '\'', '`', '(', '[', '{', '-', '_'];
const TRAIL: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '*', '`', '_'];

fn in_range(letter: char, n_choices: usize) -> bool {
    letter.is_ascii_uppercase() && ((letter as u8 - b'A') as usize) < n_choices
}

/// Letter following one "the answer is" occurrence, if it is a standalone
/// option letter. Lowercase letters only count when bracketed or followed
/// by punctuation or end of line, so "the answer is a dog" does not read
/// as option A.
fn letter_after(tail: &str) -> Option<char> {
    let mut bracketed = false;
    let mut chars = tail.char_indices();
    let (pos, letter) = loop {
        let (i, c) = chars.next()?;
        if c.is_whitespace() {
            continue;
        }
        if LEAD_IN.contains(&c) {
            bracketed |= matches!(c, '(' | '[' | '{');
            continue;
        }
        break (i, c);
    };
    if !letter.is_ascii_alphabetic() {
        return None;
    }
    let next = tail[pos + letter.len_utf8()..].chars().next();
    let accepted = if letter.is_ascii_uppercase() {
        next.is_none_or(|c| !c.is_alphanumeric())
    } else {
        match next {
            None => true,
            Some(c) if c == '\n' || c == '\r' || TRAIL.contains(&c) => true,
            Some(c) => bracketed && !c.is_alphanumeric(),
        }
    };
    accepted.then(|| letter.to_ascii_uppercase())
}

/// The option letter a reply commits to, or `None` if it cannot be read.
///
/// The last "The answer is X" with X in range wins. Without one, the last
/// standalone capital letter in range is taken.
pub fn extract_answer_letter(reply: &str, n_choices: usize) -> Option<char> {
    let n = n_choices.min(26);
    let from_protocol = PROTOCOL
        .find_iter(reply)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .find_map(|m| letter_after(&reply[m.end()..]).filter(|&l| in_range(l, n)));
    if from_protocol.is_some() {
        return from_protocol;
    }
    STANDALONE_CAPITAL
        .find_iter(reply)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .filter_map(|m| m.as_str().chars().next())
        .find(|&l| in_range(l, n))
}
