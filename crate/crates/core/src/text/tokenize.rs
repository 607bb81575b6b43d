use serde::{Deserialize, Serialize};

/// Coarse token class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punctuation,
    Number,
}

/// A token with its byte span in the source text.
///
/// `surface` preserves case; lowercasing happens only when deriving a lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    /// `(start, end)` byte offsets, end exclusive.
    pub span: (usize, usize),
    pub sentence_index: usize,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    pub fn starts_uppercase(&self) -> bool {
        self.surface.chars().next().is_some_and(char::is_uppercase)
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_sentence_final(surface: &str) -> bool {
    matches!(surface, "." | "!" | "?")
}

/// Splits `text` into word, number and punctuation tokens.
///
/// Words are runs of alphabetic characters, with apostrophes allowed between
/// letters (`don't`). Numbers are digit runs with `.` or `,` allowed between
/// digits. Every other non-whitespace character is its own punctuation token.
/// A sentence ends at `.`, `!` or `?` when whitespace and then an uppercase
/// letter follow; abbreviations are not special-cased.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_alphabetic() {
            i += 1;
            while i < chars.len() {
                let next = chars[i].1;
                if next.is_alphabetic() {
                    i += 1;
                } else if is_apostrophe(next) && chars.get(i + 1).is_some_and(|&(_, c)| c.is_alphabetic()) {
                    i += 2;
                } else {
                    break;
                }
            }
            TokenKind::Word
        } else if c.is_numeric() {
            i += 1;
            while i < chars.len() {
                let next = chars[i].1;
                if next.is_numeric() {
                    i += 1;
                } else if (next == '.' || next == ',') && chars.get(i + 1).is_some_and(|&(_, c)| c.is_numeric()) {
                    i += 2;
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else {
            i += 1;
            TokenKind::Punctuation
        };
        let (s, e) = (byte_at(start), byte_at(i));
        tokens.push(Token { surface: text[s..e].to_string(), kind, span: (s, e), sentence_index: 0 });
    }
    assign_sentences(text, &mut tokens);
    tokens
}

fn assign_sentences(text: &str, tokens: &mut [Token]) {
    let mut sentence = 0;
    for i in 0..tokens.len() {
        tokens[i].sentence_index = sentence;
        if !is_sentence_final(&tokens[i].surface) {
            continue;
        }
        if let Some(next) = tokens.get(i + 1) {
            let gap = &text[tokens[i].span.1..next.span.0];
            if !gap.is_empty() && next.starts_uppercase() {
                sentence += 1;
            }
        }
    }
}

/// The whitespace runs around and between tokens: `tokens.len() + 1` slices,
/// where slice `i` precedes token `i` and the last one trails the text.
pub fn whitespace_runs<'a>(text: &'a str, tokens: &[Token]) -> Vec<&'a str> {
    let mut runs = Vec::with_capacity(tokens.len() + 1);
    let mut cursor = 0;
    for t in tokens {
        runs.push(&text[cursor..t.span.0]);
        cursor = t.span.1;
    }
    runs.push(&text[cursor..]);
    runs
}

/// Inverse of [`tokenize`] given the runs from [`whitespace_runs`].
pub fn detokenize(tokens: &[Token], runs: &[&str]) -> String {
    let mut out = String::new();
    for (t, ws) in tokens.iter().zip(runs) {
        out.push_str(ws);
        out.push_str(&t.surface);
    }
    if let Some(tail) = runs.get(tokens.len()) {
        out.push_str(tail);
    }
    out
}

/// A contiguous run of tokens sharing one `sentence_index`.
#[derive(Debug, Clone, Copy)]
pub struct Sentence<'a> {
    /// Document index of `tokens[0]`.
    pub first_token: usize,
    pub tokens: &'a [Token],
}

impl Sentence<'_> {
    pub fn contains(&self, token_index: usize) -> bool {
        token_index >= self.first_token && token_index < self.first_token + self.tokens.len()
    }

    /// Surfaces joined by single spaces; used as a whitespace-insensitive key.
    pub fn normalized_text(&self) -> String {
        join_surfaces(self.tokens)
    }
}

pub fn join_surfaces(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

/// Groups tokens into sentences.
pub fn sentences(tokens: &[Token]) -> Vec<Sentence<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=tokens.len() {
        if i == tokens.len() || tokens[i].sentence_index != tokens[start].sentence_index {
            out.push(Sentence { first_token: start, tokens: &tokens[start..i] });
            start = i;
        }
    }
    out
}
