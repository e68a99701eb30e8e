//! Tokenization shared by the lexical indexes and query-length damping.
//!
//! Text is lowercased and split on every character that is not
//! alphanumeric. There is no stemming and no stopword list, so the token
//! count of a query is exactly what the damping factor sees.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

pub fn tokenize(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        // Lowercasing can expand a char (e.g. combining marks); anything
        // non-alphanumeric it produces acts as a boundary.
        for lc in c.to_lowercase() {
            if lc.is_alphanumeric() {
                current.push(lc);
            } else if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenStream { tokens }
}
