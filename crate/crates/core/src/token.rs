//! Word and speaker-turn tokens.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdError};

/// Literal text of the speaker-turn marker in transcripts.
pub const SPEAKER_TURN: &str = "<st>";

/// A transcript token: either a spoken word or the speaker-turn marker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Word(String),
    SpeakerTurn,
}

impl Token {
    /// Builds a word token. The text must be non-empty, whitespace-free and
    /// must not collide with the speaker-turn marker.
    pub fn word(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(ScdError::invalid(format!("invalid word token {text:?}")));
        }
        if text == SPEAKER_TURN {
            return Err(ScdError::invalid("word text collides with <st>"));
        }
        Ok(Token::Word(text))
    }

    pub fn is_speaker_turn(&self) -> bool {
        matches!(self, Token::SpeakerTurn)
    }

    pub fn is_word(&self) -> bool {
        matches!(self, Token::Word(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::SpeakerTurn => f.write_str(SPEAKER_TURN),
        }
    }
}

/// An ordered token sequence (reference or hypothesis transcript).
/// Serializes as its space-separated transcript text.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TokenSequence(Vec<Token>);

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }

    /// Tokenizes a transcript: whitespace-split, the exact string `<st>`
    /// becomes a speaker turn and every other token is lower-cased. A token
    /// that only folds to `<st>` (e.g. `<ST>`) is rejected.
    pub fn parse(text: &str) -> Result<Self> {
        text.split_whitespace()
            .map(|raw| {
                if raw == SPEAKER_TURN {
                    return Ok(Token::SpeakerTurn);
                }
                let folded = raw.to_lowercase();
                if folded == SPEAKER_TURN {
                    return Err(ScdError::invalid(format!(
                        "token {raw:?} case-folds to the speaker-turn marker"
                    )));
                }
                Ok(Token::Word(folded))
            })
            .collect::<Result<Vec<_>>>()
            .map(TokenSequence)
    }

    pub fn speaker_turns(&self) -> usize {
        self.0.iter().filter(|t| t.is_speaker_turn()).count()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Token> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [Token];

    fn deref(&self) -> &[Token] {
        &self.0
    }
}

impl From<Vec<Token>> for TokenSequence {
    fn from(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }
}

impl FromIterator<Token> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        TokenSequence(iter.into_iter().collect())
    }
}

impl TryFrom<String> for TokenSequence {
    type Error = ScdError;

    fn try_from(text: String) -> Result<Self> {
        TokenSequence::parse(&text)
    }
}

impl From<TokenSequence> for String {
    fn from(seq: TokenSequence) -> String {
        seq.to_string()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
