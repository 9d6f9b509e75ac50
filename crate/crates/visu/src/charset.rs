//! Character sets mapping glyph characters to class ids.
//!
//! The classifier vocabulary is the charset plus two structural symbols:
//! end-of-sequence (EOS) directly after the last character class, and PAD
//! after EOS. Matching is case-insensitive; letters are stored lowercase.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharsetError {
    #[error("character {0:?} is not in the charset")]
    UnknownChar(char),
    #[error("class id {0} is out of range for charset of {1} characters")]
    UnknownClass(u32, usize),
    #[error("duplicate character {0:?} in charset definition")]
    Duplicate(char),
}

/// Ordered character inventory with EOS/PAD bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset {
    chars: Vec<char>,
}

impl Charset {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self, CharsetError> {
        let mut seen = Vec::new();
        for ch in chars {
            let ch = ch.to_ascii_lowercase();
            if seen.contains(&ch) {
                return Err(CharsetError::Duplicate(ch));
            }
            seen.push(ch);
        }
        Ok(Self { chars: seen })
    }

    /// The ten digits. Used by the toy recognizer configuration.
    pub fn digits() -> Self {
        Self { chars: ('0'..='9').collect() }
    }

    /// Ten digits plus twenty-six letters, the 36-symbol alphanumeric set.
    pub fn alnum36() -> Self {
        let mut chars: Vec<char> = ('0'..='9').collect();
        chars.extend('a'..='z');
        Self { chars }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Number of plain character classes (without EOS/PAD).
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Total classifier classes: characters + EOS + PAD.
    pub fn num_classes(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn eos_id(&self) -> u32 {
        self.chars.len() as u32
    }

    pub fn pad_id(&self) -> u32 {
        self.chars.len() as u32 + 1
    }

    pub fn id_of(&self, ch: char) -> Result<u32, CharsetError> {
        let ch = ch.to_ascii_lowercase();
        self.chars
            .iter()
            .position(|&c| c == ch)
            .map(|p| p as u32)
            .ok_or(CharsetError::UnknownChar(ch))
    }

    /// The character for a plain class id (not EOS/PAD).
    pub fn char_of(&self, id: u32) -> Result<char, CharsetError> {
        self.chars
            .get(id as usize)
            .copied()
            .ok_or(CharsetError::UnknownClass(id, self.chars.len()))
    }

    /// Encodes a label string into class ids.
    pub fn encode(&self, text: &str) -> Result<Vec<u32>, CharsetError> {
        text.chars().map(|c| self.id_of(c)).collect()
    }

    /// Decodes plain class ids back into a string; stops at EOS/PAD.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .take_while(|&&id| id < self.eos_id())
            .map(|&id| self.chars[id as usize])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alnum36_has_36_symbols_and_38_classes() {
        let cs = Charset::alnum36();
        assert_eq!(cs.len(), 36);
        assert_eq!(cs.num_classes(), 38);
        assert_eq!(cs.eos_id(), 36);
        assert_eq!(cs.pad_id(), 37);
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let cs = Charset::alnum36();
        assert_eq!(cs.id_of('A').unwrap(), cs.id_of('a').unwrap());
    }

    #[test]
    fn encode_decode_round_trip() {
        let cs = Charset::digits();
        let ids = cs.encode("0419").unwrap();
        assert_eq!(cs.decode(&ids), "0419");
        assert!(cs.encode("x").is_err());
    }
}
