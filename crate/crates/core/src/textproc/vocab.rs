use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Bijective token/id mapping with four reserved ids in front.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps the `max_size` most frequent tokens; equal counts are ordered
    /// lexicographically. Reserved tokens are excluded from counting and do
    /// not count towards `max_size`.
    pub fn build<'a, I, S>(streams: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        if max_size == 0 {
            return Err(Error::Config("vocabulary max_size must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for stream in streams {
            for tok in stream.as_ref() {
                if !RESERVED.contains(&tok.as_str()) {
                    *counts.entry(tok.as_str()).or_default() += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Ok(Self::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string())))
    }

    /// Vocabulary whose corpus tokens get ids 4, 5, ... in iteration order.
    /// Duplicates and reserved strings are skipped.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut token_to_id: HashMap<String, usize> =
            id_to_token.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        for tok in tokens {
            if token_to_id.contains_key(&tok) {
                continue;
            }
            token_to_id.insert(tok.clone(), id_to_token.len());
            id_to_token.push(tok);
        }
        Self {
            id_to_token,
            token_to_id,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Result<&str> {
        self.id_to_token
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| Error::Data(format!("token id {id} out of range (vocabulary has {})", self.len())))
    }

    /// Corpus tokens in id order (without the reserved prefix).
    pub fn corpus_tokens(&self) -> &[String] {
        &self.id_to_token[RESERVED.len()..]
    }

    /// Maps tokens to ids, optionally right-padding with PAD.
    /// Returns the ids and a parallel 1/0 mask.
    pub fn encode(&self, tokens: &[String], pad_to: Option<usize>) -> Result<(Vec<usize>, Vec<f64>)> {
        let len = pad_to.unwrap_or(tokens.len());
        if len < tokens.len() {
            return Err(Error::Contract(format!(
                "pad_to {len} is shorter than the {} tokens",
                tokens.len()
            )));
        }
        let mut ids: Vec<usize> = tokens.iter().map(|t| self.id(t)).collect();
        let mut mask = vec![1.0; ids.len()];
        ids.resize(len, PAD);
        mask.resize(len, 0.0);
        Ok((ids, mask))
    }

    /// Maps ids back to tokens, dropping PAD, BOS and EOS.
    pub fn decode(&self, ids: &[usize]) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let tok = self.token(id)?;
            if !matches!(id, PAD | BOS | EOS) {
                out.push(tok.to_string());
            }
        }
        Ok(out)
    }

    /// One corpus token per line; line `i` holds id `i + 4`.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for tok in self.corpus_tokens() {
            s.push_str(tok);
            s.push('\n');
        }
        s
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || RESERVED.contains(&t.as_str()) {
                return Err(Error::Data(format!("vocabulary line {}: invalid token {t:?}", i + 1)));
            }
        }
        let vocab = Self::from_tokens(tokens.iter().cloned());
        if vocab.len() != tokens.len() + RESERVED.len() {
            return Err(Error::Data("vocabulary file contains duplicate tokens".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_file_string().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file_string(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn keeps_most_frequent_plus_reserved() {
        let stream = toks("a b c d e f g h i j");
        let v = Vocabulary::build([&stream], 5).unwrap();
        assert_eq!(v.len(), 9);
    }

    #[test]
    fn ties_break_lexicographically() {
        let stream = toks("b a b a a b");
        let v = Vocabulary::build([&stream], 1).unwrap();
        assert_eq!(v.corpus_tokens(), ["a"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let empty: Vec<String> = vec![];
        assert!(Vocabulary::build([&empty], 3).is_err());
    }

    #[test]
    fn encode_pads_and_masks() {
        let v = Vocabulary::from_tokens(toks("the cat"));
        let (ids, mask) = v.encode(&toks("the"), Some(3)).unwrap();
        assert_eq!(ids, [v.id("the"), PAD, PAD]);
        assert_eq!(mask, [1.0, 0.0, 0.0]);
        assert!(v.encode(&toks("the cat"), Some(1)).is_err());
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let v = Vocabulary::from_tokens(toks("the cat"));
        let (ids, _) = v.encode(&toks("the dog"), None).unwrap();
        assert_eq!(ids[1], UNK);
        assert_eq!(v.decode(&ids).unwrap(), ["the", "<unk>"]);
        assert!(v.decode(&[99]).is_err());
    }

    #[test]
    fn decode_strips_control_tokens() {
        let v = Vocabulary::from_tokens(toks("x y"));
        let ids = [BOS, v.id("x"), v.id("y"), EOS, PAD];
        assert_eq!(v.decode(&ids).unwrap(), ["x", "y"]);
    }

    #[test]
    fn reserved_strings_never_collide() {
        let stream = toks("<unk> <pad> word");
        let v = Vocabulary::build([&stream], 10).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id("<unk>"), UNK);
    }

    #[test]
    fn file_round_trip() {
        let v = Vocabulary::from_tokens(toks("alpha beta gamma"));
        let text = v.to_file_string();
        assert_eq!(text.lines().next(), Some("alpha"));
        assert_eq!(Vocabulary::from_file_string(&text).unwrap(), v);
    }

    proptest! {
        #[test]
        fn order_insensitive(mut words in prop::collection::vec("[a-e]{1,2}", 1..40), max in 1usize..8) {
            let a = Vocabulary::build([&words], max).unwrap();
            words.reverse();
            let b = Vocabulary::build([&words], max).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mappings_are_inverse(words in prop::collection::vec("[a-z]{1,4}", 1..40)) {
            let v = Vocabulary::build([&words], 1000).unwrap();
            for id in 0..v.len() {
                prop_assert_eq!(v.id(v.token(id).unwrap()), id);
            }
            let (ids, _) = v.encode(&words, None).unwrap();
            prop_assert_eq!(v.decode(&ids).unwrap(), words);
        }
    }
}
