use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// Suffix carried by the last symbol of every word.
pub const END_OF_WORD: &str = "</w>";

#[derive(Clone, Debug, PartialEq, Eq)]
struct Symbol {
    text: String,
    word_end: bool,
}

impl Symbol {
    fn render(&self) -> String {
        if self.word_end {
            format!("{}{END_OF_WORD}", self.text)
        } else {
            self.text.clone()
        }
    }
}

fn split_chars(word: &str) -> Vec<Symbol> {
    let n = word.chars().count();
    word.chars()
        .enumerate()
        .map(|(i, c)| Symbol {
            text: c.to_string(),
            word_end: i + 1 == n,
        })
        .collect()
}

fn apply_merge(symbols: &mut Vec<Symbol>, left: &str, right: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i].text == left && symbols[i + 1].text == right {
            let next = symbols.remove(i + 1);
            symbols[i].text.push_str(&next.text);
            symbols[i].word_end = next.word_end;
        }
        i += 1;
    }
}

/// Byte-pair-encoding merge list.
///
/// Pairs are identified by symbol text only; the end-of-word flag rides on
/// the last symbol of a word and survives merges. So `ab` and `abc` both
/// contribute to the pair `(a, b)`, and a word's final subword is rendered
/// with the [`END_OF_WORD`] suffix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
}

impl BpeModel {
    /// Greedy learning: repeatedly merge the most frequent adjacent pair,
    /// breaking count ties by the lexicographically smallest pair. Stops
    /// early when no pair remains.
    pub fn learn(table: &BTreeMap<String, usize>, num_merges: usize) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Data("cannot learn BPE merges from an empty table".into()));
        }
        let mut words: Vec<(Vec<Symbol>, usize)> = table
            .iter()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, &c)| (split_chars(w), c))
            .collect();
        let mut merges = Vec::with_capacity(num_merges);
        for _ in 0..num_merges {
            let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
            for (syms, freq) in &words {
                for pair in syms.windows(2) {
                    *counts.entry((&pair[0].text, &pair[1].text)).or_default() += freq;
                }
            }
            let Some(((l, r), _)) = counts
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            else {
                break;
            };
            let (l, r) = (l.to_string(), r.to_string());
            for (syms, _) in &mut words {
                apply_merge(syms, &l, &r);
            }
            merges.push((l, r));
        }
        Ok(Self { merges })
    }

    /// Frequency table of the tokens in `streams`.
    pub fn word_counts<'a, I, S>(streams: I) -> BTreeMap<String, usize>
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut table = BTreeMap::new();
        for stream in streams {
            for w in stream.as_ref() {
                *table.entry(w.clone()).or_default() += 1;
            }
        }
        table
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut syms = split_chars(word);
        for (l, r) in &self.merges {
            if syms.len() < 2 {
                break;
            }
            apply_merge(&mut syms, l, r);
        }
        syms.iter().map(Symbol::render).collect()
    }

    pub fn encode(&self, words: &[String]) -> Vec<String> {
        let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
        let mut out = Vec::new();
        for w in words {
            let pieces = cache.entry(w).or_insert_with(|| self.encode_word(w));
            out.extend(pieces.iter().cloned());
        }
        out
    }

    /// Joins subwords back into words. A trailing unterminated word is kept.
    pub fn decode(subwords: &[String]) -> Vec<String> {
        let mut words = Vec::new();
        let mut current = String::new();
        for s in subwords {
            match s.strip_suffix(END_OF_WORD) {
                Some(stem) => {
                    current.push_str(stem);
                    words.push(std::mem::take(&mut current));
                }
                None => current.push_str(s),
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        words
    }

    /// One merge per line, `left right`, in merge order.
    pub fn to_file_string(&self) -> String {
        self.merges.iter().map(|(l, r)| format!("{l} {r}\n")).collect()
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => return Err(Error::Data(format!("merge file line {}: expected `left right`", i + 1))),
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !merges.iter().all(|m| seen.insert(m.clone())) {
            return Err(Error::Data("merge file contains duplicate pairs".into()));
        }
        Ok(Self { merges })
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

    fn table(entries: &[(&str, usize)]) -> BTreeMap<String, usize> {
        entries.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    #[test]
    fn first_merge_is_most_frequent_pair() {
        let m = BpeModel::learn(&table(&[("ab", 2), ("abc", 1)]), 1).unwrap();
        assert_eq!(m.merges(), [("a".to_string(), "b".to_string())]);
        assert_eq!(m.encode_word("ab"), ["ab</w>"]);
        assert_eq!(m.encode_word("abc"), ["ab", "c</w>"]);
    }

    #[test]
    fn zero_merges_is_character_level() {
        let m = BpeModel::learn(&table(&[("ab", 1)]), 0).unwrap();
        assert_eq!(m.encode_word("ab"), ["a", "b</w>"]);
    }

    #[test]
    fn ties_take_the_smallest_pair() {
        let m = BpeModel::learn(&table(&[("xy", 1), ("ab", 1)]), 1).unwrap();
        assert_eq!(m.merges()[0], ("a".to_string(), "b".to_string()));
    }

    #[test]
    fn stops_when_no_pairs_remain() {
        let m = BpeModel::learn(&table(&[("ab", 3)]), 10).unwrap();
        assert_eq!(m.merges().len(), 1);
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(BpeModel::learn(&BTreeMap::new(), 3).is_err());
    }

    #[test]
    fn merge_file_round_trip() {
        let m = BpeModel::learn(&table(&[("lower", 5), ("lowest", 2), ("newer", 6)]), 6).unwrap();
        let text = m.to_file_string();
        assert_eq!(BpeModel::from_file_string(&text).unwrap(), m);
        assert!(BpeModel::from_file_string("a b c\n").is_err());
        assert!(BpeModel::from_file_string("a b\na b\n").is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(
            words in prop::collection::vec("[a-f]{1,7}", 1..30),
            merges in 0usize..25,
        ) {
            let t = BpeModel::word_counts([&words]);
            let m = BpeModel::learn(&t, merges).unwrap();
            for w in &words {
                let pieces = m.encode_word(w);
                prop_assert_eq!(BpeModel::decode(&pieces), vec![w.clone()]);
            }
            prop_assert_eq!(BpeModel::decode(&m.encode(&words)), words.clone());
        }

        #[test]
        fn learning_is_deterministic(words in prop::collection::vec("[a-d]{1,5}", 1..30)) {
            let t = BpeModel::word_counts([&words]);
            prop_assert_eq!(BpeModel::learn(&t, 12).unwrap(), BpeModel::learn(&t, 12).unwrap());
        }
    }
}
