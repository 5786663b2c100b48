//! Monolingual corpora and their inverted-index representation.
//!
//! A corpus file holds one document per line with tokens separated by ASCII
//! spaces or tabs. Inverting the document-word index turns every word into a
//! pseudo-document: the list of document ids it occurs in, one entry per
//! occurrence. The topic models treat those pseudo-documents as their
//! "documents" and the corpus documents as their "vocabulary".

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Documents shorter than this are dropped at load time.
pub const DEFAULT_MIN_DOC_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    language: String,
    documents: Vec<Vec<String>>,
}

impl Corpus {
    /// Builds a corpus from already tokenized documents, dropping the ones
    /// with fewer than `min_doc_len` tokens. Document ids are the positions
    /// in the retained list.
    pub fn from_documents<I, D, S>(language: &str, documents: I, min_doc_len: usize) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let documents: Vec<Vec<String>> = documents
            .into_iter()
            .map(|d| d.into_iter().map(Into::into).collect::<Vec<_>>())
            .filter(|d| d.len() >= min_doc_len.max(1))
            .collect();
        if documents.is_empty() {
            return Err(Error::EmptyCorpus {
                min_len: min_doc_len,
            });
        }
        Ok(Corpus {
            language: language.to_string(),
            documents,
        })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn documents(&self) -> &[Vec<String>] {
        &self.documents
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }
}

fn tokenize(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|t| !t.is_empty())
}

/// Parses corpus text (one document per line).
pub fn parse_corpus(text: &str, language: &str, min_doc_len: usize) -> Result<Corpus> {
    let docs = text
        .lines()
        .map(|line| tokenize(line).collect::<Vec<_>>());
    Corpus::from_documents(language, docs, min_doc_len)
}

pub fn load_corpus(path: impl AsRef<Path>, language: &str) -> Result<Corpus> {
    load_corpus_with(path, language, DEFAULT_MIN_DOC_LEN)
}

pub fn load_corpus_with(path: impl AsRef<Path>, language: &str, min_doc_len: usize) -> Result<Corpus> {
    let text = read_utf8(path.as_ref())?;
    parse_corpus(&text, language, min_doc_len)
}

pub(crate) fn read_utf8(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::NotUtf8(path.display().to_string()))
}

/// Bijection between word strings and dense ids, with corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from stored word strings and frequencies.
    pub fn from_parts(words: Vec<String>, freqs: Vec<u64>) -> Result<Self> {
        if words.len() != freqs.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} words but {} frequencies",
                words.len(),
                freqs.len()
            )));
        }
        if words.len() > u32::MAX as usize {
            return Err(Error::InvalidInput("vocabulary too large".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::VocabularyMismatch(format!("duplicate word `{w}`")));
            }
        }
        Ok(Vocabulary {
            words,
            freqs,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn freq(&self, id: u32) -> u64 {
        self.freqs[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }
}

/// Assigns ids by first occurrence and counts every token.
pub fn build_vocabulary(corpus: &Corpus) -> Vocabulary {
    let mut words = Vec::new();
    let mut freqs: Vec<u64> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    for token in corpus.documents.iter().flatten() {
        match index.get(token) {
            Some(&id) => freqs[id as usize] += 1,
            None => {
                index.insert(token.clone(), words.len() as u32);
                words.push(token.clone());
                freqs.push(1);
            }
        }
    }
    Vocabulary {
        words,
        freqs,
        index,
    }
}

/// Per-word document-id token lists for one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PseudoDocCollection {
    num_docs: usize,
    docs: Vec<Vec<u32>>,
}

impl PseudoDocCollection {
    /// Wraps raw pseudo-documents, checking that every doc id is below
    /// `num_docs`, that no word is empty, and that tokens are sorted.
    pub fn new(num_docs: usize, docs: Vec<Vec<u32>>) -> Result<Self> {
        if num_docs == 0 {
            return Err(Error::InvalidInput("pseudo-documents need at least one document".into()));
        }
        for (w, doc) in docs.iter().enumerate() {
            if doc.is_empty() {
                return Err(Error::InvalidInput(format!("word {w} has an empty pseudo-document")));
            }
            if doc.windows(2).any(|p| p[0] > p[1]) {
                return Err(Error::InvalidInput(format!("pseudo-document of word {w} is not sorted")));
            }
            if let Some(&last) = doc.last() {
                if last as usize >= num_docs {
                    return Err(Error::UnknownDocument(last as usize));
                }
            }
        }
        Ok(PseudoDocCollection { num_docs, docs })
    }

    /// Number of corpus documents, i.e. the size of the reversed model's vocabulary.
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn num_words(&self) -> usize {
        self.docs.len()
    }

    pub fn doc(&self, word: u32) -> &[u32] {
        &self.docs[word as usize]
    }

    pub fn docs(&self) -> &[Vec<u32>] {
        &self.docs
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// Inverts the document-word index of `corpus`.
pub fn invert_index(corpus: &Corpus, vocab: &Vocabulary) -> Result<PseudoDocCollection> {
    let mut docs: Vec<Vec<u32>> = vec![Vec::new(); vocab.len()];
    for (doc_id, doc) in corpus.documents.iter().enumerate() {
        for token in doc {
            let w = vocab
                .id(token)
                .ok_or_else(|| Error::VocabularyMismatch(format!("token `{token}` not in vocabulary")))?;
            docs[w as usize].push(doc_id as u32);
        }
    }
    for (w, doc) in docs.iter().enumerate() {
        if doc.len() as u64 != vocab.freqs[w] {
            return Err(Error::VocabularyMismatch(format!(
                "word `{}` has frequency {} but occurs {} times",
                vocab.words[w],
                vocab.freqs[w],
                doc.len()
            )));
        }
    }
    PseudoDocCollection::new(corpus.num_docs(), docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[&[&str]]) -> Corpus {
        Corpus::from_documents("x", docs.iter().map(|d| d.iter().copied()), 1).unwrap()
    }

    #[test]
    fn short_documents_are_dropped() {
        let c = parse_corpus("a b c d e\na b\n", "en", 5).unwrap();
        assert_eq!(c.num_docs(), 1);
        assert_eq!(c.documents()[0], vec!["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(matches!(parse_corpus("", "en", 5), Err(Error::EmptyCorpus { .. })));
        assert!(matches!(parse_corpus("a b\n\n", "en", 5), Err(Error::EmptyCorpus { .. })));
    }

    #[test]
    fn retained_documents_keep_order() {
        let text = "a b c d e\nshort\n\nf g h i j\nk l m n o p\n";
        let c = parse_corpus(text, "en", 5).unwrap();
        assert_eq!(c.num_docs(), 3);
        assert_eq!(c.documents()[1][0], "f");
        assert_eq!(c.documents()[2][0], "k");
    }

    #[test]
    fn tabs_and_repeated_spaces_separate_tokens() {
        let c = parse_corpus("a\t b  c\t\td e\r\n", "en", 5).unwrap();
        assert_eq!(c.documents()[0], vec!["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn non_ascii_whitespace_is_part_of_a_token() {
        let c = parse_corpus("犬\u{3000}猫 a b c d", "ja", 5).unwrap();
        assert_eq!(c.documents()[0][0], "犬\u{3000}猫");
    }

    #[test]
    fn missing_and_non_utf8_files() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.txt");
        let err = load_corpus(&missing, "en").unwrap_err();
        assert!(err.to_string().contains("nope.txt"));

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, [0x61, 0x20, 0xff, 0xfe, 0x0a]).unwrap();
        assert!(matches!(load_corpus(&bad, "en"), Err(Error::NotUtf8(_))));
    }

    #[test]
    fn vocabulary_counts() {
        let c = corpus(&[&["a", "a", "b"], &["a", "c", "d", "e", "f"]]);
        let v = build_vocabulary(&c);
        assert_eq!(v.freq(v.id("a").unwrap()), 3);
        assert_eq!(v.freq(v.id("b").unwrap()), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("c"), Some(2));
        assert_eq!(v.len(), 6);

        let single = corpus(&[&["x", "x", "x", "x", "x"]]);
        let v = build_vocabulary(&single);
        assert_eq!(v.len(), 1);
        assert_eq!(v.freq(0), 5);

        let disjoint = corpus(&[&["a", "b"], &["c", "d", "e"]]);
        assert_eq!(build_vocabulary(&disjoint).len(), 5);
    }

    #[test]
    fn inversion_keeps_multiplicity() {
        // w: twice in d0, once in d1, once in d2
        let c = corpus(&[&["w", "x", "w"], &["y", "w"], &["w", "z"], &["q"]]);
        let v = build_vocabulary(&c);
        let p = invert_index(&c, &v).unwrap();
        assert_eq!(p.doc(v.id("w").unwrap()), &[0, 0, 1, 2]);
        assert_eq!(p.doc(v.id("q").unwrap()), &[3]);
        assert_eq!(p.num_tokens(), c.num_tokens());
        assert_eq!(p.num_docs(), 4);
    }

    #[test]
    fn inversion_rejects_foreign_vocabulary() {
        let c = corpus(&[&["a", "b"]]);
        let other = corpus(&[&["a", "c"]]);
        let v = build_vocabulary(&other);
        assert!(matches!(invert_index(&c, &v), Err(Error::VocabularyMismatch(_))));

        let more = corpus(&[&["a", "b", "a"]]);
        let v = build_vocabulary(&more);
        assert!(matches!(invert_index(&c, &v), Err(Error::VocabularyMismatch(_))));
    }

    #[test]
    fn pseudo_doc_validation() {
        assert!(PseudoDocCollection::new(2, vec![vec![0, 1]]).is_ok());
        assert!(PseudoDocCollection::new(2, vec![vec![1, 0]]).is_err());
        assert!(PseudoDocCollection::new(2, vec![vec![2]]).is_err());
        assert!(PseudoDocCollection::new(2, vec![vec![]]).is_err());
        assert!(PseudoDocCollection::new(0, vec![]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn docs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
            prop::collection::vec(
                prop::collection::vec("[a-f]{1,2}".prop_map(String::from), 1..12),
                1..10,
            )
        }

        proptest! {
            #[test]
            fn conservation_and_determinism(docs in docs_strategy()) {
                let c = Corpus::from_documents("x", docs.clone(), 1).unwrap();
                let v = build_vocabulary(&c);
                let p = invert_index(&c, &v).unwrap();
                prop_assert_eq!(p.num_tokens(), c.num_tokens());
                for w in 0..v.len() as u32 {
                    prop_assert_eq!(p.doc(w).len() as u64, v.freq(w));
                    prop_assert!(!p.doc(w).is_empty());
                }
                let again = invert_index(&Corpus::from_documents("x", docs, 1).unwrap(), &v).unwrap();
                prop_assert_eq!(
                    serde_json::to_vec(&p).unwrap(),
                    serde_json::to_vec(&again).unwrap()
                );
            }
        }
    }
}
