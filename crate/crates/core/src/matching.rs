//! Noun-phrase to object-class matching.
//!
//! Two mechanisms are supported. [`MatchMode::WordList`] treats a noun phrase
//! as mentioning a class when any of its tokens is one of the class's alias
//! words (exact token equality, no stemming). The class name's own words
//! are implicit aliases, and a single-word class name also matches its
//! regular plural ("dogs" for dog). Listed aliases are taken literally. [`MatchMode::AnnotatedPairs`] trusts a per-span class
//! annotation instead.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::dataset::{tokenize, CaptionRecord, ClassId, ClassVocabulary, NounPhraseSpan};
use crate::error::{DecorrError, Result};

const MSCOCO_TABLE: &str = include_str!("../../../data/mscoco_match_table.json");

/// Class name to alias words. A class name's own words are always aliases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchTable {
    entries: BTreeMap<String, BTreeSet<String>>,
}

fn single_token(word: &str) -> Result<String> {
    let mut tokens = tokenize(word);
    match tokens.len() {
        1 => Ok(tokens.pop().unwrap()),
        _ => Err(DecorrError::Validation(format!(
            "alias `{word}` is not a single token"
        ))),
    }
}

/// Regular English plural of a single word.
fn plural(word: &str) -> String {
    let consonant_y = word.len() > 1
        && word.ends_with('y')
        && !matches!(
            word.as_bytes()[word.len() - 2],
            b'a' | b'e' | b'i' | b'o' | b'u'
        );
    if consonant_y {
        format!("{}ies", &word[..word.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"]
        .iter()
        .any(|s| word.ends_with(s))
    {
        format!("{word}es")
    } else {
        format!("{word}s")
    }
}

/// Words a class name contributes to its own alias set.
fn self_aliases(words: &[String]) -> impl Iterator<Item = String> + '_ {
    words.iter().cloned()
}

impl MatchTable {
    /// Parses `{class_name: [alias, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| DecorrError::parse("match table", e))?;
        if raw.is_empty() {
            return Err(DecorrError::EmptyTable);
        }
        let mut table = MatchTable::default();
        for (class, aliases) in raw {
            table.add_class(&class)?;
            for alias in aliases {
                table.add_alias(&class, &alias)?;
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DecorrError::io(path, e))?;
        Self::from_json(&text)
    }

    /// The MS-COCO word list shipped in `data/mscoco_match_table.json`.
    pub fn mscoco() -> Self {
        Self::from_json(MSCOCO_TABLE).expect("bundled match table is valid")
    }

    /// Registers a class with its constituent words as aliases.
    pub fn add_class(&mut self, class: &str) -> Result<&mut BTreeSet<String>> {
        let words = tokenize(class);
        if words.is_empty() {
            return Err(DecorrError::Validation(
                "empty class name in match table".into(),
            ));
        }
        let set = self.entries.entry(words.join(" ")).or_default();
        set.extend(self_aliases(&words));
        Ok(set)
    }

    pub fn add_alias(&mut self, class: &str, alias: &str) -> Result<()> {
        let alias = single_token(alias)?;
        self.add_class(class)?.insert(alias);
        Ok(())
    }

    pub fn aliases(&self, class: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(&crate::dataset::normalize_name(class))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves the table against a vocabulary. Vocabulary classes without
    /// an entry get their own words as aliases, single-word names also get
    /// their plural, and table classes outside the vocabulary are ignored.
    pub fn resolve(&self, vocab: &ClassVocabulary) -> WordListMatcher {
        let aliases: Vec<BTreeSet<String>> = vocab
            .names()
            .iter()
            .map(|name| {
                let words = tokenize(name);
                let mut set = match self.entries.get(name) {
                    Some(set) => set.clone(),
                    None => self_aliases(&words).collect(),
                };
                if let [single] = words.as_slice() {
                    set.insert(plural(single));
                }
                set
            })
            .collect();
        let mut by_word: HashMap<String, Vec<ClassId>> = HashMap::new();
        for (idx, set) in aliases.iter().enumerate() {
            for word in set {
                by_word
                    .entry(word.clone())
                    .or_default()
                    .push(ClassId(idx as u32));
            }
        }
        WordListMatcher { aliases, by_word }
    }
}

/// A [`MatchTable`] bound to class ids, with a reverse word index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordListMatcher {
    aliases: Vec<BTreeSet<String>>,
    by_word: HashMap<String, Vec<ClassId>>,
}

impl WordListMatcher {
    pub fn aliases(&self, class: ClassId) -> Option<&BTreeSet<String>> {
        self.aliases.get(class.index())
    }

    /// Classes that list `word` as an alias, ascending.
    pub fn classes_for_word(&self, word: &str) -> &[ClassId] {
        self.by_word.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchMode {
    WordList(WordListMatcher),
    AnnotatedPairs,
}

impl MatchMode {
    pub fn word_list(table: &MatchTable, vocab: &ClassVocabulary) -> Self {
        MatchMode::WordList(table.resolve(vocab))
    }

    /// Whether noun phrase `np` mentions `class`.
    pub fn matches(&self, class: ClassId, np: &NounPhraseSpan) -> Result<bool> {
        match self {
            MatchMode::WordList(m) => {
                let aliases = m
                    .aliases(class)
                    .ok_or(DecorrError::UnknownClassId(class.index()))?;
                Ok(np.tokens().any(|t| aliases.contains(t)))
            }
            MatchMode::AnnotatedPairs => np
                .class_id
                .map(|c| c == class)
                .ok_or_else(|| DecorrError::MissingAnnotation(np.surface_text.clone())),
        }
    }

    /// Every class mentioned by at least one of `spans`.
    pub fn span_classes<'a>(
        &self,
        spans: impl IntoIterator<Item = &'a NounPhraseSpan>,
    ) -> Result<BTreeSet<ClassId>> {
        let mut out = BTreeSet::new();
        for span in spans {
            self.extend_with_span(span, &mut out)?;
        }
        Ok(out)
    }

    pub fn caption_classes(&self, caption: &CaptionRecord) -> Result<BTreeSet<ClassId>> {
        self.span_classes(&caption.np_spans)
    }

    /// Whether `np` mentions any class in `classes`.
    pub fn matches_any(&self, classes: &BTreeSet<ClassId>, np: &NounPhraseSpan) -> Result<bool> {
        let mut found = BTreeSet::new();
        self.extend_with_span(np, &mut found)?;
        Ok(!found.is_disjoint(classes))
    }

    fn extend_with_span(&self, span: &NounPhraseSpan, out: &mut BTreeSet<ClassId>) -> Result<()> {
        match self {
            MatchMode::WordList(m) => {
                for token in span.tokens() {
                    out.extend(m.classes_for_word(token).iter().copied());
                }
            }
            MatchMode::AnnotatedPairs => {
                let class = span
                    .class_id
                    .ok_or_else(|| DecorrError::MissingAnnotation(span.surface_text.clone()))?;
                out.insert(class);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`MatchMode::matches`].
pub fn match_class_np(class: ClassId, np: &NounPhraseSpan, mode: &MatchMode) -> Result<bool> {
    mode.matches(class, np)
}

/// Free-function form of [`MatchMode::caption_classes`].
pub fn caption_class_set(caption: &CaptionRecord, mode: &MatchMode) -> Result<BTreeSet<ClassId>> {
    mode.caption_classes(caption)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coco() -> (ClassVocabulary, MatchMode) {
        let vocab = ClassVocabulary::mscoco();
        let mode = MatchMode::word_list(&MatchTable::mscoco(), &vocab);
        (vocab, mode)
    }

    fn np(text: &str) -> NounPhraseSpan {
        let tokens = tokenize(text);
        NounPhraseSpan::over(0, &tokens, 0, tokens.len(), None).unwrap()
    }

    fn names(vocab: &ClassVocabulary, set: &BTreeSet<ClassId>) -> Vec<String> {
        set.iter()
            .map(|c| vocab.name(*c).unwrap().to_owned())
            .collect()
    }

    #[test]
    fn table_inserts_self_and_constituent_words() {
        let t = MatchTable::mscoco();
        let frisbee: Vec<_> = t.aliases("frisbee").unwrap().iter().cloned().collect();
        assert_eq!(frisbee, ["disc", "disk", "frisbee", "frisby"]);
        let bat: Vec<_> = t.aliases("baseball bat").unwrap().iter().cloned().collect();
        assert_eq!(bat, ["baseball", "bat"]);
        assert_eq!(t.len(), 47);
    }

    #[test]
    fn plurals() {
        assert_eq!(plural("dog"), "dogs");
        assert_eq!(plural("bus"), "buses");
        assert_eq!(plural("glass"), "glasses");
        assert_eq!(plural("teddy"), "teddies");
        assert_eq!(plural("toy"), "toys");
        assert_eq!(plural("couch"), "couches");
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(matches!(
            MatchTable::from_json("{}"),
            Err(DecorrError::EmptyTable)
        ));
        assert!(matches!(
            MatchTable::from_json("[1,2"),
            Err(DecorrError::Parse { .. })
        ));
    }

    #[test]
    fn word_list_matches_table_examples() {
        let (vocab, mode) = coco();
        let id = |n: &str| vocab.lookup(n).unwrap();
        assert!(mode.matches(id("person"), &np("a woman")).unwrap());
        assert!(!mode.matches(id("dog"), &np("a frisbee")).unwrap());
        assert!(mode
            .matches(id("teddy bear"), &np("a stuffed toy"))
            .unwrap());
        assert!(mode.matches(id("sports ball"), &np("the ball")).unwrap());
        assert!(mode.matches(id("dog"), &np("two dogs")).unwrap());
        assert!(mode.matches(id("dog"), &np("two puppies")).unwrap());
        // Listed aliases are literal: "kitten" is listed, "kittens" is not.
        assert!(!mode.matches(id("cat"), &np("two kittens")).unwrap());
        assert!(mode.matches(id("bus"), &np("two buses")).unwrap());
        // Only single-word class names gain a plural.
        assert!(!mode.matches(id("hot dog"), &np("two dogs")).unwrap());
        assert!(mode.matches(id("hot dog"), &np("a dog")).unwrap());
        assert!(!mode.matches(id("teddy bear"), &np("teddies")).unwrap());
    }

    #[test]
    fn caption_class_sets() {
        let (vocab, mode) = coco();
        let cap = CaptionRecord::new(7, 1, "Two dogs fighting over a frisbee")
            .with_spans([(0, 2, None), (4, 6, None)])
            .unwrap();
        assert_eq!(
            names(&vocab, &mode.caption_classes(&cap).unwrap()),
            ["dog", "frisbee"]
        );
        let cap = CaptionRecord::new(8, 1, "a man riding a horse")
            .with_spans([(0, 2, None), (3, 5, None)])
            .unwrap();
        assert_eq!(
            names(&vocab, &mode.caption_classes(&cap).unwrap()),
            ["person", "horse"]
        );
        let bare = CaptionRecord::new(9, 1, "nothing here");
        assert!(mode.caption_classes(&bare).unwrap().is_empty());
    }

    #[test]
    fn ambiguous_aliases_return_every_class() {
        let (vocab, mode) = coco();
        let cap = CaptionRecord::new(1, 1, "a board")
            .with_spans([(0, 2, None)])
            .unwrap();
        assert_eq!(
            names(&vocab, &mode.caption_classes(&cap).unwrap()),
            ["snowboard", "skateboard", "surfboard"]
        );
    }

    #[test]
    fn annotated_pairs_need_annotations() {
        let span = np("a frisbee");
        assert!(matches!(
            MatchMode::AnnotatedPairs.matches(ClassId(0), &span),
            Err(DecorrError::MissingAnnotation(_))
        ));
        let tagged = NounPhraseSpan {
            class_id: Some(ClassId(3)),
            ..span
        };
        assert!(MatchMode::AnnotatedPairs
            .matches(ClassId(3), &tagged)
            .unwrap());
        assert!(!MatchMode::AnnotatedPairs
            .matches(ClassId(2), &tagged)
            .unwrap());
    }

    #[test]
    fn unknown_class_id_is_an_error() {
        let (_, mode) = coco();
        assert!(mode.matches(ClassId(500), &np("a dog")).is_err());
    }

    proptest! {
        #[test]
        fn single_token_classes_self_match(idx in 0usize..80, prefix in "[a-z]{1,6}") {
            let (vocab, mode) = coco();
            let name = vocab.names()[idx].clone();
            prop_assume!(!name.contains(' '));
            let span = np(&format!("{prefix} {name}"));
            prop_assert!(mode.matches(ClassId(idx as u32), &span).unwrap());
        }

        #[test]
        fn adding_aliases_is_monotone(
            words in proptest::collection::vec("[a-z]{1,5}", 1..4),
            extra in "[a-z]{1,5}",
            class_idx in 0usize..80,
        ) {
            let vocab = ClassVocabulary::mscoco();
            let base = MatchTable::mscoco();
            let mut grown = base.clone();
            grown.add_alias(&vocab.names()[class_idx], &extra).unwrap();
            let (a, b) = (MatchMode::word_list(&base, &vocab), MatchMode::word_list(&grown, &vocab));
            let span = np(&words.join(" "));
            for c in vocab.ids() {
                if a.matches(c, &span).unwrap() {
                    prop_assert!(b.matches(c, &span).unwrap());
                }
            }
        }

        #[test]
        fn consistent_annotations_are_a_subset_of_word_matches(
            picks in proptest::collection::vec((0usize..80, 0usize..3), 1..5),
        ) {
            let (vocab, word_mode) = coco();
            // Build spans whose single token is an alias of the annotated class.
            let table = MatchTable::mscoco();
            let mut tokens = Vec::new();
            let mut classes = Vec::new();
            for (idx, alias_pick) in picks {
                let name = &vocab.names()[idx];
                let aliases: Vec<_> = table
                    .aliases(name)
                    .map(|s| s.iter().cloned().collect())
                    .unwrap_or_else(|| self_aliases(&tokenize(name)).collect());
                tokens.push(aliases[alias_pick % aliases.len()].clone());
                classes.push(ClassId(idx as u32));
            }
            let text = tokens.join(" ");
            let cap = CaptionRecord::new(1, 1, text)
                .with_spans(classes.iter().enumerate().map(|(i, c)| (i, i + 1, Some(*c))))
                .unwrap();
            let annotated = MatchMode::AnnotatedPairs.caption_classes(&cap).unwrap();
            let words = word_mode.caption_classes(&cap).unwrap();
            prop_assert!(annotated.is_subset(&words));
        }
    }
}
