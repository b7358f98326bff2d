//! Loading the dataset and matching resources named by a [`RunConfig`].

use std::path::PathBuf;

use decorr_core::dataset::{
    load_captions, load_instances, load_np_chunks, naive_np_chunk, Lexicon,
};
use decorr_core::{
    ClassVocabulary, DatasetBundle, DecorrError, MatchMode, MatchTable, PromptSet, Result,
    ValidationReport,
};

use crate::config::{MatchModeName, RunConfig};

/// A fully loaded and validated dataset.
pub struct LoadedDataset {
    pub bundle: DatasetBundle,
    pub report: ValidationReport,
    /// Number of captions whose spans came from the lexicon chunker.
    pub auto_chunked: usize,
}

pub fn vocabulary(config: &RunConfig) -> Result<ClassVocabulary> {
    match &config.vocabulary {
        Some(path) => ClassVocabulary::load(path),
        None => Ok(ClassVocabulary::mscoco()),
    }
}

pub fn match_mode(config: &RunConfig, vocab: &ClassVocabulary) -> Result<MatchMode> {
    Ok(match config.match_mode {
        MatchModeName::AnnotatedPairs => MatchMode::AnnotatedPairs,
        MatchModeName::WordList => {
            let table = match &config.match_table {
                Some(path) => MatchTable::load(path)?,
                None => MatchTable::mscoco(),
            };
            MatchMode::word_list(&table, vocab)
        }
    })
}

pub fn prompts(config: &RunConfig) -> Result<PromptSet> {
    match &config.prompts {
        Some(path) => PromptSet::load(path),
        None => Ok(PromptSet::bundled()),
    }
}

/// Loads instances, captions and noun-phrase spans, then validates the result.
pub fn load_dataset(config: &RunConfig) -> Result<LoadedDataset> {
    if config.instances.is_empty() {
        return Err(DecorrError::Config("no instances file configured".into()));
    }
    let vocab = vocabulary(config)?;
    let mut report = ValidationReport::default();
    let mut bundle = DatasetBundle::new(vocab.clone());
    for source in &config.instances {
        let part = load_instances(source.path(), &vocab, source.split(), &mut report)?;
        bundle.merge(part)?;
    }
    for path in &config.captions {
        load_captions(path, &mut bundle, &mut report)?;
    }
    let mut auto_chunked = 0;
    match &config.np_chunks {
        Some(path) => {
            load_np_chunks(path, &mut bundle)?;
        }
        None => {
            let lexicon = match &config.lexicon {
                Some(path) => Lexicon::load(path)?,
                None => Lexicon::bundled(),
            };
            for caption in bundle.captions.values_mut() {
                caption.np_spans = naive_np_chunk(caption, &lexicon);
                auto_chunked += 1;
            }
        }
    }
    bundle.validate(&mut report)?;
    Ok(LoadedDataset {
        bundle,
        report,
        auto_chunked,
    })
}

/// Path of an image file named in the dataset, if an image directory is set.
pub fn image_path(config: &RunConfig, file_name: Option<&str>) -> Option<PathBuf> {
    Some(config.images_dir.as_ref()?.join(file_name?))
}
