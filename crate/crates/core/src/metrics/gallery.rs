//! Caption gallery construction.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, DatasetBundle, Split};
use crate::error::{DecorrError, Result};
use crate::matching::MatchMode;

/// One gallery caption and the classes it mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalleryMeta {
    #[serde(deserialize_with = "super::flexible_id::one")]
    pub gallery_id: String,
    pub class_set: BTreeSet<ClassId>,
    pub split: Split,
}

/// Every caption of an image in `splits`, by ascending caption id.
pub fn build_gallery(
    bundle: &DatasetBundle,
    splits: &BTreeSet<Split>,
    mode: &MatchMode,
) -> Result<Vec<GalleryMeta>> {
    if splits.is_empty() {
        return Err(DecorrError::EmptyGallery);
    }
    let selected: Vec<_> = bundle
        .captions
        .values()
        .filter_map(|c| {
            let image = bundle.images.get(&c.image_id)?;
            splits.contains(&image.split).then_some((c, image.split))
        })
        .collect();
    selected
        .into_par_iter()
        .map(|(caption, split)| {
            Ok(GalleryMeta {
                gallery_id: caption.caption_id.to_string(),
                class_set: mode.caption_classes(caption)?,
                split,
            })
        })
        .collect()
}
