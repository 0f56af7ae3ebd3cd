//! Training sample selection from label maps.

use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::polsar::{LabelMap, Pixel};

/// Labeled pixels used for training or validation. Labels are `1..=num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSet {
    pub pixels: Vec<Pixel>,
    pub labels: Vec<u8>,
    pub num_classes: u8,
}

impl TrainingSet {
    pub fn new(pixels: Vec<Pixel>, labels: Vec<u8>, num_classes: u8) -> Result<Self> {
        if pixels.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: pixels.len(),
                right: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l == 0 || l > num_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        Ok(TrainingSet {
            pixels,
            labels,
            num_classes,
        })
    }

    /// Every labeled pixel of the map, row-major.
    pub fn from_label_map(labels: &LabelMap) -> Self {
        let (pixels, classes) = labels
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(|(i, &l)| (Pixel::new(i % labels.width(), i / labels.width()), l))
            .unzip();
        TrainingSet {
            pixels,
            labels: classes,
            num_classes: labels.num_classes(),
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pixel, u8)> + '_ {
        self.pixels.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes as usize];
        for &l in &self.labels {
            counts[l as usize - 1] += 1;
        }
        counts
    }
}

/// Draws `per_class` pixels for every class: without replacement when the
/// class has enough labeled pixels, with replacement otherwise.
pub fn draw_training_samples<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &LabelMap,
    per_class: usize,
) -> Result<TrainingSet> {
    let mut pixels = Vec::with_capacity(per_class * labels.num_classes() as usize);
    let mut classes = Vec::with_capacity(pixels.capacity());
    for class in 1..=labels.num_classes() {
        let pool = labels.pixels_of(class);
        if pool.is_empty() {
            return Err(Error::MissingClass(class));
        }
        if pool.len() >= per_class {
            pixels.extend(
                index::sample(rng, pool.len(), per_class)
                    .into_iter()
                    .map(|i| pool[i]),
            );
        } else {
            pixels.extend((0..per_class).map(|_| pool[rng.random_range(0..pool.len())]));
        }
        classes.extend(core::iter::repeat_n(class, per_class));
    }
    Ok(TrainingSet {
        pixels,
        labels: classes,
        num_classes: labels.num_classes(),
    })
}

/// Draws up to `per_class` pixels of every class without replacement; classes
/// with fewer labeled pixels contribute all of them.
pub fn draw_at_most<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &LabelMap,
    per_class: usize,
) -> Result<TrainingSet> {
    let mut pixels = Vec::new();
    let mut classes = Vec::new();
    for class in 1..=labels.num_classes() {
        let pool = labels.pixels_of(class);
        if pool.is_empty() {
            return Err(Error::MissingClass(class));
        }
        let k = pool.len().min(per_class);
        pixels.extend(
            index::sample(rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i]),
        );
        classes.extend(core::iter::repeat_n(class, k));
    }
    Ok(TrainingSet {
        pixels,
        labels: classes,
        num_classes: labels.num_classes(),
    })
}

/// Splits the labeled pixels of every class at random into a remaining part
/// and a held-out part holding `round(fraction · n_c)` pixels (at least one
/// when the class has two or more pixels).
pub fn stratified_split<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &LabelMap,
    fraction: f64,
) -> Result<(LabelMap, LabelMap)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(alloc::format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let (w, h, l) = (labels.width(), labels.height(), labels.num_classes());
    let mut keep = LabelMap::unlabeled(w, h, l);
    let mut held = LabelMap::unlabeled(w, h, l);
    for class in 1..=l {
        let mut pool = labels.pixels_of(class);
        pool.shuffle(rng);
        let mut n_held = libm::round(fraction * pool.len() as f64) as usize;
        if fraction > 0.0 && n_held == 0 && pool.len() >= 2 {
            n_held = 1;
        }
        for (i, p) in pool.into_iter().enumerate() {
            if i < n_held {
                held.set(p, class);
            } else {
                keep.set(p, class);
            }
        }
    }
    Ok((keep, held))
}
