//! Image ingestion and preprocessing.
//!
//! The pipeline is: parse IDX files → bilinear 28×28 → 10×10 downscale →
//! scale pixel values to rotation angles in `[0, π]` → deterministic
//! train/validation/test split (48 : 12 : 10) → optional fixed pixel
//! permutation. Preprocessed splits are persisted in the binary cache format
//! of [`cache`].

pub mod cache;
pub mod idx;

use crate::rng;
use std::f64::consts::PI;

/// Source images are 28×28 grayscale.
pub const SRC_SIDE: usize = 28;
/// Downscaled working resolution.
pub const DST_SIDE: usize = 10;
/// Pixels (= features) per downscaled image.
pub const IMAGE_PIXELS: usize = DST_SIDE * DST_SIDE;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad IDX magic at offset 0: expected two zero bytes, found [{b0:#04x}, {b1:#04x}]")]
    BadMagic { b0: u8, b1: u8 },
    #[error("unsupported IDX type byte {type_byte:#04x} at offset 2 (only 0x08, unsigned byte)")]
    UnsupportedType { type_byte: u8 },
    #[error("IDX data truncated at offset {offset}: need {need} more bytes")]
    Truncated { offset: usize, need: usize },
    #[error("IDX payload at offset {offset}: expected {expected} bytes, found {actual}")]
    PayloadLength {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("IDX dimension product overflows")]
    ShapeOverflow,
    #[error("tensor shape {shape:?} is not a stack of {side}×{side} images")]
    NotImages { shape: Vec<usize>, side: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("pixel value {value} at index {index} outside [0, 255]")]
    PixelDomain { index: usize, value: f64 },
    #[error("label {label} at index {index} is not a class in 0..10")]
    LabelDomain { index: usize, label: u8 },
    #[error("split sizes sum to {requested}, dataset has {available}")]
    SplitOverflow { requested: usize, available: usize },
    #[error("subset of {requested} training images exceeds split of {available}")]
    SubsetOverflow { requested: usize, available: usize },
    #[error("cache file: {0}")]
    CacheFormat(String),
}

/// One raw 28×28 grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub pixels: [u8; SRC_SIDE * SRC_SIDE],
}

/// One preprocessed sample: 10×10 rotation angles in `[0, π]`, row-major,
/// and its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub angles: [f64; IMAGE_PIXELS],
    pub label: u8,
}

/// Disjoint train/validation/test portions, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ImageSample>,
    pub validation: Vec<ImageSample>,
    pub test: Vec<ImageSample>,
    pub seed: u64,
}

/// Target sizes for [`make_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    /// The 48 : 12 : 10 proportions, scaled to `total` images. At the full
    /// 70,000 this is exactly 48,000 / 12,000 / 10,000.
    pub fn proportional(total: usize) -> Self {
        let train = total * 48 / 70;
        let validation = total * 12 / 70;
        Self {
            train,
            validation,
            test: total - train - validation,
        }
    }

    pub fn sum(&self) -> usize {
        self.train + self.validation + self.test
    }
}

/// Interpret an IDX tensor as a stack of 28×28 images.
pub fn images_from_tensor(tensor: &idx::IdxTensor) -> Result<Vec<RawImage>, DataError> {
    match tensor.shape.as_slice() {
        [n, r, c] if *r == SRC_SIDE && *c == SRC_SIDE => {
            let mut out = Vec::with_capacity(*n);
            for i in 0..*n {
                let mut pixels = [0u8; SRC_SIDE * SRC_SIDE];
                pixels.copy_from_slice(
                    &tensor.data[i * SRC_SIDE * SRC_SIDE..(i + 1) * SRC_SIDE * SRC_SIDE],
                );
                out.push(RawImage { pixels });
            }
            Ok(out)
        }
        other => Err(DataError::NotImages {
            shape: other.to_vec(),
            side: SRC_SIDE,
        }),
    }
}

/// Interpret an IDX tensor as a label vector with classes in 0..10.
pub fn labels_from_tensor(tensor: &idx::IdxTensor) -> Result<Vec<u8>, DataError> {
    match tensor.shape.as_slice() {
        [_] => {
            for (index, &label) in tensor.data.iter().enumerate() {
                if label > 9 {
                    return Err(DataError::LabelDomain { index, label });
                }
            }
            Ok(tensor.data.clone())
        }
        other => Err(DataError::NotImages {
            shape: other.to_vec(),
            side: 1,
        }),
    }
}

/// Bilinear 28×28 → 10×10 downscale.
///
/// Output pixel `(i, j)` interpolates the input at source coordinate
/// `((i + 0.5)·2.8 − 0.5, (j + 0.5)·2.8 − 0.5)` with edge clamping; values
/// stay inside `[min(input), max(input)]`.
pub fn bilinear_downscale(img: &RawImage) -> [f64; IMAGE_PIXELS] {
    let scale = SRC_SIDE as f64 / DST_SIDE as f64;
    let mut out = [0.0; IMAGE_PIXELS];
    for i in 0..DST_SIDE {
        let sy = (i as f64 + 0.5) * scale - 0.5;
        let y_floor = sy.floor();
        let fy = sy - y_floor;
        let y0 = y_floor.max(0.0) as usize;
        let y1 = (y0 + 1).min(SRC_SIDE - 1);
        for j in 0..DST_SIDE {
            let sx = (j as f64 + 0.5) * scale - 0.5;
            let x_floor = sx.floor();
            let fx = sx - x_floor;
            let x0 = x_floor.max(0.0) as usize;
            let x1 = (x0 + 1).min(SRC_SIDE - 1);

            let p00 = img.pixels[y0 * SRC_SIDE + x0] as f64;
            let p01 = img.pixels[y0 * SRC_SIDE + x1] as f64;
            let p10 = img.pixels[y1 * SRC_SIDE + x0] as f64;
            let p11 = img.pixels[y1 * SRC_SIDE + x1] as f64;

            out[i * DST_SIDE + j] = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01)
                + fy * ((1.0 - fx) * p10 + fx * p11);
        }
    }
    out
}

/// Scale grayscale values in `[0, 255]` to rotation angles `value·π/255`.
///
/// Computed as `(value / 255)·π`, which cannot exceed π in floating point.
pub fn scale_to_angles(grid: &[f64; IMAGE_PIXELS]) -> Result<[f64; IMAGE_PIXELS], DataError> {
    let mut out = [0.0; IMAGE_PIXELS];
    for (index, (&value, slot)) in grid.iter().zip(out.iter_mut()).enumerate() {
        if !(0.0..=255.0).contains(&value) {
            return Err(DataError::PixelDomain { index, value });
        }
        *slot = (value / 255.0) * PI;
    }
    Ok(out)
}

/// Downscale and angle-scale a raw image set.
pub fn preprocess(images: &[RawImage], labels: &[u8]) -> Result<Vec<ImageSample>, DataError> {
    if images.len() != labels.len() {
        return Err(DataError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    images
        .iter()
        .zip(labels)
        .map(|(img, &label)| {
            Ok(ImageSample {
                angles: scale_to_angles(&bilinear_downscale(img))?,
                label,
            })
        })
        .collect()
}

/// Shuffle sample indices with the seeded generator and assign the first
/// `sizes.train` to train, the next `sizes.validation` to validation, the
/// next `sizes.test` to test.
pub fn make_split(
    samples: Vec<ImageSample>,
    seed: u64,
    sizes: SplitSizes,
) -> Result<DatasetSplit, DataError> {
    if sizes.sum() > samples.len() {
        return Err(DataError::SplitOverflow {
            requested: sizes.sum(),
            available: samples.len(),
        });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut gen = rng::stream_rng(seed, 0);
    rng::shuffle(&mut gen, &mut order);

    let mut pool: Vec<Option<ImageSample>> = samples.into_iter().map(Some).collect();
    let mut take = |range: std::ops::Range<usize>| -> Vec<ImageSample> {
        order[range]
            .iter()
            .map(|&i| pool[i].take().expect("indices are distinct"))
            .collect()
    };
    let train = take(0..sizes.train);
    let validation = take(sizes.train..sizes.train + sizes.validation);
    let test = take(sizes.train + sizes.validation..sizes.sum());
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}

impl DatasetSplit {
    /// Desk-scale subset: the first `train_n` training samples with
    /// validation and test shrunk by the same 48 : 12 : 10 proportions.
    pub fn head_subset(&self, train_n: usize) -> Result<DatasetSplit, DataError> {
        let val_n = train_n * 12 / 48;
        let test_n = train_n * 10 / 48;
        if train_n > self.train.len() || val_n > self.validation.len() || test_n > self.test.len()
        {
            return Err(DataError::SubsetOverflow {
                requested: train_n,
                available: self.train.len(),
            });
        }
        Ok(DatasetSplit {
            train: self.train[..train_n].to_vec(),
            validation: self.validation[..val_n].to_vec(),
            test: self.test[..test_n].to_vec(),
            seed: self.seed,
        })
    }
}

/// The fixed permutation of the 100 pixel positions drawn from `seed`.
pub fn pixel_permutation(seed: u64) -> [usize; IMAGE_PIXELS] {
    let mut perm = [0usize; IMAGE_PIXELS];
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    let mut gen = rng::stream_rng(seed, 0);
    rng::shuffle(&mut gen, &mut perm);
    perm
}

/// Apply one pixel permutation identically to every image of every portion;
/// labels untouched. Position `i` of the output takes the value at
/// `perm[i]`.
pub fn apply_pixel_permutation(split: &DatasetSplit, perm: &[usize; IMAGE_PIXELS]) -> DatasetSplit {
    let map = |samples: &[ImageSample]| -> Vec<ImageSample> {
        samples
            .iter()
            .map(|s| {
                let mut angles = [0.0; IMAGE_PIXELS];
                for (slot, &src) in angles.iter_mut().zip(perm.iter()) {
                    *slot = s.angles[src];
                }
                ImageSample {
                    angles,
                    label: s.label,
                }
            })
            .collect()
    };
    DatasetSplit {
        train: map(&split.train),
        validation: map(&split.validation),
        test: map(&split.test),
        seed: split.seed,
    }
}

/// Shuffle every image's pixels with one fixed seeded permutation.
pub fn shuffle_pixels(split: &DatasetSplit, seed: u64) -> DatasetSplit {
    apply_pixel_permutation(split, &pixel_permutation(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat_image(value: u8) -> RawImage {
        RawImage {
            pixels: [value; SRC_SIDE * SRC_SIDE],
        }
    }

    fn indexed_samples(n: usize) -> Vec<ImageSample> {
        (0..n)
            .map(|i| {
                let mut angles = [0.0; IMAGE_PIXELS];
                angles[0] = i as f64 * 1e-6;
                ImageSample {
                    angles,
                    label: (i % 10) as u8,
                }
            })
            .collect()
    }

    #[test]
    fn constant_image_downscales_to_constant() {
        let out = bilinear_downscale(&flat_image(137));
        for v in out {
            assert!((v - 137.0).abs() < 1e-12);
        }
        let out = bilinear_downscale(&flat_image(0));
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn downscale_respects_input_bounds() {
        let mut gen = crate::rng::stream_rng(3, 0);
        for _ in 0..20 {
            let mut pixels = [0u8; SRC_SIDE * SRC_SIDE];
            for p in pixels.iter_mut() {
                *p = crate::rng::below(&mut gen, 256) as u8;
            }
            let min = *pixels.iter().min().unwrap() as f64;
            let max = *pixels.iter().max().unwrap() as f64;
            for v in bilinear_downscale(&RawImage { pixels }) {
                assert!(v >= min - 1e-9 && v <= max + 1e-9);
            }
        }
    }

    #[test]
    fn angle_scaling_hits_anchors() {
        let mut grid = [0.0; IMAGE_PIXELS];
        grid[0] = 255.0;
        grid[1] = 0.0;
        grid[2] = 127.5;
        let angles = scale_to_angles(&grid).unwrap();
        assert_eq!(angles[0], PI);
        assert_eq!(angles[1], 0.0);
        assert_eq!(angles[2], PI / 2.0);
    }

    #[test]
    fn angle_scaling_rejects_out_of_range() {
        let mut grid = [0.0; IMAGE_PIXELS];
        grid[42] = 255.1;
        assert!(matches!(
            scale_to_angles(&grid),
            Err(DataError::PixelDomain { index: 42, .. })
        ));
        grid[42] = -0.5;
        assert!(scale_to_angles(&grid).is_err());
    }

    #[test]
    fn split_covers_dataset_disjointly() {
        let samples = indexed_samples(700);
        let sizes = SplitSizes::proportional(700);
        assert_eq!((sizes.train, sizes.validation, sizes.test), (480, 120, 100));
        let split = make_split(samples, 9, sizes).unwrap();
        let mut seen: Vec<u64> = split
            .train
            .iter()
            .chain(&split.validation)
            .chain(&split.test)
            .map(|s| (s.angles[0] / 1e-6).round() as u64)
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..700).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let a = make_split(indexed_samples(100), 5, SplitSizes::proportional(100)).unwrap();
        let b = make_split(indexed_samples(100), 5, SplitSizes::proportional(100)).unwrap();
        assert_eq!(a, b);
        let c = make_split(indexed_samples(100), 6, SplitSizes::proportional(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_rejects_oversized_request() {
        let err = make_split(
            indexed_samples(10),
            0,
            SplitSizes {
                train: 9,
                validation: 1,
                test: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DataError::SplitOverflow {
                requested: 11,
                available: 10
            }
        ));
    }

    #[test]
    fn proportional_sizes_at_full_scale() {
        let s = SplitSizes::proportional(70_000);
        assert_eq!((s.train, s.validation, s.test), (48_000, 12_000, 10_000));
        let s = SplitSizes::proportional(7_000);
        assert_eq!((s.train, s.validation, s.test), (4_800, 1_200, 1_000));
    }

    #[test]
    fn head_subset_shrinks_proportionally() {
        let split = make_split(indexed_samples(700), 1, SplitSizes::proportional(700)).unwrap();
        let sub = split.head_subset(48).unwrap();
        assert_eq!(sub.train.len(), 48);
        assert_eq!(sub.validation.len(), 12);
        assert_eq!(sub.test.len(), 10);
        assert!(split.head_subset(10_000).is_err());
    }

    #[test]
    fn identity_permutation_keeps_dataset() {
        let split = make_split(indexed_samples(50), 2, SplitSizes::proportional(50)).unwrap();
        let mut identity = [0usize; IMAGE_PIXELS];
        for (i, p) in identity.iter_mut().enumerate() {
            *p = i;
        }
        assert_eq!(apply_pixel_permutation(&split, &identity), split);
    }

    #[test]
    fn pixel_shuffle_is_deterministic_and_preserves_multisets() {
        let split = make_split(indexed_samples(50), 2, SplitSizes::proportional(50)).unwrap();
        let a = shuffle_pixels(&split, 77);
        let b = shuffle_pixels(&split, 77);
        assert_eq!(a, b);
        for (orig, shuf) in split.train.iter().zip(&a.train) {
            assert_eq!(orig.label, shuf.label);
            let mut x: Vec<u64> = orig.angles.iter().map(|v| v.to_bits()).collect();
            let mut y: Vec<u64> = shuf.angles.iter().map(|v| v.to_bits()).collect();
            x.sort_unstable();
            y.sort_unstable();
            assert_eq!(x, y);
        }
    }

    proptest! {
        #[test]
        fn angles_always_within_gate_domain(pixels in proptest::collection::vec(0u8..=255, SRC_SIDE * SRC_SIDE)) {
            let mut arr = [0u8; SRC_SIDE * SRC_SIDE];
            arr.copy_from_slice(&pixels);
            let angles = scale_to_angles(&bilinear_downscale(&RawImage { pixels: arr })).unwrap();
            for a in angles {
                prop_assert!((0.0..=PI).contains(&a));
            }
        }
    }
}
