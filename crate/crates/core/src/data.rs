//! CIFAR-10 binary batches, stratified subsets and synthetic records.
//!
//! A record is one label byte followed by 3072 pixel bytes: the red, green
//! and blue 32×32 planes, each row-major.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const IMAGE_SIDE: usize = 32;
pub const CHANNELS: usize = 3;
pub const IMAGE_BYTES: usize = CHANNELS * IMAGE_SIDE * IMAGE_SIDE;
pub const RECORD_BYTES: usize = 1 + IMAGE_BYTES;
pub const NUM_CLASSES: usize = 10;
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";
/// Directory name inside the official archive.
pub const ARCHIVE_SUBDIR: &str = "cifar-10-batches-bin";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: size {len} is not a multiple of {RECORD_BYTES}", path.display())]
    Format { path: PathBuf, len: usize },
    #[error("{}: label {label} at byte offset {offset}", path.display())]
    CorruptRecord {
        path: PathBuf,
        offset: usize,
        label: u8,
    },
    #[error("no CIFAR-10 batch files under {}", .0.display())]
    Missing(PathBuf),
    #[error("invalid dataset request: {0}")]
    Config(String),
}

/// Images `[N, ...]` with one class index per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset<T> {
    images: Tensor<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> ImageDataset<T> {
    pub fn new(images: Tensor<T>, labels: Vec<usize>) -> Result<Self, DataError> {
        if images.rank() < 2 || images.outer() != labels.len() {
            return Err(DataError::Config(format!(
                "{} labels for images of shape {:?}",
                labels.len(),
                images.shape()
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor<T> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Per-sample image shape.
    pub fn sample_shape(&self) -> &[usize] {
        &self.images.shape()[1..]
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            images: self.images.gather(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn histogram(&self) -> [usize; NUM_CLASSES] {
        let mut h = [0; NUM_CLASSES];
        for &l in &self.labels {
            if l < NUM_CLASSES {
                h[l] += 1;
            }
        }
        h
    }
}

/// One undecoded record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CifarRecord {
    pub label: u8,
    pub pixels: Vec<u8>,
}

impl CifarRecord {
    pub fn decode(bytes: &[u8]) -> Result<Self, DataError> {
        decode_at(bytes, Path::new("<record>"), 0)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(RECORD_BYTES);
        out.push(self.label);
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Pixels scaled to `[0, 1]`, shaped `[3, 32, 32]`.
    pub fn image<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_fn(&[CHANNELS, IMAGE_SIDE, IMAGE_SIDE], |i| pixel(self.pixels[i]))
    }
}

fn pixel<T: Scalar>(b: u8) -> T {
    T::from_u8(b).unwrap() / T::lit(255.0)
}

fn decode_at(bytes: &[u8], path: &Path, offset: usize) -> Result<CifarRecord, DataError> {
    if bytes.len() != RECORD_BYTES {
        return Err(DataError::Format {
            path: path.to_path_buf(),
            len: bytes.len(),
        });
    }
    let label = bytes[0];
    if label as usize >= NUM_CLASSES {
        return Err(DataError::CorruptRecord {
            path: path.to_path_buf(),
            offset,
            label,
        });
    }
    Ok(CifarRecord {
        label,
        pixels: bytes[1..].to_vec(),
    })
}

/// Decodes a whole batch buffer. `path` is only used in error messages.
pub fn parse_batch<T: Scalar>(bytes: &[u8], path: &Path) -> Result<ImageDataset<T>, DataError> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(DataError::Format {
            path: path.to_path_buf(),
            len: bytes.len(),
        });
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * IMAGE_BYTES);
    for (i, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let label = rec[0];
        if label as usize >= NUM_CLASSES {
            return Err(DataError::CorruptRecord {
                path: path.to_path_buf(),
                offset: i * RECORD_BYTES,
                label,
            });
        }
        labels.push(label as usize);
        data.extend(rec[1..].iter().map(|&b| pixel::<T>(b)));
    }
    let images = Tensor::from_vec(&[n, CHANNELS, IMAGE_SIDE, IMAGE_SIDE], data).expect("sized above");
    ImageDataset::new(images, labels)
}

pub fn read_batch_file<T: Scalar>(path: &Path) -> Result<ImageDataset<T>, DataError> {
    let bytes = fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_batch(&bytes, path)
}

fn concat<T: Scalar>(parts: Vec<ImageDataset<T>>) -> ImageDataset<T> {
    let n: usize = parts.iter().map(ImageDataset::len).sum();
    let mut data = Vec::with_capacity(n * IMAGE_BYTES);
    let mut labels = Vec::with_capacity(n);
    for p in parts {
        labels.extend_from_slice(&p.labels);
        data.extend(p.images.into_data());
    }
    let images = Tensor::from_vec(&[n, CHANNELS, IMAGE_SIDE, IMAGE_SIDE], data).expect("sized");
    ImageDataset { images, labels }
}

/// Finds the batch directory: `dir` itself or its `cifar-10-batches-bin`.
pub fn locate_batches(dir: &Path) -> Result<PathBuf, DataError> {
    [dir.to_path_buf(), dir.join(ARCHIVE_SUBDIR)]
        .into_iter()
        .find(|d| d.join(TEST_FILE).is_file())
        .ok_or_else(|| DataError::Missing(dir.to_path_buf()))
}

/// Loads the five training batches and the test batch.
pub fn load_cifar10<T: Scalar>(dir: &Path) -> Result<(ImageDataset<T>, ImageDataset<T>), DataError> {
    let root = locate_batches(dir)?;
    let train = TRAIN_FILES
        .iter()
        .map(|f| read_batch_file(&root.join(f)))
        .collect::<Result<Vec<_>, _>>()?;
    let test = read_batch_file(&root.join(TEST_FILE))?;
    Ok((concat(train), test))
}

/// Indices of `n / 10` samples per class, drawn by a seeded shuffle within
/// each class and then interleaved by a final seeded shuffle.
pub fn stratified_indices(labels: &[usize], n: usize, seed: u64) -> Result<Vec<usize>, DataError> {
    if !n.is_multiple_of(NUM_CLASSES) {
        return Err(DataError::Config(format!("subset size {n} is not divisible by {NUM_CLASSES}")));
    }
    if n > labels.len() {
        return Err(DataError::Config(format!(
            "subset size {n} exceeds dataset size {}",
            labels.len()
        )));
    }
    let per_class = n / NUM_CLASSES;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        if l >= NUM_CLASSES {
            return Err(DataError::Config(format!("label {l} at index {i}")));
        }
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class {
            return Err(DataError::Config(format!(
                "class {class} has {} samples, {per_class} requested",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        picked.extend_from_slice(&members[..per_class]);
    }
    picked.shuffle(&mut rng);
    Ok(picked)
}

pub fn stratified_subset<T: Scalar>(ds: &ImageDataset<T>, n: usize, seed: u64) -> Result<ImageDataset<T>, DataError> {
    Ok(ds.select(&stratified_indices(&ds.labels, n, seed)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckImage {
    /// Every pixel byte equal.
    Constant(u8),
    /// Bytes ramp along rows and columns, offset per channel.
    Gradient,
}

/// A single valid record for loader tests.
pub fn synthetic_check_image(kind: CheckImage, label: u8) -> Vec<u8> {
    assert!((label as usize) < NUM_CLASSES, "label {label} out of range");
    let mut out = Vec::with_capacity(RECORD_BYTES);
    out.push(label);
    match kind {
        CheckImage::Constant(v) => out.resize(RECORD_BYTES, v),
        CheckImage::Gradient => {
            for c in 0..CHANNELS {
                for y in 0..IMAGE_SIDE {
                    for x in 0..IMAGE_SIDE {
                        out.push((4 * (x + y) + 40 * c) as u8);
                    }
                }
            }
        }
    }
    out
}

/// A batch buffer of `n` records with labels cycling through the classes.
///
/// Each class has its own mean colour per channel and a horizontal or
/// vertical stripe pattern, plus uniform noise, so a small network can
/// learn it well above chance.
pub fn synthetic_batch(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * RECORD_BYTES);
    for i in 0..n {
        let label = i % NUM_CLASSES;
        out.push(label as u8);
        for c in 0..CHANNELS {
            let base = 40.0 + 60.0 * ((label + c * 3) % 4) as f64;
            for y in 0..IMAGE_SIDE {
                for x in 0..IMAGE_SIDE {
                    let coord = if label.is_multiple_of(2) { x } else { y };
                    let stripe = if (coord / (1 + label / 2)).is_multiple_of(2) { 30.0 } else { -30.0 };
                    let v = base + stripe + rng.gen_range(-40.0..40.0);
                    out.push(v.clamp(0.0, 255.0) as u8);
                }
            }
        }
    }
    out
}

/// Writes a full set of synthetic batch files (`per_train_file` records in
/// each training batch) into `dir`.
pub fn write_synthetic_cifar(dir: &Path, per_train_file: usize, test_records: usize, seed: u64) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (i, f) in TRAIN_FILES.iter().enumerate() {
        fs::write(dir.join(f), synthetic_batch(per_train_file, seed + i as u64))?;
    }
    fs::write(dir.join(TEST_FILE), synthetic_batch(test_records, seed + 100))
}
