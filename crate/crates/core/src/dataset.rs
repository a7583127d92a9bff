//! Dataset ingestion: IDX (MNIST) files and seeded synthetic blobs.
//!
//! Features are f64 in [0, 1]; pixel bytes are scaled by 1/255. The IDX
//! reader/writer handles the big-endian container with magic 2051
//! (images) and 2049 (labels). Files are always user-supplied — nothing
//! here downloads anything.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

pub const IDX_IMAGES_MAGIC: u32 = 2051;
pub const IDX_LABELS_MAGIC: u32 = 2049;

/// A labeled dataset with flat feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<(Vec<f64>, usize)>,
    pub input_dim: usize,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(
        samples: Vec<(Vec<f64>, usize)>,
        input_dim: usize,
        class_count: usize,
    ) -> Result<Self> {
        for (x, label) in &samples {
            if x.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    context: "dataset feature length",
                    expected: input_dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig(
                    "dataset features must lie in [0, 1]".into(),
                ));
            }
            if *label >= class_count {
                return Err(Error::LabelOutOfRange {
                    label: *label,
                    classes: class_count,
                });
            }
        }
        Ok(Dataset {
            samples,
            input_dim,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Debug CSV: `label,f0,f1,...` with a header row.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "label")?;
        for i in 0..self.input_dim {
            write!(w, ",f{i}")?;
        }
        writeln!(w)?;
        for (x, label) in &self.samples {
            write!(w, "{label}")?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn read_u32_be(r: &mut impl Read, path: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|_| Error::Malformed {
        path: path.into(),
        message: "truncated header".into(),
    })?;
    Ok(u32::from_be_bytes(buf))
}

/// Raw images from an IDX3 file: (count, rows, cols, pixels scaled to the unit interval).
pub fn load_idx_images<P: AsRef<Path>>(path: P) -> Result<(usize, usize, usize, Vec<f64>)> {
    let display = path.as_ref().display().to_string();
    let mut f = std::io::BufReader::new(std::fs::File::open(&path)?);
    let magic = read_u32_be(&mut f, &display)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            got: magic,
            expected: IDX_IMAGES_MAGIC,
        });
    }
    let count = read_u32_be(&mut f, &display)? as usize;
    let rows = read_u32_be(&mut f, &display)? as usize;
    let cols = read_u32_be(&mut f, &display)? as usize;
    let mut bytes = vec![0u8; count * rows * cols];
    f.read_exact(&mut bytes).map_err(|_| Error::Malformed {
        path: display,
        message: "truncated image data".into(),
    })?;
    let pixels = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((count, rows, cols, pixels))
}

/// Labels from an IDX1 file.
pub fn load_idx_labels<P: AsRef<Path>>(path: P) -> Result<Vec<usize>> {
    let display = path.as_ref().display().to_string();
    let mut f = std::io::BufReader::new(std::fs::File::open(&path)?);
    let magic = read_u32_be(&mut f, &display)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            got: magic,
            expected: IDX_LABELS_MAGIC,
        });
    }
    let count = read_u32_be(&mut f, &display)? as usize;
    let mut bytes = vec![0u8; count];
    f.read_exact(&mut bytes).map_err(|_| Error::Malformed {
        path: display,
        message: "truncated label data".into(),
    })?;
    Ok(bytes.into_iter().map(usize::from).collect())
}

/// Load an image/label IDX pair into a Dataset, flattening images
/// row-major.
pub fn load_idx_pair<P: AsRef<Path>>(images: P, labels: P, class_count: usize) -> Result<Dataset> {
    let (count, rows, cols, pixels) = load_idx_images(&images)?;
    let labels_vec = load_idx_labels(&labels)?;
    if labels_vec.len() != count {
        return Err(Error::Malformed {
            path: images.as_ref().display().to_string(),
            message: format!("{count} images but {} labels", labels_vec.len()),
        });
    }
    let dim = rows * cols;
    let samples = labels_vec
        .into_iter()
        .enumerate()
        .map(|(i, label)| (pixels[i * dim..(i + 1) * dim].to_vec(), label))
        .collect();
    Dataset::new(samples, dim, class_count)
}

/// Write a dataset as an IDX image/label pair. Features are quantized to
/// bytes with `round(x * 255)`; `shape` gives the (rows, cols) image
/// shape, which must multiply to `input_dim`.
pub fn write_idx_pair<P: AsRef<Path>>(
    d: &Dataset,
    shape: (usize, usize),
    images: P,
    labels: P,
) -> Result<()> {
    let (rows, cols) = shape;
    if rows * cols != d.input_dim {
        return Err(Error::DimensionMismatch {
            context: "idx image shape",
            expected: d.input_dim,
            got: rows * cols,
        });
    }
    if d.class_count > 256 {
        return Err(Error::InvalidConfig(
            "idx labels are bytes; class_count must be <= 256".into(),
        ));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(&images)?);
    f.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    f.write_all(&(d.len() as u32).to_be_bytes())?;
    f.write_all(&(rows as u32).to_be_bytes())?;
    f.write_all(&(cols as u32).to_be_bytes())?;
    for (x, _) in &d.samples {
        let bytes: Vec<u8> = x.iter().map(|&v| (v * 255.0).round() as u8).collect();
        f.write_all(&bytes)?;
    }
    f.flush()?;

    let mut f = std::io::BufWriter::new(std::fs::File::create(&labels)?);
    f.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    f.write_all(&(d.len() as u32).to_be_bytes())?;
    for (_, label) in &d.samples {
        f.write_all(&[*label as u8])?;
    }
    f.flush()?;
    Ok(())
}

/// Seeded, class-balanced subset: exactly `per_class` samples of every
/// class, drawn without replacement. Output is ordered class 0 first,
/// each class's picks in draw order.
pub fn subsample(d: &Dataset, per_class: usize, seed_value: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    let mut rng = seed::rng(seed_value);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.class_count];
    for (i, (_, label)) in d.samples.iter().enumerate() {
        by_class[*label].push(i);
    }
    let mut samples = Vec::with_capacity(per_class * d.class_count);
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < per_class {
            return Err(Error::ClassTooSmall {
                class,
                available: idx.len(),
                requested: per_class,
            });
        }
        // partial Fisher-Yates, take the first per_class
        for i in 0..per_class {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        for &i in &idx[..per_class] {
            samples.push(d.samples[i].clone());
        }
    }
    Dataset::new(samples, d.input_dim, d.class_count)
}

/// Gaussian clusters at seeded random centers with pairwise center
/// distance at least `separation`. Cluster std is `separation / 6`, so a
/// generous separation yields linearly separable classes. Features are
/// clamped to [0, 1] and quantized to the 1/255 grid (byte-exact IDX
/// round trips). Center placement retries up to a fixed attempt budget
/// and then keeps the most separated draw seen.
pub fn synthetic_blobs(
    classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
    seed_value: u64,
) -> Dataset {
    assert!(separation > 0.0, "separation must be positive");
    let mut rng = seed::rng(seed_value);

    let min_pairwise = |centers: &[Vec<f64>]| -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let d2: f64 = centers[i]
                    .iter()
                    .zip(&centers[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.min(d2.sqrt());
            }
        }
        best
    };

    let mut best_centers: Vec<Vec<f64>> = Vec::new();
    let mut best_dist = -1.0;
    for _ in 0..1000 {
        let centers: Vec<Vec<f64>> = (0..classes)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let dist = if classes > 1 {
            min_pairwise(&centers)
        } else {
            f64::INFINITY
        };
        if dist > best_dist {
            best_dist = dist;
            best_centers = centers;
        }
        if best_dist >= separation {
            break;
        }
    }

    let noise = Normal::new(0.0, separation / 6.0).unwrap();
    let mut samples = Vec::with_capacity(classes * per_class);
    for (class, center) in best_centers.iter().enumerate() {
        for _ in 0..per_class {
            let x: Vec<f64> = center
                .iter()
                .map(|&c| {
                    let v = (c + noise.sample(&mut rng)).clamp(0.0, 1.0);
                    (v * 255.0).round() / 255.0
                })
                .collect();
            samples.push((x, class));
        }
    }
    Dataset {
        samples,
        input_dim: dim,
        class_count: classes,
    }
}

/// Standard basis vector for a class label.
pub fn one_hot(label: usize, class_count: usize) -> Result<Vec<f64>> {
    if label >= class_count {
        return Err(Error::LabelOutOfRange {
            label,
            classes: class_count,
        });
    }
    let mut v = vec![0.0; class_count];
    v[label] = 1.0;
    Ok(v)
}
