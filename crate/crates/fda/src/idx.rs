//! Readers for the IDX image/label files and the CSV layout.

use crate::error::{FdaError, Result};
use crate::imaging::GrayImage;
use flate2::read::GzDecoder;
use std::fs::File;
use std::io::Read;
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gzipped(path: &Path) -> Result<Vec<u8>> {
    let name = path.display().to_string();
    let mut file = File::open(path).map_err(|e| FdaError::io(&name, e))?;
    let mut head = [0u8; 2];
    let mut bytes = Vec::new();
    let n = file.read(&mut head).map_err(|e| FdaError::io(&name, e))?;
    bytes.extend_from_slice(&head[..n]);
    file.read_to_end(&mut bytes)
        .map_err(|e| FdaError::io(&name, e))?;
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut decoded = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut decoded)
            .map_err(|e| FdaError::io(&name, e))?;
        Ok(decoded)
    } else {
        Ok(bytes)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| FdaError::MalformedData {
            path: path.to_string(),
            what: format!("truncated header at byte {offset}"),
        })
}

/// Reads an IDX image file (optionally gzip-compressed) into grayscale
/// images with intensities in `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Vec<GrayImage>> {
    let name = path.display().to_string();
    let bytes = read_maybe_gzipped(path)?;
    let magic = be_u32(&bytes, 0, &name)?;
    if magic != IMAGE_MAGIC {
        return Err(FdaError::BadMagic {
            path: name,
            expected: IMAGE_MAGIC,
            got: magic,
        });
    }
    let count = be_u32(&bytes, 4, &name)? as usize;
    let rows = be_u32(&bytes, 8, &name)? as usize;
    let cols = be_u32(&bytes, 12, &name)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(FdaError::MalformedData {
            path: name,
            what: format!("expected {expected} bytes, got {}", bytes.len()),
        });
    }
    Ok((0..count)
        .map(|i| {
            let start = 16 + i * rows * cols;
            GrayImage::from_bytes(rows, cols, &bytes[start..start + rows * cols])
        })
        .collect())
}

/// Reads an IDX label file (optionally gzip-compressed).
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let name = path.display().to_string();
    let bytes = read_maybe_gzipped(path)?;
    let magic = be_u32(&bytes, 0, &name)?;
    if magic != LABEL_MAGIC {
        return Err(FdaError::BadMagic {
            path: name,
            expected: LABEL_MAGIC,
            got: magic,
        });
    }
    let count = be_u32(&bytes, 4, &name)? as usize;
    if bytes.len() < 8 + count {
        return Err(FdaError::MalformedData {
            path: name,
            what: format!("expected {} bytes, got {}", 8 + count, bytes.len()),
        });
    }
    Ok(bytes[8..8 + count].iter().map(|&b| b as usize).collect())
}

/// Reads the CSV layout: one image per row as `label, p0, p1, ...` with all
/// pixel rows concatenated; a leading header line is skipped when present.
pub fn read_csv_images(path: &Path) -> Result<(Vec<GrayImage>, Vec<usize>)> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FdaError::io(&name, e))?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields[0].parse::<f64>().is_err() {
            continue; // header
        }
        let label: usize = fields[0].parse().map_err(|_| FdaError::MalformedData {
            path: name.clone(),
            what: format!("line {}: bad label {:?}", lineno + 1, fields[0]),
        })?;
        let pixel_count = fields.len() - 1;
        let side = (pixel_count as f64).sqrt().round() as usize;
        if side * side != pixel_count {
            return Err(FdaError::MalformedData {
                path: name.clone(),
                what: format!(
                    "line {}: {pixel_count} pixels is not a square image",
                    lineno + 1
                ),
            });
        }
        let mut values = Vec::with_capacity(pixel_count);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| FdaError::MalformedData {
                path: name.clone(),
                what: format!("line {}: bad pixel {f:?}", lineno + 1),
            })?;
            values.push(v / 255.0);
        }
        images.push(GrayImage::new(side, side, values));
        labels.push(label);
    }
    Ok((images, labels))
}

/// Pairs an image file with its label file, enforcing matching counts.
pub fn read_idx_pair(images: &Path, labels: &Path) -> Result<(Vec<GrayImage>, Vec<usize>)> {
    let imgs = read_idx_images(images)?;
    let labs = read_idx_labels(labels)?;
    if imgs.len() != labs.len() {
        return Err(FdaError::CountMismatch {
            labels: labs.len(),
            images: imgs.len(),
        });
    }
    Ok((imgs, labs))
}

/// Writes images and labels in the IDX format (uncompressed); used by tests
/// and the synthetic data path.
pub fn write_idx_pair(
    images_path: &Path,
    labels_path: &Path,
    images: &[GrayImage],
    labels: &[usize],
) -> Result<()> {
    assert_eq!(images.len(), labels.len());
    let (rows, cols) = images
        .first()
        .map(|i| (i.height(), i.width()))
        .unwrap_or((0, 0));
    let mut img_bytes = Vec::with_capacity(16 + images.len() * rows * cols);
    img_bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    img_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        for v in img.values() {
            img_bytes.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    std::fs::write(images_path, img_bytes)
        .map_err(|e| FdaError::io(images_path.display().to_string(), e))?;

    let mut lab_bytes = Vec::with_capacity(8 + labels.len());
    lab_bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab_bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab_bytes.extend(labels.iter().map(|&l| l as u8));
    std::fs::write(labels_path, lab_bytes)
        .map_err(|e| FdaError::io(labels_path.display().to_string(), e))?;
    Ok(())
}
