//! On-disk formats.
//!
//! Feature file (little-endian):
//! - magic: `b"RGNF"`
//! - version: u32, currently 1
//! - n_samples: u64
//! - dim: u32
//! - data: `n_samples * dim` f32, row-major
//!
//! Label files are UTF-8 CSV with LF line endings. The `index` column is
//! authoritative, so row order on disk does not matter.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::{FeatureMatrix, LabelVector, NoisySubset, SubsetRows};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"RGNF";
pub const FEATURE_FORMAT_VERSION: u32 = 1;
pub const FEATURE_HEADER_LEN: usize = 20;

pub const LABEL_HEADER: [&str; 2] = ["index", "label"];
pub const SUBSET_HEADER: [&str; 3] = ["index", "clean_label", "noisy_label"];
pub const ASSIGNMENT_HEADER: [&str; 4] = ["index", "clean_label", "noisy_label", "flipped"];

pub fn encode_features(m: &FeatureMatrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(FEATURE_HEADER_LEN + m.data().len() * 4);
    buf.extend_from_slice(&FEATURE_MAGIC);
    buf.extend_from_slice(&FEATURE_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.n_samples() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < FEATURE_HEADER_LEN {
        return Err(Error::Length(format!(
            "feature header needs {FEATURE_HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if bytes[0..4] != FEATURE_MAGIC {
        return Err(Error::Format("bad magic, expected \"RGNF\"".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FEATURE_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported feature format version {version}"
        )));
    }
    let n_samples = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let n_samples = usize::try_from(n_samples)
        .map_err(|_| Error::Length(format!("{n_samples} samples exceed the address space")))?;
    let dim = dim as usize;
    let payload = &bytes[FEATURE_HEADER_LEN..];
    let expected = n_samples
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::Length(format!("{n_samples}x{dim} payload overflows")))?;
    if payload.len() != expected {
        return Err(Error::Length(format!(
            "header declares {n_samples}x{dim} ({expected} bytes), payload has {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    FeatureMatrix::new(n_samples, dim, data)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}

pub fn write_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_features(m)).map_err(|e| Error::io(path, e))
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr)
}

fn parse_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<u64>>> {
    let mut rdr = open_csv(path, header)?;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|field| {
                field.parse::<u64>().map_err(|_| {
                    Error::Format(format!(
                        "{}: record {}: `{field}` is not a non-negative integer",
                        path.display(),
                        line + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn check_label(index: usize, label: u64, n_classes: usize) -> Result<u32> {
    if label >= n_classes as u64 {
        return Err(Error::LabelRange {
            index,
            label,
            n_classes,
        });
    }
    Ok(label as u32)
}

/// Sorts rows by their index column and rejects duplicates. When `dense` is
/// set the indices must also be exactly `0..rows.len()`.
fn order_by_index(mut rows: Vec<Vec<u64>>, dense: bool) -> Result<Vec<Vec<u64>>> {
    rows.sort_unstable_by_key(|r| r[0]);
    for w in rows.windows(2) {
        if w[0][0] == w[1][0] {
            return Err(Error::Format(format!("duplicate index {}", w[0][0])));
        }
    }
    if dense {
        if let Some((expected, r)) = rows.iter().enumerate().find(|(i, r)| r[0] != *i as u64) {
            return Err(Error::Format(format!(
                "missing index {expected} (next present index is {})",
                r[0]
            )));
        }
    }
    Ok(rows)
}

pub fn read_labels(path: impl AsRef<Path>, n_classes: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    let rows = order_by_index(parse_rows(path, &LABEL_HEADER)?, true)?;
    let labels = rows
        .iter()
        .map(|r| check_label(r[0] as usize, r[1], n_classes))
        .collect::<Result<Vec<_>>>()?;
    LabelVector::new(labels, n_classes)
}

pub fn write_labels(labels: &LabelVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_lines(path, |w| {
        writeln!(w, "{}", LABEL_HEADER.join(","))?;
        for (i, l) in labels.labels().iter().enumerate() {
            writeln!(w, "{i},{l}")?;
        }
        Ok(())
    })
}

/// Reads `index,clean_label,noisy_label` rows. Indices must be unique but
/// need not be dense; they are returned in ascending order.
pub fn read_subset_rows(path: impl AsRef<Path>, n_classes: usize) -> Result<SubsetRows> {
    let path = path.as_ref();
    let rows = order_by_index(parse_rows(path, &SUBSET_HEADER)?, false)?;
    if rows.is_empty() {
        return Err(Error::Length(format!(
            "{}: subset has no rows",
            path.display()
        )));
    }
    let mut index = Vec::with_capacity(rows.len());
    let mut clean = Vec::with_capacity(rows.len());
    let mut noisy = Vec::with_capacity(rows.len());
    for r in &rows {
        let i = r[0] as usize;
        index.push(i);
        clean.push(check_label(i, r[1], n_classes)?);
        noisy.push(check_label(i, r[2], n_classes)?);
    }
    Ok(SubsetRows {
        index,
        clean: LabelVector::new(clean, n_classes)?,
        noisy: LabelVector::new(noisy, n_classes)?,
    })
}

/// Reads a self-contained subset: the CSV's index column addresses rows of
/// `features`, and every row must be annotated exactly once.
pub fn read_noisy_subset(
    path: impl AsRef<Path>,
    n_classes: usize,
    features: FeatureMatrix,
) -> Result<NoisySubset> {
    let path = path.as_ref();
    let rows = read_subset_rows(path, n_classes)?;
    if rows.index.len() != features.n_samples() {
        return Err(Error::Length(format!(
            "{}: {} annotated rows but {} feature rows",
            path.display(),
            rows.index.len(),
            features.n_samples()
        )));
    }
    if let Some((expected, _)) = rows.index.iter().enumerate().find(|(i, &r)| *i != r) {
        return Err(Error::Format(format!(
            "{}: missing index {expected}",
            path.display()
        )));
    }
    let subset = NoisySubset::new(features, rows.clean, rows.noisy, None)?;
    log::info!(
        "subset of {} rows, per-class clean counts {:?}",
        subset.len(),
        subset.clean_class_counts()
    );
    Ok(subset)
}

pub fn write_subset(
    clean: &LabelVector,
    noisy: &LabelVector,
    index: Option<&[usize]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if clean.len() != noisy.len() || index.is_some_and(|ix| ix.len() != clean.len()) {
        return Err(Error::Length("subset columns differ in length".into()));
    }
    write_lines(path, |w| {
        writeln!(w, "{}", SUBSET_HEADER.join(","))?;
        for k in 0..clean.len() {
            let i = index.map_or(k, |ix| ix[k]);
            writeln!(w, "{i},{},{}", clean.get(k), noisy.get(k))?;
        }
        Ok(())
    })
}

/// Reads noisy labels for a dataset of `n` samples, either from an
/// `index,label` file or from a generated `index,clean_label,noisy_label,flipped` file.
pub fn read_noisy_labels(path: impl AsRef<Path>, n_classes: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.iter().eq(ASSIGNMENT_HEADER.iter()) {
        let rows = order_by_index(parse_rows(path, &ASSIGNMENT_HEADER)?, true)?;
        let labels = rows
            .iter()
            .map(|r| check_label(r[0] as usize, r[2], n_classes))
            .collect::<Result<Vec<_>>>()?;
        LabelVector::new(labels, n_classes)
    } else {
        read_labels(path, n_classes)
    }
}

pub(crate) fn write_lines(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn single_value_file_layout() {
        let m = FeatureMatrix::new(1, 1, vec![0.0]).unwrap();
        let bytes = encode_features(&m);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[0..4], b"RGNF");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[1, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &[0, 0, 0, 0]);
    }

    #[test]
    fn feature_round_trip_2x3() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.rgnf");
        let m = FeatureMatrix::new(2, 3, vec![1.0, -2.5, 3.25, 0.0, 1e-7, -0.0]).unwrap();
        write_features(&m, &p).unwrap();
        let back = read_features(&p).unwrap();
        assert_eq!(back.n_samples(), 2);
        assert_eq!(back.dim(), 3);
        let a: Vec<u32> = m.data().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(fs::metadata(&p).unwrap().len(), 44);
    }

    #[test]
    fn truncated_payload_is_length_error() {
        let m = FeatureMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        let mut bytes = encode_features(&m);
        bytes.truncate(FEATURE_HEADER_LEN + 5 * 4);
        assert!(matches!(decode_features(&bytes), Err(Error::Length(_))));
        let mut long = encode_features(&m);
        long.push(0);
        assert!(matches!(decode_features(&long), Err(Error::Length(_))));
    }

    #[test]
    fn bad_magic_and_version() {
        let m = FeatureMatrix::new(1, 1, vec![0.0]).unwrap();
        let mut bytes = encode_features(&m);
        bytes[0] = b'X';
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
        let mut bytes = encode_features(&m);
        bytes[4] = 2;
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_rejected_on_load() {
        let m = FeatureMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let mut bytes = encode_features(&m);
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_features(&bytes),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let m = FeatureMatrix::new(1, 1, vec![0.0]).unwrap();
        let err = write_features(&m, "/nonexistent-dir/x/y.rgnf").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/x/y.rgnf"));
    }

    #[test]
    fn labels_parse_and_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        fs::write(&p, "index,label\n0,2\n1,0").unwrap();
        assert_eq!(read_labels(&p, 3).unwrap().labels(), &[2, 0]);
        fs::write(&p, "index,label\n0,5").unwrap();
        assert!(matches!(read_labels(&p, 3), Err(Error::LabelRange { .. })));
    }

    #[test]
    fn labels_duplicate_and_missing_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        fs::write(&p, "index,label\n0,1\n0,1\n").unwrap();
        assert!(matches!(read_labels(&p, 3), Err(Error::Format(_))));
        fs::write(&p, "index,label\n0,1\n2,1\n").unwrap();
        assert!(matches!(read_labels(&p, 3), Err(Error::Format(_))));
        fs::write(&p, "idx,label\n0,1\n").unwrap();
        assert!(matches!(read_labels(&p, 3), Err(Error::Format(_))));
    }

    #[test]
    fn subset_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let mut text = String::from("index,clean_label,noisy_label\n");
        for i in 0..1999 {
            text.push_str(&format!("{i},{},{}\n", i % 10, i % 10));
        }
        fs::write(&p, text).unwrap();
        let f = FeatureMatrix::new(2000, 1, vec![0.0; 2000]).unwrap();
        assert!(matches!(
            read_noisy_subset(&p, 10, f),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn subset_per_class_report() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let mut text = String::from("index,clean_label,noisy_label\n");
        for i in 0..2000 {
            text.push_str(&format!("{i},{},{}\n", i % 10, (i + i / 7) % 10));
        }
        fs::write(&p, text).unwrap();
        let f = FeatureMatrix::new(2000, 1, vec![0.5; 2000]).unwrap();
        let s = read_noisy_subset(&p, 10, f).unwrap();
        assert_eq!(s.clean_class_counts(), &[200; 10]);
    }

    #[test]
    fn clean_equals_noisy_subset_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "index,clean_label,noisy_label\n1,1,1\n0,0,0\n").unwrap();
        let f = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let s = read_noisy_subset(&p, 2, f).unwrap();
        assert_eq!(s.disagreement_count(), 0);
        assert_eq!(s.clean_labels().labels(), &[0, 1]);
    }

    #[test]
    fn noisy_labels_from_either_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        fs::write(
            &p,
            "index,clean_label,noisy_label,flipped\n1,0,0,0\n0,1,2,1\n",
        )
        .unwrap();
        assert_eq!(read_noisy_labels(&p, 3).unwrap().labels(), &[2, 0]);
        fs::write(&p, "index,label\n0,1\n1,1\n").unwrap();
        assert_eq!(read_noisy_labels(&p, 3).unwrap().labels(), &[1, 1]);
    }
}
