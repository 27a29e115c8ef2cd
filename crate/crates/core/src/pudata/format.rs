//! On-disk dataset directories.
//!
//! ```text
//! <dir>/meta        TOML: name, n, h, w, c, label_offset
//! <dir>/images.bin  N·H·W·C bytes, row-major NHWC
//! <dir>/labels.bin  N bytes
//! ```
//!
//! A benchmark root holds one such directory per split: `train/`, `val/`
//! and `test/`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataError, LabeledImageSet};

const META: &str = "meta";
const IMAGES: &str = "images.bin";
const LABELS: &str = "labels.bin";

/// Header stored in `meta`. Unknown keys are ignored on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub label_offset: u8,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_exact_len(path: &Path, expected: u64) -> Result<Vec<u8>, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() as u64 != expected {
        return Err(DataError::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    Ok(bytes)
}

pub fn load_dataset(dir: &Path) -> Result<LabeledImageSet, DataError> {
    let meta_path = dir.join(META);
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: DatasetMeta = toml::from_str(&text).map_err(|e| DataError::Meta {
        path: meta_path.clone(),
        msg: e.message().to_string(),
    })?;
    if meta.c != 1 && meta.c != 3 {
        return Err(DataError::Channels(meta.c));
    }
    let image_bytes = meta
        .n
        .checked_mul(meta.h)
        .and_then(|v| v.checked_mul(meta.w))
        .and_then(|v| v.checked_mul(meta.c))
        .ok_or_else(|| DataError::Meta {
            path: meta_path.clone(),
            msg: "image size overflows".into(),
        })?;
    let images = read_exact_len(&dir.join(IMAGES), image_bytes as u64)?;
    let labels = read_exact_len(&dir.join(LABELS), meta.n as u64)?;
    LabeledImageSet::new(meta.name, (meta.h, meta.w, meta.c), meta.label_offset, images, labels)
}

pub fn save_dataset(ds: &LabeledImageSet, dir: &Path) -> Result<(), DataError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = DatasetMeta {
        name: ds.name.clone(),
        n: ds.len(),
        h: ds.h,
        w: ds.w,
        c: ds.c,
        label_offset: ds.label_offset,
    };
    let text = toml::to_string(&meta).expect("meta serializes");
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))
    };
    write(META, text.as_bytes())?;
    write(IMAGES, &ds.images)?;
    write(LABELS, &ds.labels)
}

/// The three benchmark splits.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub root: PathBuf,
    pub train: LabeledImageSet,
    pub val: LabeledImageSet,
    pub test: LabeledImageSet,
}

pub fn load_benchmark(root: &Path) -> Result<Benchmark, DataError> {
    Ok(Benchmark {
        root: root.to_path_buf(),
        train: load_dataset(&root.join("train"))?,
        val: load_dataset(&root.join("val"))?,
        test: load_dataset(&root.join("test"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_set(n: usize, (h, w, c): (usize, usize, usize), seed: u64) -> LabeledImageSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let images = (0..n * h * w * c).map(|_| rng.random()).collect();
        let labels = (0..n).map(|_| rng.random_range(0..8)).collect();
        LabeledImageSet::new("rand", (h, w, c), 1, images, labels).unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for (i, shape) in [(28, 28, 1), (5, 3, 3), (1, 2, 1)].into_iter().enumerate() {
            let ds = random_set(17, shape, i as u64);
            let sub = dir.path().join(i.to_string());
            save_dataset(&ds, &sub).unwrap();
            assert_eq!(load_dataset(&sub).unwrap(), ds);
        }
    }

    #[test]
    fn meta_has_exactly_the_six_fields_and_ignores_extras() {
        let dir = tempfile::tempdir().unwrap();
        let ds = random_set(3, (2, 2, 1), 9);
        save_dataset(&ds, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(META)).unwrap();
        let table: toml::Table = text.parse().unwrap();
        let mut keys: Vec<_> = table.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["c", "h", "label_offset", "n", "name", "w"]);
        fs::write(dir.path().join(META), format!("{text}source = \"archive.npz\"\n")).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn size_errors_are_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let ds = random_set(4, (3, 3, 1), 2);
        save_dataset(&ds, dir.path()).unwrap();

        let meta = fs::read_to_string(dir.path().join(META)).unwrap();
        fs::write(dir.path().join(META), meta.replace("n = 4", "n = 5")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DataError::SizeMismatch { expected: 45, actual: 36, .. })));

        fs::write(dir.path().join(META), &meta).unwrap();
        fs::write(dir.path().join(IMAGES), &ds.images[..30]).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DataError::SizeMismatch { .. })));
    }

    #[test]
    fn rejects_two_channels_and_bad_meta() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(META),
            "name = \"x\"\nn = 1\nh = 1\nw = 1\nc = 2\nlabel_offset = 0\n",
        )
        .unwrap();
        fs::write(dir.path().join(IMAGES), [0u8, 0]).unwrap();
        fs::write(dir.path().join(LABELS), [0u8]).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DataError::Channels(2))));

        fs::write(dir.path().join(META), "name = \"x\"\nn = 1\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(DataError::Meta { .. })));
        assert!(matches!(load_dataset(&dir.path().join("missing")), Err(DataError::Io { .. })));
    }
}
