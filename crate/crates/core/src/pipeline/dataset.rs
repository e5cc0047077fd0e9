use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::decode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    /// `<class>/<file name>`, unique within an index.
    pub image_id: String,
    pub path: PathBuf,
    pub class_label: String,
}

impl IndexEntry {
    /// File stem used to name derived outputs.
    pub fn stem(&self) -> &str {
        self.path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&self.image_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub reason: String,
}

/// Images found under a class-per-subdirectory root, sorted by `image_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: Vec<IndexEntry>,
    pub skipped: Vec<SkipRecord>,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Image count per class.
    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for e in &self.entries {
            *h.entry(e.class_label.clone()).or_insert(0) += 1;
        }
        h
    }

    /// Writes `image_id,path,class_label` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["image_id", "path", "class_label"])?;
        for e in &self.entries {
            w.write_record([
                e.image_id.as_str(),
                &e.path.to_string_lossy(),
                e.class_label.as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn is_hidden(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with('.'))
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !is_hidden(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Indexes `root/<class>/<image>` and decodes every file once to validate it.
///
/// Undecodable files abort the ingest unless `skip_bad` is set, in which case
/// they are listed in [`DatasetIndex::skipped`]. Loose files directly under
/// `root` and nested directories are ignored with a warning.
pub fn ingest(root: &Path, skip_bad: bool) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::InvalidArgument(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let mut candidates = Vec::new();
    for class_dir in sorted_children(root)? {
        if !class_dir.is_dir() {
            log::warn!("ignoring file outside class directories: {}", class_dir.display());
            continue;
        }
        let class = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("non-UTF-8 class directory {}", class_dir.display()))
            })?
            .to_owned();
        for path in sorted_children(&class_dir)? {
            if path.is_dir() {
                log::warn!("ignoring nested directory {}", path.display());
                continue;
            }
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                log::warn!("ignoring non-UTF-8 file name {}", path.display());
                continue;
            };
            candidates.push(IndexEntry {
                image_id: format!("{class}/{name}"),
                path: path.clone(),
                class_label: class.clone(),
            });
        }
    }

    let checks: Vec<Option<String>> = candidates
        .par_iter()
        .map(|e| decode(&e.path).err().map(|err| err.to_string()))
        .collect();

    let mut entries = Vec::with_capacity(candidates.len());
    let mut skipped = Vec::new();
    for (entry, failure) in candidates.into_iter().zip(checks) {
        match failure {
            None => entries.push(entry),
            Some(reason) => skipped.push(SkipRecord {
                path: entry.path,
                reason,
            }),
        }
    }
    if !skipped.is_empty() && !skip_bad {
        let list: Vec<String> = skipped
            .iter()
            .map(|s| format!("{}: {}", s.path.display(), s.reason))
            .collect();
        return Err(Error::Decode {
            path: root.to_path_buf(),
            reason: format!(
                "{} unreadable file(s) (use skip-bad to continue):\n  {}",
                skipped.len(),
                list.join("\n  ")
            ),
        });
    }
    for s in &skipped {
        log::warn!("skipping {}: {}", s.path.display(), s.reason);
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    if entries.is_empty() {
        log::warn!("no images found under {}", root.display());
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        entries,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use crate::io::save_png;

    fn write_fixture(root: &Path, classes: &[&str], per_class: usize) {
        for (ci, class) in classes.iter().enumerate() {
            for i in 0..per_class {
                let img = Image::from_fn(4, 3, |_, _| [ci as f64 / 4.0, i as f64 / 4.0, 0.5]).unwrap();
                save_png(&img, &root.join(class).join(format!("img{i}.png"))).unwrap();
            }
        }
    }

    #[test]
    fn empty_root_gives_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        let idx = ingest(dir.path(), false).unwrap();
        assert!(idx.is_empty());
    }

    #[test]
    fn three_by_two_fixture() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &["c", "a", "b"], 2);
        let idx = ingest(dir.path(), false).unwrap();
        assert_eq!(idx.len(), 6);
        assert!(idx.histogram().values().all(|&n| n == 2));
        let ids: Vec<&str> = idx.entries.iter().map(|e| e.image_id.as_str()).collect();
        assert_eq!(ids[0], "a/img0.png");
        assert!(ids.windows(2).all(|w| w[0] < w[1]));

        let mut csv = Vec::new();
        idx.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("image_id,path,class_label\n"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn corrupt_file_aborts_or_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &["a", "b", "c"], 2);
        std::fs::write(dir.path().join("b/img1.png"), b"not a png").unwrap();
        assert!(ingest(dir.path(), false).is_err());
        let idx = ingest(dir.path(), true).unwrap();
        assert_eq!(idx.len(), 5);
        assert_eq!(idx.skipped.len(), 1);
    }
}
