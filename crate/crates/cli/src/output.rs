use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{Failure, Outcome};

/// Collects output files for one run and writes the manifest last.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Outcome<Self> {
        fs::create_dir_all(root).map_err(|e| {
            Failure::Setup(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let path = self.root.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::Setup(format!("cannot write {}: {e}", path.display())))?;
        self.written.push((
            name.to_string(),
            hex::encode(Sha256::digest(contents.as_bytes())),
        ));
        Ok(())
    }

    /// The resolved settings followed by one comment line per output, so the manifest can be
    /// fed back as a config file.
    pub fn finish(self, scenario: &str, resolved_settings: &str) -> Outcome<PathBuf> {
        let mut text = format!("# scenario: {scenario}\n");
        text.push_str(resolved_settings);
        for (name, hash) in &self.written {
            let _ = writeln!(text, "# output {name} sha256 {hash}");
        }
        let path = self.root.join("manifest.txt");
        fs::write(&path, text)
            .map_err(|e| Failure::Setup(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Whole numbers print as integers, everything else in shortest round-trip exponent form.
fn cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

/// CSV with a header line; every value must be finite.
pub struct Table {
    header: String,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.join(","),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    pub fn to_csv(&self, what: &str) -> Outcome<String> {
        let mut out = self.header.clone();
        out.push('\n');
        for row in &self.rows {
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Failure::Numerical(format!(
                    "{what} produced a non-finite value ({bad})"
                )));
            }
            let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}
