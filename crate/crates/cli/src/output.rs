//! Artifact directory bookkeeping.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use paretomarch::export::{write_heatmap_pgm, Scaling};
use paretomarch::ScalarField;

pub struct Bundle {
    dir: PathBuf,
    pub files: Vec<String>,
    pub scaling: BTreeMap<String, Scaling>,
}

impl Bundle {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Bundle {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            scaling: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` through `f`, recording it in the file list.
    pub fn write<T>(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<T>) -> io::Result<T> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        let out = f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(out)
    }

    pub fn heatmap(&mut self, name: &str, field: &ScalarField) -> io::Result<()> {
        let g = *field.grid();
        let s = self.write(name, |w| write_heatmap_pgm(w, field.values(), g.nx(), g.ny()))?;
        self.scaling.insert(name.to_string(), s);
        Ok(())
    }
}
