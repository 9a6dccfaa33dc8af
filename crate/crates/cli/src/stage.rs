//! All-or-nothing output: files are written to hidden temporaries in the
//! output directory and renamed into place only once every one succeeded.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{io_error, CliError, CliResult};

pub struct Staged {
    dir: PathBuf,
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    /// Creates the output directory if needed.
    pub fn new(dir: &Path) -> CliResult<Staged> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Staged {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let target = self.dir.join(name);
        let tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(&self.dir)
            .map_err(|e| io_error(&self.dir, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_error(&target, e))?;
        }
        self.files.push((tmp, target));
        Ok(())
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.write(name, |w| w.write_all(text.as_bytes()))
    }

    /// Renames every staged file into place, returning the final paths.
    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.files.len());
        for (tmp, target) in self.files {
            tmp.persist(&target)
                .map_err(|e| CliError::user(format!("{}: {}", target.display(), e.error)))?;
            done.push(target);
        }
        Ok(done)
    }
}
