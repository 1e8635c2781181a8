//! Artifact files, the `.partial` convention and run.meta.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Data files written by one run.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` in the output directory. A stale `.partial` twin is removed.
    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        let stale = partial_name(&path);
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        self.files.push(path);
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
    }

    /// Renames every data file to `<name>.partial`.
    pub fn mark_partial(&mut self) -> io::Result<()> {
        for p in &mut self.files {
            let target = partial_name(p);
            fs::rename(&*p, &target)?;
            *p = target;
        }
        Ok(())
    }
}

fn partial_name(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// `key = value` lines, the same layout as the config file.
pub fn meta_text(sections: &[(&str, &[(String, String)])]) -> String {
    let mut s = String::from("# cylwave run metadata\n");
    for (title, entries) in sections {
        s.push_str(&format!("\n# {title}\n"));
        for (k, v) in entries.iter() {
            s.push_str(&format!("{k} = {v}\n"));
        }
    }
    s
}

/// A gnuplot script reading comma-separated files with a header row.
pub fn gnuplot(output_png: &str, xlabel: &str, ylabel: &str, body: &str) -> String {
    format!(
        "# gnuplot script; run from the output directory: gnuplot {stem}.gp\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1000,650\n\
         set output '{output_png}'\n\
         set xlabel '{xlabel}'\n\
         set ylabel '{ylabel}'\n\
         set grid\n\
         {body}\n",
        stem = output_png.trim_end_matches(".png")
    )
}
