// SPDX-License-Identifier: Apache-2.0

//! Single-file or directory inputs, processed frame by frame.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::Failure;

/// An input frame and where its output goes. For commands with several
/// outputs per frame, `output` is a path prefix inside the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub input: PathBuf,
    pub output: PathBuf,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "frame".into())
}

/// With a directory `input`, every `*.bin` inside it (sorted by name) maps to
/// `<output>/<stem><ext>` and `output` is created as a directory. A single
/// file maps to `output` itself, or to `<output>/<stem><ext>` when
/// `output_is_dir`.
pub fn plan(input: &Path, output: &Path, ext: &str, output_is_dir: bool) -> Result<Vec<Frame>, Failure> {
    let meta = std::fs::metadata(input)
        .map_err(|e| Failure::usage(format!("cannot read input {}: {e}", input.display())))?;
    if !meta.is_dir() {
        let out = if output_is_dir {
            create_dir(output)?;
            output.join(format!("{}{ext}", stem(input)))
        } else {
            output.to_path_buf()
        };
        return Ok(vec![Frame {
            name: stem(input),
            input: input.to_path_buf(),
            output: out,
        }]);
    }
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| Failure::usage(format!("cannot list {}: {e}", input.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "bin"))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(Failure::usage(format!("no .bin files in {}", input.display())));
    }
    create_dir(output)?;
    Ok(inputs
        .into_iter()
        .map(|p| Frame {
            name: stem(&p),
            output: output.join(format!("{}{ext}", stem(&p))),
            input: p,
        })
        .collect())
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))
}

/// Runs `work` on every frame with up to `jobs` threads. Results come back
/// in frame order; the first failing frame in that order decides the error.
pub fn run<T: Send>(
    frames: &[Frame],
    jobs: usize,
    work: impl Fn(&Frame) -> Result<T, Failure> + Sync,
) -> Result<Vec<T>, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T, Failure>> = pool.install(|| {
        frames
            .par_iter()
            .map(|f| {
                work(f).map_err(|e| Failure {
                    message: format!("{}: {}", f.input.display(), e.message),
                    ..e
                })
            })
            .collect()
    });
    results.into_iter().collect()
}
