//! Helpers shared by the examples.

use std::path::PathBuf;

/// Output directory: the first command-line argument, or a folder under
/// the system temp directory.
pub fn out_dir(example: &str) -> PathBuf {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("drumdiff-examples").join(example));
    std::fs::create_dir_all(&dir).expect("create output directory");
    dir
}
