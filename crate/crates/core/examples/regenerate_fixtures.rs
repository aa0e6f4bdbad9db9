//! Rebuilds the derived files of the bundled fixture set and refreshes
//! `CHECKSUMS.sha256`.
//!
//! ```text
//! cargo run -p verity-core --example regenerate_fixtures
//! ```

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use verity_core::fixtures::{build_bundled, bundled_dir, checksummed_files, write_bundled, BUNDLED_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = bundled_dir();
    let set = build_bundled(&dir.join("raw"), BUNDLED_SEED)?;
    write_bundled(&set, &dir)?;
    let mut sums = String::new();
    for name in checksummed_files(&dir)? {
        let digest = Sha256::digest(std::fs::read(dir.join(&name))?);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        writeln!(sums, "{hex}  {name}")?;
    }
    std::fs::write(dir.join("CHECKSUMS.sha256"), sums)?;
    println!("wrote {}", dir.display());
    Ok(())
}
