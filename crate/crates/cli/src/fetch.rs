//! Resolves a structure argument to a local PDB file, downloading by code
//! into a cache directory when needed.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};

pub const CACHE_ENV: &str = "POWERSPEC_PDB_CACHE";
const RCSB_URL: &str = "https://files.rcsb.org/download";

/// Four characters, the first a digit: the shape of a PDB identifier.
pub fn is_pdb_code(s: &str) -> bool {
    s.len() == 4 && s.as_bytes()[0].is_ascii_digit() && s.chars().all(|c| c.is_ascii_alphanumeric())
}

pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    match std::env::var_os("HOME") {
        Some(home) => Path::new(&home).join(".cache").join("powerspec").join("pdb"),
        None => std::env::temp_dir().join("powerspec-pdb"),
    }
}

fn cached(dir: &Path, code: &str) -> Option<PathBuf> {
    [code.to_ascii_uppercase(), code.to_ascii_lowercase()]
        .iter()
        .flat_map(|c| [format!("{c}.pdb"), format!("pdb{c}.ent")])
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
}

fn download(code: &str, dest: &Path) -> Result<()> {
    let url = format!("{RCSB_URL}/{}.pdb", code.to_ascii_uppercase());
    log::info!("fetching {url}");
    let config = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(60)))
        .build();
    let agent = ureq::Agent::new_with_config(config);
    let text = agent
        .get(&url)
        .call()
        .with_context(|| format!("downloading {url}"))?
        .body_mut()
        .read_to_string()
        .with_context(|| format!("reading {url}"))?;
    if let Some(parent) = dest.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    // write then rename so an interrupted download never looks cached
    let partial = dest.with_extension("part");
    std::fs::write(&partial, text)?;
    std::fs::rename(&partial, dest)?;
    Ok(())
}

/// An existing path is used as is; a bare PDB code is looked up in the cache
/// and downloaded on a miss.
pub fn resolve_structure(arg: &str, cache_dir: Option<&Path>) -> Result<PathBuf> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    if !is_pdb_code(arg) {
        bail!("{arg}: no such file, and not a 4-character PDB code");
    }
    let dir = cache_dir.map(Path::to_path_buf).unwrap_or_else(default_cache_dir);
    if let Some(hit) = cached(&dir, arg) {
        log::info!("using cached {}", hit.display());
        return Ok(hit);
    }
    let dest = dir.join(format!("{}.pdb", arg.to_ascii_uppercase()));
    download(arg, &dest)?;
    Ok(dest)
}
