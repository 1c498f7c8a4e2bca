//! On-disk store of Riley systems keyed by `(p, q, version)`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use riley_core::{riley_system, BivarPoly, RileySystem, TwoBridgeKnot};

const SECTIONS: [&str; 4] = ["A", "B", "D", "P"];

fn entry_path(dir: &Path, knot: &TwoBridgeKnot) -> PathBuf {
    dir.join(format!("v{}", env!("CARGO_PKG_VERSION")))
        .join(format!("K_{}_{}.txt", knot.p(), knot.q()))
}

/// Text with one `[X]` header per section followed by its canonical terms.
fn serialize(sys: &RileySystem) -> String {
    let mut out = String::new();
    for (name, poly) in SECTIONS.iter().zip([&sys.a, &sys.b, &sys.d, &sys.p]) {
        out.push_str(&format!("[{name}]\n"));
        out.push_str(&poly.to_canonical());
    }
    out
}

fn parse(text: &str, knot: TwoBridgeKnot) -> Result<RileySystem> {
    let mut parts: Vec<String> = vec![String::new(); SECTIONS.len()];
    let mut current: Option<usize> = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(
                SECTIONS
                    .iter()
                    .position(|s| *s == name)
                    .context("unknown cache section")?,
            );
        } else {
            let i = current.context("cache entry starts without a section header")?;
            parts[i].push_str(line);
            parts[i].push('\n');
        }
    }
    let polys = parts
        .iter()
        .map(|p| BivarPoly::from_canonical(p))
        .collect::<Result<Vec<_>, _>>()?;
    let [a, b, d, p]: [BivarPoly; 4] = polys.try_into().expect("four sections");
    Ok(RileySystem::from_parts(knot, a, b, d, &p)?)
}

/// Loads the system from `dir` when present, otherwise computes and stores it.
pub fn load_or_compute(dir: Option<&Path>, knot: &TwoBridgeKnot) -> Result<Arc<RileySystem>> {
    let Some(dir) = dir else {
        return Ok(riley_system(knot));
    };
    let path = entry_path(dir, knot);
    if let Ok(text) = fs::read_to_string(&path) {
        match parse(&text, *knot) {
            Ok(sys) => return Ok(Arc::new(sys)),
            Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
        }
    }
    let sys = riley_system(knot);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serialize(&sys)).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use riley_core::validate_knot;

    #[test]
    fn round_trip() {
        let knot = validate_knot(9, 5).unwrap();
        let sys = riley_system(&knot);
        let back = parse(&serialize(&sys), knot).unwrap();
        assert_eq!(back.p, sys.p);
        assert_eq!(back.b, sys.b);
    }

    #[test]
    fn tampered_entry_is_rejected() {
        let knot = validate_knot(7, 3).unwrap();
        let text = serialize(&riley_system(&knot)).replacen("[P]\n", "[P]\nt^-9*u^0:1\n", 1);
        assert!(parse(&text, knot).is_err());
    }
}
