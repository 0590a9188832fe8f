//! Artifact emission: atomic file writes, the versioned JSON envelope, CSV,
//! and SVG renderings of extracted nodal loops.

use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Write via a temporary file in the destination directory plus rename, so a
/// crash never leaves a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// The envelope every run emits: schema version, the fully resolved config
/// (defaults filled in), and the payload.
pub fn envelope<C: Serialize, R: Serialize>(command: &str, config: &C, results: &R) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "results": results,
    })
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Minimal CSV: header row plus stringified records (no quoting needed for
/// the numeric tables we emit).
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Render closed loops (world coordinates in `[-half, half]^2`) into a
/// 1024x1024 SVG; `circles` are dashed reference circles `(cx, cy, r)`.
pub fn loops_svg(loops: &[Vec<[f64; 2]>], circles: &[(f64, f64, f64)], half: f64) -> String {
    const S: f64 = 1024.0;
    let map = |v: f64| (v + half) / (2.0 * half) * S;
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1024 1024\">\n\
         <rect width=\"1024\" height=\"1024\" fill=\"white\"/>\n",
    );
    for l in loops {
        let mut pts = String::new();
        for p in l {
            pts.push_str(&format!("{:.2},{:.2} ", map(p[0]), S - map(p[1])));
        }
        // close the polyline explicitly
        if let Some(p) = l.first() {
            pts.push_str(&format!("{:.2},{:.2}", map(p[0]), S - map(p[1])));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
            pts.trim_end()
        ));
    }
    for &(cx, cy, r) in circles {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"red\" \
             stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n",
            map(cx),
            S - map(cy),
            r / (2.0 * half) * S
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logreal::LogReal;

    #[test]
    fn atomic_write_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"first").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"first");
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        // no stray temp files left behind
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }

    #[test]
    fn envelope_shape_and_logreal_roundtrip() {
        #[derive(serde::Serialize)]
        struct Cfg {
            n: usize,
        }
        let v = envelope("constants", &Cfg { n: 2 }, &LogReal::from_ln(-100.0));
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["config"]["n"], 2);
        let lr: LogReal = serde_json::from_value(v["results"].clone()).unwrap();
        assert!((lr.ln() + 100.0).abs() < 1e-9);
        assert!(v["results"]["log10"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn csv_layout() {
        let s = to_csv(&["a", "b"], &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]]);
        assert_eq!(s, "a,b\n1,2\n3,4\n");
    }

    #[test]
    fn svg_contains_loops_and_circles() {
        let loops = vec![vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]];
        let svg = loops_svg(&loops, &[(0.0, 0.0, 2.0)], 3.0);
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("viewBox=\"0 0 1024 1024\""));
        assert!(svg.ends_with("</svg>\n"));
    }
}
