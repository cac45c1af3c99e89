use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Correspondence, CorrespondenceSet, Hypothesis};
use crate::error::{Error, Result};
use crate::geom::{RigidTransform, Vec3};

fn numbers<const N: usize>(line: &str) -> Option<[f64; N]> {
    let mut out = [0.0f64; N];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        *slot = it.next()?.parse().ok()?;
        if !slot.is_finite() {
            return None;
        }
    }
    it.next().is_none().then_some(out)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One `px py pz qx qy qz` per line.
pub fn read_correspondences(path: &Path) -> Result<CorrespondenceSet> {
    let text = fs::read_to_string(path)?;
    let mut items = Vec::new();
    for (n, line) in content_lines(&text) {
        let v: [f64; 6] = numbers(line).ok_or_else(|| Error::parse(path, n, "expected 6 numbers"))?;
        items.push(Correspondence::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])));
    }
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("file")
        .to_string();
    Ok(CorrespondenceSet::new(items, label))
}

pub fn write_correspondences(path: &Path, cs: &CorrespondenceSet) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for c in &cs.items {
        writeln!(w, "{} {} {} {} {} {}", c.src.x, c.src.y, c.src.z, c.tgt.x, c.tgt.y, c.tgt.z)?;
    }
    w.flush()?;
    Ok(())
}

/// Twelve numbers per line, row-major rotation then translation, in rank
/// order. Rotations are validated.
pub fn read_hypotheses(path: &Path) -> Result<Vec<RigidTransform>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in content_lines(&text) {
        let v: [f64; 12] = numbers(line).ok_or_else(|| Error::parse(path, n, "expected 12 numbers"))?;
        let t = RigidTransform::from_row12(&v);
        t.validate().map_err(|e| Error::parse(path, n, e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_hypotheses(path: &Path, hyps: &[Hypothesis]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut sorted: Vec<&Hypothesis> = hyps.iter().collect();
    sorted.sort_by_key(|h| h.rank);
    for h in sorted {
        let row: Vec<String> = h.transform.to_row12().iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypothesis_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.txt");
        let ts = [
            RigidTransform::from_axis_angle(&Vec3::new(0.3, 0.1, 1.0), 0.77, Vec3::new(1.0, -2.0, 0.5)),
            RigidTransform::identity(),
        ];
        write_hypotheses(&path, &Hypothesis::from_transforms(&ts)).unwrap();
        assert_eq!(read_hypotheses(&path).unwrap(), ts.to_vec());
    }

    #[test]
    fn correspondence_file_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "0 0 0 1 1 1\n0 0 0 1 1\n").unwrap();
        assert!(matches!(read_correspondences(&path), Err(Error::Parse { line: 2, .. })));
    }
}
