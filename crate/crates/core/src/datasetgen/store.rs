use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Category, DatasetRecord, MiningConfig};
use crate::decision::{read_merged, write_merged, Label};
use crate::error::{Error, Result};
use crate::geom::RigidTransform;

pub const MANIFEST_NAME: &str = "manifest.txt";
const FORMAT_VERSION: &str = "1";
const COLUMNS: usize = 10;

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Correct => "correct",
        Label::Wrong => "wrong",
    }
}

fn row12(t: &RigidTransform) -> String {
    t.to_row12().map(|v| v.to_string()).join(" ")
}

/// Writes `dir/manifest.txt` and one `dir/clouds/<id>.xyzt` per record.
///
/// The manifest starts with `key=value` header lines (format version, record
/// count and the mining thresholds), followed by one tab-separated line per
/// record: id, pair id, label, category, RE, TE, overlap, transform (12
/// numbers), ground truth (12 numbers), cloud path relative to `dir`.
pub fn save_dataset(dir: &Path, records: &[DatasetRecord], mining: &MiningConfig) -> Result<()> {
    let clouds = dir.join("clouds");
    fs::create_dir_all(&clouds)?;
    let mut s = String::new();
    let _ = writeln!(s, "format={FORMAT_VERSION}");
    let _ = writeln!(s, "records={}", records.len());
    let _ = writeln!(s, "split_overlap={}", mining.split_overlap);
    let _ = writeln!(s, "split_re_deg={}", mining.split_re_deg);
    let _ = writeln!(s, "per_category_cap={}", mining.per_category_cap);
    let _ = writeln!(s, "tau_ov={}", mining.tau_ov);
    let _ = writeln!(s, "success_max_re_deg={}", mining.threshold.max_re);
    let _ = writeln!(s, "success_max_te_m={}", mining.threshold.max_te);
    for r in records {
        if r.id.contains(['\t', '/', '\n']) || r.pair_id.contains(['\t', '\n']) {
            return Err(Error::InvalidConfig(format!("record id `{}` is not file-safe", r.id)));
        }
        let rel = format!("clouds/{}.xyzt", r.id);
        write_merged(&dir.join(&rel), &r.merged)?;
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.pair_id,
            label_str(r.label),
            r.category.as_str(),
            r.re,
            r.te,
            r.overlap,
            row12(&r.transform),
            row12(&r.ground_truth),
            rel
        );
    }
    fs::write(dir.join(MANIFEST_NAME), s)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let mut records = Vec::new();
    let mut expected = None;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let bad = |msg: String| Error::ManifestParse { line: line_no, msg };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.contains('\t') {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value or a tab-separated record".into()))?;
            match k {
                "format" if v != FORMAT_VERSION => return Err(bad(format!("unsupported format {v}"))),
                "records" => expected = Some(v.parse::<usize>().map_err(|_| bad("malformed record count".into()))?),
                _ => {}
            }
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS {
            return Err(bad(format!("expected {COLUMNS} fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("malformed {what}")))
        };
        let transform = |s: &str, what: &str| -> Result<RigidTransform> {
            let v: Vec<f64> = s.split(' ').map(|x| num(x, what)).collect::<Result<_>>()?;
            let arr: [f64; 12] = v.try_into().map_err(|_| bad(format!("{what} needs 12 numbers")))?;
            let t = RigidTransform::from_row12(&arr);
            t.validate().map_err(|e| bad(format!("{what}: {e}")))?;
            Ok(t)
        };
        let label = match f[2] {
            "correct" => Label::Correct,
            "wrong" => Label::Wrong,
            other => return Err(bad(format!("unknown label `{other}`"))),
        };
        let category: Category = f[3].parse().map_err(bad)?;
        let merged = read_merged(&dir.join(f[9]))?;
        records.push(DatasetRecord {
            id: f[0].to_string(),
            pair_id: f[1].to_string(),
            merged,
            label,
            category,
            re: num(f[4], "RE")?,
            te: num(f[5], "TE")?,
            overlap: num(f[6], "overlap")?,
            transform: transform(f[7], "transform")?,
            ground_truth: transform(f[8], "ground truth")?,
        });
    }
    if let Some(n) = expected {
        if n != records.len() {
            return Err(Error::ManifestParse {
                line: text.lines().count(),
                msg: format!("header announces {n} records, found {}", records.len()),
            });
        }
    }
    Ok(records)
}
