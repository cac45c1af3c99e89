use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Source,
    Target,
}

impl Tag {
    /// File code: 0 for source, 1 for target.
    pub fn code(self) -> u8 {
        match self {
            Tag::Source => 0,
            Tag::Target => 1,
        }
    }

    pub fn from_code(c: &str) -> Option<Tag> {
        match c {
            "0" => Some(Tag::Source),
            "1" => Some(Tag::Target),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedPoint {
    pub pos: Vec3,
    pub tag: Tag,
}

/// Union of a transformed source cloud and a target cloud, every point tagged
/// with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedMergedCloud {
    pub points: Vec<TaggedPoint>,
    pub source_viewpoint: Option<Vec3>,
    pub target_viewpoint: Option<Vec3>,
}

impl TaggedMergedCloud {
    pub fn count(&self, tag: Tag) -> usize {
        self.points.iter().filter(|p| p.tag == tag).count()
    }

    pub fn positions(&self, tag: Tag) -> Vec<Vec3> {
        self.points
            .iter()
            .filter(|p| p.tag == tag)
            .map(|p| p.pos)
            .collect()
    }

    /// The source part (with its viewpoint) and the target part.
    pub fn split(&self) -> (PointCloud, PointCloud) {
        (
            PointCloud {
                points: self.positions(Tag::Source),
                viewpoint: self.source_viewpoint,
            },
            PointCloud {
                points: self.positions(Tag::Target),
                viewpoint: self.target_viewpoint,
            },
        )
    }

    /// Every coordinate and viewpoint multiplied by `s`.
    pub fn scaled(&self, s: f64) -> TaggedMergedCloud {
        TaggedMergedCloud {
            points: self
                .points
                .iter()
                .map(|p| TaggedPoint {
                    pos: p.pos * s,
                    tag: p.tag,
                })
                .collect(),
            source_viewpoint: self.source_viewpoint.map(|v| v * s),
            target_viewpoint: self.target_viewpoint.map(|v| v * s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count(Tag::Source) == 0 || self.count(Tag::Target) == 0 {
            return Err(Error::DegenerateCloud);
        }
        let finite = self
            .points
            .iter()
            .map(|p| &p.pos)
            .chain(self.source_viewpoint.iter())
            .chain(self.target_viewpoint.iter())
            .all(|v| v.iter().all(|c| c.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("merged cloud coordinate"))
        }
    }
}

/// `P′` points tagged source, then `Q` points tagged target.
pub fn merge_clouds(p_prime: &PointCloud, q: &PointCloud) -> Result<TaggedMergedCloud> {
    if p_prime.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tagged = |c: &PointCloud, tag| {
        c.points
            .iter()
            .map(move |&pos| TaggedPoint { pos, tag })
            .collect::<Vec<_>>()
    };
    let mut points = tagged(p_prime, Tag::Source);
    points.extend(tagged(q, Tag::Target));
    Ok(TaggedMergedCloud {
        points,
        source_viewpoint: p_prime.viewpoint,
        target_viewpoint: q.viewpoint,
    })
}

/// Writes `x y z tag` lines, preceded by optional `viewpoint <tag> x y z`
/// lines.
pub fn write_merged(path: &Path, m: &TaggedMergedCloud) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (tag, vp) in [(Tag::Source, m.source_viewpoint), (Tag::Target, m.target_viewpoint)] {
        if let Some(v) = vp {
            writeln!(w, "viewpoint {} {} {} {}", tag.code(), v.x, v.y, v.z)?;
        }
    }
    for p in &m.points {
        writeln!(w, "{} {} {} {}", p.pos.x, p.pos.y, p.pos.z, p.tag.code())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_merged(path: &Path) -> Result<TaggedMergedCloud> {
    let text = fs::read_to_string(path)?;
    let mut m = TaggedMergedCloud {
        points: Vec::new(),
        source_viewpoint: None,
        target_viewpoint: None,
    };
    for (n, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::parse(path, n + 1, msg.to_string());
        if f[0] == "viewpoint" {
            if f.len() != 5 {
                return Err(bad("expected `viewpoint tag x y z`"));
            }
            let tag = Tag::from_code(f[1]).ok_or_else(|| bad("tag must be 0 or 1"))?;
            let v = crate::geom::io_parse_vec3(&f[2..]).ok_or_else(|| bad("malformed viewpoint"))?;
            match tag {
                Tag::Source => m.source_viewpoint = Some(v),
                Tag::Target => m.target_viewpoint = Some(v),
            }
            continue;
        }
        if f.len() != 4 {
            return Err(bad("expected `x y z tag`"));
        }
        let pos = crate::geom::io_parse_vec3(&f[..3]).ok_or_else(|| bad("malformed coordinates"))?;
        let tag = Tag::from_code(f[3]).ok_or_else(|| bad("tag must be 0 or 1"))?;
        m.points.push(TaggedPoint { pos, tag });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(n: usize, x: f64) -> PointCloud {
        PointCloud::new((0..n).map(|i| Vec3::new(x, i as f64, 0.5)).collect())
    }

    #[test]
    fn cardinality_and_tags() {
        let m = merge_clouds(&cloud(3, 0.0), &cloud(4, 1.0)).unwrap();
        assert_eq!(m.points.len(), 7);
        assert_eq!(m.count(Tag::Source), 3);
        assert_eq!(m.count(Tag::Target), 4);
    }

    #[test]
    fn split_recovers_inputs() {
        let p = PointCloud::with_viewpoint(cloud(5, 0.2).points, Vec3::new(1.0, 2.0, 3.0));
        let q = PointCloud::with_viewpoint(cloud(2, 7.0).points, Vec3::new(0.0, 0.0, 1.0));
        let m = merge_clouds(&p, &q).unwrap();
        assert_eq!(m.split(), (p, q));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            merge_clouds(&PointCloud::new(vec![]), &cloud(1, 0.0)),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.xyzt");
        let p = PointCloud::with_viewpoint(vec![Vec3::new(0.1, 0.2, 0.3)], Vec3::new(1.0, 2.0, 3.0));
        let m = merge_clouds(&p, &cloud(3, 0.123456789)).unwrap();
        write_merged(&path, &m).unwrap();
        assert_eq!(read_merged(&path).unwrap(), m);
    }
}
