//! Point cloud files: ASCII `x y z` (optional `viewpoint x y z` header) and
//! binary little-endian PLY.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

pub(crate) fn parse_vec3(fields: &[&str]) -> Option<Vec3> {
    if fields.len() != 3 {
        return None;
    }
    let mut v = [0.0f64; 3];
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = f.parse().ok()?;
        if !slot.is_finite() {
            return None;
        }
    }
    Some(Vec3::new(v[0], v[1], v[2]))
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    parse_xyz(&text, path)
}

pub(crate) fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut cloud = PointCloud::new(Vec::new());
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        if fields[0] == "viewpoint" {
            if !cloud.points.is_empty() || cloud.viewpoint.is_some() {
                return Err(Error::parse(path, n + 1, "viewpoint must be the first line"));
            }
            let v = parse_vec3(&fields[1..])
                .ok_or_else(|| Error::parse(path, n + 1, "malformed viewpoint"))?;
            cloud.viewpoint = Some(v);
            continue;
        }
        let p = parse_vec3(&fields).ok_or_else(|| Error::parse(path, n + 1, "expected `x y z`"))?;
        cloud.points.push(p);
    }
    Ok(cloud)
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    if let Some(v) = cloud.viewpoint {
        writeln!(w, "viewpoint {} {} {}", v.x, v.y, v.z)?;
    }
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

fn scalar_size(ty: &str) -> Option<usize> {
    Some(match ty {
        "char" | "uchar" | "int8" | "uint8" => 1,
        "short" | "ushort" | "int16" | "uint16" => 2,
        "int" | "uint" | "int32" | "uint32" | "float" | "float32" => 4,
        "double" | "float64" => 8,
        _ => return None,
    })
}

/// Reads the `x`, `y`, `z` properties of the vertex element of a
/// `binary_little_endian` PLY file. Coordinates may be `float` or `double`.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path)?;
    parse_ply(&bytes, path)
}

pub(crate) fn parse_ply(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::parse(path, 1, "missing end_header"))?;
    let mut body = end + END.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    if bytes.get(body) != Some(&b'\n') {
        return Err(Error::parse(path, 1, "end_header not followed by newline"));
    }
    body += 1;
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::parse(path, 1, "header is not UTF-8"))?;

    struct Element {
        name: String,
        count: usize,
        props: Vec<(String, String)>,
    }
    let mut elements: Vec<Element> = Vec::new();
    for (n, line) in header.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["ply"] | [] => {}
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => {
                return Err(Error::parse(path, n + 1, format!("unsupported PLY format `{other}`")));
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse(path, n + 1, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ..] => {
                return Err(Error::parse(path, n + 1, "list properties are not supported"));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, n + 1, "property before element"))?;
                if scalar_size(ty).is_none() {
                    return Err(Error::parse(path, n + 1, format!("unknown type `{ty}`")));
                }
                el.props.push((ty.to_string(), name.to_string()));
            }
            _ => return Err(Error::parse(path, n + 1, format!("unexpected header line `{line}`"))),
        }
    }

    let mut offset = body;
    for el in &elements {
        let stride: usize = el.props.iter().map(|(t, _)| scalar_size(t).unwrap()).sum();
        if el.name != "vertex" {
            offset += stride * el.count;
            continue;
        }
        let locate = |axis: &str| -> Result<(usize, &str)> {
            let mut off = 0;
            for (t, name) in &el.props {
                if name == axis {
                    return Ok((off, t.as_str()));
                }
                off += scalar_size(t).unwrap();
            }
            Err(Error::parse(path, 1, format!("vertex has no `{axis}` property")))
        };
        let cols = [locate("x")?, locate("y")?, locate("z")?];
        if bytes.len() < offset + stride * el.count {
            return Err(Error::parse(path, 1, "vertex data truncated"));
        }
        let read = |at: usize, ty: &str| -> Result<f64> {
            match ty {
                "float" | "float32" => Ok(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64),
                "double" | "float64" => Ok(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())),
                other => Err(Error::parse(path, 1, format!("coordinate type `{other}` unsupported"))),
            }
        };
        let mut points = Vec::with_capacity(el.count);
        for i in 0..el.count {
            let base = offset + i * stride;
            let p = Vec3::new(
                read(base + cols[0].0, cols[0].1)?,
                read(base + cols[1].0, cols[1].1)?,
                read(base + cols[2].0, cols[2].1)?,
            );
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite("PLY vertex"));
            }
            points.push(p);
        }
        return Ok(PointCloud::new(points));
    }
    Err(Error::parse(path, 1, "no vertex element"))
}

/// Binary little-endian PLY with float32 `x y z`.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.len()
    )?;
    for p in &cloud.points {
        for c in p.iter() {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dispatches on the file extension: `.ply` is PLY, anything else ASCII.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ply") => read_ply(path),
        _ => read_xyz(path),
    }
}
