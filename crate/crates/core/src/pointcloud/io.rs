use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{Error, Result};

/// On-disk point formats.
///
/// * `xyz_text`: one point per line, three whitespace-separated reals, `#` comments.
/// * `ply_ascii`: ASCII PLY with an `element vertex n` block holding `x`, `y`, `z`.
/// * `f32le_bin`: packed little-endian `f32` triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    XyzText,
    PlyAscii,
    F32leBin,
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" | "xyz_text" => Ok(Self::XyzText),
            "ply" | "ply_ascii" => Ok(Self::PlyAscii),
            "bin" | "f32le_bin" => Ok(Self::F32leBin),
            other => Err(Error::argument(format!("unknown point format `{other}`"))),
        }
    }
}

impl fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::XyzText => "xyz_text",
            Self::PlyAscii => "ply_ascii",
            Self::F32leBin => "f32le_bin",
        })
    }
}

/// Reads every point of `path` in file order.
pub fn load_pointcloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    match format {
        CloudFormat::F32leBin => parse_f32le(&fs::read(path)?),
        CloudFormat::XyzText => parse_xyz(&fs::read_to_string(path)?),
        CloudFormat::PlyAscii => parse_ply_ascii(&fs::read_to_string(path)?),
    }
}

fn parse_real(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not a number")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("`{token}` is not finite")));
    }
    Ok(value)
}

pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 coordinates, found {}", tokens.len()),
            ));
        }
        points.push([
            parse_real(tokens[0], line_no)?,
            parse_real(tokens[1], line_no)?,
            parse_real(tokens[2], line_no)?,
        ]);
    }
    PointCloud::new(points)
}

pub fn parse_f32le(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(12) {
        return Err(Error::parse(
            bytes.len() / 12 + 1,
            format!(
                "{} bytes is not a whole number of 12-byte records",
                bytes.len()
            ),
        ));
    }
    let points = bytes
        .chunks_exact(12)
        .enumerate()
        .map(|(record, chunk)| {
            let mut p = [0.0; 3];
            for (axis, raw) in chunk.chunks_exact(4).enumerate() {
                let value = f32::from_le_bytes(raw.try_into().expect("4-byte chunk"));
                if !value.is_finite() {
                    return Err(Error::parse(record + 1, "non-finite coordinate"));
                }
                p[axis] = f64::from(value);
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(points)
}

struct PlyElement {
    name: String,
    count: usize,
    // (property name, is_list)
    properties: Vec<(String, bool)>,
}

pub fn parse_ply_ascii(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        Some((n, _)) => return Err(Error::parse(n, "missing `ply` magic")),
        None => return Err(Error::EmptyInput),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    let mut header_done = false;
    for (n, line) in lines.by_ref() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if tokens.next() != Some("ascii") {
                    return Err(Error::parse(n, "only `format ascii` PLY is supported"));
                }
                saw_format = true;
            }
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| Error::parse(n, "element without a name"))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(n, "element without a valid count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(n, "property before any element"))?;
                let rest: Vec<&str> = tokens.collect();
                let (name, is_list) = match rest.as_slice() {
                    ["list", _, _, name] => (*name, true),
                    [_, name] => (*name, false),
                    _ => return Err(Error::parse(n, "malformed property line")),
                };
                element.properties.push((name.to_string(), is_list));
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some(other) => {
                return Err(Error::parse(
                    n,
                    format!("unexpected header keyword `{other}`"),
                ))
            }
        }
    }
    if !header_done {
        return Err(Error::parse(text.lines().count(), "missing `end_header`"));
    }
    if !saw_format {
        return Err(Error::parse(1, "missing `format` line"));
    }

    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(1, "no `element vertex` declared"))?;
    let axis_slots = {
        let props = &elements[vertex_pos].properties;
        let find = |axis: &str| {
            props
                .iter()
                .position(|(name, _)| name == axis)
                .ok_or_else(|| Error::parse(1, format!("vertex element has no `{axis}` property")))
        };
        [find("x")?, find("y")?, find("z")?]
    };

    let mut data = lines.filter(|(_, l)| !l.is_empty());
    let mut points = Vec::new();
    for (e_idx, element) in elements.iter().enumerate() {
        for _ in 0..element.count {
            let (n, line) = data.next().ok_or_else(|| {
                Error::parse(
                    text.lines().count(),
                    format!("truncated `{}` data", element.name),
                )
            })?;
            if e_idx != vertex_pos {
                continue;
            }
            let values = split_ply_record(line, &element.properties, n)?;
            points.push([
                parse_real(values[axis_slots[0]], n)?,
                parse_real(values[axis_slots[1]], n)?,
                parse_real(values[axis_slots[2]], n)?,
            ]);
        }
        if e_idx == vertex_pos {
            // Trailing elements are not needed.
            break;
        }
    }
    PointCloud::new(points)
}

/// Splits one ASCII record into its first token per property (list properties
/// consume their length prefix plus entries).
fn split_ply_record<'a>(
    line: &'a str,
    properties: &[(String, bool)],
    n: usize,
) -> Result<Vec<&'a str>> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let mut cursor = 0;
    let mut firsts = Vec::with_capacity(properties.len());
    for (name, is_list) in properties {
        let token = *tokens
            .get(cursor)
            .ok_or_else(|| Error::parse(n, format!("missing value for `{name}`")))?;
        firsts.push(token);
        cursor += 1;
        if *is_list {
            let len: usize = token
                .parse()
                .map_err(|_| Error::parse(n, format!("bad list length for `{name}`")))?;
            cursor += len;
        }
    }
    if cursor != tokens.len() {
        return Err(Error::parse(
            n,
            format!("expected {cursor} values, found {}", tokens.len()),
        ));
    }
    Ok(firsts)
}

pub fn write_xyz(cloud: &PointCloud, mut out: impl Write) -> std::io::Result<()> {
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    Ok(())
}
