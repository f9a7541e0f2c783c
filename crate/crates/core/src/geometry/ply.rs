//! Minimal PLY reader and writer for colored point clouds.
//!
//! The reader accepts ASCII and binary-little-endian files whose vertex
//! element carries x/y/z as float or double and red/green/blue as uchar.
//! Extra vertex properties and non-vertex elements are skipped. The
//! writer emits binary-little-endian with double coordinates, so a cloud
//! written by this module reads back bit-exactly.

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};
use crate::geometry::{ColoredCloud, ColoredPoint};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str, line: usize) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(ply_err(line, format!("unknown property type `{other}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_f64(self, bytes: &[u8]) -> f64 {
        match self {
            Self::I8 => bytes[0] as i8 as f64,
            Self::U8 => bytes[0] as f64,
            Self::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Self::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Self::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

fn ply_err(line: usize, message: impl Into<String>) -> Error {
    Error::Ply { line, message: message.into() }
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    /// Number of header lines consumed, for error offsets into the body.
    lines: usize,
}

fn next_line<R: BufRead>(reader: &mut R, line_no: &mut usize) -> Result<String> {
    let mut buf = String::new();
    *line_no += 1;
    if reader.read_line(&mut buf)? == 0 {
        return Err(ply_err(*line_no, "unexpected end of header"));
    }
    Ok(buf.trim_end().to_string())
}

fn parse_header<R: BufRead>(reader: &mut R) -> Result<Header> {
    let mut line_no = 0;
    if next_line(reader, &mut line_no)?.trim() != "ply" {
        return Err(ply_err(1, "missing `ply` magic line"));
    }

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(reader, &mut line_no)?;
        let mut words = line.split_ascii_whitespace();
        match words.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = Some(match words.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    Some("binary_big_endian") => {
                        return Err(ply_err(line_no, "big-endian PLY is not supported"))
                    }
                    other => {
                        return Err(ply_err(
                            line_no,
                            format!("unknown format `{}`", other.unwrap_or("")),
                        ))
                    }
                });
            }
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| ply_err(line_no, "element without a name"))?
                    .to_string();
                let count = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| ply_err(line_no, "element without a valid count"))?;
                elements.push(Element { name, count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| ply_err(line_no, "property before any element"))?;
                let ty_word =
                    words.next().ok_or_else(|| ply_err(line_no, "property without a type"))?;
                if ty_word == "list" {
                    let count_ty = ScalarType::parse(
                        words.next().ok_or_else(|| ply_err(line_no, "list without count type"))?,
                        line_no,
                    )?;
                    let item_ty = ScalarType::parse(
                        words.next().ok_or_else(|| ply_err(line_no, "list without item type"))?,
                        line_no,
                    )?;
                    element.properties.push(Property::List { count_ty, item_ty });
                } else {
                    let ty = ScalarType::parse(ty_word, line_no)?;
                    let name = words
                        .next()
                        .ok_or_else(|| ply_err(line_no, "property without a name"))?
                        .to_string();
                    element.properties.push(Property::Scalar { name, ty });
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(ply_err(line_no, format!("unknown header keyword `{other}`")))
            }
        }
    }

    let format = format.ok_or_else(|| ply_err(line_no, "header missing `format` line"))?;
    Ok(Header { format, elements, lines: line_no })
}

/// Indices of the required vertex properties within the property list.
struct VertexLayout {
    x: usize,
    y: usize,
    z: usize,
    r: usize,
    g: usize,
    b: usize,
}

fn vertex_layout(element: &Element, header_lines: usize) -> Result<VertexLayout> {
    let find = |want: &str| -> Option<usize> {
        element.properties.iter().position(|p| match p {
            Property::Scalar { name, .. } => name == want,
            Property::List { .. } => false,
        })
    };
    let coord = |want: &str| -> Result<usize> {
        let idx = find(want)
            .ok_or_else(|| ply_err(header_lines, format!("missing coordinate `{want}`")))?;
        match element.properties[idx] {
            Property::Scalar { ty: ScalarType::F32 | ScalarType::F64, .. } => Ok(idx),
            _ => Err(ply_err(header_lines, format!("coordinate `{want}` must be float or double"))),
        }
    };
    let channel = |want: &str| -> Result<usize> {
        let idx =
            find(want).ok_or_else(|| ply_err(header_lines, format!("missing color `{want}`")))?;
        match element.properties[idx] {
            Property::Scalar { ty: ScalarType::U8, .. } => Ok(idx),
            _ => Err(ply_err(header_lines, format!("color `{want}` must be uchar"))),
        }
    };
    Ok(VertexLayout {
        x: coord("x")?,
        y: coord("y")?,
        z: coord("z")?,
        r: channel("red")?,
        g: channel("green")?,
        b: channel("blue")?,
    })
}

fn read_ascii_vertices<R: BufRead>(
    reader: &mut R,
    element: &Element,
    layout: &VertexLayout,
    mut line_no: usize,
) -> Result<Vec<ColoredPoint>> {
    let mut points = Vec::with_capacity(element.count);
    let mut fields = vec![0.0f64; element.properties.len()];
    for _ in 0..element.count {
        let mut buf = String::new();
        line_no += 1;
        if reader.read_line(&mut buf)? == 0 {
            return Err(ply_err(line_no, "file ends before the declared vertex count"));
        }
        let mut words = buf.split_ascii_whitespace();
        for (i, prop) in element.properties.iter().enumerate() {
            match prop {
                Property::Scalar { .. } => {
                    let word = words
                        .next()
                        .ok_or_else(|| ply_err(line_no, "vertex line has too few values"))?;
                    fields[i] = word
                        .parse::<f64>()
                        .map_err(|_| ply_err(line_no, format!("invalid number `{word}`")))?;
                }
                Property::List { .. } => {
                    let count = words
                        .next()
                        .and_then(|w| w.parse::<usize>().ok())
                        .ok_or_else(|| ply_err(line_no, "list property missing count"))?;
                    for _ in 0..count {
                        words
                            .next()
                            .ok_or_else(|| ply_err(line_no, "list property truncated"))?;
                    }
                }
            }
        }
        points.push(point_from_fields(&fields, layout, line_no)?);
    }
    Ok(points)
}

fn skip_ascii_element<R: BufRead>(reader: &mut R, element: &Element, line_no: usize) -> Result<usize> {
    let mut line_no = line_no;
    for _ in 0..element.count {
        let mut buf = String::new();
        line_no += 1;
        if reader.read_line(&mut buf)? == 0 {
            return Err(ply_err(line_no, "file ends inside a skipped element"));
        }
    }
    Ok(line_no)
}

fn point_from_fields(fields: &[f64], layout: &VertexLayout, line_no: usize) -> Result<ColoredPoint> {
    let channel = |v: f64| -> Result<u8> {
        if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
            return Err(ply_err(line_no, format!("color value {v} is not a uchar")));
        }
        Ok(v as u8)
    };
    Ok(ColoredPoint {
        pos: [fields[layout.x], fields[layout.y], fields[layout.z]],
        color: RgbColor::new(
            channel(fields[layout.r])?,
            channel(fields[layout.g])?,
            channel(fields[layout.b])?,
        ),
    })
}

fn read_binary_vertices<R: Read>(
    reader: &mut R,
    element: &Element,
    layout: &VertexLayout,
    header_lines: usize,
) -> Result<Vec<ColoredPoint>> {
    let mut points = Vec::with_capacity(element.count);
    let mut fields = vec![0.0f64; element.properties.len()];
    let mut scratch = [0u8; 8];
    for v in 0..element.count {
        for (i, prop) in element.properties.iter().enumerate() {
            match prop {
                Property::Scalar { ty, .. } => {
                    let buf = &mut scratch[..ty.size()];
                    reader.read_exact(buf).map_err(|_| {
                        ply_err(header_lines, format!("file ends inside vertex {v}"))
                    })?;
                    fields[i] = ty.read_f64(buf);
                }
                Property::List { count_ty, item_ty } => {
                    let buf = &mut scratch[..count_ty.size()];
                    reader.read_exact(buf).map_err(|_| {
                        ply_err(header_lines, format!("file ends inside vertex {v}"))
                    })?;
                    let count = count_ty.read_f64(buf) as usize;
                    skip_bytes(reader, count * item_ty.size(), header_lines)?;
                }
            }
        }
        points.push(point_from_fields(&fields, layout, header_lines)?);
    }
    Ok(points)
}

fn skip_binary_element<R: Read>(reader: &mut R, element: &Element, header_lines: usize) -> Result<()> {
    let fixed: Option<usize> = element
        .properties
        .iter()
        .map(|p| match p {
            Property::Scalar { ty, .. } => Some(ty.size()),
            Property::List { .. } => None,
        })
        .sum();
    if let Some(row) = fixed {
        return skip_bytes(reader, row * element.count, header_lines);
    }
    let mut scratch = [0u8; 8];
    for _ in 0..element.count {
        for prop in &element.properties {
            match prop {
                Property::Scalar { ty, .. } => {
                    skip_bytes(reader, ty.size(), header_lines)?;
                }
                Property::List { count_ty, item_ty } => {
                    let buf = &mut scratch[..count_ty.size()];
                    reader
                        .read_exact(buf)
                        .map_err(|_| ply_err(header_lines, "file ends inside a skipped element"))?;
                    let count = count_ty.read_f64(buf) as usize;
                    skip_bytes(reader, count * item_ty.size(), header_lines)?;
                }
            }
        }
    }
    Ok(())
}

fn skip_bytes<R: Read>(reader: &mut R, n: usize, header_lines: usize) -> Result<()> {
    let copied = std::io::copy(&mut reader.take(n as u64), &mut std::io::sink())?;
    if copied as usize != n {
        return Err(ply_err(header_lines, "file ends inside a skipped element"));
    }
    Ok(())
}

/// Read a colored point cloud from a PLY file.
pub fn load_ply(path: impl AsRef<Path>) -> Result<ColoredCloud> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let header = parse_header(&mut reader)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| ply_err(header.lines, "no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_pos], header.lines)?;

    match header.format {
        Format::Ascii => {
            let mut line_no = header.lines;
            for element in &header.elements[..vertex_pos] {
                line_no = skip_ascii_element(&mut reader, element, line_no)?;
            }
            let points =
                read_ascii_vertices(&mut reader, &header.elements[vertex_pos], &layout, line_no)?;
            Ok(ColoredCloud::new(points))
        }
        Format::BinaryLe => {
            for element in &header.elements[..vertex_pos] {
                skip_binary_element(&mut reader, element, header.lines)?;
            }
            let points = read_binary_vertices(
                &mut reader,
                &header.elements[vertex_pos],
                &layout,
                header.lines,
            )?;
            Ok(ColoredCloud::new(points))
        }
    }
}

/// Write a cloud as binary-little-endian PLY with double coordinates.
pub fn save_ply(path: impl AsRef<Path>, cloud: &ColoredCloud) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    write!(
        writer,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    )?;
    for p in &cloud.points {
        for k in 0..3 {
            writer.write_all(&p.pos[k].to_le_bytes())?;
        }
        writer.write_all(&[p.color.r, p.color.g, p.color.b])?;
    }
    writer.flush()?;
    Ok(())
}
