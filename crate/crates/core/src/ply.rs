//! Minimal PLY support: ascii and binary (either endianness) reading, ascii writing.
//!
//! Values are held column-wise. Scalars are widened to `f64` (every PLY scalar
//! type up to `int32`/`float64` round-trips exactly), list entries to `i64`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("ply header: {0}")]
    Header(String),
    #[error("ply body (element `{element}`, row {row}): {msg}")]
    Body { element: String, row: usize, msg: String },
    #[error("ply: missing {0}")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            ScalarType::I8 => "char",
            ScalarType::U8 => "uchar",
            ScalarType::I16 => "short",
            ScalarType::U16 => "ushort",
            ScalarType::I32 => "int",
            ScalarType::U32 => "uint",
            ScalarType::F32 => "float",
            ScalarType::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }

    fn decode(self, b: &[u8], big_endian: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let arr: [u8; $n] = b[..$n].try_into().unwrap();
                (if big_endian { <$t>::from_be_bytes(arr) } else { <$t>::from_le_bytes(arr) }) as f64
            }};
        }
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => num!(i16, 2),
            ScalarType::U16 => num!(u16, 2),
            ScalarType::I32 => num!(i32, 4),
            ScalarType::U32 => num!(u32, 4),
            ScalarType::F32 => num!(f32, 4),
            ScalarType::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub ty: ScalarType,
    /// Count type for list properties.
    pub list_count: Option<ScalarType>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Scalar(Vec<f64>),
    List(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<Property>,
    pub columns: Vec<Column>,
}

impl Element {
    pub fn new(name: &str, count: usize) -> Self {
        Element { name: name.to_string(), count, properties: Vec::new(), columns: Vec::new() }
    }

    pub fn with_scalar(mut self, name: &str, ty: ScalarType, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.count, "column `{name}` length");
        self.properties.push(Property { name: name.to_string(), ty, list_count: None });
        self.columns.push(Column::Scalar(values));
        self
    }

    pub fn with_list(mut self, name: &str, count_ty: ScalarType, ty: ScalarType, values: Vec<Vec<i64>>) -> Self {
        assert_eq!(values.len(), self.count, "column `{name}` length");
        self.properties.push(Property { name: name.to_string(), ty, list_count: Some(count_ty) });
        self.columns.push(Column::List(values));
        self
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.properties.iter().zip(&self.columns).find_map(|(p, c)| match c {
            Column::Scalar(v) if p.name == name => Some(v.as_slice()),
            _ => None,
        })
    }

    pub fn list(&self, name: &str) -> Option<&[Vec<i64>]> {
        self.properties.iter().zip(&self.columns).find_map(|(p, c)| match c {
            Column::List(v) if p.name == name => Some(v.as_slice()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ply {
    pub comments: Vec<String>,
    pub elements: Vec<Element>,
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    Binary { big_endian: bool },
}

impl Ply {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn read_path(path: &Path) -> Result<Ply, PlyError> {
        let file = std::fs::File::open(path)?;
        Ply::read(BufReader::new(file))
    }

    pub fn read<R: BufRead>(mut reader: R) -> Result<Ply, PlyError> {
        let mut line = String::new();
        let mut next_line = |reader: &mut R| -> Result<String, PlyError> {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(PlyError::Header("unexpected end of header".into()));
            }
            Ok(line.trim_end_matches(['\r', '\n']).to_string())
        };
        if next_line(&mut reader)?.trim() != "ply" {
            return Err(PlyError::Header("missing `ply` magic".into()));
        }
        let mut format = None;
        let mut ply = Ply::default();
        loop {
            let l = next_line(&mut reader)?;
            let mut tok = l.split_whitespace();
            match tok.next() {
                Some("format") => {
                    format = Some(match tok.next() {
                        Some("ascii") => Format::Ascii,
                        Some("binary_little_endian") => Format::Binary { big_endian: false },
                        Some("binary_big_endian") => Format::Binary { big_endian: true },
                        other => return Err(PlyError::Header(format!("unknown format {other:?}"))),
                    })
                }
                Some("comment") | Some("obj_info") => {
                    ply.comments.push(l.split_once(' ').map_or("", |x| x.1).to_string())
                }
                Some("element") => {
                    let name = tok.next().ok_or_else(|| PlyError::Header(l.clone()))?;
                    let count = tok
                        .next()
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| PlyError::Header(format!("bad element line `{l}`")))?;
                    ply.elements.push(Element::new(name, count));
                }
                Some("property") => {
                    let el =
                        ply.elements.last_mut().ok_or_else(|| PlyError::Header("property before element".into()))?;
                    let bad = || PlyError::Header(format!("bad property line `{l}`"));
                    let first = tok.next().ok_or_else(bad)?;
                    let prop = if first == "list" {
                        let ct = tok.next().and_then(ScalarType::parse).ok_or_else(bad)?;
                        let ty = tok.next().and_then(ScalarType::parse).ok_or_else(bad)?;
                        let name = tok.next().ok_or_else(bad)?;
                        el.columns.push(Column::List(Vec::with_capacity(el.count)));
                        Property { name: name.to_string(), ty, list_count: Some(ct) }
                    } else {
                        let ty = ScalarType::parse(first).ok_or_else(bad)?;
                        let name = tok.next().ok_or_else(bad)?;
                        el.columns.push(Column::Scalar(Vec::with_capacity(el.count)));
                        Property { name: name.to_string(), ty, list_count: None }
                    };
                    el.properties.push(prop);
                }
                Some("end_header") => break,
                None => {}
                Some(other) => return Err(PlyError::Header(format!("unexpected keyword `{other}`"))),
            }
        }
        let format = format.ok_or_else(|| PlyError::Missing("format line".into()))?;
        match format {
            Format::Ascii => read_ascii_body(&mut reader, &mut ply)?,
            Format::Binary { big_endian } => read_binary_body(&mut reader, &mut ply, big_endian)?,
        }
        Ok(ply)
    }

    /// Serializes as ascii PLY. Floats use the shortest round-trip representation.
    pub fn to_ascii(&self) -> String {
        let mut out = String::from("ply\nformat ascii 1.0\n");
        for c in &self.comments {
            let _ = writeln!(out, "comment {c}");
        }
        for el in &self.elements {
            let _ = writeln!(out, "element {} {}", el.name, el.count);
            for p in &el.properties {
                match p.list_count {
                    Some(ct) => {
                        let _ = writeln!(out, "property list {} {} {}", ct.name(), p.ty.name(), p.name);
                    }
                    None => {
                        let _ = writeln!(out, "property {} {}", p.ty.name(), p.name);
                    }
                }
            }
        }
        out.push_str("end_header\n");
        for el in &self.elements {
            for row in 0..el.count {
                let mut first = true;
                for (p, col) in el.properties.iter().zip(&el.columns) {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    match col {
                        Column::Scalar(v) => push_scalar(&mut out, p.ty, v[row]),
                        Column::List(v) => {
                            let _ = write!(out, "{}", v[row].len());
                            for x in &v[row] {
                                let _ = write!(out, " {x}");
                            }
                        }
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

fn push_scalar(out: &mut String, ty: ScalarType, v: f64) {
    let _ = match ty {
        ScalarType::F64 => write!(out, "{v}"),
        ScalarType::F32 => write!(out, "{}", v as f32),
        _ => write!(out, "{}", v as i64),
    };
}

fn read_ascii_body<R: BufRead>(reader: &mut R, ply: &mut Ply) -> Result<(), PlyError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut tokens = text.split_ascii_whitespace();
    for el in &mut ply.elements {
        for row in 0..el.count {
            let err = |msg: String| PlyError::Body { element: el.name.clone(), row, msg };
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                let mut next = |what: &str| -> Result<f64, PlyError> {
                    tokens
                        .next()
                        .ok_or_else(|| err(format!("missing {what}")))?
                        .parse::<f64>()
                        .map_err(|e| err(format!("{what}: {e}")))
                };
                match col {
                    Column::Scalar(v) => v.push(next(&p.name)?),
                    Column::List(v) => {
                        let n = next("list count")? as usize;
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            items.push(next(&p.name)? as i64);
                        }
                        v.push(items);
                    }
                }
            }
        }
    }
    Ok(())
}

fn read_binary_body<R: Read>(reader: &mut R, ply: &mut Ply, big_endian: bool) -> Result<(), PlyError> {
    let mut buf = [0u8; 8];
    for el in &mut ply.elements {
        for row in 0..el.count {
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                let mut read = |ty: ScalarType| -> Result<f64, PlyError> {
                    reader.read_exact(&mut buf[..ty.size()]).map_err(|e| PlyError::Body {
                        element: el.name.clone(),
                        row,
                        msg: e.to_string(),
                    })?;
                    Ok(ty.decode(&buf, big_endian))
                };
                match (col, p.list_count) {
                    (Column::Scalar(v), _) => v.push(read(p.ty)?),
                    (Column::List(v), Some(ct)) => {
                        let n = read(ct)? as usize;
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            let x = read(p.ty)?;
                            items.push(if p.ty.is_float() { x.round() as i64 } else { x as i64 });
                        }
                        v.push(items);
                    }
                    (Column::List(_), None) => unreachable!("list column without count type"),
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Ply {
        Ply {
            comments: vec!["unit test".into()],
            elements: vec![
                Element::new("vertex", 3)
                    .with_scalar("x", ScalarType::F64, vec![0.0, 1.0, 0.1])
                    .with_scalar("y", ScalarType::F64, vec![0.0, 0.0, 1.0 / 3.0])
                    .with_scalar("z", ScalarType::F64, vec![-2.5, 1e-12, 7.0]),
                Element::new("face", 1)
                    .with_list("vertex_indices", ScalarType::U8, ScalarType::I32, vec![vec![0, 1, 2]])
                    .with_scalar("material_index", ScalarType::I32, vec![2.0]),
            ],
        }
    }

    #[test]
    fn ascii_round_trip_is_exact() {
        let ply = sample();
        let back = Ply::read(ply.to_ascii().as_bytes()).unwrap();
        assert_eq!(back, ply);
    }

    #[test]
    fn reads_binary_little_endian() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty double y\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n".to_vec();
        for (x, y) in [(1.5f32, -2.0f64), (0.25, 3.0)] {
            bytes.extend(x.to_le_bytes());
            bytes.extend(y.to_le_bytes());
        }
        bytes.push(3);
        for i in [0u32, 1, 1] {
            bytes.extend(i.to_le_bytes());
        }
        let ply = Ply::read(bytes.as_slice()).unwrap();
        let v = ply.element("vertex").unwrap();
        assert_eq!(v.scalar("x").unwrap(), &[1.5, 0.25]);
        assert_eq!(v.scalar("y").unwrap(), &[-2.0, 3.0]);
        assert_eq!(ply.element("face").unwrap().list("vertex_indices").unwrap(), &[vec![0, 1, 1]]);
    }

    #[test]
    fn truncated_body_is_reported() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1.0\n";
        let err = Ply::read(text.as_bytes()).unwrap_err();
        assert!(matches!(err, PlyError::Body { row: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_missing_magic() {
        assert!(matches!(Ply::read("plx\n".as_bytes()), Err(PlyError::Header(_))));
    }
}
