//! File formats and serialization: JSON schemas for frameworks, flex fields,
//! curves, and grids, plus a serializer that writes every float with 17
//! significant digits so files round-trip bit-faithfully.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use flexlab_core::model::{
    ConfigCurve, Configuration, CurveSample, FlexField, Framework, SurfaceGrid,
};

pub const FRAMEWORK_SCHEMA: &str = "flexlab.framework.v1";
pub const FLEXFIELD_SCHEMA: &str = "flexlab.flexfield.v1";
pub const CURVE_SCHEMA: &str = "flexlab.curve.v1";
pub const GRID_SCHEMA: &str = "flexlab.grid.v1";
pub const REPORT_SCHEMA: &str = "flexlab.report.v1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrameworkFile {
    pub schema: String,
    /// One position per vertex; the embedding doubles as the vertex list.
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlexFieldFile {
    pub schema: String,
    pub vectors: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurveSampleFile {
    pub r: f64,
    pub positions: Vec<[f64; 3]>,
    pub flex: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurveFile {
    pub schema: String,
    pub edges: Vec<[usize; 2]>,
    pub samples: Vec<CurveSampleFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridFile {
    pub schema: String,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Row-major over u: `positions[i][j]` samples `(u[i], v[j])`.
    pub positions: Vec<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jets: Vec<Vec<Vec<[f64; 3]>>>,
}

fn to_vec3(p: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

fn from_vec3(p: &Vector3<f64>) -> [f64; 3] {
    [p.x, p.y, p.z]
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("unsupported schema {got:?}, expected {expected:?}")]
    WrongSchema { expected: &'static str, got: String },
    #[error("{0} contains a non-finite number")]
    NonFinite(&'static str),
    #[error(transparent)]
    Model(#[from] flexlab_core::ModelError),
    #[error(transparent)]
    Curve(#[from] flexlab_core::CurveError),
    #[error(transparent)]
    Grid(#[from] flexlab_core::GridError),
}

fn check_schema(expected: &'static str, got: &str) -> Result<(), FileError> {
    if got == expected {
        Ok(())
    } else {
        Err(FileError::WrongSchema {
            expected,
            got: got.to_string(),
        })
    }
}

fn check_finite(what: &'static str, values: impl Iterator<Item = f64>) -> Result<(), FileError> {
    for v in values {
        if !v.is_finite() {
            return Err(FileError::NonFinite(what));
        }
    }
    Ok(())
}

impl FrameworkFile {
    pub fn into_configuration(self) -> Result<Configuration, FileError> {
        check_schema(FRAMEWORK_SCHEMA, &self.schema)?;
        check_finite("vertices", self.vertices.iter().flatten().copied())?;
        let fw = Arc::new(Framework::new(
            self.vertices.len(),
            self.edges.iter().map(|e| (e[0], e[1])).collect(),
        )?);
        Ok(Configuration::new(
            fw,
            self.vertices.iter().map(to_vec3).collect(),
        )?)
    }

    pub fn from_configuration(c: &Configuration) -> Self {
        Self {
            schema: FRAMEWORK_SCHEMA.to_string(),
            vertices: c.positions().iter().map(from_vec3).collect(),
            edges: c.framework().edges().iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl FlexFieldFile {
    pub fn into_field(self) -> Result<FlexField, FileError> {
        check_schema(FLEXFIELD_SCHEMA, &self.schema)?;
        check_finite("vectors", self.vectors.iter().flatten().copied())?;
        Ok(FlexField::new(self.vectors.iter().map(to_vec3).collect()))
    }
}

impl CurveFile {
    pub fn into_curve(self) -> Result<ConfigCurve, FileError> {
        check_schema(CURVE_SCHEMA, &self.schema)?;
        let vertex_count = self.samples.first().map(|s| s.positions.len()).unwrap_or(0);
        let fw = Arc::new(Framework::new(
            vertex_count,
            self.edges.iter().map(|e| (e[0], e[1])).collect(),
        )?);
        let mut samples = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            check_finite(
                "sample",
                s.positions
                    .iter()
                    .chain(&s.flex)
                    .flatten()
                    .copied()
                    .chain([s.r]),
            )?;
            samples.push(CurveSample {
                r: s.r,
                configuration: Configuration::new(
                    fw.clone(),
                    s.positions.iter().map(to_vec3).collect(),
                )?,
                flex: FlexField::new(s.flex.iter().map(to_vec3).collect()),
            });
        }
        Ok(ConfigCurve::new(samples)?)
    }

    pub fn from_curve(curve: &ConfigCurve) -> Self {
        Self {
            schema: CURVE_SCHEMA.to_string(),
            edges: curve
                .framework()
                .edges()
                .iter()
                .map(|&(i, j)| [i, j])
                .collect(),
            samples: curve
                .samples()
                .iter()
                .map(|s| CurveSampleFile {
                    r: s.r,
                    positions: s.configuration.positions().iter().map(from_vec3).collect(),
                    flex: s.flex.vectors().iter().map(from_vec3).collect(),
                })
                .collect(),
        }
    }
}

impl GridFile {
    pub fn into_grid(self) -> Result<SurfaceGrid, FileError> {
        check_schema(GRID_SCHEMA, &self.schema)?;
        let nu = self.u.len();
        let nv = self.v.len();
        let rows_ok = self.positions.len() == nu && self.positions.iter().all(|r| r.len() == nv);
        if !rows_ok {
            return Err(flexlab_core::GridError::ShapeMismatch {
                rows: nu,
                cols: nv,
                got_rows: self.positions.len(),
                got_cols: self.positions.first().map(|r| r.len()).unwrap_or(0),
            }
            .into());
        }
        let positions = DMatrix::from_fn(nu, nv, |i, j| to_vec3(&self.positions[i][j]));
        let mut grid = SurfaceGrid::new(self.u, self.v, positions)?;
        for jet in &self.jets {
            let jet_ok = jet.len() == nu && jet.iter().all(|r| r.len() == nv);
            if !jet_ok {
                return Err(flexlab_core::GridError::ShapeMismatch {
                    rows: nu,
                    cols: nv,
                    got_rows: jet.len(),
                    got_cols: jet.first().map(|r| r.len()).unwrap_or(0),
                }
                .into());
            }
            grid.attach_jet_field(DMatrix::from_fn(nu, nv, |i, j| to_vec3(&jet[i][j])))?;
        }
        Ok(grid)
    }

    pub fn from_grid(grid: &SurfaceGrid) -> Self {
        let dump = |m: &DMatrix<Vector3<f64>>| {
            (0..grid.nu())
                .map(|i| (0..grid.nv()).map(|j| from_vec3(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            schema: GRID_SCHEMA.to_string(),
            u: grid.u().to_vec(),
            v: grid.v().to_vec(),
            positions: dump(grid.positions()),
            jets: grid.jets().iter().map(dump).collect(),
        }
    }
}

/// Formatter wrapper that renders every f64 in scientific notation with 17
/// significant digits, enough for a bit-faithful double round-trip.
struct SciFloats<F>(F);

macro_rules! delegate {
    ($($name:ident ( $($arg:ident : $ty:ty),* );)*) => {
        $(fn $name<W>(&mut self, writer: &mut W $(, $arg: $ty)*) -> std::io::Result<()>
        where
            W: ?Sized + Write,
        {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl<F: serde_json::ser::Formatter> serde_json::ser::Formatter for SciFloats<F> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    delegate! {
        write_null();
        write_bool(value: bool);
        write_i8(value: i8);
        write_i16(value: i16);
        write_i32(value: i32);
        write_i64(value: i64);
        write_i128(value: i128);
        write_u8(value: u8);
        write_u16(value: u16);
        write_u32(value: u32);
        write_u64(value: u64);
        write_u128(value: u128);
        write_f32(value: f32);
        write_number_str(value: &str);
        begin_string();
        end_string();
        write_string_fragment(fragment: &str);
        write_char_escape(char_escape: serde_json::ser::CharEscape);
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
        write_raw_fragment(fragment: &str);
    }
}

/// Serializes to pretty JSON with 17-significant-digit floats and a trailing
/// newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let formatter = SciFloats(serde_json::ser::PrettyFormatter::new());
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Canonical digest of an input: SHA-256 of its canonical serialization.
pub fn digest<T: Serialize>(value: &T) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(to_json_string(value).as_bytes());
    format!("sha256:{:x}", hasher.finalize())
}
