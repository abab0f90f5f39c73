use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::construct::{helix_condition_residual, Construction};

use super::{read_file, write_file, IoError};

pub const GRID_FORMAT_VERSION: u32 = 1;

/// Fields of a construction dump, in storage order.
pub const GRID_FIELDS: [&str; 11] = [
    "f", "g", "fx", "fy", "gx", "gy", "fxx", "fxy", "fyy", "r_trace", "r_det",
];

/// JSON sidecar describing a binary grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub version: u32,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub fields: Vec<String>,
}

/// Node values on `x_i = x0 + i·hx`, `y_r = y0 + r·hy`. Each field is stored
/// row-major; NaN marks nodes outside the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub header: GridHeader,
    pub data: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct JsonDump<'a> {
    header: &'a GridHeader,
    x: Vec<f64>,
    y: Vec<f64>,
    data: BTreeMap<&'a str, &'a [f64]>,
}

impl GridDump {
    /// `f`, `g` and first derivatives as solved, second derivatives of `f`
    /// from the march, and the two helix residuals where the graph has
    /// derivatives.
    pub fn from_construction(cons: &Construction) -> GridDump {
        let s = &cons.grid;
        let n = s.nx * s.ny;
        let nan = vec![f64::NAN; n];
        let gf = s.g.as_ref();
        let mut r_trace = nan.clone();
        let mut r_det = nan.clone();
        for r in 0..s.ny {
            for i in 0..s.nx {
                if let Ok((a, b)) =
                    helix_condition_residual(&cons.graph, &cons.params, (s.x(i), s.y(r)))
                {
                    r_trace[s.idx(r, i)] = a;
                    r_det[s.idx(r, i)] = b;
                }
            }
        }
        let data = vec![
            s.f.clone(),
            gf.map_or(nan.clone(), |g| g.g.clone()),
            s.fx.clone(),
            s.fy.clone(),
            gf.map_or(nan.clone(), |g| g.gx.clone()),
            gf.map_or(nan.clone(), |g| g.gy.clone()),
            s.fxx.clone(),
            s.fxy.clone(),
            s.fyy.clone(),
            r_trace,
            r_det,
        ];
        GridDump {
            header: GridHeader {
                version: GRID_FORMAT_VERSION,
                nx: s.nx,
                ny: s.ny,
                x0: s.x0,
                y0: s.y0,
                hx: s.hx,
                hy: s.hy,
                fields: GRID_FIELDS.iter().map(|s| s.to_string()).collect(),
            },
            data,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.header.x0 + i as f64 * self.header.hx
    }

    pub fn y(&self, r: usize) -> f64 {
        self.header.y0 + r as f64 * self.header.hy
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        let k = self.header.fields.iter().position(|f| f == name)?;
        Some(&self.data[k])
    }

    /// Nodes where every field except the residuals is finite.
    pub fn is_valid(&self, k: usize) -> bool {
        self.header
            .fields
            .iter()
            .zip(&self.data)
            .filter(|(name, _)| !name.starts_with("r_"))
            .all(|(_, d)| d[k].is_finite())
    }

    /// Sidecar path for a dump at `bin`.
    pub fn sidecar_path(bin: &Path) -> PathBuf {
        bin.with_extension("json")
    }

    /// Writes `bin` as little-endian f64, field by field, and the header to
    /// the sidecar next to it.
    pub fn write(&self, bin: &Path) -> Result<(), IoError> {
        let mut bytes = Vec::with_capacity(self.data.len() * self.header.nx * self.header.ny * 8);
        for field in &self.data {
            for v in field {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        write_file(bin, &bytes)?;
        write_file(
            &Self::sidecar_path(bin),
            super::to_json_string(&self.header)?.as_bytes(),
        )
    }

    /// Reads a dump from its sidecar; the binary is the sibling `.bin` file.
    pub fn read(sidecar: &Path) -> Result<GridDump, IoError> {
        let header: GridHeader = serde_json::from_slice(&read_file(sidecar)?)?;
        if header.version != GRID_FORMAT_VERSION {
            return Err(IoError::Format(format!(
                "unsupported version {}",
                header.version
            )));
        }
        let bytes = read_file(&sidecar.with_extension("bin"))?;
        let n = header.nx * header.ny;
        let want = n * header.fields.len() * 8;
        if bytes.len() != want {
            return Err(IoError::Format(format!(
                "expected {want} bytes, found {}",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let data = if n == 0 {
            vec![Vec::new(); header.fields.len()]
        } else {
            values.chunks(n).map(<[f64]>::to_vec).collect()
        };
        Ok(GridDump { header, data })
    }

    /// One row per valid node: `x, y` followed by every field.
    pub fn to_csv(&self) -> Result<String, IoError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec!["x".to_string(), "y".to_string()];
        head.extend(self.header.fields.iter().cloned());
        w.write_record(&head)?;
        for r in 0..self.header.ny {
            for i in 0..self.header.nx {
                let k = r * self.header.nx + i;
                if !self.is_valid(k) {
                    continue;
                }
                let mut rec = vec![super::fmt_f64(self.x(i)), super::fmt_f64(self.y(r))];
                rec.extend(self.data.iter().map(|d| {
                    if d[k].is_finite() {
                        super::fmt_f64(d[k])
                    } else {
                        String::new()
                    }
                }));
                w.write_record(&rec)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| IoError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV of ASCII numbers"))
    }

    /// Header, node coordinates and fields keyed by name.
    pub fn to_json(&self) -> Result<String, IoError> {
        let dump = JsonDump {
            header: &self.header,
            x: (0..self.header.nx).map(|i| self.x(i)).collect(),
            y: (0..self.header.ny).map(|r| self.y(r)).collect(),
            data: self
                .header
                .fields
                .iter()
                .map(String::as_str)
                .zip(self.data.iter().map(Vec::as_slice))
                .collect(),
        };
        super::to_json_string(&dump)
    }

    /// Node points `(x, y, f, g)`, `None` at invalid nodes.
    pub fn points(&self) -> Vec<Option<[f64; 4]>> {
        let (f, g) = (self.field("f"), self.field("g"));
        (0..self.header.ny)
            .flat_map(|r| (0..self.header.nx).map(move |i| (r, i)))
            .map(|(r, i)| {
                let k = r * self.header.nx + i;
                let p = [self.x(i), self.y(r), f?[k], g?[k]];
                p.iter().all(|v| v.is_finite()).then_some(p)
            })
            .collect()
    }
}
