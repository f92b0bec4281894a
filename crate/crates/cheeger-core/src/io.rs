//! Instance and artifact files: the two JSON instance schemas (vertex-edge
//! and grid), PGM mask ingestion (P2/P5, nonzero = active), PGM chamber-map
//! emission, and label files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirichletGraph, Edge, GridSpec};
use crate::labeling::Labeling;

const MAX_GRID_CELLS: u64 = 100_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VertexJson {
    id: u64,
    m: f64,
    b: f64,
}

/// Edge endpoints reference vertex ids, not positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeJson {
    u: u64,
    v: u64,
    w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<VertexJson>,
    edges: Vec<EdgeJson>,
}

/// Mask is a row-major 0/1 string; whitespace inside it is ignored so masks
/// can be broken across lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridJson {
    w: u32,
    h: u32,
    mesh: f64,
    mask: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridWrapper {
    grid: GridJson,
}

fn mask_from_string(text: &str, cells: usize) -> Result<Vec<bool>> {
    let mut mask = Vec::with_capacity(cells);
    for c in text.chars() {
        match c {
            '0' => mask.push(false),
            '1' => mask.push(true),
            c if c.is_ascii_whitespace() => {}
            c => return Err(Error::Parse(format!("mask character {c:?} is not 0 or 1"))),
        }
    }
    if mask.len() != cells {
        return Err(Error::Parse(format!(
            "mask has {} cells, expected {}",
            mask.len(),
            cells
        )));
    }
    Ok(mask)
}

fn grid_from_json(grid: &GridJson) -> Result<DirichletGraph> {
    let cells = u64::from(grid.w) * u64::from(grid.h);
    if cells == 0 || cells > MAX_GRID_CELLS {
        return Err(Error::Parse(format!(
            "grid dimensions {}x{} out of range",
            grid.w, grid.h
        )));
    }
    let mask = mask_from_string(&grid.mask, cells as usize)?;
    DirichletGraph::build_grid(&GridSpec {
        width: grid.w,
        height: grid.h,
        mesh: grid.mesh,
        mask,
    })
}

fn graph_from_json(data: &GraphJson) -> Result<DirichletGraph> {
    let ids: Vec<u64> = data.vertices.iter().map(|v| v.id).collect();
    let mut index = HashMap::with_capacity(ids.len());
    for (i, &id) in ids.iter().enumerate() {
        if index.insert(id, i).is_some() {
            return Err(Error::Parse(format!("duplicate vertex id {id}")));
        }
    }
    let resolve = |id: u64| {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Parse(format!("edge references unknown vertex id {id}")))
    };
    let edges = data
        .edges
        .iter()
        .map(|e| {
            Ok(Edge {
                u: resolve(e.u)?,
                v: resolve(e.v)?,
                w: e.w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let volumes = data.vertices.iter().map(|v| v.m).collect();
    let boundary = data.vertices.iter().map(|v| v.b).collect();
    DirichletGraph::new(ids, volumes, boundary, edges)
}

/// Parses either instance schema, keyed on the presence of a `grid` member.
pub fn parse_instance_json(text: &str) -> Result<DirichletGraph> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("grid").is_some() {
        let wrapper: GridWrapper = serde_json::from_value(value)?;
        grid_from_json(&wrapper.grid)
    } else {
        let data: GraphJson = serde_json::from_value(value)?;
        graph_from_json(&data)
    }
}

/// Serializes a graph back to instance JSON. Grid domains round-trip through
/// the grid schema (their weights are implied by the mask and mesh); all
/// other graphs use the vertex-edge schema.
pub fn instance_to_json(g: &DirichletGraph) -> serde_json::Value {
    if let Some(info) = g.grid_info() {
        let mut mask = vec![b'0'; (info.width * info.height) as usize];
        for &(row, col) in &info.cells {
            mask[(row * info.width + col) as usize] = b'1';
        }
        return serde_json::json!({ "grid": {
            "w": info.width,
            "h": info.height,
            "mesh": info.mesh,
            "mask": String::from_utf8(mask).unwrap(),
        }});
    }
    let vertices: Vec<VertexJson> = (0..g.len())
        .map(|v| VertexJson {
            id: g.ids()[v],
            m: g.volume(v),
            b: g.boundary_weight(v),
        })
        .collect();
    let edges: Vec<EdgeJson> = g
        .edges()
        .iter()
        .map(|e| EdgeJson {
            u: g.ids()[e.u],
            v: g.ids()[e.v],
            w: e.w,
        })
        .collect();
    serde_json::json!({ "vertices": vertices, "edges": edges })
}

struct PgmScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmScanner<'a> {
    fn skip_filler(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_filler();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("unexpected end of PGM header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Parse("PGM header is not ASCII".into()))
    }

    fn number(&mut self) -> Result<u64> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("PGM header token {tok:?} is not a number")))
    }
}

/// Reads a P2 or P5 PGM image as a mask: sample nonzero = active cell.
pub fn parse_pgm_mask(bytes: &[u8]) -> Result<(u32, u32, Vec<bool>)> {
    let mut s = PgmScanner { bytes, pos: 0 };
    let magic = s.token()?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::Parse(format!("unsupported PGM magic {magic:?}")));
    }
    let width = s.number()?;
    let height = s.number()?;
    let cells = width * height;
    if width == 0 || height == 0 || cells > MAX_GRID_CELLS {
        return Err(Error::Parse(format!("PGM dimensions {width}x{height} out of range")));
    }
    let maxval = s.number()?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
    }
    let cells = cells as usize;
    let mut mask = Vec::with_capacity(cells);
    if magic == "P2" {
        for _ in 0..cells {
            let sample = s.number()?;
            if sample > maxval {
                return Err(Error::Parse(format!("PGM sample {sample} exceeds maxval {maxval}")));
            }
            mask.push(sample != 0);
        }
    } else {
        // Raster starts after exactly one whitespace byte past the maxval.
        if s.pos >= bytes.len() || !bytes[s.pos].is_ascii_whitespace() {
            return Err(Error::Parse("missing separator before PGM raster".into()));
        }
        let raster = &bytes[s.pos + 1..];
        let per_sample = if maxval > 255 { 2 } else { 1 };
        if raster.len() < cells * per_sample {
            return Err(Error::Parse(format!(
                "PGM raster has {} bytes, expected {}",
                raster.len(),
                cells * per_sample
            )));
        }
        for i in 0..cells {
            let sample = if per_sample == 1 {
                u64::from(raster[i])
            } else {
                u64::from(u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]))
            };
            if sample > maxval {
                return Err(Error::Parse(format!("PGM sample {sample} exceeds maxval {maxval}")));
            }
            mask.push(sample != 0);
        }
    }
    Ok((width as u32, height as u32, mask))
}

/// Renders a clustering of a grid domain as a P2 chamber map: gray level
/// `round(i * 255 / N)` for chamber i, 0 for unassigned or outside cells.
pub fn chamber_map_pgm(g: &DirichletGraph, labeling: &Labeling) -> Result<Vec<u8>> {
    labeling.validate(g)?;
    let info = g.grid_info().ok_or_else(|| {
        Error::InvalidParameter("chamber maps require a grid domain".into())
    })?;
    let mut canvas = vec![0u16; (info.width * info.height) as usize];
    for (v, &label) in labeling.assignment.iter().enumerate() {
        if label == 0 {
            continue;
        }
        let (row, col) = info.cells[v];
        let gray = (f64::from(label) * 255.0 / f64::from(labeling.n)).round() as u16;
        canvas[(row * info.width + col) as usize] = gray;
    }
    let mut out = format!("P2\n{} {}\n255\n", info.width, info.height).into_bytes();
    for row in 0..info.height {
        let line: Vec<String> = (0..info.width)
            .map(|col| canvas[(row * info.width + col) as usize].to_string())
            .collect();
        out.extend_from_slice(line.join(" ").as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

/// Parses a label file and validates it against the instance.
pub fn parse_labels_json(text: &str, g: &DirichletGraph) -> Result<Labeling> {
    let labeling: Labeling = serde_json::from_str(text)?;
    labeling.validate(g)?;
    Ok(labeling)
}

/// Loads an instance file by extension: `.json` for either JSON schema,
/// `.pgm` for a mask image. `mesh` applies only to PGM masks (default 1).
pub fn load_instance(path: &Path, mesh: Option<f64>) -> Result<DirichletGraph> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "json" => parse_instance_json(&fs::read_to_string(path)?),
        "pgm" => {
            let (width, height, mask) = parse_pgm_mask(&fs::read(path)?)?;
            DirichletGraph::build_grid(&GridSpec {
                width,
                height,
                mesh: mesh.unwrap_or(1.0),
                mask,
            })
        }
        _ => Err(Error::Parse(format!(
            "unsupported instance file {}: expected .json or .pgm",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_edge_schema_round_trips() {
        let text = r#"{
            "vertices": [{"id": 1, "m": 1.0, "b": 1.0},
                         {"id": 2, "m": 1.0, "b": 0.0},
                         {"id": 3, "m": 1.0, "b": 1.0}],
            "edges": [{"u": 1, "v": 2, "w": 1.0}, {"u": 2, "v": 3, "w": 1.0}]
        }"#;
        let g = parse_instance_json(text).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.ids(), &[1, 2, 3]);
        assert_eq!(g.boundary_weight(1), 0.0);
        let again = parse_instance_json(&instance_to_json(&g).to_string()).unwrap();
        assert_eq!(again.ids(), g.ids());
        assert_eq!(again.edges(), g.edges());
        assert_eq!(again.total_volume(), g.total_volume());
        assert_eq!(again.total_perimeter(), g.total_perimeter());
    }

    #[test]
    fn edges_by_unknown_id_are_rejected() {
        let text = r#"{"vertices": [{"id": 1, "m": 1.0, "b": 0.0}],
                       "edges": [{"u": 1, "v": 9, "w": 1.0}]}"#;
        assert!(parse_instance_json(text).is_err());
        let dup = r#"{"vertices": [{"id": 1, "m": 1.0, "b": 0.0},
                                   {"id": 1, "m": 1.0, "b": 0.0}], "edges": []}"#;
        assert!(parse_instance_json(dup).is_err());
    }

    #[test]
    fn grid_schema_builds_the_expected_square() {
        // 2x2 full mask at mesh 0.5 is a unit square: per(all) = 4.
        let text = r#"{"grid": {"w": 2, "h": 2, "mesh": 0.5, "mask": "11 11"}}"#;
        let g = parse_instance_json(text).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.total_perimeter(), 4.0);
        let again = parse_instance_json(&instance_to_json(&g).to_string()).unwrap();
        assert_eq!(again.total_perimeter(), 4.0);
        assert_eq!(again.grid_info(), g.grid_info());

        assert!(parse_instance_json(r#"{"grid": {"w": 2, "h": 2, "mesh": 0.5, "mask": "111"}}"#).is_err());
        assert!(parse_instance_json(r#"{"grid": {"w": 2, "h": 2, "mesh": 0.5, "mask": "11x1"}}"#).is_err());
    }

    #[test]
    fn pgm_variants_agree_and_ignore_comments() {
        let ascii = b"P2\n# a comment\n3 2\n255\n0 7 0\n255 0 1\n";
        let (w, h, mask) = parse_pgm_mask(ascii).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(mask, vec![false, true, false, true, false, true]);

        let mut binary = b"P5\n3 2\n255\n".to_vec();
        binary.extend_from_slice(&[0, 7, 0, 255, 0, 1]);
        let (w2, h2, mask2) = parse_pgm_mask(&binary).unwrap();
        assert_eq!((w, h, mask.clone()), (w2, h2, mask2));

        // Two-byte samples for a 16-bit maxval.
        let mut wide = b"P5\n2 1\n300\n".to_vec();
        wide.extend_from_slice(&[0, 0, 1, 44]);
        let (_, _, wide_mask) = parse_pgm_mask(&wide).unwrap();
        assert_eq!(wide_mask, vec![false, true]);

        assert!(parse_pgm_mask(b"P3\n1 1\n255\n0\n").is_err());
        assert!(parse_pgm_mask(b"P5\n2 2\n255\n\x00\x01").is_err());
    }

    #[test]
    fn chamber_map_uses_scaled_gray_levels() {
        let g = DirichletGraph::build_grid(&GridSpec {
            width: 2,
            height: 2,
            mesh: 1.0,
            mask: vec![true; 4],
        })
        .unwrap();
        let labeling = Labeling { n: 2, assignment: vec![1, 0, 2, 2] };
        let pgm = chamber_map_pgm(&g, &labeling).unwrap();
        let text = String::from_utf8(pgm.clone()).unwrap();
        assert_eq!(text, "P2\n2 2\n255\n128 0\n255 255\n");
        // Chamber maps read back as masks: active = assigned.
        let (_, _, mask) = parse_pgm_mask(&pgm).unwrap();
        assert_eq!(mask, vec![true, false, true, true]);
    }

    #[test]
    fn labels_validate_against_the_instance() {
        let g = parse_instance_json(r#"{"grid": {"w": 2, "h": 1, "mesh": 1.0, "mask": "11"}}"#)
            .unwrap();
        let lab = parse_labels_json(r#"{"n": 2, "assignment": [1, 2]}"#, &g).unwrap();
        assert_eq!(lab.assignment, vec![1, 2]);
        assert!(parse_labels_json(r#"{"n": 2, "assignment": [1]}"#, &g).is_err());
        assert!(parse_labels_json(r#"{"n": 2, "assignment": [3, 0]}"#, &g).is_err());
    }
}
