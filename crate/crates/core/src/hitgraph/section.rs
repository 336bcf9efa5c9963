use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::doublet::Doublet;
use super::event::Hit;
use crate::error::{Error, Result};
use crate::ttn::EdgeFeatures;

pub const PHI_SECTORS: u8 = 8;
pub const Z_HALVES: u8 = 2;
pub const SECTORS_PER_EVENT: usize = (PHI_SECTORS * Z_HALVES) as usize;

const NODES_HEADER: &str = "local_id,r,phi,z";
const EDGES_HEADER: &str = "src,dst,label";

/// One of the 8 × 2 slices of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sector {
    /// Wedge `k` covers `[−π + kπ/4, −π + (k+1)π/4)`.
    pub phi: u8,
    /// 0 for `z < 0`, 1 for `z ≥ 0`.
    pub z: u8,
}

impl Sector {
    pub fn of(phi: f64, z: f64) -> Self {
        // φ = π is the same direction as −π
        let phi = if phi >= PI { phi - 2.0 * PI } else { phi };
        let k = ((phi + PI) / FRAC_PI_4).floor();
        let k = if k.is_nan() {
            0.0
        } else {
            k.clamp(0.0, (PHI_SECTORS - 1) as f64)
        };
        Sector {
            phi: k as u8,
            z: u8::from(z >= 0.0),
        }
    }

    pub fn index(&self) -> usize {
        (self.phi * Z_HALVES + self.z) as usize
    }

    pub fn all() -> impl Iterator<Item = Sector> {
        (0..PHI_SECTORS).flat_map(|phi| (0..Z_HALVES).map(move |z| Sector { phi, z }))
    }

    pub fn phi_range(&self) -> (f64, f64) {
        let lo = -PI + self.phi as f64 * FRAC_PI_4;
        (lo, lo + FRAC_PI_4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

/// Labeled edge between two local node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubGraph {
    pub event_id: String,
    pub sector: Sector,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl SubGraph {
    pub fn empty(event_id: &str, sector: Sector) -> Self {
        Self {
            event_id: event_id.to_string(),
            sector,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// `evt<EVENTID>_s<PHI><Z>`
    pub fn name(&self) -> String {
        format!("evt{}_s{}{}", self.event_id, self.sector.phi, self.sector.z)
    }

    /// Classifier inputs of an edge, inner hit first.
    pub fn features(&self, edge: &Edge) -> EdgeFeatures {
        let a = self.nodes[edge.src];
        let b = self.nodes[edge.dst];
        EdgeFeatures::from_hits((a.r, a.phi, a.z), (b.r, b.phi, b.z))
    }

    pub fn n_true(&self) -> usize {
        self.edges.iter().filter(|e| e.label).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sectioned {
    /// Always [`SECTORS_PER_EVENT`] graphs, ordered by [`Sector::index`].
    pub subgraphs: Vec<SubGraph>,
    /// Edges whose endpoints fell into different sectors.
    pub cross_sector: usize,
}

/// Splits an event graph into its 16 sectors. Every hit becomes a node of
/// the sector holding its own `(φ, z)`; edges across sectors are dropped.
pub fn section_graph(event_id: &str, hits: &[Hit], doublets: &[Doublet]) -> Sectioned {
    let mut subgraphs: Vec<SubGraph> = Sector::all()
        .map(|s| SubGraph::empty(event_id, s))
        .collect();
    let mut local: HashMap<u64, (usize, usize)> = HashMap::with_capacity(hits.len());
    for h in hits {
        let sector = Sector::of(h.phi, h.z).index();
        let g = &mut subgraphs[sector];
        local.insert(h.hit_id, (sector, g.nodes.len()));
        g.nodes.push(Node {
            r: h.r,
            phi: h.phi,
            z: h.z,
        });
    }

    let mut cross_sector = 0;
    for d in doublets {
        match (local.get(&d.src_hit), local.get(&d.dst_hit)) {
            (Some(&(sa, a)), Some(&(sb, b))) if sa == sb => subgraphs[sa].edges.push(Edge {
                src: a,
                dst: b,
                label: d.label,
            }),
            _ => cross_sector += 1,
        }
    }
    Sectioned {
        subgraphs,
        cross_sector,
    }
}

/// Writes `nodes.csv` and `edges.csv` into `dir`, creating it if needed.
pub fn write_subgraph(graph: &SubGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut nodes = format!("{NODES_HEADER}\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        writeln!(nodes, "{i},{},{},{}", n.r, n.phi, n.z).unwrap();
    }
    let mut edges = format!("{EDGES_HEADER}\n");
    for e in &graph.edges {
        writeln!(edges, "{},{},{}", e.src, e.dst, u8::from(e.label)).unwrap();
    }
    let np = dir.join("nodes.csv");
    fs::write(&np, nodes).map_err(|e| Error::io(&np, e))?;
    let ep = dir.join("edges.csv");
    fs::write(&ep, edges).map_err(|e| Error::io(&ep, e))
}

/// Parses `evt<EVENTID>_s<PHI><Z>`.
pub fn parse_subgraph_name(name: &str) -> Option<(String, Sector)> {
    let rest = name.strip_prefix("evt")?;
    let (event_id, sector) = rest.rsplit_once("_s")?;
    let mut chars = sector.chars();
    let phi = chars.next()?.to_digit(10)? as u8;
    let z = chars.next()?.to_digit(10)? as u8;
    if chars.next().is_some() || phi >= PHI_SECTORS || z >= Z_HALVES || event_id.is_empty() {
        return None;
    }
    Some((event_id.to_string(), Sector { phi, z }))
}

fn rows<'a>(
    path: &'a Path,
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (u64, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{header}`, found `{h}`"),
            ))
        }
        None => return Err(Error::parse(path, 1, format!("missing header `{header}`"))),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i as u64 + 1, l.split(',').map(str::trim).collect())))
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} `{tok}`")))
}

/// Reads a subgraph written by [`write_subgraph`]. The event id and sector
/// come from the directory name.
pub fn read_subgraph(dir: &Path) -> Result<SubGraph> {
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (event_id, sector) = parse_subgraph_name(name).ok_or_else(|| {
        Error::Data(format!(
            "{}: directory name is not of the form evt<ID>_s<PHI><Z>",
            dir.display()
        ))
    })?;

    let np = dir.join("nodes.csv");
    let text = fs::read_to_string(&np).map_err(|e| Error::io(&np, e))?;
    let mut nodes = Vec::new();
    for (line, cols) in rows(&np, &text, NODES_HEADER)? {
        if cols.len() != 4 {
            return Err(Error::parse(
                &np,
                line,
                format!("expected 4 fields, found {}", cols.len()),
            ));
        }
        let id: usize = field(&np, line, "local_id", cols[0])?;
        if id != nodes.len() {
            return Err(Error::parse(
                &np,
                line,
                format!("local_id {id} out of sequence (expected {})", nodes.len()),
            ));
        }
        nodes.push(Node {
            r: field(&np, line, "r", cols[1])?,
            phi: field(&np, line, "phi", cols[2])?,
            z: field(&np, line, "z", cols[3])?,
        });
    }

    let ep = dir.join("edges.csv");
    let text = fs::read_to_string(&ep).map_err(|e| Error::io(&ep, e))?;
    let mut edges = Vec::new();
    for (line, cols) in rows(&ep, &text, EDGES_HEADER)? {
        if cols.len() != 3 {
            return Err(Error::parse(
                &ep,
                line,
                format!("expected 3 fields, found {}", cols.len()),
            ));
        }
        let src: usize = field(&ep, line, "src", cols[0])?;
        let dst: usize = field(&ep, line, "dst", cols[1])?;
        for id in [src, dst] {
            if id >= nodes.len() {
                return Err(Error::parse(
                    &ep,
                    line,
                    format!("node {id} does not exist ({} nodes)", nodes.len()),
                ));
            }
        }
        let label = match cols[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    &ep,
                    line,
                    format!("label must be 0 or 1, found `{other}`"),
                ))
            }
        };
        edges.push(Edge { src, dst, label });
    }

    Ok(SubGraph {
        event_id,
        sector,
        nodes,
        edges,
    })
}

/// Reads every subgraph directory directly under `root`, sorted by name.
pub fn read_subgraphs(root: &Path) -> Result<Vec<SubGraph>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        let is_graph = path.is_dir()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| parse_subgraph_name(n).is_some());
        if is_graph {
            dirs.push(path);
        }
    }
    dirs.sort();
    dirs.iter().map(|d| read_subgraph(d)).collect()
}
