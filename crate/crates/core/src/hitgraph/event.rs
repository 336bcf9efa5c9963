use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A detector measurement with derived cylindrical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub hit_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub volume_id: u32,
    pub layer_id: u32,
    pub r: f64,
    pub phi: f64,
    /// Ordinal of the barrel layer by radius, assigned by
    /// [`select_barrel_hits`](super::select_barrel_hits).
    pub layer_index: Option<usize>,
}

impl Hit {
    pub fn new(hit_id: u64, x: f64, y: f64, z: f64, volume_id: u32, layer_id: u32) -> Self {
        Self {
            hit_id,
            x,
            y,
            z,
            volume_id,
            layer_id,
            r: x.hypot(y),
            phi: y.atan2(x),
            layer_index: None,
        }
    }

    pub fn cylindrical(&self) -> (f64, f64, f64) {
        (self.r, self.phi, self.z)
    }
}

/// Truth particle; `particle_id` 0 is reserved for noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub particle_id: u64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl Particle {
    pub fn pt(&self) -> f64 {
        self.px.hypot(self.py)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Event {
    pub hits: Vec<Hit>,
    pub particles: HashMap<u64, Particle>,
    /// hit_id → particle_id
    pub truth: HashMap<u64, u64>,
}

impl Event {
    /// Particle a hit belongs to, or `None` for noise and unknown hits.
    pub fn particle_of(&self, hit_id: u64) -> Option<u64> {
        self.truth.get(&hit_id).copied().filter(|&pid| pid != 0)
    }
}

/// Paths of the `hits`, `particles` and `truth` CSV files of one event.
#[derive(Debug, Clone)]
pub struct EventFiles {
    pub hits: PathBuf,
    pub particles: PathBuf,
    pub truth: PathBuf,
}

impl EventFiles {
    /// `<dir>/event<ID>-{hits,particles,truth}.csv`
    pub fn in_dir(dir: &Path, event_id: &str) -> Self {
        let f = |kind: &str| dir.join(format!("event{event_id}-{kind}.csv"));
        Self {
            hits: f("hits"),
            particles: f("particles"),
            truth: f("truth"),
        }
    }
}

/// Lists the event ids that have a hits file in `dir`, sorted.
pub fn discover_events(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(id) = name
            .strip_prefix("event")
            .and_then(|rest| rest.strip_suffix("-hits.csv"))
        {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

struct Table {
    path: PathBuf,
    reader: csv::Reader<File>,
    columns: Vec<usize>,
}

impl Table {
    fn open(path: &Path, required: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let columns = required
            .iter()
            .map(|&name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Schema {
                        path: path.to_path_buf(),
                        column: name.to_string(),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            path: path.to_path_buf(),
            reader,
            columns,
        })
    }

    fn for_each_row(mut self, mut f: impl FnMut(&Row<'_>) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {}
                Err(e) => return Err(csv_error(&self.path, e)),
            }
            f(&Row {
                record: &record,
                columns: &self.columns,
                path: &self.path,
                line: record.position().map_or(0, |p| p.line()),
            })?;
        }
    }
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    columns: &'a [usize],
    path: &'a Path,
    line: u64,
}

impl Row<'_> {
    /// Parses the `i`-th required column.
    fn get<T: FromStr>(&self, i: usize) -> Result<T> {
        let col = self.columns[i];
        let text = self.record.get(col).ok_or_else(|| {
            Error::parse(
                self.path,
                self.line,
                format!("row is missing column {}", col + 1),
            )
        })?;
        text.parse().map_err(|_| {
            Error::parse(
                self.path,
                self.line,
                format!("cannot parse `{text}` as a number"),
            )
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

/// Reads one event from its TrackML-style CSV triplet.
pub fn load_event(files: &EventFiles) -> Result<Event> {
    let mut hits = Vec::new();
    Table::open(
        &files.hits,
        &["hit_id", "x", "y", "z", "volume_id", "layer_id"],
    )?
    .for_each_row(|row| {
        hits.push(Hit::new(
            row.get(0)?,
            row.get(1)?,
            row.get(2)?,
            row.get(3)?,
            row.get(4)?,
            row.get(5)?,
        ));
        Ok(())
    })?;

    let mut particles = HashMap::new();
    Table::open(&files.particles, &["particle_id", "px", "py", "pz"])?.for_each_row(|row| {
        let p = Particle {
            particle_id: row.get(0)?,
            px: row.get(1)?,
            py: row.get(2)?,
            pz: row.get(3)?,
        };
        particles.insert(p.particle_id, p);
        Ok(())
    })?;

    let mut truth = HashMap::new();
    Table::open(&files.truth, &["hit_id", "particle_id"])?.for_each_row(|row| {
        truth.insert(row.get(0)?, row.get(1)?);
        Ok(())
    })?;

    Ok(Event {
        hits,
        particles,
        truth,
    })
}
