//! Toy event generator: helical tracks from the beam line through ten
//! concentric barrel cylinders in a uniform solenoid field.
//!
//! A track of transverse momentum `pT` (GeV) in a field `B` (T) bends on a
//! circle of radius `R = pT / (0.3 B)` m through the origin. It reaches a
//! cylinder of radius `r` after turning by `α = 2·asin(r / 2R)`, which needs
//! `r ≤ 2R`; the hit azimuth is `φ0 − q·α/2` and the path length is `R·α`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hitgraph::{Event, EventFiles, Hit, Particle};

pub const N_LAYERS: usize = 10;
pub const DEFAULT_LAYER_RADII: [f64; N_LAYERS] = [
    32.0, 72.0, 116.0, 172.0, 260.0, 360.0, 500.0, 660.0, 820.0, 1020.0,
];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_tracks: usize,
    /// GeV, sampled uniformly.
    pub pt_range: (f64, f64),
    pub noise_hits: usize,
    /// Tesla, along +z.
    pub b_field: f64,
    pub layer_radii: [f64; N_LAYERS],
    /// Standard deviation of the vertex z position, mm.
    pub z0_spread: f64,
    /// Tracks are generated with |η| below this.
    pub eta_max: f64,
    /// Noise hits are spread uniformly over |z| < this, mm.
    pub noise_z_max: f64,
    /// Gaussian hit smearing in rφ and z, mm. Zero disables.
    pub smear: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_tracks: 50,
            pt_range: (0.5, 5.0),
            noise_hits: 0,
            b_field: 2.0,
            layer_radii: DEFAULT_LAYER_RADII,
            z0_spread: 30.0,
            eta_max: 1.5,
            noise_z_max: 1000.0,
            smear: 0.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.pt_range.0 > 0.0 && self.pt_range.0 <= self.pt_range.1) {
            return bad(format!(
                "pt range ({}, {}) needs 0 < min <= max",
                self.pt_range.0, self.pt_range.1
            ));
        }
        if !(self.b_field > 0.0) {
            return bad(format!("b_field must be positive, got {}", self.b_field));
        }
        if !(self.layer_radii[0] > 0.0) || self.layer_radii.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("layer radii must be positive and strictly increasing".into());
        }
        for (name, v) in [
            ("z0_spread", self.z0_spread),
            ("eta_max", self.eta_max),
            ("noise_z_max", self.noise_z_max),
            ("smear", self.smear),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Synthetic volume id of barrel layer `k`: 0–3 → 8, 4–7 → 13, 8–9 → 17.
pub fn layer_volume(k: usize) -> (u32, u32) {
    match k {
        0..=3 => (8, 2 * (k as u32 + 1)),
        4..=7 => (13, 2 * (k as u32 - 3)),
        _ => (17, 2 * (k as u32 - 7)),
    }
}

/// Kinematics of one generated particle at its production vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub charge: i8,
    pub pt: f64,
    pub phi0: f64,
    pub z_vertex: f64,
    /// `pz / pT`, i.e. `dz/ds` along the transverse path.
    pub dz_ds: f64,
}

impl Track {
    /// Bending radius in mm.
    pub fn radius(&self, b_field: f64) -> f64 {
        self.pt / (0.3 * b_field) * 1000.0
    }

    /// Crossing point `(x, y, z)` with the cylinder of radius `r`, if the
    /// helix reaches it.
    pub fn intersect(&self, r: f64, b_field: f64) -> Option<(f64, f64, f64)> {
        let big_r = self.radius(b_field);
        if r > 2.0 * big_r {
            return None;
        }
        let alpha = 2.0 * (r / (2.0 * big_r)).asin();
        let phi = self.phi0 - f64::from(self.charge) * alpha / 2.0;
        let z = self.z_vertex + self.dz_ds * big_r * alpha;
        Some((r * phi.cos(), r * phi.sin(), z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenHit {
    pub hit_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub volume_id: u32,
    pub layer_id: u32,
    /// 0 for noise.
    pub particle_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParticle {
    pub particle_id: u64,
    pub track: Track,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub n_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEvent {
    pub hits: Vec<GenHit>,
    pub particles: Vec<GenParticle>,
}

/// Generates one event. `stream` selects an independent random stream for
/// the same seed, so several events can be drawn from one configuration.
pub fn gen_event(cfg: &GeneratorConfig, stream: u64) -> Result<SyntheticEvent> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let vertex = Normal::new(0.0, cfg.z0_spread).map_err(|e| Error::Config(e.to_string()))?;
    let smear = Normal::new(0.0, cfg.smear).map_err(|e| Error::Config(e.to_string()))?;
    let slope_max = cfg.eta_max.sinh();

    let mut hits = Vec::new();
    let mut particles = Vec::with_capacity(cfg.n_tracks);
    for i in 0..cfg.n_tracks {
        let track = Track {
            charge: if rng.random::<bool>() { 1 } else { -1 },
            pt: if cfg.pt_range.0 < cfg.pt_range.1 {
                rng.random_range(cfg.pt_range.0..cfg.pt_range.1)
            } else {
                cfg.pt_range.0
            },
            phi0: rng.random_range(-PI..PI),
            z_vertex: vertex.sample(&mut rng),
            dz_ds: if slope_max > 0.0 {
                rng.random_range(-slope_max..=slope_max)
            } else {
                0.0
            },
        };
        let particle_id = i as u64 + 1;
        let mut n_hits = 0;
        for (k, &r) in cfg.layer_radii.iter().enumerate() {
            let Some((mut x, mut y, mut z)) = track.intersect(r, cfg.b_field) else {
                continue;
            };
            if cfg.smear > 0.0 {
                let phi = y.atan2(x) + smear.sample(&mut rng) / r;
                (x, y) = (r * phi.cos(), r * phi.sin());
                z += smear.sample(&mut rng);
            }
            let (volume_id, layer_id) = layer_volume(k);
            hits.push(GenHit {
                hit_id: hits.len() as u64 + 1,
                x,
                y,
                z,
                volume_id,
                layer_id,
                particle_id,
            });
            n_hits += 1;
        }
        let (sin, cos) = track.phi0.sin_cos();
        particles.push(GenParticle {
            particle_id,
            track,
            px: track.pt * cos,
            py: track.pt * sin,
            pz: track.pt * track.dz_ds,
            n_hits,
        });
    }

    for _ in 0..cfg.noise_hits {
        let k = rng.random_range(0..N_LAYERS);
        let r = cfg.layer_radii[k];
        let phi = rng.random_range(-PI..PI);
        let z = if cfg.noise_z_max > 0.0 {
            rng.random_range(-cfg.noise_z_max..cfg.noise_z_max)
        } else {
            0.0
        };
        let (volume_id, layer_id) = layer_volume(k);
        hits.push(GenHit {
            hit_id: hits.len() as u64 + 1,
            x: r * phi.cos(),
            y: r * phi.sin(),
            z,
            volume_id,
            layer_id,
            particle_id: 0,
        });
    }

    Ok(SyntheticEvent { hits, particles })
}

impl SyntheticEvent {
    /// The in-memory equivalent of writing and re-loading the CSV files.
    pub fn to_event(&self) -> Event {
        Event {
            hits: self
                .hits
                .iter()
                .map(|h| Hit::new(h.hit_id, h.x, h.y, h.z, h.volume_id, h.layer_id))
                .collect(),
            particles: self
                .particles
                .iter()
                .map(|p| {
                    (
                        p.particle_id,
                        Particle {
                            particle_id: p.particle_id,
                            px: p.px,
                            py: p.py,
                            pz: p.pz,
                        },
                    )
                })
                .collect(),
            truth: self
                .hits
                .iter()
                .map(|h| (h.hit_id, h.particle_id))
                .collect::<HashMap<_, _>>(),
        }
    }

    /// Writes `event<ID>-{hits,particles,truth}.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path, event_id: &str) -> Result<EventFiles> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = EventFiles::in_dir(dir, event_id);

        let mut hits = String::from("hit_id,x,y,z,volume_id,layer_id\n");
        let mut truth = String::from("hit_id,particle_id,tx,ty,tz\n");
        for h in &self.hits {
            writeln!(
                hits,
                "{},{},{},{},{},{}",
                h.hit_id, h.x, h.y, h.z, h.volume_id, h.layer_id
            )
            .unwrap();
            writeln!(
                truth,
                "{},{},{},{},{}",
                h.hit_id, h.particle_id, h.x, h.y, h.z
            )
            .unwrap();
        }
        let mut particles = String::from("particle_id,vx,vy,vz,px,py,pz,q,nhits\n");
        for p in &self.particles {
            writeln!(
                particles,
                "{},0,0,{},{},{},{},{},{}",
                p.particle_id, p.track.z_vertex, p.px, p.py, p.pz, p.track.charge, p.n_hits
            )
            .unwrap();
        }

        for (path, text) in [
            (&files.hits, hits),
            (&files.particles, particles),
            (&files.truth, truth),
        ] {
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(files)
    }
}
