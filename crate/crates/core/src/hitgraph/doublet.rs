use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use super::event::{Event, Hit};
use crate::error::{Error, Result};

/// Detector volumes that make up the barrel.
pub const BARREL_VOLUMES: [u32; 3] = [8, 13, 17];

/// How the azimuthal cut is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutMode {
    /// `|Δφ| / Δr < dphi_max`, in rad/mm.
    #[default]
    Slope,
    /// `|Δφ| < dphi_max`, in rad.
    Raw,
}

/// Where the transverse-momentum threshold is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PtMode {
    /// Edges of low-pT particles are kept but labeled fake.
    #[default]
    Label,
    /// Hits not belonging to a particle above threshold are removed before
    /// doublet building.
    Filter,
}

impl FromStr for CutMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slope" => Ok(CutMode::Slope),
            "raw" => Ok(CutMode::Raw),
            _ => Err(Error::Config(format!(
                "cut mode must be `slope` or `raw`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for CutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutMode::Slope => "slope",
            CutMode::Raw => "raw",
        })
    }
}

impl FromStr for PtMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "label" => Ok(PtMode::Label),
            "filter" => Ok(PtMode::Filter),
            _ => Err(Error::Config(format!(
                "pt mode must be `label` or `filter`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for PtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PtMode::Label => "label",
            PtMode::Filter => "filter",
        })
    }
}

/// Edge-construction cuts. Defaults: pT > 1 GeV, Δφ/Δr < 6e-4 rad/mm,
/// |z0| < 100 mm, η ∈ [−5, 5], adjacent layers only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionCuts {
    pub pt_min: f64,
    pub dphi_max: f64,
    pub z0_max: f64,
    pub eta_range: (f64, f64),
    pub cut_mode: CutMode,
    pub pt_mode: PtMode,
    /// Largest layer-index difference an edge may span (1 = adjacent only).
    pub layer_gap: usize,
}

impl Default for SelectionCuts {
    fn default() -> Self {
        Self {
            pt_min: 1.0,
            dphi_max: 0.0006,
            z0_max: 100.0,
            eta_range: (-5.0, 5.0),
            cut_mode: CutMode::Slope,
            pt_mode: PtMode::Label,
            layer_gap: 1,
        }
    }
}

impl SelectionCuts {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pt_min", self.pt_min),
            ("dphi_max", self.dphi_max),
            ("z0_max", self.z0_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta_range.0 < self.eta_range.1) {
            return Err(Error::Config(format!(
                "eta range ({}, {}) must have min < max",
                self.eta_range.0, self.eta_range.1
            )));
        }
        if self.layer_gap == 0 {
            return Err(Error::Config("layer_gap must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether a doublet passes the geometric cuts (Δφ, z0, η).
    pub fn accepts(&self, d: &Doublet) -> bool {
        let dphi = match self.cut_mode {
            CutMode::Slope => d.dphi.abs() / d.dr,
            CutMode::Raw => d.dphi.abs(),
        };
        dphi < self.dphi_max
            && d.z0.abs() < self.z0_max
            && d.eta >= self.eta_range.0
            && d.eta <= self.eta_range.1
    }
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Candidate edge between two hits, `src` being the one at smaller radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doublet {
    pub src_hit: u64,
    pub dst_hit: u64,
    pub dphi: f64,
    pub dz: f64,
    pub dr: f64,
    pub z0: f64,
    pub eta: f64,
    pub label: bool,
}

impl Doublet {
    /// Geometry of the segment between two hits, oriented so that `dr > 0`.
    /// Returns `None` when both hits sit at the same radius.
    pub fn between(a: &Hit, b: &Hit) -> Option<Self> {
        let (src, dst) = if b.r < a.r { (b, a) } else { (a, b) };
        let dr = dst.r - src.r;
        if !(dr > 0.0) {
            return None;
        }
        let dz = dst.z - src.z;
        let theta = dr.atan2(dz);
        Some(Self {
            src_hit: src.hit_id,
            dst_hit: dst.hit_id,
            dphi: wrap_angle(dst.phi - src.phi),
            dz,
            dr,
            z0: src.z - src.r * dz / dr,
            eta: -(theta / 2.0).tan().ln(),
            label: false,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DoubletSet {
    pub doublets: Vec<Doublet>,
    /// Pairs skipped because both hits had the same radius.
    pub zero_dr: usize,
}

/// Keeps barrel hits and numbers their layers by increasing mean radius.
pub fn select_barrel_hits(event: &Event) -> Vec<Hit> {
    let mut hits: Vec<Hit> = event
        .hits
        .iter()
        .filter(|h| BARREL_VOLUMES.contains(&h.volume_id))
        .cloned()
        .collect();

    let mut sums: BTreeMap<(u32, u32), (f64, usize)> = BTreeMap::new();
    for h in &hits {
        let e = sums.entry((h.volume_id, h.layer_id)).or_default();
        e.0 += h.r;
        e.1 += 1;
    }
    let mut layers: Vec<((u32, u32), f64)> = sums
        .into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect();
    layers.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let index: HashMap<(u32, u32), usize> = layers
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (*k, i))
        .collect();

    for h in &mut hits {
        h.layer_index = Some(index[&(h.volume_id, h.layer_id)]);
    }
    hits
}

/// Drops hits that do not belong to a particle with pT above `pt_min`.
pub fn filter_low_pt(hits: Vec<Hit>, event: &Event, pt_min: f64) -> Vec<Hit> {
    hits.into_iter()
        .filter(|h| {
            event
                .particle_of(h.hit_id)
                .and_then(|pid| event.particles.get(&pid))
                .is_some_and(|p| p.pt() > pt_min)
        })
        .collect()
}

/// Pairs hits on layers `k` and `k + 1..=k + layer_gap` and keeps those
/// passing the geometric cuts. Hits without a layer index are ignored.
pub fn build_doublets(hits: &[Hit], cuts: &SelectionCuts) -> DoubletSet {
    let mut by_layer: BTreeMap<usize, Vec<&Hit>> = BTreeMap::new();
    for h in hits {
        if let Some(k) = h.layer_index {
            by_layer.entry(k).or_default().push(h);
        }
    }

    let mut out = DoubletSet::default();
    for (&k, inner) in &by_layer {
        for gap in 1..=cuts.layer_gap {
            let Some(outer) = by_layer.get(&(k + gap)) else {
                continue;
            };
            for a in inner {
                for b in outer {
                    match Doublet::between(a, b) {
                        None => out.zero_dr += 1,
                        Some(d) if cuts.accepts(&d) => out.doublets.push(d),
                        Some(_) => {}
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelStats {
    pub true_edges: usize,
    pub fake_edges: usize,
    /// Endpoints with no truth record, treated as noise.
    pub missing_truth: usize,
}

/// Marks a doublet true iff both hits come from the same non-noise particle
/// whose pT exceeds `cuts.pt_min`.
pub fn label_edges(doublets: &mut [Doublet], event: &Event, cuts: &SelectionCuts) -> LabelStats {
    let mut stats = LabelStats::default();
    for d in doublets.iter_mut() {
        for id in [d.src_hit, d.dst_hit] {
            if !event.truth.contains_key(&id) {
                stats.missing_truth += 1;
            }
        }
        d.label = match (event.particle_of(d.src_hit), event.particle_of(d.dst_hit)) {
            (Some(a), Some(b)) if a == b => event
                .particles
                .get(&a)
                .is_some_and(|p| p.pt() > cuts.pt_min),
            _ => false,
        };
        if d.label {
            stats.true_edges += 1;
        } else {
            stats.fake_edges += 1;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitgraph::event::Particle;

    fn hit(id: u64, r: f64, phi: f64, z: f64, layer: usize) -> Hit {
        let mut h = Hit::new(id, r * phi.cos(), r * phi.sin(), z, 8, 2 * layer as u32 + 2);
        h.layer_index = Some(layer);
        h
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert!((wrap_angle(-1.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn non_adjacent_layers_not_paired() {
        let hits = [hit(1, 32.0, 0.0, 0.0, 0), hit(2, 116.0, 0.0, 0.0, 2)];
        assert!(build_doublets(&hits, &SelectionCuts::default())
            .doublets
            .is_empty());
        let cuts = SelectionCuts {
            layer_gap: 2,
            ..Default::default()
        };
        assert_eq!(build_doublets(&hits, &cuts).doublets.len(), 1);
    }

    #[test]
    fn radially_aligned_pair_passes() {
        let hits = [hit(1, 32.0, 0.3, 0.0, 0), hit(2, 72.0, 0.3, 0.0, 1)];
        let set = build_doublets(&hits, &SelectionCuts::default());
        assert_eq!(set.doublets.len(), 1);
        let d = set.doublets[0];
        assert_eq!((d.src_hit, d.dst_hit), (1, 2));
        assert_eq!(d.dz, 0.0);
        assert_eq!(d.z0, 0.0);
        assert!(d.eta.abs() < 1e-12);
        assert!(d.dphi.abs() < 1e-12);
    }

    #[test]
    fn steep_phi_slope_rejected() {
        // slope 0.1 / 40 = 0.0025 > 0.0006
        let hits = [hit(1, 32.0, 0.0, 0.0, 0), hit(2, 72.0, 0.1, 0.0, 1)];
        let set = build_doublets(&hits, &SelectionCuts::default());
        assert!(set.doublets.is_empty());
        let d = Doublet::between(&hits[0], &hits[1]).unwrap();
        assert!((d.dphi.abs() / d.dr - 0.0025).abs() < 1e-12);

        let raw = SelectionCuts {
            cut_mode: CutMode::Raw,
            dphi_max: 0.2,
            ..Default::default()
        };
        assert_eq!(build_doublets(&hits, &raw).doublets.len(), 1);
    }

    #[test]
    fn z0_and_eta_geometry() {
        // line through (r=50, z=10) and (r=100, z=30) hits z = -10 at r = 0
        let a = hit(1, 50.0, 0.0, 10.0, 0);
        let b = hit(2, 100.0, 0.0, 30.0, 1);
        let d = Doublet::between(&b, &a).unwrap();
        assert_eq!(d.src_hit, 1);
        assert!((d.z0 + 10.0).abs() < 1e-12);
        // eta = asinh(dz/dr)
        assert!((d.eta - (20.0f64 / 50.0).asinh()).abs() < 1e-12);
    }

    #[test]
    fn equal_radius_pairs_are_counted() {
        let hits = [hit(1, 50.0, 0.0, 0.0, 0), hit(2, 50.0, 0.001, 0.0, 1)];
        let set = build_doublets(&hits, &SelectionCuts::default());
        assert!(set.doublets.is_empty());
        assert_eq!(set.zero_dr, 1);
    }

    #[test]
    fn barrel_selection_and_layer_order() {
        let ev = Event {
            hits: vec![
                Hit::new(1, 100.0, 0.0, 0.0, 13, 2),
                Hit::new(2, 30.0, 0.0, 0.0, 8, 4),
                Hit::new(3, 0.0, 34.0, 0.0, 8, 4),
                Hit::new(4, 200.0, 0.0, 0.0, 7, 2),
                Hit::new(5, 0.0, 600.0, 0.0, 17, 2),
            ],
            ..Default::default()
        };
        let sel = select_barrel_hits(&ev);
        let ids: Vec<_> = sel
            .iter()
            .map(|h| (h.hit_id, h.layer_index.unwrap()))
            .collect();
        assert_eq!(ids, vec![(1, 1), (2, 0), (3, 0), (5, 2)]);
    }

    fn labeled_event(pt: f64) -> (Event, Vec<Hit>) {
        let mut ev = Event::default();
        let hits = vec![
            hit(1, 32.0, 0.0, 0.0, 0),
            hit(2, 72.0, 0.0, 0.0, 1),
            hit(3, 72.0, 0.0001, 0.0, 1),
        ];
        ev.hits = hits.clone();
        ev.truth = HashMap::from([(1, 42), (2, 42), (3, 7)]);
        ev.particles.insert(
            42,
            Particle {
                particle_id: 42,
                px: pt,
                py: 0.0,
                pz: 0.0,
            },
        );
        ev.particles.insert(
            7,
            Particle {
                particle_id: 7,
                px: 5.0,
                py: 0.0,
                pz: 0.0,
            },
        );
        (ev, hits)
    }

    #[test]
    fn labels_follow_truth_and_pt() {
        let cuts = SelectionCuts::default();
        let (ev, hits) = labeled_event(2.3);
        let mut ds = build_doublets(&hits, &cuts).doublets;
        let stats = label_edges(&mut ds, &ev, &cuts);
        let labels: Vec<_> = ds.iter().map(|d| (d.dst_hit, d.label)).collect();
        assert_eq!(labels, vec![(2, true), (3, false)]);
        assert_eq!((stats.true_edges, stats.fake_edges), (1, 1));

        let (ev, hits) = labeled_event(0.4);
        let mut ds = build_doublets(&hits, &cuts).doublets;
        label_edges(&mut ds, &ev, &cuts);
        assert!(ds.iter().all(|d| !d.label));
    }

    #[test]
    fn noise_and_missing_truth_never_true() {
        let cuts = SelectionCuts::default();
        let (mut ev, hits) = labeled_event(2.3);
        ev.truth.insert(1, 0);
        ev.truth.insert(2, 0);
        let mut ds = build_doublets(&hits, &cuts).doublets;
        label_edges(&mut ds, &ev, &cuts);
        assert!(ds.iter().all(|d| !d.label));

        ev.truth.remove(&3);
        let stats = label_edges(&mut ds, &ev, &cuts);
        assert_eq!(stats.missing_truth, 1);
    }

    #[test]
    fn pt_filter_drops_low_pt_and_noise() {
        let (mut ev, hits) = labeled_event(0.4);
        ev.truth.insert(3, 0);
        assert!(filter_low_pt(hits.clone(), &ev, 1.0).is_empty());
        let (ev, hits) = labeled_event(2.0);
        let kept: Vec<_> = filter_low_pt(hits, &ev, 1.0)
            .iter()
            .map(|h| h.hit_id)
            .collect();
        assert_eq!(kept, vec![1, 2, 3]);
    }

    #[test]
    fn cut_validation() {
        assert!(SelectionCuts::default().validate().is_ok());
        let bad = SelectionCuts {
            eta_range: (1.0, -1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SelectionCuts {
            z0_max: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!("slope".parse::<CutMode>().is_ok());
        assert!("steep".parse::<CutMode>().is_err());
    }
}
