//! District boundaries, point-in-polygon assignment and district
//! aggregation with GeoJSON export.

use std::collections::HashMap;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ingest::CollisionRecord;
use crate::targets::TargetTable;

pub type Point = [f64; 2];
/// Closed vertex sequence, first vertex repeated at the end.
pub type Ring = Vec<Point>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    fn of<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = BBox { min: [f64::INFINITY; 2], max: [f64::NEG_INFINITY; 2] };
        for p in points {
            b.include(p);
        }
        b
    }

    fn include(&mut self, p: &Point) {
        self.min = [self.min[0].min(p[0]), self.min[1].min(p[1])];
        self.max = [self.max[0].max(p[0]), self.max[1].max(p[1])];
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    fn union(&self, other: &BBox) -> BBox {
        let mut b = *self;
        b.include(&other.min);
        b.include(&other.max);
        b
    }
}

/// A district made of one or more polygons; in each polygon the first
/// ring is the outer boundary and the rest are holes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistrictPolygon {
    pub district_id: String,
    pub name: String,
    pub parts: Vec<Vec<Ring>>,
    pub bbox: BBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Location {
    Outside,
    Boundary,
    Inside,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Even-odd test with a ray towards +x.
fn locate_in_ring(p: Point, ring: &[Point]) -> Location {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if on_segment(p, a, b) {
            return Location::Boundary;
        }
        // the edge straddles the ray's line; p lies left of an upward edge
        // (right of a downward one) exactly when the crossing is to its +x side
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let side = cross(a, b, p);
            if (b[1] > a[1] && side > 0.0) || (b[1] < a[1] && side < 0.0) {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Points on any edge or vertex count as inside; holes subtract.
pub fn point_in_polygon(p: Point, poly: &DistrictPolygon) -> bool {
    if !poly.bbox.contains(p) {
        return false;
    }
    poly.parts.iter().any(|rings| match locate_in_ring(p, &rings[0]) {
        Location::Outside => false,
        Location::Boundary => true,
        Location::Inside => rings[1..].iter().all(|h| locate_in_ring(p, h) != Location::Inside),
    })
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// Sweep over segments sorted by their left x; only x-overlapping pairs
/// that are not neighbours along the ring are tested.
fn find_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len() - 1;
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| ring[i][0].min(ring[i + 1][0]);
    let hi = |i: usize| ring[i][0].max(ring[i + 1][0]);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)).then(a.cmp(&b)));
    for (k, &i) in order.iter().enumerate() {
        let (ylo, yhi) = (ring[i][1].min(ring[i + 1][1]), ring[i][1].max(ring[i + 1][1]));
        for &j in &order[k + 1..] {
            if lo(j) > hi(i) {
                break;
            }
            let (a, b) = (i.min(j), i.max(j));
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            if ring[j][1].max(ring[j + 1][1]) < ylo || ring[j][1].min(ring[j + 1][1]) > yhi {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return Some((a, b));
            }
        }
    }
    None
}

fn validate_ring(district: &str, ring: &[Point], outer: bool) -> Result<()> {
    let bad = |reason: String| Error::InvalidRing { district: district.to_string(), reason };
    if ring.len() < 4 {
        return Err(bad(format!("ring has {} vertices, need at least 4", ring.len())));
    }
    if ring.iter().flatten().any(|v| !v.is_finite()) {
        return Err(bad("non-finite vertex".into()));
    }
    if ring[0] != ring[ring.len() - 1] {
        return Err(bad("ring is not closed".into()));
    }
    if outer {
        if let Some((a, b)) = find_self_intersection(ring) {
            return Err(bad(format!("outer ring edges {a} and {b} intersect")));
        }
    }
    Ok(())
}

impl DistrictPolygon {
    /// Validates every ring and computes the bounding box.
    pub fn new(district_id: impl Into<String>, name: impl Into<String>, parts: Vec<Vec<Ring>>) -> Result<Self> {
        let district_id = district_id.into();
        if parts.is_empty() || parts.iter().any(Vec::is_empty) {
            return Err(Error::InvalidRing { district: district_id, reason: "polygon without rings".into() });
        }
        for rings in &parts {
            for (k, r) in rings.iter().enumerate() {
                validate_ring(&district_id, r, k == 0)?;
            }
        }
        let bbox = BBox::of(parts.iter().flat_map(|rings| &rings[0]));
        Ok(DistrictPolygon { district_id, name: name.into(), parts, bbox })
    }

    /// Axis-aligned rectangle as a single-ring polygon.
    pub fn rectangle(district_id: &str, name: &str, min: Point, max: Point) -> Result<Self> {
        let ring = vec![min, [max[0], min[1]], max, [min[0], max[1]], min];
        DistrictPolygon::new(district_id, name, vec![vec![ring]])
    }

    fn geometry(&self) -> Value {
        if self.parts.len() == 1 {
            json!({ "type": "Polygon", "coordinates": self.parts[0] })
        } else {
            json!({ "type": "MultiPolygon", "coordinates": self.parts })
        }
    }
}

/// GeoJSON property names carrying the district key and label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryLayout {
    pub id_property: String,
    pub name_property: String,
}

impl Default for BoundaryLayout {
    fn default() -> Self {
        BoundaryLayout { id_property: "district_id".into(), name_property: "name".into() }
    }
}

fn parse_ring(v: &Value) -> Result<Ring> {
    let arr = v.as_array().ok_or_else(|| Error::Geometry("ring is not an array".into()))?;
    arr.iter()
        .map(|pos| {
            let xy = pos.as_array().filter(|a| a.len() >= 2).and_then(|a| Some([a[0].as_f64()?, a[1].as_f64()?]));
            xy.ok_or_else(|| Error::Geometry(format!("bad position {pos}")))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Result<Vec<Ring>> {
    v.as_array()
        .ok_or_else(|| Error::Geometry("polygon coordinates are not an array".into()))?
        .iter()
        .map(parse_ring)
        .collect()
}

fn property_string(props: &Value, key: &str) -> Option<String> {
    match props.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads a FeatureCollection of Polygon/MultiPolygon features, sorted by id.
pub fn parse_boundaries(text: &str, layout: &BoundaryLayout) -> Result<Vec<DistrictPolygon>> {
    let doc: Value = serde_json::from_str(text)?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Geometry("expected a FeatureCollection".into()))?;
    let mut out = Vec::with_capacity(features.len());
    for (k, f) in features.iter().enumerate() {
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let id = property_string(&props, &layout.id_property)
            .ok_or_else(|| Error::Geometry(format!("feature {k} lacks property `{}`", layout.id_property)))?;
        let name = property_string(&props, &layout.name_property).unwrap_or_default();
        let geom = f.get("geometry").ok_or_else(|| Error::Geometry(format!("feature {id} has no geometry")))?;
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let parts = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![parse_polygon(coords)?],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| Error::Geometry(format!("feature {id}: bad MultiPolygon")))?
                .iter()
                .map(parse_polygon)
                .collect::<Result<_>>()?,
            other => return Err(Error::Geometry(format!("feature {id}: unsupported geometry {other:?}"))),
        };
        out.push(DistrictPolygon::new(id, name, parts)?);
    }
    out.sort_by(|a, b| a.district_id.cmp(&b.district_id));
    if let Some(w) = out.windows(2).find(|w| w[0].district_id == w[1].district_id) {
        return Err(Error::Geometry(format!("duplicate district id `{}`", w[0].district_id)));
    }
    Ok(out)
}

/// Boundaries as a FeatureCollection with id and name properties.
pub fn boundaries_to_geojson(polygons: &[DistrictPolygon], layout: &BoundaryLayout) -> Result<String> {
    let features: Vec<Value> = polygons
        .iter()
        .map(|p| {
            let mut props = serde_json::Map::new();
            props.insert(layout.id_property.clone(), json!(p.district_id));
            props.insert(layout.name_property.clone(), json!(p.name));
            json!({ "type": "Feature", "properties": props, "geometry": p.geometry() })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))?)
}

/// `nx × ny` rectangles tiling `[0, extent]²`, ids `D01`, `D02`, ...
pub fn grid_districts(extent: f64, nx: usize, ny: usize) -> Result<Vec<DistrictPolygon>> {
    let (w, h) = (extent / nx as f64, extent / ny as f64);
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i + 1;
            let min = [i as f64 * w, j as f64 * h];
            let max = [(i + 1) as f64 * w, (j + 1) as f64 * h];
            out.push(DistrictPolygon::rectangle(&format!("D{k:02}"), &format!("District {k}"), min, max)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinResult {
    /// District per input collision, in input order.
    pub assignments: Vec<Option<String>>,
    pub collision_ids: Vec<String>,
    /// Collisions without a district, including those without coordinates.
    pub unmatched: Vec<String>,
    pub without_coordinates: Vec<String>,
    /// Collisions inside more than one district, with every candidate.
    pub overlaps: Vec<(String, Vec<String>)>,
    /// Share of input points inside the union of district bounding boxes.
    pub bbox_share: f64,
}

impl JoinResult {
    pub fn matched(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_some()).count()
    }

    pub fn total(&self) -> usize {
        self.assignments.len()
    }

    pub fn match_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.matched() as f64 / self.total() as f64
        }
    }
}

/// Below this share of points inside the boundaries' extent the layers
/// probably use different coordinate systems.
pub const BBOX_WARNING_SHARE: f64 = 0.5;

/// Assigns each point to the first district (by id) containing it.
pub fn join_points(ids: &[String], points: &[Option<Point>], polygons: &[DistrictPolygon]) -> Result<JoinResult> {
    if ids.len() != points.len() {
        return Err(Error::LengthMismatch { left: ids.len(), right: points.len() });
    }
    let mut sorted: Vec<&DistrictPolygon> = polygons.iter().collect();
    sorted.sort_by(|a, b| a.district_id.cmp(&b.district_id));
    let hits: Vec<Vec<usize>> = points
        .par_iter()
        .map(|p| match p {
            Some(p) if p[0].is_finite() && p[1].is_finite() => {
                (0..sorted.len()).filter(|&k| point_in_polygon(*p, sorted[k])).collect()
            }
            _ => Vec::new(),
        })
        .collect();

    let union = sorted.iter().map(|p| p.bbox).reduce(|a, b| a.union(&b));
    let mut res = JoinResult { collision_ids: ids.to_vec(), ..JoinResult::default() };
    let mut in_bbox = 0usize;
    for ((id, p), h) in ids.iter().zip(points).zip(hits) {
        match p {
            Some(p) if p[0].is_finite() && p[1].is_finite() => {
                if union.is_some_and(|u| u.contains(*p)) {
                    in_bbox += 1;
                }
            }
            _ => res.without_coordinates.push(id.clone()),
        }
        match h.first() {
            Some(&k) => res.assignments.push(Some(sorted[k].district_id.clone())),
            None => {
                res.assignments.push(None);
                res.unmatched.push(id.clone());
            }
        }
        if h.len() > 1 {
            res.overlaps.push((id.clone(), h.iter().map(|&k| sorted[k].district_id.clone()).collect()));
        }
    }
    res.bbox_share = if ids.is_empty() { 1.0 } else { in_bbox as f64 / ids.len() as f64 };
    if res.bbox_share < BBOX_WARNING_SHARE {
        warn!(
            "only {:.1}% of points fall inside the boundaries' extent; check that both layers share a coordinate system",
            100.0 * res.bbox_share
        );
    }
    Ok(res)
}

pub fn spatial_join(collisions: &[CollisionRecord], polygons: &[DistrictPolygon]) -> Result<JoinResult> {
    let ids: Vec<String> = collisions.iter().map(|c| c.collision_id.clone()).collect();
    let points: Vec<Option<Point>> = collisions
        .iter()
        .map(|c| match (c.x, c.y) {
            (Some(x), Some(y)) => Some([x, y]),
            _ => None,
        })
        .collect();
    join_points(&ids, &points, polygons)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistrictSummary {
    pub district_id: String,
    pub name: String,
    pub total_collisions: usize,
    pub pedestrian_count: usize,
    pub severe_count: usize,
    pub pedestrian_share: f64,
    pub severe_share: f64,
    /// No collisions fell in the district; shares are reported as 0.
    pub empty: bool,
}

/// One summary per district, ordered by id. `severe` means fatal or serious.
pub fn aggregate_districts(
    join: &JoinResult,
    targets: &TargetTable,
    polygons: &[DistrictPolygon],
) -> Result<Vec<DistrictSummary>> {
    let index: HashMap<&str, usize> =
        targets.collision_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut acc: std::collections::BTreeMap<&str, (usize, usize, usize)> =
        polygons.iter().map(|p| (p.district_id.as_str(), (0, 0, 0))).collect();
    for (id, a) in join.collision_ids.iter().zip(&join.assignments) {
        let Some(d) = a else { continue };
        let i = *index.get(id.as_str()).ok_or_else(|| Error::KeyMismatch(id.clone()))?;
        let e = acc.get_mut(d.as_str()).ok_or_else(|| Error::UnknownDistrict(d.clone()))?;
        e.0 += 1;
        e.1 += targets.pedestrian[i] as usize;
        e.2 += targets.over_serious[i] as usize;
    }
    let names: HashMap<&str, &str> = polygons.iter().map(|p| (p.district_id.as_str(), p.name.as_str())).collect();
    Ok(acc
        .into_iter()
        .map(|(d, (total, ped, severe))| {
            let share = |c: usize| if total == 0 { 0.0 } else { c as f64 / total as f64 };
            DistrictSummary {
                district_id: d.to_string(),
                name: names[d].to_string(),
                total_collisions: total,
                pedestrian_count: ped,
                severe_count: severe,
                pedestrian_share: share(ped),
                severe_share: share(severe),
                empty: total == 0,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    PedestrianShare,
    SevereShare,
    TotalCollisions,
    PedestrianCount,
    SevereCount,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::PedestrianShare => "pedestrian_share",
            Measure::SevereShare => "severe_share",
            Measure::TotalCollisions => "total_collisions",
            Measure::PedestrianCount => "pedestrian_count",
            Measure::SevereCount => "severe_count",
        }
    }

    pub fn value(self, s: &DistrictSummary) -> f64 {
        match self {
            Measure::PedestrianShare => s.pedestrian_share,
            Measure::SevereShare => s.severe_share,
            Measure::TotalCollisions => s.total_collisions as f64,
            Measure::PedestrianCount => s.pedestrian_count as f64,
            Measure::SevereCount => s.severe_count as f64,
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Measure::PedestrianShare,
            Measure::SevereShare,
            Measure::TotalCollisions,
            Measure::PedestrianCount,
            Measure::SevereCount,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown measure `{s}`")))
    }
}

/// FeatureCollection with summary properties plus `measure`/`value`.
pub fn export_choropleth(
    summaries: &[DistrictSummary],
    polygons: &[DistrictPolygon],
    measure: Measure,
) -> Result<String> {
    let by_id: HashMap<&str, &DistrictPolygon> = polygons.iter().map(|p| (p.district_id.as_str(), p)).collect();
    let features = summaries
        .iter()
        .map(|s| {
            let poly =
                by_id.get(s.district_id.as_str()).ok_or_else(|| Error::UnknownDistrict(s.district_id.clone()))?;
            Ok(json!({
                "type": "Feature",
                "properties": {
                    "district_id": s.district_id,
                    "name": s.name,
                    "total": s.total_collisions,
                    "pedestrian_count": s.pedestrian_count,
                    "severe_count": s.severe_count,
                    "pedestrian_share": s.pedestrian_share,
                    "severe_share": s.severe_share,
                    "measure": measure.name(),
                    measure.name(): measure.value(s),
                },
                "geometry": poly.geometry(),
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))?)
}

pub fn write_summaries<W: Write>(sink: W, summaries: &[DistrictSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}
