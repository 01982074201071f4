//! Static R-tree over a layer's geometries, bulk loaded with
//! Sort-Tile-Recursive packing.
//!
//! The tree only ever answers "which entries could be near this point"; exact
//! distances come from [`crate::geo`], so a query over the tree returns the
//! same ids and distances as a linear scan over every entry.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::catalog::{TagFilter, Tags};
use crate::geo::{self, BoundingBox, Coordinate, Polyline};

pub const NODE_CAPACITY: usize = 16;

/// Pad applied to query boxes, in degrees, to absorb rounding at the boundary.
const QUERY_PAD_DEG: f64 = 1e-9;

/// Position of an entry within its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeometryId(pub u32);

impl GeometryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Point,
    Polyline,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Point => "Point",
            GeometryKind::Polyline => "LineString",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coordinate),
    Polyline(Polyline),
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Polyline(_) => GeometryKind::Polyline,
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        match self {
            Geometry::Point(c) => BoundingBox::of_point(*c),
            Geometry::Polyline(l) => l.bbox(),
        }
    }

    /// Distance from `p` to the closest point of the geometry.
    pub fn distance_m(&self, p: Coordinate) -> f64 {
        match self {
            Geometry::Point(c) => geo::haversine_m(p, *c),
            Geometry::Polyline(l) => geo::point_polyline_distance_m(p, l),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub geometry: Geometry,
    pub tags: Tags,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bbox: BoundingBox,
    first: u32,
    len: u32,
}

/// Per-query work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Entries whose box passed the spatial pre-filter.
    pub candidates: usize,
}

/// An immutable, queryable layer. Ids are dense from 0 in input order.
#[derive(Debug, Clone)]
pub struct IndexedLayer {
    entries: Vec<Entry>,
    boxes: Vec<BoundingBox>,
    /// Entry ids in packed order; leaf nodes point into this.
    order: Vec<u32>,
    /// `levels[0]` are leaves; the last level holds the single root.
    levels: Vec<Vec<Node>>,
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

/// One STR pass: groups `items` (box, payload) into runs of at most
/// NODE_CAPACITY, returned in packed order.
fn str_pack(mut items: Vec<(BoundingBox, u32)>) -> Vec<Vec<(BoundingBox, u32)>> {
    let n = items.len();
    let leaves = n.div_ceil(NODE_CAPACITY);
    let slices = (leaves as f64).sqrt().ceil() as usize;
    let per_slice = slices * NODE_CAPACITY;
    items.sort_by(|a, b| cmp_f64(a.0.center().0, b.0.center().0).then(a.1.cmp(&b.1)));
    let mut groups = Vec::with_capacity(leaves);
    for slice in items.chunks_mut(per_slice.max(1)) {
        slice.sort_by(|a, b| cmp_f64(a.0.center().1, b.0.center().1).then(a.1.cmp(&b.1)));
        for run in slice.chunks(NODE_CAPACITY) {
            groups.push(run.to_vec());
        }
    }
    groups
}

fn cover(boxes: impl Iterator<Item = BoundingBox>) -> BoundingBox {
    boxes.reduce(|a, b| a.union(&b)).expect("non-empty group")
}

impl IndexedLayer {
    pub fn build(entries: Vec<Entry>) -> Self {
        assert!(entries.len() < u32::MAX as usize, "layer too large");
        let boxes: Vec<BoundingBox> = entries.iter().map(|e| e.geometry.bbox()).collect();
        let mut order = Vec::with_capacity(entries.len());
        let mut levels = Vec::new();
        if !entries.is_empty() {
            let items = boxes.iter().enumerate().map(|(i, b)| (*b, i as u32)).collect();
            let mut level = Vec::new();
            for group in str_pack(items) {
                let first = order.len() as u32;
                order.extend(group.iter().map(|(_, id)| *id));
                level.push(Node { bbox: cover(group.iter().map(|(b, _)| *b)), first, len: group.len() as u32 });
            }
            levels.push(level);
            while levels.last().unwrap().len() > 1 {
                let below = levels.last().unwrap();
                let items = below.iter().enumerate().map(|(i, n)| (n.bbox, i as u32)).collect();
                let mut packed_below = Vec::with_capacity(below.len());
                let mut level = Vec::new();
                for group in str_pack(items) {
                    let first = packed_below.len() as u32;
                    packed_below.extend(group.iter().map(|(_, i)| below[*i as usize]));
                    level.push(Node { bbox: cover(group.iter().map(|(b, _)| *b)), first, len: group.len() as u32 });
                }
                *levels.last_mut().unwrap() = packed_below;
                levels.push(level);
            }
        }
        Self { entries, boxes, order, levels }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, id: GeometryId) -> &Entry {
        &self.entries[id.index()]
    }

    pub fn bbox_of(&self, id: GeometryId) -> BoundingBox {
        self.boxes[id.index()]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn children(&self, level: usize, node: &Node) -> std::ops::Range<usize> {
        let _ = level;
        node.first as usize..(node.first + node.len) as usize
    }

    /// Ids of entries whose box intersects `query`, in id order.
    pub fn search_bbox(&self, query: &BoundingBox) -> Vec<GeometryId> {
        let mut out = Vec::new();
        self.visit_bbox(query, &mut out);
        out.sort_unstable();
        out
    }

    fn visit_bbox(&self, query: &BoundingBox, out: &mut Vec<GeometryId>) {
        let Some(root_level) = self.levels.len().checked_sub(1) else {
            return;
        };
        let mut stack: Vec<(usize, usize)> = vec![(root_level, 0)];
        while let Some((level, idx)) = stack.pop() {
            let node = &self.levels[level][idx];
            if !node.bbox.intersects(query) {
                continue;
            }
            let range = self.children(level, node);
            if level == 0 {
                for &id in &self.order[range] {
                    if self.boxes[id as usize].intersects(query) {
                        out.push(GeometryId(id));
                    }
                }
            } else {
                stack.extend(range.map(|child| (level - 1, child)));
            }
        }
    }

    /// Filter-passing entries whose box meets the search disc's boxes, in
    /// id order. Every entry with any part within `r` of `p` is included.
    pub fn candidates(&self, p: Coordinate, r: f64, filter: &TagFilter, stats: &mut QueryStats) -> Vec<GeometryId> {
        let mut ids = Vec::new();
        for mut b in geo::expand_bbox(p, r) {
            b.min_lon -= QUERY_PAD_DEG;
            b.min_lat -= QUERY_PAD_DEG;
            b.max_lon += QUERY_PAD_DEG;
            b.max_lat += QUERY_PAD_DEG;
            self.visit_bbox(&b, &mut ids);
        }
        ids.sort_unstable();
        ids.dedup();
        stats.candidates += ids.len();
        ids.retain(|id| filter.matches(&self.entries[id.index()].tags));
        ids
    }

    /// Filter-passing entries within `r` meters of `p` (inclusive), sorted
    /// by (distance, id).
    pub fn within_radius(&self, p: Coordinate, r: f64, filter: &TagFilter) -> Vec<(GeometryId, f64)> {
        self.within_radius_stats(p, r, filter, &mut QueryStats::default())
    }

    pub fn within_radius_stats(
        &self,
        p: Coordinate,
        r: f64,
        filter: &TagFilter,
        stats: &mut QueryStats,
    ) -> Vec<(GeometryId, f64)> {
        let mut hits: Vec<(GeometryId, f64)> = self
            .candidates(p, r, filter, stats)
            .into_iter()
            .filter_map(|id| {
                let d = self.entries[id.index()].geometry.distance_m(p);
                (d <= r).then_some((id, d))
            })
            .collect();
        hits.sort_by(|a, b| cmp_f64(a.1, b.1).then(a.0.cmp(&b.0)));
        hits
    }

    /// The closest filter-passing entry within `cap` meters, ties going to
    /// the smaller id.
    pub fn nearest(&self, p: Coordinate, cap: f64, filter: &TagFilter) -> Option<(GeometryId, f64)> {
        self.nearest_stats(p, cap, filter, &mut QueryStats::default())
    }

    pub fn nearest_stats(
        &self,
        p: Coordinate,
        cap: f64,
        filter: &TagFilter,
        stats: &mut QueryStats,
    ) -> Option<(GeometryId, f64)> {
        let root_level = self.levels.len().checked_sub(1)?;
        let mut heap = BinaryHeap::new();
        let root = &self.levels[root_level][0];
        heap.push(Pending::node(root.bbox.lower_bound_m(p), root_level, 0));
        while let Some(item) = heap.pop() {
            if item.key > cap {
                break;
            }
            let (level, idx) = match item.what {
                Target::Entry(id) => return Some((GeometryId(id), item.key)),
                Target::Node(level, idx) => (level, idx),
            };
            let node = &self.levels[level][idx];
            let range = self.children(level, node);
            if level == 0 {
                for &id in &self.order[range] {
                    if self.boxes[id as usize].lower_bound_m(p) > cap {
                        continue;
                    }
                    stats.candidates += 1;
                    let entry = &self.entries[id as usize];
                    if !filter.matches(&entry.tags) {
                        continue;
                    }
                    let d = entry.geometry.distance_m(p);
                    if d <= cap {
                        heap.push(Pending { key: d, what: Target::Entry(id) });
                    }
                }
            } else {
                for child in range {
                    let lb = self.levels[level - 1][child].bbox.lower_bound_m(p);
                    if lb <= cap {
                        heap.push(Pending::node(lb, level - 1, child));
                    }
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Node(usize, usize),
    Entry(u32),
}

/// Heap item. At equal keys nodes come out before entries so that an entry
/// is only reported once every subtree that might hold an equally close,
/// smaller-id entry has been opened.
#[derive(Debug, Clone, Copy)]
struct Pending {
    key: f64,
    what: Target,
}

impl Pending {
    fn node(key: f64, level: usize, idx: usize) -> Self {
        Self { key, what: Target::Node(level, idx) }
    }

    fn rank(&self) -> (u8, usize, usize) {
        match self.what {
            Target::Node(level, idx) => (0, level, idx),
            Target::Entry(id) => (1, id as usize, 0),
        }
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_f64(other.key, self.key).then_with(|| other.rank().cmp(&self.rank()))
    }
}
