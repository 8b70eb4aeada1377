//! Room graph, object catalog and tour definitions.
//!
//! A museum document is JSON with five top-level fields:
//!
//! ```json
//! {
//!   "entrance": "R01",
//!   "rooms":   [{"id": "R01", "name": "Great Court", "floor": 0, "theme": "Hub"}],
//!   "edges":   [{"from": "R01", "to": "R02", "kind": "flat"}],
//!   "objects": [{"id": "O01", "room": "R01", "title": "...", "theme": "..."}],
//!   "tours":   [{"id": "T1", "name": "...", "stops": ["O01"], "languages": ["en"]}]
//! }
//! ```
//!
//! Edges are directed. Every `flat` edge needs a reciprocal `flat` edge and every
//! `stair_up` edge a reciprocal `stair_down` edge (and vice versa), so that the
//! two directions of a staircase can carry different costs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MuseumError {
    #[error("museum document is not valid JSON: {0}")]
    Json(String),
    #[error("{path}: duplicate id `{id}`")]
    DuplicateId { path: String, id: String },
    #[error("{path}: unknown room `{room}`")]
    DanglingRoom { path: String, room: String },
    #[error("{path}: {kind} edge {from} -> {to} has no reciprocal edge")]
    AsymmetricEdge {
        path: String,
        from: String,
        to: String,
        kind: EdgeKind,
    },
    #[error("{path}: duplicate edge {from} -> {to}")]
    DuplicateEdge { path: String, from: String, to: String },
    #[error("room `{room}` is not reachable from the entrance")]
    Disconnected { room: String },
    #[error("{path}: {detail}")]
    InvalidTour { path: String, detail: String },
    #[error("{path}: unknown object `{object}`")]
    UnknownObject { path: String, object: String },
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("museum has no rooms")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Flat,
    StairUp,
    StairDown,
}

impl EdgeKind {
    pub fn reciprocal(self) -> EdgeKind {
        match self {
            EdgeKind::Flat => EdgeKind::Flat,
            EdgeKind::StairUp => EdgeKind::StairDown,
            EdgeKind::StairDown => EdgeKind::StairUp,
        }
    }
}

impl std::fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeKind::Flat => "flat",
            EdgeKind::StairUp => "stair_up",
            EdgeKind::StairDown => "stair_down",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub id: String,
    pub name: String,
    pub floor: i32,
    pub theme: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: String,
    pub room: String,
    pub title: String,
    pub theme: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourDef {
    #[serde(rename = "id")]
    pub tour_id: String,
    pub name: String,
    pub stops: Vec<String>,
    pub languages: Vec<String>,
}

/// On-disk shape of a museum description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuseumDocument {
    pub entrance: String,
    pub rooms: Vec<Room>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub objects: Vec<ObjectRecord>,
    #[serde(default)]
    pub tours: Vec<TourDef>,
}

/// Validated room graph. Rooms are held sorted by id; room indices refer to that order.
#[derive(Debug, Clone)]
pub struct MuseumGraph {
    rooms: Vec<Room>,
    edges: Vec<Edge>,
    entrance: usize,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, EdgeKind)>>,
    hops: Vec<Vec<u32>>,
}

pub const UNREACHABLE: u32 = u32::MAX;

impl MuseumGraph {
    pub fn new(mut rooms: Vec<Room>, edges: Vec<Edge>, entrance: &str) -> Result<MuseumGraph, MuseumError> {
        if rooms.is_empty() {
            return Err(MuseumError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (i, r) in rooms.iter().enumerate() {
            if !seen.insert(r.id.clone()) {
                return Err(MuseumError::DuplicateId {
                    path: format!("rooms[{i}].id"),
                    id: r.id.clone(),
                });
            }
        }
        rooms.sort_by(|a, b| a.id.cmp(&b.id));
        let index: HashMap<String, usize> = rooms.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();

        let mut kinds: HashMap<(usize, usize), (EdgeKind, usize)> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            let from = *index.get(&e.from).ok_or_else(|| MuseumError::DanglingRoom {
                path: format!("edges[{i}].from"),
                room: e.from.clone(),
            })?;
            let to = *index.get(&e.to).ok_or_else(|| MuseumError::DanglingRoom {
                path: format!("edges[{i}].to"),
                room: e.to.clone(),
            })?;
            if kinds.insert((from, to), (e.kind, i)).is_some() {
                return Err(MuseumError::DuplicateEdge {
                    path: format!("edges[{i}]"),
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
        }
        for (i, e) in edges.iter().enumerate() {
            let key = (index[&e.to], index[&e.from]);
            match kinds.get(&key) {
                Some(&(k, _)) if k == e.kind.reciprocal() => {}
                _ => {
                    return Err(MuseumError::AsymmetricEdge {
                        path: format!("edges[{i}]"),
                        from: e.from.clone(),
                        to: e.to.clone(),
                        kind: e.kind,
                    })
                }
            }
        }
        let entrance_idx = *index.get(entrance).ok_or_else(|| MuseumError::DanglingRoom {
            path: "entrance".into(),
            room: entrance.to_string(),
        })?;

        let mut edges = edges;
        edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        let mut adjacency = vec![Vec::new(); rooms.len()];
        for e in &edges {
            adjacency[index[&e.from]].push((index[&e.to], e.kind));
        }
        for adj in &mut adjacency {
            adj.sort();
        }

        let mut graph = MuseumGraph {
            rooms,
            edges,
            entrance: entrance_idx,
            index,
            adjacency,
            hops: Vec::new(),
        };
        graph.hops = (0..graph.rooms.len()).map(|i| graph.bfs(i)).collect();
        if let Some(r) = graph.hops[entrance_idx].iter().position(|&h| h == UNREACHABLE) {
            return Err(MuseumError::Disconnected {
                room: graph.rooms[r].id.clone(),
            });
        }
        Ok(graph)
    }

    fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.rooms.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }

    pub fn room_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn room(&self, idx: usize) -> &Room {
        &self.rooms[idx]
    }

    pub fn entrance(&self) -> &str {
        &self.rooms[self.entrance].id
    }

    pub fn entrance_index(&self) -> usize {
        self.entrance
    }

    /// Outgoing edges of a room as `(target index, kind)`, sorted by target.
    pub fn neighbors(&self, idx: usize) -> &[(usize, EdgeKind)] {
        &self.adjacency[idx]
    }

    /// Unweighted shortest hop count; `None` when `b` is unreachable from `a`.
    pub fn hop_distance(&self, a: &str, b: &str) -> Result<Option<u32>, MuseumError> {
        let ia = self
            .room_index(a)
            .ok_or_else(|| MuseumError::UnknownRoom(a.to_string()))?;
        let ib = self
            .room_index(b)
            .ok_or_else(|| MuseumError::UnknownRoom(b.to_string()))?;
        Ok(self.hops_by_index(ia, ib))
    }

    pub fn hops_by_index(&self, a: usize, b: usize) -> Option<u32> {
        match self.hops[a][b] {
            UNREACHABLE => None,
            h => Some(h),
        }
    }

    pub fn floors(&self) -> BTreeSet<i32> {
        self.rooms.iter().map(|r| r.floor).collect()
    }
}

/// Object id → location and theme.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub room_id: String,
    pub title: String,
    pub theme: String,
}

impl ObjectCatalog {
    pub fn new(entries: BTreeMap<String, CatalogEntry>) -> Self {
        ObjectCatalog { entries }
    }

    /// Room holding `object_id`, or `None` when the object is not catalogued.
    pub fn object_to_room(&self, object_id: &str) -> Option<&str> {
        self.entries.get(object_id).map(|e| e.room_id.as_str())
    }

    pub fn get(&self, object_id: &str) -> Option<&CatalogEntry> {
        self.entries.get(object_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CatalogEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Object ids located in `room_id`, in id order.
    pub fn objects_in_room<'a>(&'a self, room_id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(_, e)| e.room_id == room_id)
            .map(|(k, _)| k.as_str())
    }
}

/// A loaded, cross-validated museum description.
#[derive(Debug, Clone)]
pub struct Museum {
    pub graph: MuseumGraph,
    pub catalog: ObjectCatalog,
    pub tours: Vec<TourDef>,
}

impl Museum {
    pub fn from_document(doc: MuseumDocument) -> Result<Museum, MuseumError> {
        let graph = MuseumGraph::new(doc.rooms, doc.edges, &doc.entrance)?;

        let mut entries = BTreeMap::new();
        for (i, o) in doc.objects.into_iter().enumerate() {
            if graph.room_index(&o.room).is_none() {
                return Err(MuseumError::DanglingRoom {
                    path: format!("objects[{i}].room"),
                    room: o.room,
                });
            }
            let id = o.id.clone();
            let prev = entries.insert(
                o.id,
                CatalogEntry {
                    room_id: o.room,
                    title: o.title,
                    theme: o.theme,
                },
            );
            if prev.is_some() {
                return Err(MuseumError::DuplicateId {
                    path: format!("objects[{i}].id"),
                    id,
                });
            }
        }
        let catalog = ObjectCatalog::new(entries);

        let mut tour_ids = BTreeSet::new();
        for (i, t) in doc.tours.iter().enumerate() {
            if !tour_ids.insert(t.tour_id.as_str()) {
                return Err(MuseumError::DuplicateId {
                    path: format!("tours[{i}].id"),
                    id: t.tour_id.clone(),
                });
            }
            if t.stops.is_empty() {
                return Err(MuseumError::InvalidTour {
                    path: format!("tours[{i}].stops"),
                    detail: "tour has no stops".into(),
                });
            }
            let mut seen = BTreeSet::new();
            for (j, s) in t.stops.iter().enumerate() {
                if !seen.insert(s) {
                    return Err(MuseumError::InvalidTour {
                        path: format!("tours[{i}].stops[{j}]"),
                        detail: format!("stop `{s}` appears twice"),
                    });
                }
                if catalog.get(s).is_none() {
                    return Err(MuseumError::UnknownObject {
                        path: format!("tours[{i}].stops[{j}]"),
                        object: s.clone(),
                    });
                }
            }
        }
        let mut tours = doc.tours;
        tours.sort_by(|a, b| a.tour_id.cmp(&b.tour_id));

        Ok(Museum { graph, catalog, tours })
    }

    /// Canonical document: rooms, edges, objects and tours sorted by id.
    pub fn to_document(&self) -> MuseumDocument {
        MuseumDocument {
            entrance: self.graph.entrance().to_string(),
            rooms: self.graph.rooms.clone(),
            edges: self.graph.edges.clone(),
            objects: self
                .catalog
                .iter()
                .map(|(id, e)| ObjectRecord {
                    id: id.clone(),
                    room: e.room_id.clone(),
                    title: e.title.clone(),
                    theme: e.theme.clone(),
                })
                .collect(),
            tours: self.tours.clone(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("museum document serializes")
    }

    pub fn tour(&self, tour_id: &str) -> Option<&TourDef> {
        self.tours.iter().find(|t| t.tour_id == tour_id)
    }
}

/// Parse and validate a museum JSON document.
pub fn load_museum_graph<R: Read>(source: R) -> Result<Museum, MuseumError> {
    let doc: MuseumDocument = serde_json::from_reader(source).map_err(|e| MuseumError::Json(e.to_string()))?;
    Museum::from_document(doc)
}

pub const TOY_MUSEUM_JSON: &str = include_str!("../fixtures/toy_museum.json");

/// The bundled 12-room, two-floor demonstration museum.
pub fn toy_museum() -> Museum {
    load_museum_graph(TOY_MUSEUM_JSON.as_bytes()).expect("bundled toy museum is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(id: &str, floor: i32) -> Room {
        Room {
            id: id.into(),
            name: id.into(),
            floor,
            theme: "t".into(),
        }
    }

    fn edge(a: &str, b: &str, kind: EdgeKind) -> Edge {
        Edge {
            from: a.into(),
            to: b.into(),
            kind,
        }
    }

    fn pair(a: &str, b: &str) -> [Edge; 2] {
        [edge(a, b, EdgeKind::Flat), edge(b, a, EdgeKind::Flat)]
    }

    #[test]
    fn minimal_graph_is_valid() {
        let g = MuseumGraph::new(vec![room("A", 0), room("B", 0)], pair("A", "B").to_vec(), "A").unwrap();
        assert_eq!(g.room_count(), 2);
        assert_eq!(g.entrance(), "A");
        assert_eq!(g.hop_distance("A", "B").unwrap(), Some(1));
        assert_eq!(g.hop_distance("A", "A").unwrap(), Some(0));
    }

    #[test]
    fn dangling_edge_names_the_room() {
        let err = MuseumGraph::new(
            vec![room("A", 0), room("B", 0)],
            vec![edge("A", "R99", EdgeKind::Flat)],
            "A",
        )
        .unwrap_err();
        assert_eq!(
            err,
            MuseumError::DanglingRoom {
                path: "edges[0].to".into(),
                room: "R99".into()
            }
        );
        assert!(err.to_string().contains("R99"));
    }

    #[test]
    fn stair_up_without_stair_down_rejected() {
        let err = MuseumGraph::new(
            vec![room("A", 0), room("B", 1)],
            vec![edge("A", "B", EdgeKind::StairUp), edge("B", "A", EdgeKind::Flat)],
            "A",
        )
        .unwrap_err();
        assert!(matches!(err, MuseumError::AsymmetricEdge { .. }));
    }

    #[test]
    fn disconnected_and_duplicate_rejected() {
        let err = MuseumGraph::new(
            vec![room("A", 0), room("B", 0), room("C", 0)],
            pair("A", "B").to_vec(),
            "A",
        )
        .unwrap_err();
        assert_eq!(err, MuseumError::Disconnected { room: "C".into() });

        let err = MuseumGraph::new(vec![room("A", 0), room("A", 0)], vec![], "A").unwrap_err();
        assert!(matches!(err, MuseumError::DuplicateId { .. }));
    }

    #[test]
    fn hop_distance_on_path_graph() {
        let ids = ["A", "B", "C", "D", "E"];
        let rooms = ids.iter().map(|i| room(i, 0)).collect();
        let edges = ids.windows(2).flat_map(|w| pair(w[0], w[1])).collect();
        let g = MuseumGraph::new(rooms, edges, "A").unwrap();
        assert_eq!(g.hop_distance("A", "E").unwrap(), Some(4));
        assert_eq!(g.hop_distance("E", "B").unwrap(), Some(3));
        assert_eq!(g.hop_distance("A", "Z"), Err(MuseumError::UnknownRoom("Z".into())));
    }

    #[test]
    fn object_lookup() {
        let m = toy_museum();
        let (id, entry) = m.catalog.iter().next().unwrap();
        assert_eq!(m.catalog.object_to_room(id), Some(entry.room_id.as_str()));
        assert_eq!(m.catalog.object_to_room("no-such-object"), None);
        let mut in_first: Vec<&str> = m.catalog.objects_in_room(&entry.room_id).collect();
        in_first.truncate(2);
        if let [a, b] = in_first[..] {
            assert_eq!(m.catalog.object_to_room(a), m.catalog.object_to_room(b));
        }
    }

    #[test]
    fn toy_museum_shape() {
        let m = toy_museum();
        assert_eq!(m.graph.room_count(), 12);
        assert_eq!(m.graph.floors().len(), 2);
        let ups = m.graph.edges().iter().filter(|e| e.kind == EdgeKind::StairUp).count();
        assert_eq!(ups, 2);
        assert_eq!(m.catalog.len(), 40);
        assert_eq!(m.tours.len(), 3);
    }

    #[test]
    fn tour_with_unknown_stop_rejected() {
        let mut doc = toy_museum().to_document();
        doc.tours[0].stops.push("NOPE".into());
        let err = Museum::from_document(doc).unwrap_err();
        assert!(matches!(err, MuseumError::UnknownObject { object, .. } if object == "NOPE"));
    }

    #[test]
    fn canonical_round_trip_is_byte_stable() {
        let m = toy_museum();
        let first = m.to_canonical_json();
        let again = load_museum_graph(first.as_bytes()).unwrap().to_canonical_json();
        assert_eq!(first, again);
    }
}
