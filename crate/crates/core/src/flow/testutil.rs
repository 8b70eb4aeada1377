use crate::ingest::{CleanTrip, TripEvent};
use crate::museum::{Edge, EdgeKind, MuseumDocument, MuseumGraph, Room};

pub(crate) fn graph(rooms: &[(&str, i32)], edges: &[(&str, &str, EdgeKind)]) -> MuseumGraph {
    let doc = MuseumDocument {
        entrance: rooms[0].0.to_string(),
        rooms: rooms
            .iter()
            .map(|(id, floor)| Room {
                id: id.to_string(),
                name: id.to_string(),
                floor: *floor,
                theme: "t".into(),
            })
            .collect(),
        edges: edges
            .iter()
            .flat_map(|(a, b, k)| {
                [
                    Edge {
                        from: a.to_string(),
                        to: b.to_string(),
                        kind: *k,
                    },
                    Edge {
                        from: b.to_string(),
                        to: a.to_string(),
                        kind: k.reciprocal(),
                    },
                ]
            })
            .collect(),
        objects: vec![],
        tours: vec![],
    };
    MuseumGraph::new(doc.rooms, doc.edges, &doc.entrance).unwrap()
}

pub(crate) fn trip(id: &str, rooms: &[&str]) -> CleanTrip {
    CleanTrip {
        trip_id: id.into(),
        events: rooms
            .iter()
            .enumerate()
            .map(|(i, r)| TripEvent {
                timestamp: i as i64 * 60,
                object_id: format!("obj-{r}-{i}"),
                room_id: r.to_string(),
            })
            .collect(),
        start_time: 0,
        duration: rooms.len() as i64 * 60,
        language: "en".into(),
        group_size: 1,
        flagged_fraction: 0.0,
    }
}
