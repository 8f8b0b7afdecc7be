//! CSV ingestion and emission for the three dataset files.
//!
//! - `trajectories.csv`: `user_id,lat,lon,t_start,t_end`
//! - `billboards.csv`: `billboard_id,lat,lon,panel_size`
//! - `graph.csv`: `src,dst[,prob]` (`prob` only in explicit-probability mode)
//!
//! All integers are base-10, timestamps epoch seconds, text UTF-8. Floats
//! are written with Rust's shortest round-trip representation, so a
//! save/load cycle reproduces values exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::{
    Billboard, BillboardId, GeoPoint, SocialGraph, TimeInterval, TrajectoryDB, TrajectoryRecord,
    UserId,
};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at data row {row} of {path}: {msg}")]
    Parse {
        path: String,
        row: usize,
        msg: String,
    },
    #[error("{0}")]
    Validation(String),
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_err(path: &Path, row: usize, msg: impl std::fmt::Display) -> DataError {
    DataError::Parse {
        path: path.display().to_string(),
        row,
        msg: msg.to_string(),
    }
}

#[derive(Deserialize)]
struct TrajectoryRow {
    user_id: u64,
    lat: f64,
    lon: f64,
    t_start: i64,
    t_end: i64,
}

/// Load a trajectory database. The horizon is the envelope of all record
/// intervals; an empty file yields an empty database.
pub fn load_trajectories(path: &Path) -> Result<TrajectoryDB, DataError> {
    let mut reader = open_reader(path)?;
    let mut records = Vec::new();
    for (i, result) in reader.deserialize::<TrajectoryRow>().enumerate() {
        let row = result.map_err(|e| parse_err(path, i + 1, e))?;
        let interval = TimeInterval::new(row.t_start, row.t_end)
            .ok_or_else(|| parse_err(path, i + 1, "t_start exceeds t_end"))?;
        records.push(TrajectoryRecord {
            user: UserId(row.user_id),
            location: GeoPoint {
                lat: row.lat,
                lon: row.lon,
            },
            interval,
        });
    }
    Ok(TrajectoryDB::new(records))
}

pub fn save_trajectories(db: &TrajectoryDB, path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "user_id,lat,lon,t_start,t_end").map_err(io_err)?;
    for r in db.records() {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.user.0, r.location.lat, r.location.lon, r.interval.start, r.interval.end
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Deserialize)]
struct BillboardRow {
    billboard_id: u64,
    lat: f64,
    lon: f64,
    panel_size: f64,
}

pub fn load_billboards(path: &Path) -> Result<Vec<Billboard>, DataError> {
    let mut reader = open_reader(path)?;
    let mut boards = Vec::new();
    for (i, result) in reader.deserialize::<BillboardRow>().enumerate() {
        let row = result.map_err(|e| parse_err(path, i + 1, e))?;
        if row.panel_size <= 0.0 {
            return Err(parse_err(path, i + 1, "panel_size must be positive"));
        }
        boards.push(Billboard {
            id: BillboardId(row.billboard_id),
            location: GeoPoint {
                lat: row.lat,
                lon: row.lon,
            },
            panel_size: row.panel_size,
        });
    }
    Ok(boards)
}

pub fn save_billboards(boards: &[Billboard], path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "billboard_id,lat,lon,panel_size").map_err(io_err)?;
    for b in boards {
        writeln!(
            w,
            "{},{},{},{}",
            b.id.0, b.location.lat, b.location.lon, b.panel_size
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loaded edge list; `prob` is present only when the file carries the
/// optional third column.
pub struct GraphEdges {
    pub edges: Vec<(UserId, UserId, Option<f64>)>,
}

pub fn load_graph_edges(path: &Path) -> Result<GraphEdges, DataError> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 0, e))?
        .clone();
    let has_prob = headers.iter().any(|h| h == "prob");
    if headers.iter().take(2).collect::<Vec<_>>() != vec!["src", "dst"] {
        return Err(parse_err(path, 0, "expected header src,dst[,prob]"));
    }
    let mut edges = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let rec = result.map_err(|e| parse_err(path, i + 1, e))?;
        let src: u64 = rec
            .get(0)
            .ok_or_else(|| parse_err(path, i + 1, "missing src"))?
            .parse()
            .map_err(|e| parse_err(path, i + 1, format!("src: {e}")))?;
        let dst: u64 = rec
            .get(1)
            .ok_or_else(|| parse_err(path, i + 1, "missing dst"))?
            .parse()
            .map_err(|e| parse_err(path, i + 1, format!("dst: {e}")))?;
        let prob = if has_prob {
            let raw = rec
                .get(2)
                .ok_or_else(|| parse_err(path, i + 1, "missing prob"))?;
            Some(
                raw.parse::<f64>()
                    .map_err(|e| parse_err(path, i + 1, format!("prob: {e}")))?,
            )
        } else {
            None
        };
        edges.push((UserId(src), UserId(dst), prob));
    }
    Ok(GraphEdges { edges })
}

/// Write the graph with its probability column.
pub fn save_graph(graph: &SocialGraph, path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "src,dst,prob").map_err(io_err)?;
    for (u, v, p) in graph.edges() {
        writeln!(w, "{},{},{}", u.0, v.0, p).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_trajectory_file_is_valid() {
        let f = tmp_csv("user_id,lat,lon,t_start,t_end\n");
        let db = load_trajectories(f.path()).unwrap();
        assert_eq!(db.len(), 0);
    }

    #[test]
    fn single_row_horizon() {
        let f = tmp_csv("user_id,lat,lon,t_start,t_end\n1,40.0,-74.0,100,200\n");
        let db = load_trajectories(f.path()).unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.horizon(), TimeInterval { start: 100, end: 200 });
    }

    #[test]
    fn three_row_fixture_envelope() {
        // hand-computed envelope of [100,200], [50,120], [150,300] = [50,300]
        let f = tmp_csv(
            "user_id,lat,lon,t_start,t_end\n\
             1,40.0,-74.0,100,200\n\
             2,40.1,-74.1,50,120\n\
             3,40.2,-74.2,150,300\n",
        );
        let db = load_trajectories(f.path()).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.horizon(), TimeInterval { start: 50, end: 300 });
    }

    #[test]
    fn malformed_row_reports_index() {
        let f = tmp_csv("user_id,lat,lon,t_start,t_end\n1,40.0,-74.0,100,200\n2,oops,0,0,0\n");
        match load_trajectories(f.path()) {
            Err(DataError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn inverted_interval_rejected() {
        let f = tmp_csv("user_id,lat,lon,t_start,t_end\n1,0,0,200,100\n");
        assert!(load_trajectories(f.path()).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_trajectories(Path::new("/nonexistent/file.csv")).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    #[test]
    fn graph_prob_column_optional() {
        let f = tmp_csv("src,dst\n1,2\n2,3\n");
        let g = load_graph_edges(f.path()).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges[0].2.is_none());

        let f = tmp_csv("src,dst,prob\n1,2,0.25\n");
        let g = load_graph_edges(f.path()).unwrap();
        assert_eq!(g.edges[0].2, Some(0.25));
    }

    #[test]
    fn trajectory_round_trip_exact() {
        let db = TrajectoryDB::new(vec![
            TrajectoryRecord {
                user: UserId(7),
                location: GeoPoint {
                    lat: 40.123456789,
                    lon: -74.000001,
                },
                interval: TimeInterval { start: 5, end: 50 },
            },
            TrajectoryRecord {
                user: UserId(8),
                location: GeoPoint {
                    lat: 0.1 + 0.2, // deliberately non-representable sum
                    lon: 1.0 / 3.0,
                },
                interval: TimeInterval { start: 0, end: 5 },
            },
        ]);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_trajectories(&db, f.path()).unwrap();
        let back = load_trajectories(f.path()).unwrap();
        assert_eq!(db, back);
    }

    #[test]
    fn billboard_round_trip_exact() {
        let boards = vec![
            Billboard {
                id: BillboardId(3),
                location: GeoPoint {
                    lat: 40.7128,
                    lon: -74.006,
                },
                panel_size: 62.5 / 3.0,
            },
            Billboard {
                id: BillboardId(4),
                location: GeoPoint {
                    lat: 34.0522,
                    lon: -118.2437,
                },
                panel_size: 100.0,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        save_billboards(&boards, f.path()).unwrap();
        assert_eq!(load_billboards(f.path()).unwrap(), boards);
    }

    #[test]
    fn graph_round_trip_exact() {
        let g = SocialGraph::new(
            vec![UserId(1), UserId(2), UserId(3)],
            &[
                (UserId(1), UserId(2), 0.1),
                (UserId(2), UserId(3), 1.0 / 7.0),
            ],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_graph(&g, f.path()).unwrap();
        let loaded = load_graph_edges(f.path()).unwrap();
        let edges: Vec<(UserId, UserId, f64)> = loaded
            .edges
            .iter()
            .map(|(u, v, p)| (*u, *v, p.unwrap()))
            .collect();
        let nodes: Vec<UserId> = g.nodes().to_vec();
        let back = SocialGraph::new(nodes, &edges).unwrap();
        assert_eq!(g, back);
    }
}
