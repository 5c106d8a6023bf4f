//! Exchange formats for trees and boundaries.
//!
//! A tree dump is plain text with one line per node in breadth-first order,
//! `id parent depth child_count`, where the root's parent is `-`. A leading
//! `# height H` line records the truncation height, which can exceed the
//! deepest node when the tree died out early.
//!
//! A boundary is a CSV file with header `leaf_id,colour`, one row per
//! depth-`h` node, keyed by node id.

use std::fmt::Write as _;
use std::io::{Read, Write};

use recon_core::{Boundary, Tree};

use crate::error::RunError;

fn bad_tree(reason: impl Into<String>) -> RunError {
    RunError::validation("tree_file", reason)
}

fn bad_boundary(reason: impl Into<String>) -> RunError {
    RunError::validation("boundary", reason)
}

pub fn tree_to_string(tree: &Tree) -> String {
    let mut out = format!("# height {}\n", tree.height());
    for v in 0..tree.len() {
        let parent = tree.parent(v).map_or_else(|| "-".to_string(), |p| p.to_string());
        writeln!(out, "{v} {parent} {} {}", tree.depth(v), tree.child_count(v)).unwrap();
    }
    out
}

pub fn write_tree<W: Write>(tree: &Tree, mut w: W) -> std::io::Result<()> {
    w.write_all(tree_to_string(tree).as_bytes())
}

pub fn parse_tree(text: &str) -> Result<Tree, RunError> {
    let mut height = None;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(h) = comment.trim().strip_prefix("height") {
                let h = h.trim().parse().map_err(|_| bad_tree(format!("line {}: bad height", line_no + 1)))?;
                height = Some(h);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad_tree(format!("line {}: expected 4 fields", line_no + 1)));
        }
        let num = |s: &str| -> Result<usize, RunError> {
            s.parse().map_err(|_| bad_tree(format!("line {}: `{s}` is not an integer", line_no + 1)))
        };
        let parent = if fields[1] == "-" { None } else { Some(num(fields[1])?) };
        rows.push((num(fields[0])?, parent, num(fields[2])? as u32, num(fields[3])?));
    }
    if rows.is_empty() {
        return Err(bad_tree("no nodes"));
    }
    let max_depth = rows.iter().map(|r| r.2).max().unwrap_or(0);
    let height = height.unwrap_or(max_depth);
    for (i, &(id, _, _, _)) in rows.iter().enumerate() {
        if id != i {
            return Err(bad_tree(format!("node ids must be 0..n in order; found {id} at position {i}")));
        }
    }
    let counts: Vec<usize> = rows.iter().map(|r| r.3).collect();
    let tree = Tree::from_child_counts(&counts, height).map_err(|e| bad_tree(e.to_string()))?;
    for &(id, parent, depth, _) in &rows {
        if tree.parent(id) != parent || tree.depth(id) != depth {
            return Err(bad_tree(format!("node {id}: parent or depth disagrees with breadth-first order")));
        }
    }
    Ok(tree)
}

pub fn read_tree<R: Read>(mut r: R) -> Result<Tree, RunError> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| RunError::io("tree", e))?;
    parse_tree(&text)
}

pub fn write_boundary<W: Write>(tree: &Tree, boundary: &Boundary, w: W) -> Result<(), RunError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["leaf_id", "colour"])?;
    for (i, v) in tree.leaves().enumerate() {
        out.write_record([v.to_string(), boundary.colour(i).to_string()])?;
    }
    out.flush().map_err(|e| RunError::io("boundary", e))?;
    Ok(())
}

/// Reads a boundary for `tree`. Every depth-`h` node must appear exactly
/// once; row order is free.
pub fn read_boundary<R: Read>(tree: &Tree, k: u32, r: R) -> Result<Boundary, RunError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["leaf_id", "colour"] {
        return Err(bad_boundary("header must be `leaf_id,colour`"));
    }
    let leaves = tree.leaves();
    let mut colours: Vec<Option<u8>> = vec![None; leaves.len()];
    for record in reader.records() {
        let record = record?;
        let id: usize = record[0].parse().map_err(|_| bad_boundary(format!("bad leaf id `{}`", &record[0])))?;
        let colour: u32 = record[1].parse().map_err(|_| bad_boundary(format!("bad colour `{}`", &record[1])))?;
        if !leaves.contains(&id) {
            return Err(bad_boundary(format!("node {id} is not at depth {}", tree.height())));
        }
        if colour >= k {
            return Err(bad_boundary(format!("colour {colour} is not below k = {k}")));
        }
        let slot = &mut colours[id - leaves.start];
        if slot.replace(colour as u8).is_some() {
            return Err(bad_boundary(format!("leaf {id} listed twice")));
        }
    }
    let colours: Option<Vec<u8>> = colours.into_iter().collect();
    let colours = colours.ok_or_else(|| bad_boundary("some leaves have no colour"))?;
    Boundary::new(k, colours).map_err(|e| bad_boundary(e.to_string()))
}
