//! `fpmmesh 1` text format.
//!
//! ```text
//! fpmmesh 1
//! <n_nodes> <n_cells>
//! <id> <x> <y>                      # n_nodes lines
//! <id> <k> <v1> ... <vk>            # n_cells lines, vertex ids CCW
//! nodeset <name> <count> <ids...>
//! edgeset <name> <count> <cell local_edge>...
//! ```
//!
//! `#` starts a comment. Set members may wrap over several lines.

use std::collections::{BTreeMap, HashMap};

use super::{Partition, RawCell, RawEdge};
use crate::error::{Error, Result};

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                items.push((i + 1, tok));
            }
        }
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map_or(1, |t| t.0)
    }

    fn err<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line(),
            reason: reason.into(),
        })
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.items.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => self.err(format!("unexpected end of file, expected {what}")),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64> {
        let (line, tok) = self.next(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            reason: format!("expected integer {what}, found '{tok}'"),
        })
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (line, tok) = self.next(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            reason: format!("expected non-negative {what}, found '{tok}'"),
        })
    }

    fn float(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.next(what)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                line,
                reason: format!("expected finite number {what}, found '{tok}'"),
            }),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }
}

pub(super) fn parse(text: &str) -> Result<Partition> {
    let mut t = Tokens::new(text);
    let (line, magic) = t.next("header")?;
    if magic != "fpmmesh" {
        return Err(Error::Parse {
            line,
            reason: format!("expected 'fpmmesh' header, found '{magic}'"),
        });
    }
    let version = t.int("format version")?;
    if version != 1 {
        return t.err(format!("unsupported format version {version}"));
    }
    let n_nodes = t.count("node count")?;
    let n_cells = t.count("cell count")?;

    let mut nodes = Vec::with_capacity(n_nodes);
    let mut labels = Vec::with_capacity(n_nodes);
    let mut node_index = HashMap::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let line = t.line();
        let id = t.int("node id")?;
        let x = t.float("x coordinate")?;
        let y = t.float("y coordinate")?;
        if node_index.insert(id, nodes.len()).is_some() {
            return Err(Error::Parse {
                line,
                reason: format!("duplicate node id {id}"),
            });
        }
        nodes.push([x, y]);
        labels.push(id);
    }

    let mut cells = Vec::with_capacity(n_cells);
    let mut cell_index = HashMap::with_capacity(n_cells);
    for _ in 0..n_cells {
        let line = t.line();
        let id = t.int("cell id")?;
        let k = t.count("vertex count")?;
        if k < 3 {
            return Err(Error::Parse {
                line,
                reason: format!("cell {id} has {k} vertices, need at least 3"),
            });
        }
        let mut vs = Vec::with_capacity(k);
        for _ in 0..k {
            let line = t.line();
            let v = t.int("vertex id")?;
            let idx = *node_index.get(&v).ok_or(Error::Parse {
                line,
                reason: format!("cell {id} references unknown node {v}"),
            })?;
            vs.push(idx);
        }
        if cell_index.insert(id, cells.len()).is_some() {
            return Err(Error::Parse {
                line,
                reason: format!("duplicate cell id {id}"),
            });
        }
        cells.push(RawCell {
            label: id,
            nodes: vs,
        });
    }

    let mut node_sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut edge_sets: BTreeMap<String, Vec<RawEdge>> = BTreeMap::new();
    while !t.done() {
        let (line, kw) = t.next("set keyword")?;
        let (_, name) = t.next("set name")?;
        let name = name.to_string();
        let count = t.count("set size")?;
        match kw {
            "nodeset" => {
                let mut ids = Vec::with_capacity(count);
                for _ in 0..count {
                    let line = t.line();
                    let v = t.int("node id")?;
                    ids.push(*node_index.get(&v).ok_or(Error::Parse {
                        line,
                        reason: format!("node set '{name}' references unknown node {v}"),
                    })?);
                }
                ids.sort_unstable();
                ids.dedup();
                node_sets.entry(name).or_default().extend(ids);
            }
            "edgeset" => {
                let mut edges = Vec::with_capacity(count);
                for _ in 0..count {
                    let line = t.line();
                    let c = t.int("cell id")?;
                    let k = t.count("local edge index")?;
                    let ci = *cell_index.get(&c).ok_or(Error::Parse {
                        line,
                        reason: format!("edge set '{name}' references unknown cell {c}"),
                    })?;
                    if k >= cells[ci].nodes.len() {
                        return Err(Error::Parse {
                            line,
                            reason: format!("cell {c} has no local edge {k}"),
                        });
                    }
                    edges.push((ci, k));
                }
                edge_sets.entry(name).or_default().extend(edges);
            }
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected 'nodeset' or 'edgeset', found '{other}'"),
                })
            }
        }
    }

    Partition::build(nodes, labels, cells, node_sets, edge_sets)
}
