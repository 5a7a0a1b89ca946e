//! Reachability over the graph store: on-demand traversal or a
//! precomputed transitive closure.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::store::Store;
use crate::value::NodeId;

pub const DEFAULT_CLOSURE_GUARD: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReachabilityStrategy {
    #[default]
    Traversal,
    Closure,
    Gripp,
}

impl FromStr for ReachabilityStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "traversal" => Ok(Self::Traversal),
            "closure" => Ok(Self::Closure),
            "gripp" => Ok(Self::Gripp),
            other => Err(format!(
                "unknown reachability strategy '{other}' (traversal, closure or gripp)"
            )),
        }
    }
}

/// Reflexive transitive closure of the graph store as one bitset per
/// strongly connected component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitiveClosure {
    ids: Vec<NodeId>,
    index: FxHashMap<NodeId, u32>,
    comp_of: Vec<u32>,
    words: usize,
    bits: Vec<u64>,
}

impl TransitiveClosure {
    fn row(&self, node: usize) -> &[u64] {
        let c = self.comp_of[node] as usize;
        &self.bits[c * self.words..(c + 1) * self.words]
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Unknown ids reach nothing, themselves included.
    pub fn reaches(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&u), Some(&v)) => self.row(u as usize)[v as usize / 64] >> (v % 64) & 1 == 1,
            _ => false,
        }
    }

    pub fn pair_count(&self) -> usize {
        (0..self.ids.len())
            .map(|u| {
                self.row(u)
                    .iter()
                    .map(|w| w.count_ones() as usize)
                    .sum::<usize>()
            })
            .sum()
    }

    /// All `(from, to)` pairs, sorted.
    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.pair_count());
        for (u, from) in self.ids.iter().enumerate() {
            for v in ones(self.row(u)) {
                out.push((from.clone(), self.ids[v].clone()));
            }
        }
        out
    }

    /// Nodes from which at least one of `targets` is reachable.
    pub fn reaching_any<'a>(
        &self,
        targets: impl IntoIterator<Item = &'a NodeId>,
    ) -> FxHashSet<NodeId> {
        let mut mask = vec![0u64; self.words];
        for t in targets {
            if let Some(&v) = self.index.get(t) {
                mask[v as usize / 64] |= 1 << (v % 64);
            }
        }
        (0..self.ids.len())
            .filter(|&u| self.row(u).iter().zip(&mask).any(|(a, b)| a & b != 0))
            .map(|u| self.ids[u].clone())
            .collect()
    }

    /// One `from<TAB>to` pair per line after a header.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "from\tto")?;
        for (u, v) in self.pairs() {
            writeln!(w, "{u}\t{v}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("closure.tsv line {}: expected two columns", i + 1))
            })?;
            pairs.push((NodeId::new(a)?, NodeId::new(b)?));
        }
        let mut ids: Vec<NodeId> = pairs
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        ids.sort();
        ids.dedup();
        let index: FxHashMap<NodeId, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let words = ids.len().div_ceil(64);
        let mut bits = vec![0u64; ids.len() * words];
        for (a, b) in &pairs {
            let (u, v) = (index[a] as usize, index[b] as usize);
            bits[u * words + v / 64] |= 1 << (v % 64);
        }
        Ok(TransitiveClosure {
            comp_of: (0..ids.len() as u32).collect(),
            ids,
            index,
            words,
            bits,
        })
    }
}

fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &bits)| {
        let mut b = bits;
        std::iter::from_fn(move || {
            if b == 0 {
                return None;
            }
            let t = b.trailing_zeros() as usize;
            b &= b - 1;
            Some(w * 64 + t)
        })
    })
}

/// Builds the closure with Tarjan's algorithm; components come out in
/// reverse topological order so each one only unions finished successors.
pub fn build_closure(store: &Store, node_guard: usize) -> Result<TransitiveClosure> {
    let ids: Vec<NodeId> = store.nodes().into_iter().collect();
    let n = ids.len();
    if n > node_guard {
        return Err(Error::ClosureGuard {
            nodes: n,
            limit: node_guard,
        });
    }
    let index: FxHashMap<NodeId, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();
    let adj: Vec<Vec<u32>> = ids
        .iter()
        .map(|id| {
            let mut out: Vec<u32> = store
                .out_edges(id.as_str())
                .map(|r| index[&r.object])
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();

    const UNSEEN: u32 = u32::MAX;
    let mut order = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp_of = vec![UNSEEN; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut comps: Vec<Vec<u32>> = Vec::new();
    let mut counter = 0u32;

    for root in 0..n as u32 {
        if order[root as usize] != UNSEEN {
            continue;
        }
        let mut call: Vec<(u32, usize)> = vec![(root, 0)];
        order[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            let vi = v as usize;
            if let Some(&w) = adj[vi].get(*next) {
                *next += 1;
                let wi = w as usize;
                if order[wi] == UNSEEN {
                    order[wi] = counter;
                    low[wi] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    call.push((w, 0));
                } else if on_stack[wi] {
                    low[vi] = low[vi].min(order[wi]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[vi]);
            }
            if low[vi] == order[vi] {
                let c = comps.len() as u32;
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack holds the component");
                    on_stack[w as usize] = false;
                    comp_of[w as usize] = c;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(members);
            }
        }
    }

    let words = n.div_ceil(64);
    let mut bits = vec![0u64; comps.len() * words];
    for (c, members) in comps.iter().enumerate() {
        let mut row = vec![0u64; words];
        for &m in members {
            row[m as usize / 64] |= 1 << (m % 64);
            for &w in &adj[m as usize] {
                let d = comp_of[w as usize] as usize;
                if d != c {
                    for (x, y) in row.iter_mut().zip(&bits[d * words..(d + 1) * words]) {
                        *x |= y;
                    }
                }
            }
        }
        bits[c * words..(c + 1) * words].copy_from_slice(&row);
    }
    Ok(TransitiveClosure {
        ids,
        index,
        comp_of,
        words,
        bits,
    })
}

/// Breadth-first search along out-edges. Reflexive for known nodes.
pub fn bfs_reachable(store: &Store, from: &str, to: &str) -> bool {
    if !store.is_node(from) || !store.is_node(to) {
        return false;
    }
    if from == to {
        return true;
    }
    let mut seen: FxHashSet<&str> = FxHashSet::default();
    let mut queue: VecDeque<&str> = VecDeque::from([from]);
    seen.insert(from);
    while let Some(u) = queue.pop_front() {
        for r in store.out_edges(u) {
            let o = r.object.as_str();
            if o == to {
                return true;
            }
            if seen.insert(o) {
                queue.push_back(o);
            }
        }
    }
    false
}

/// Answers `from` reaches `to` with the chosen strategy.
pub fn reachable(
    store: &Store,
    from: &str,
    to: &str,
    strategy: ReachabilityStrategy,
    node_guard: usize,
) -> Result<bool> {
    match strategy {
        ReachabilityStrategy::Traversal => Ok(bfs_reachable(store, from, to)),
        ReachabilityStrategy::Closure => Ok(store.closure(node_guard)?.reaches(from, to)),
        ReachabilityStrategy::Gripp => Err(Error::NotImplemented("GRIPP reachability")),
    }
}
