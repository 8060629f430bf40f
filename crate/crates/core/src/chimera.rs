//! Chimera-cell coupling graphs.
//!
//! A cell with half-size `k` is the complete bipartite graph `K_{k,k}`. Inside
//! cell `c` the vertices `c*2k .. c*2k + k` form the left column and the next
//! `k` vertices the right column; slot `t` is the position within a column.
//! Horizontally adjacent cells are joined through their right columns, slot
//! to slot.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_HALF_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexLabel {
    pub cell: usize,
    pub side: Side,
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChimeraGraph {
    half_size: usize,
    n_spins: usize,
    edges: Vec<(usize, usize)>,
    cells: Vec<Vec<usize>>,
    labels: Vec<VertexLabel>,
}

impl ChimeraGraph {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn half_size(&self) -> usize {
        self.half_size
    }

    /// Edges as `(i, j)` with `i < j`, intra-cell edges of each cell first.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn label(&self, v: usize) -> VertexLabel {
        self.labels[v]
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn vertex(&self, cell: usize, side: Side, slot: usize) -> usize {
        let base = cell * 2 * self.half_size;
        match side {
            Side::Left => base + slot,
            Side::Right => base + self.half_size + slot,
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_single_cell(&self) -> bool {
        self.cells.len() == 1
    }

    /// Debug export: a `n_spins <N>` header, then one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_spins {}", self.n_spins);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// Complete bipartite cell `K_{k,k}` on `2k` vertices.
pub fn build_cell(k: usize) -> Result<ChimeraGraph> {
    tile_horizontal(1, k)
}

/// `cells` copies of [`build_cell`] joined left to right.
pub fn tile_horizontal(cells: usize, k: usize) -> Result<ChimeraGraph> {
    if k == 0 || k > MAX_HALF_SIZE {
        return Err(Error::InvalidCellSize(k));
    }
    if cells == 0 {
        return Err(Error::InvalidTiling("at least one cell is required".into()));
    }
    let per_cell = 2 * k;
    let n_spins = cells * per_cell;
    let mut labels = Vec::with_capacity(n_spins);
    let mut cell_groups = Vec::with_capacity(cells);
    for c in 0..cells {
        let base = c * per_cell;
        cell_groups.push((base..base + per_cell).collect());
        for slot in 0..k {
            labels.push(VertexLabel {
                cell: c,
                side: Side::Left,
                slot,
            });
        }
        for slot in 0..k {
            labels.push(VertexLabel {
                cell: c,
                side: Side::Right,
                slot,
            });
        }
    }

    let mut edges = Vec::with_capacity(cells * k * k + (cells - 1) * k);
    for c in 0..cells {
        let base = c * per_cell;
        for left in 0..k {
            for right in 0..k {
                edges.push((base + left, base + k + right));
            }
        }
    }
    for c in 0..cells.saturating_sub(1) {
        let here = c * per_cell + k;
        let next = (c + 1) * per_cell + k;
        for slot in 0..k {
            edges.push((here + slot, next + slot));
        }
    }

    Ok(ChimeraGraph {
        half_size: k,
        n_spins,
        edges,
        cells: cell_groups,
        labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutName {
    #[serde(rename = "up-down")]
    UpDown,
    #[serde(rename = "left-right")]
    LeftRight,
}

impl FromStr for CutName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up-down" => Ok(CutName::UpDown),
            "left-right" => Ok(CutName::LeftRight),
            other => Err(Error::UnknownPartition(other.to_string())),
        }
    }
}

/// Two disjoint, non-empty vertex sets covering all spins. Both parts are kept
/// sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    part_a: Vec<usize>,
    part_b: Vec<usize>,
}

impl Bipartition {
    /// Builds the partition `A | complement(A)` over `n_spins` vertices.
    pub fn from_part_a(part_a: &[usize], n_spins: usize) -> Result<Self> {
        let set: BTreeSet<usize> = part_a.iter().copied().collect();
        if set.len() != part_a.len() {
            return Err(Error::InvalidPartition("duplicate vertex in part A".into()));
        }
        if let Some(&v) = set.iter().find(|&&v| v >= n_spins) {
            return Err(Error::InvalidPartition(format!(
                "vertex {v} out of range for {n_spins} spins"
            )));
        }
        if set.is_empty() || set.len() == n_spins {
            return Err(Error::InvalidPartition("both parts must be non-empty".into()));
        }
        let part_b = (0..n_spins).filter(|v| !set.contains(v)).collect();
        Ok(Bipartition {
            part_a: set.into_iter().collect(),
            part_b,
        })
    }

    pub fn part_a(&self) -> &[usize] {
        &self.part_a
    }

    pub fn part_b(&self) -> &[usize] {
        &self.part_b
    }

    pub fn n_spins(&self) -> usize {
        self.part_a.len() + self.part_b.len()
    }

    pub fn swapped(&self) -> Self {
        Bipartition {
            part_a: self.part_b.clone(),
            part_b: self.part_a.clone(),
        }
    }
}

/// The two cuts of a single 8-spin unit cell used in the entanglement analysis.
pub fn named_bipartition(g: &ChimeraGraph, name: CutName) -> Result<Bipartition> {
    if g.n_spins() != 8 || !g.is_single_cell() {
        return Err(Error::PartitionGraphMismatch(g.n_spins()));
    }
    let a: &[usize] = match name {
        CutName::UpDown => &[0, 1, 4, 5],
        CutName::LeftRight => &[0, 1, 2, 3],
    };
    Bipartition::from_part_a(a, 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_graph_invariants(g: &ChimeraGraph) {
        let mut seen = BTreeSet::new();
        for &(a, b) in g.edges() {
            assert!(a < b, "edge ({a},{b}) not normalized or self-loop");
            assert!(b < g.n_spins());
            assert!(seen.insert((a, b)), "duplicate edge ({a},{b})");
        }
        let k = g.half_size();
        for cell in g.cells() {
            let members: BTreeSet<usize> = cell.iter().copied().collect();
            let intra: BTreeSet<(usize, usize)> = g
                .edges()
                .iter()
                .copied()
                .filter(|(a, b)| members.contains(a) && members.contains(b))
                .collect();
            assert_eq!(intra.len(), k * k);
            for &(a, b) in &intra {
                assert_ne!(g.label(a).side, g.label(b).side);
            }
        }
        for &(a, b) in g.edges() {
            let (la, lb) = (g.label(a), g.label(b));
            if la.cell != lb.cell {
                assert_eq!(la.cell.abs_diff(lb.cell), 1);
                assert_eq!(la.slot, lb.slot);
                assert_eq!(la.side, lb.side);
            }
        }
    }

    #[test]
    fn unit_cell_counts() {
        let g = build_cell(4).unwrap();
        assert_eq!(g.n_spins(), 8);
        assert_eq!(g.edges().len(), 16);
        assert_graph_invariants(&g);
    }

    #[test]
    fn smallest_and_extended_cells() {
        let g = build_cell(1).unwrap();
        assert_eq!((g.n_spins(), g.edges().len()), (2, 1));
        let g = build_cell(6).unwrap();
        assert_eq!((g.n_spins(), g.edges().len()), (12, 36));
        assert_graph_invariants(&g);
    }

    #[test]
    fn cell_degree_and_edge_count() {
        for k in 1..=MAX_HALF_SIZE {
            let g = build_cell(k).unwrap();
            assert_eq!(g.edges().len(), k * k);
            for v in 0..g.n_spins() {
                assert_eq!(g.degree(v), k);
            }
        }
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(build_cell(0), Err(Error::InvalidCellSize(0))));
        assert!(build_cell(9).is_err());
        assert!(tile_horizontal(0, 4).is_err());
    }

    // Counts every unordered pair and keeps those that are intra-cell across
    // sides or same-slot right-column neighbours in adjacent cells.
    fn enumerate_edge_count(cells: usize, k: usize) -> usize {
        let n = cells * 2 * k;
        let label = |v: usize| {
            let cell = v / (2 * k);
            let r = v % (2 * k);
            (cell, r >= k, r % k)
        };
        let mut count = 0;
        for a in 0..n {
            for b in a + 1..n {
                let (ca, ra, sa) = label(a);
                let (cb, rb, sb) = label(b);
                let intra = ca == cb && ra != rb;
                let inter = ca.abs_diff(cb) == 1 && ra && rb && sa == sb;
                if intra || inter {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn tiled_counts_match_enumeration() {
        for (cells, n, e) in [(2, 16, 36), (3, 24, 56)] {
            let g = tile_horizontal(cells, 4).unwrap();
            assert_eq!(g.n_spins(), n);
            assert_eq!(g.edges().len(), e);
            assert_eq!(enumerate_edge_count(cells, 4), e);
            assert_graph_invariants(&g);
        }
        assert_eq!(tile_horizontal(1, 4).unwrap(), build_cell(4).unwrap());
    }

    #[test]
    fn tiling_reversal_is_isomorphism() {
        let g = tile_horizontal(3, 4).unwrap();
        let per = 8;
        let cells = 3;
        let map = |v: usize| (cells - 1 - v / per) * per + v % per;
        let original: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();
        let mapped: BTreeSet<(usize, usize)> = g
            .edges()
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (map(a), map(b));
                (x.min(y), x.max(y))
            })
            .collect();
        assert_eq!(original, mapped);
    }

    #[test]
    fn inter_cell_vertices_have_extra_degree() {
        let g = tile_horizontal(3, 4).unwrap();
        assert_eq!(g.degree(g.vertex(1, Side::Right, 2)), 6);
        assert_eq!(g.degree(g.vertex(0, Side::Right, 2)), 5);
        assert_eq!(g.degree(g.vertex(1, Side::Left, 2)), 4);
    }

    #[test]
    fn named_cuts() {
        let g = build_cell(4).unwrap();
        let ud = named_bipartition(&g, CutName::UpDown).unwrap();
        assert_eq!(ud.part_a(), &[0, 1, 4, 5]);
        assert_eq!(ud.part_b(), &[2, 3, 6, 7]);
        let lr = named_bipartition(&g, CutName::LeftRight).unwrap();
        assert_eq!(lr.part_a(), &[0, 1, 2, 3]);
        assert_eq!(lr.part_b(), &[4, 5, 6, 7]);
        assert_eq!(ud.swapped().part_a(), ud.part_b());
    }

    #[test]
    fn up_down_neighbour_balance() {
        let g = build_cell(4).unwrap();
        let ud = named_bipartition(&g, CutName::UpDown).unwrap();
        for &v in ud.part_a() {
            let nbrs = g.neighbors(v);
            let in_a = nbrs.iter().filter(|u| ud.part_a().contains(u)).count();
            assert_eq!((in_a, nbrs.len() - in_a), (2, 2));
        }
    }

    #[test]
    fn named_cut_errors() {
        assert!(matches!(
            "diagonal".parse::<CutName>(),
            Err(Error::UnknownPartition(_))
        ));
        let g = build_cell(3).unwrap();
        assert!(matches!(
            named_bipartition(&g, CutName::UpDown),
            Err(Error::PartitionGraphMismatch(6))
        ));
        let g = tile_horizontal(2, 4).unwrap();
        assert!(named_bipartition(&g, CutName::UpDown).is_err());
    }

    #[test]
    fn explicit_partition_validation() {
        assert!(Bipartition::from_part_a(&[0, 0], 4).is_err());
        assert!(Bipartition::from_part_a(&[5], 4).is_err());
        assert!(Bipartition::from_part_a(&[], 4).is_err());
        assert!(Bipartition::from_part_a(&[0, 1, 2, 3], 4).is_err());
        let p = Bipartition::from_part_a(&[3, 1], 4).unwrap();
        assert_eq!(p.part_a(), &[1, 3]);
        assert_eq!(p.part_b(), &[0, 2]);
    }

    #[test]
    fn edge_list_export() {
        let text = build_cell(1).unwrap().to_edge_list();
        assert_eq!(text, "n_spins 2\n0 1\n");
    }
}
