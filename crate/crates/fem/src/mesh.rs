//! Quadtree quadrilateral meshes on rectangles.
//!
//! Cells are leaves of a forest of quadtrees rooted at a structured base grid.
//! Neighbouring leaves differ by at most one level across every edge; the
//! resulting hanging nodes are eliminated by [`crate::space::FunctionSpace`].

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{FemError, Result};

/// Deepest refinement accepted by the builder.
pub const MAX_LEVEL: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// True when the intersection has positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        let tol = 1e-12 * (self.width().abs() + self.height().abs());
        self.x1.min(other.x1) - self.x0.max(other.x0) > tol
            && self.y1.min(other.y1) - self.y0.max(other.y0) > tol
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineBox {
    pub region: Rect,
    /// Target refinement level for cells overlapping the region.
    pub levels: u8,
}

/// Local edge `edge` (0 bottom, 1 right, 2 top, 3 left) of `cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Facet {
    pub cell: usize,
    pub edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Boundary,
    Same(usize),
    Coarser(usize),
    /// Two finer cells, ordered counter-clockwise along this cell's edge.
    Finer([usize; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    /// Corner vertices, counter-clockwise from the lower-left one.
    pub vertices: [usize; 4],
    pub level: u8,
    /// Integer position among cells of the same level.
    pub ij: [u32; 2],
}

type Leaf = (u8, u32, u32);

/// Incremental construction of a balanced quadtree mesh.
#[derive(Debug, Clone)]
pub struct QuadtreeBuilder {
    extent: Rect,
    nx: u32,
    ny: u32,
    leaves: HashSet<Leaf>,
}

fn children(l: Leaf) -> [Leaf; 4] {
    let (lv, i, j) = l;
    [
        (lv + 1, 2 * i, 2 * j),
        (lv + 1, 2 * i + 1, 2 * j),
        (lv + 1, 2 * i, 2 * j + 1),
        (lv + 1, 2 * i + 1, 2 * j + 1),
    ]
}

impl QuadtreeBuilder {
    pub fn new(extent: Rect, resolution: (usize, usize)) -> Result<Self> {
        let finite = [extent.x0, extent.x1, extent.y0, extent.y1].iter().all(|v| v.is_finite());
        if !finite || extent.width() <= 0.0 || extent.height() <= 0.0 {
            return Err(FemError::InvalidGeometry(format!(
                "extent must be positive, got {} x {}",
                extent.width(),
                extent.height()
            )));
        }
        if resolution.0 == 0 || resolution.1 == 0 {
            return Err(FemError::InvalidGeometry("resolution must be at least 1 per axis".into()));
        }
        let (nx, ny) = (resolution.0 as u32, resolution.1 as u32);
        let leaves = (0..ny).flat_map(|j| (0..nx).map(move |i| (0u8, i, j))).collect();
        Ok(Self { extent, nx, ny, leaves })
    }

    pub fn extent(&self) -> Rect {
        self.extent
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx as usize, self.ny as usize)
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    fn leaf_rect(&self, l: Leaf) -> Rect {
        let s = (1u64 << l.0) as f64;
        let hx = self.extent.width() / (self.nx as f64 * s);
        let hy = self.extent.height() / (self.ny as f64 * s);
        Rect::new(
            self.extent.x0 + l.1 as f64 * hx,
            self.extent.x0 + (l.1 + 1) as f64 * hx,
            self.extent.y0 + l.2 as f64 * hy,
            self.extent.y0 + (l.2 + 1) as f64 * hy,
        )
    }

    fn split(&mut self, l: Leaf) {
        if self.leaves.remove(&l) {
            for c in children(l) {
                self.leaves.insert(c);
            }
        }
    }

    /// Repeatedly splits leaves for which `pred(rect, level)` holds.
    pub fn refine_where<F: Fn(&Rect, u8) -> bool>(&mut self, pred: F) -> Result<()> {
        loop {
            let mut marked: Vec<Leaf> = self
                .leaves
                .iter()
                .copied()
                .filter(|&l| pred(&self.leaf_rect(l), l.0))
                .collect();
            if marked.is_empty() {
                return Ok(());
            }
            if marked.iter().any(|l| l.0 >= MAX_LEVEL) {
                return Err(FemError::InvalidGeometry(format!(
                    "refinement beyond level {MAX_LEVEL} requested"
                )));
            }
            marked.sort_unstable();
            for l in marked {
                self.split(l);
            }
        }
    }

    pub fn refine_box(&mut self, b: &RefineBox) -> Result<()> {
        if b.levels > MAX_LEVEL {
            return Err(FemError::InvalidGeometry(format!(
                "refinement box requests {} levels, maximum is {MAX_LEVEL}",
                b.levels
            )));
        }
        let region = b.region;
        self.refine_where(|r, lv| lv < b.levels && r.overlaps(&region))
    }

    fn covering(&self, l: u8, i: u32, j: u32) -> Option<Leaf> {
        (0..=l).map(|k| (l - k, i >> k, j >> k)).find(|c| self.leaves.contains(c))
    }

    fn in_range(&self, l: u8, i: i64, j: i64) -> bool {
        let s = 1i64 << l;
        i >= 0 && j >= 0 && i < self.nx as i64 * s && j < self.ny as i64 * s
    }

    /// Enforces the 2:1 level difference across edges.
    pub fn balance(&mut self) {
        loop {
            let mut marked = HashSet::new();
            for &(l, i, j) in &self.leaves {
                if l < 2 {
                    continue;
                }
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if !self.in_range(l, ni, nj) {
                        continue;
                    }
                    if let Some(c) = self.covering(l, ni as u32, nj as u32) {
                        if c.0 + 1 < l {
                            marked.insert(c);
                        }
                    }
                }
            }
            if marked.is_empty() {
                return;
            }
            let mut marked: Vec<Leaf> = marked.into_iter().collect();
            marked.sort_unstable();
            for l in marked {
                self.split(l);
            }
        }
    }

    fn bottom_row(&self) -> HashMap<(u8, u32), Leaf> {
        self.leaves.iter().filter(|l| l.2 == 0).map(|&l| ((l.0, l.1), l)).collect()
    }

    fn top_row(&self) -> HashMap<(u8, u32), Leaf> {
        self.leaves
            .iter()
            .filter(|l| l.2 == (self.ny << l.0) - 1)
            .map(|&l| ((l.0, l.1), l))
            .collect()
    }

    /// Refines `upper` (along its bottom edge) and `lower` (along its top edge)
    /// until both present identical facets on the shared line.
    pub fn match_shared_edge(upper: &mut Self, lower: &mut Self) -> Result<()> {
        let same = (upper.extent.x0 - lower.extent.x0).abs() <= 1e-12 * upper.extent.width()
            && (upper.extent.x1 - lower.extent.x1).abs() <= 1e-12 * upper.extent.width()
            && upper.nx == lower.nx
            && (upper.extent.y0 - lower.extent.y1).abs() <= 1e-12 * upper.extent.height();
        if !same {
            return Err(FemError::InvalidGeometry(
                "meshes do not share a compatible horizontal edge".into(),
            ));
        }
        loop {
            upper.balance();
            lower.balance();
            let a = upper.bottom_row();
            let b = lower.top_row();
            let mut split_lower = Vec::new();
            let mut split_upper = Vec::new();
            for &(l, i) in a.keys() {
                if let Some(&(lb, ib, jb)) = (1..=l).map(|k| (l - k, i >> k)).find_map(|c| b.get(&c)) {
                    split_lower.push((lb, ib, jb));
                }
            }
            for &(l, i) in b.keys() {
                if let Some(&la) = (1..=l).map(|k| (l - k, i >> k)).find_map(|c| a.get(&c)) {
                    split_upper.push(la);
                }
            }
            if split_lower.is_empty() && split_upper.is_empty() {
                return Ok(());
            }
            split_lower.sort_unstable();
            split_upper.sort_unstable();
            split_lower.dedup();
            split_upper.dedup();
            for l in split_lower {
                lower.split(l);
            }
            for l in split_upper {
                upper.split(l);
            }
        }
    }

    pub fn build(mut self) -> Mesh {
        self.balance();
        Mesh::from_leaves(self)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    extent: Rect,
    nx: u32,
    ny: u32,
    max_level: u8,
    vertices: Vec<[f64; 2]>,
    vertex_keys: Vec<[u32; 2]>,
    cells: Vec<Cell>,
    neighbors: Vec<[Neighbor; 4]>,
    boundary: BTreeMap<String, Vec<Facet>>,
}

/// Builds a graded quadtree mesh of `extent` with `resolution` base cells.
pub fn build_structured_mesh(
    extent: Rect,
    resolution: (usize, usize),
    refine_boxes: &[RefineBox],
) -> Result<Mesh> {
    let mut b = QuadtreeBuilder::new(extent, resolution)?;
    for rb in refine_boxes {
        b.refine_box(rb)?;
    }
    Ok(b.build())
}

impl Mesh {
    fn from_leaves(b: QuadtreeBuilder) -> Self {
        let max_level = b.leaves.iter().map(|l| l.0).max().unwrap_or(0);
        let m = 1u32 << (max_level + 1);
        let mut leaves: Vec<Leaf> = b.leaves.iter().copied().collect();
        leaves.sort_by_key(|&(l, i, j)| {
            let s = m >> l;
            (j * s, i * s, l)
        });
        let index: HashMap<Leaf, usize> = leaves.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        let hx = b.extent.width() / (b.nx as f64 * m as f64);
        let hy = b.extent.height() / (b.ny as f64 * m as f64);

        let mut vertex_of: HashMap<[u32; 2], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut vertex_keys = Vec::new();
        let mut cells = Vec::with_capacity(leaves.len());
        for &(l, i, j) in &leaves {
            let s = m >> l;
            let corners = [[i * s, j * s], [(i + 1) * s, j * s], [(i + 1) * s, (j + 1) * s], [i * s, (j + 1) * s]];
            let mut vs = [0usize; 4];
            for (k, key) in corners.iter().enumerate() {
                vs[k] = *vertex_of.entry(*key).or_insert_with(|| {
                    vertices.push([b.extent.x0 + key[0] as f64 * hx, b.extent.y0 + key[1] as f64 * hy]);
                    vertex_keys.push(*key);
                    vertices.len() - 1
                });
            }
            cells.push(Cell { vertices: vs, level: l, ij: [i, j] });
        }

        let find = |l: u8, i: i64, j: i64| -> Option<usize> {
            if i < 0 || j < 0 {
                return None;
            }
            index.get(&(l, i as u32, j as u32)).copied()
        };
        let mut neighbors = Vec::with_capacity(cells.len());
        let mut boundary: BTreeMap<String, Vec<Facet>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            let (l, i, j) = (cell.level, cell.ij[0] as i64, cell.ij[1] as i64);
            let s = 1i64 << l;
            let mut nb = [Neighbor::Boundary; 4];
            for (e, (di, dj)) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)].into_iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= b.nx as i64 * s || nj >= b.ny as i64 * s {
                    let tag = ["bottom", "right", "top", "left"][e];
                    boundary.entry(tag.to_string()).or_default().push(Facet { cell: c, edge: e });
                    continue;
                }
                nb[e] = if let Some(k) = find(l, ni, nj) {
                    Neighbor::Same(k)
                } else if let Some(k) = (l > 0).then(|| find(l - 1, ni >> 1, nj >> 1)).flatten() {
                    Neighbor::Coarser(k)
                } else {
                    let (ci, cj) = (2 * ni, 2 * nj);
                    let pair = match e {
                        0 => [(ci, cj + 1), (ci + 1, cj + 1)],
                        1 => [(ci, cj), (ci, cj + 1)],
                        2 => [(ci + 1, cj), (ci, cj)],
                        _ => [(ci + 1, cj + 1), (ci + 1, cj)],
                    };
                    let a = find(l + 1, pair[0].0, pair[0].1).expect("balanced quadtree");
                    let bb = find(l + 1, pair[1].0, pair[1].1).expect("balanced quadtree");
                    Neighbor::Finer([a, bb])
                };
            }
            neighbors.push(nb);
        }
        for facets in boundary.values_mut() {
            facets.sort_by(|a, b| {
                let ka = vertex_keys[cells[a.cell].vertices[a.edge]];
                let kb = vertex_keys[cells[b.cell].vertices[b.edge]];
                (ka[1], ka[0]).cmp(&(kb[1], kb[0]))
            });
        }
        Mesh { extent: b.extent, nx: b.nx, ny: b.ny, max_level, vertices, vertex_keys, cells, neighbors, boundary }
    }

    pub fn extent(&self) -> Rect {
        self.extent
    }

    pub fn base_resolution(&self) -> (usize, usize) {
        (self.nx as usize, self.ny as usize)
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &Cell {
        &self.cells[c]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn refinement_level(&self, c: usize) -> u8 {
        self.cells[c].level
    }

    pub fn neighbor(&self, c: usize, edge: usize) -> Neighbor {
        self.neighbors[c][edge]
    }

    /// Key units per base cell along each axis.
    pub fn key_scale(&self) -> u32 {
        1u32 << (self.max_level + 1)
    }

    /// Integer key of the point at reference offset `(a, b)/2` inside cell `c`, with
    /// `a, b ∈ {0, 1, 2}`.
    pub fn half_key(&self, c: usize, a: u32, b: u32) -> [u32; 2] {
        let cell = &self.cells[c];
        let s = self.key_scale() >> cell.level;
        [cell.ij[0] * s + a * s / 2, cell.ij[1] * s + b * s / 2]
    }

    pub fn key_position(&self, key: [u32; 2]) -> [f64; 2] {
        let m = self.key_scale() as f64;
        [
            self.extent.x0 + key[0] as f64 / m * (self.extent.width() / self.nx as f64),
            self.extent.y0 + key[1] as f64 / m * (self.extent.height() / self.ny as f64),
        ]
    }

    pub fn vertex_key(&self, v: usize) -> [u32; 2] {
        self.vertex_keys[v]
    }

    pub fn cell_rect(&self, c: usize) -> Rect {
        let cell = &self.cells[c];
        let a = self.vertices[cell.vertices[0]];
        let b = self.vertices[cell.vertices[2]];
        Rect::new(a[0], b[0], a[1], b[1])
    }

    pub fn cell_size(&self, c: usize) -> [f64; 2] {
        let r = self.cell_rect(c);
        [r.width(), r.height()]
    }

    pub fn min_cell_size(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_size(c)[0].min(self.cell_size(c)[1])).fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_rect(c).area()).sum()
    }

    pub fn boundary_tags(&self) -> impl Iterator<Item = &str> {
        self.boundary.keys().map(|s| s.as_str())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.boundary.contains_key(tag)
    }

    /// Facets carrying `tag`, ordered along the boundary side.
    pub fn facets(&self, tag: &str) -> Result<&[Facet]> {
        self.boundary.get(tag).map(|v| v.as_slice()).ok_or_else(|| FemError::UnknownTag(tag.to_string()))
    }

    pub fn all_boundary_facets(&self) -> Vec<(&str, Facet)> {
        self.boundary.iter().flat_map(|(t, fs)| fs.iter().map(move |f| (t.as_str(), *f))).collect()
    }

    /// End points of a facet in the reference configuration, counter-clockwise.
    pub fn facet_endpoints(&self, f: Facet) -> [[f64; 2]; 2] {
        let v = self.cells[f.cell].vertices;
        [self.vertices[v[f.edge]], self.vertices[v[(f.edge + 1) % 4]]]
    }

    pub fn facet_midpoint(&self, f: Facet) -> [f64; 2] {
        let [a, b] = self.facet_endpoints(f);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn rename_tag(&mut self, from: &str, to: &str) -> Result<()> {
        let facets = self.boundary.remove(from).ok_or_else(|| FemError::UnknownTag(from.to_string()))?;
        self.boundary.entry(to.to_string()).or_default().extend(facets);
        Ok(())
    }

    /// Moves the facets of `from` whose midpoint satisfies `pred` to `to`.
    pub fn split_tag<F: Fn([f64; 2]) -> bool>(&mut self, from: &str, to: &str, pred: F) -> Result<()> {
        let facets = self.boundary.remove(from).ok_or_else(|| FemError::UnknownTag(from.to_string()))?;
        let (moved, kept): (Vec<Facet>, Vec<Facet>) = facets.into_iter().partition(|&f| pred(self.facet_midpoint(f)));
        if !kept.is_empty() {
            self.boundary.insert(from.to_string(), kept);
        }
        if !moved.is_empty() {
            self.boundary.entry(to.to_string()).or_default().extend(moved);
        }
        Ok(())
    }

    /// Checks the tag and conformity invariants.
    pub fn check(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (_, f) in self.all_boundary_facets() {
            if !seen.insert(f) {
                return Err(FemError::InvalidGeometry(format!("facet {f:?} carries more than one tag")));
            }
        }
        for (c, nb) in self.neighbors.iter().enumerate() {
            for (e, n) in nb.iter().enumerate() {
                if *n == Neighbor::Boundary && !seen.contains(&Facet { cell: c, edge: e }) {
                    return Err(FemError::InvalidGeometry(format!("boundary facet of cell {c} edge {e} is untagged")));
                }
                if let Neighbor::Same(k) = n {
                    let mine = self.facet_endpoints(Facet { cell: c, edge: e });
                    let theirs = self.facet_endpoints(Facet { cell: *k, edge: (e + 2) % 4 });
                    if mine[0] != theirs[1] || mine[1] != theirs[0] {
                        return Err(FemError::InvalidGeometry(format!("cells {c} and {k} are not conforming")));
                    }
                }
            }
            if self.cell_rect(c).area() <= 0.0 {
                return Err(FemError::InvalidGeometry(format!("cell {c} is degenerate")));
            }
        }
        Ok(())
    }
}
