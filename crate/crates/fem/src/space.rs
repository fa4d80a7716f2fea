//! Continuous Lagrange spaces on quadtree meshes.
//!
//! Nodes on the finer side of a 2:1 edge that are not nodes of the coarse cell
//! are hanging: their values are fixed linear combinations of free nodes, so the
//! global basis stays conforming.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::basis::LagrangeQuad;
use crate::error::{FemError, Result};
use crate::mesh::{Mesh, Neighbor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Scalar,
    Vector,
}

impl Family {
    pub fn components(self) -> usize {
        match self {
            Family::Scalar => 1,
            Family::Vector => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    family: Family,
    basis: LagrangeQuad,
    keys: Vec<[u32; 2]>,
    positions: Vec<[f64; 2]>,
    cell_nodes: Vec<u32>,
    /// Offsets into `expansion` per node.
    exp_ptr: Vec<u32>,
    expansion: Vec<(u32, f64)>,
    free_node: Vec<u32>,
    n_free: usize,
    boundary_nodes: HashMap<String, Vec<u32>>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, family: Family, degree: usize) -> Result<Self> {
        let basis = LagrangeQuad::new(degree)?;
        let nloc = basis.len();
        let n1 = basis.n_1d() as u32;
        let step = if degree == 1 { 2 } else { 1 };
        let mut node_of: HashMap<[u32; 2], u32> = HashMap::new();
        let mut keys = Vec::new();
        let mut cell_nodes = Vec::with_capacity(mesh.num_cells() * nloc);
        for c in 0..mesh.num_cells() {
            for b in 0..n1 {
                for a in 0..n1 {
                    let key = mesh.half_key(c, a * step, b * step);
                    let id = *node_of.entry(key).or_insert_with(|| {
                        keys.push(key);
                        (keys.len() - 1) as u32
                    });
                    cell_nodes.push(id);
                }
            }
        }

        // Constraints from every coarse edge facing two finer cells.
        let mut hanging: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for c in 0..mesh.num_cells() {
            for e in 0..4 {
                if !matches!(mesh.neighbor(c, e), Neighbor::Finer(_)) {
                    continue;
                }
                let en: Vec<u32> = basis.edge_nodes(e).iter().map(|&k| cell_nodes[c * nloc + k]).collect();
                let k0 = keys[en[0] as usize];
                let k1 = keys[*en.last().unwrap() as usize];
                let at = |num: u32, den: u32| -> [u32; 2] {
                    [
                        ((k0[0] as u64 * (den - num) as u64 + k1[0] as u64 * num as u64) / den as u64) as u32,
                        ((k0[1] as u64 * (den - num) as u64 + k1[1] as u64 * num as u64) / den as u64) as u32,
                    ]
                };
                let rules: Vec<([u32; 2], Vec<(u32, f64)>)> = if degree == 2 {
                    vec![
                        (at(1, 4), vec![(en[0], 0.375), (en[1], 0.75), (en[2], -0.125)]),
                        (at(3, 4), vec![(en[0], -0.125), (en[1], 0.75), (en[2], 0.375)]),
                    ]
                } else {
                    vec![(at(1, 2), vec![(en[0], 0.5), (en[1], 0.5)])]
                };
                for (key, masters) in rules {
                    let node = *node_of.get(&key).ok_or_else(|| {
                        FemError::InvalidGeometry(format!("missing hanging node near cell {c}"))
                    })?;
                    hanging.insert(node, masters);
                }
            }
        }

        let n_nodes = keys.len();
        let mut free_index = vec![u32::MAX; n_nodes];
        let mut free_node = Vec::new();
        for &id in &cell_nodes {
            if free_index[id as usize] == u32::MAX && !hanging.contains_key(&id) {
                free_index[id as usize] = free_node.len() as u32;
                free_node.push(id);
            }
        }

        // Resolve constraint chains (possible for the bilinear space).
        fn resolve(
            node: u32,
            hanging: &HashMap<u32, Vec<(u32, f64)>>,
            free_index: &[u32],
            memo: &mut HashMap<u32, Vec<(u32, f64)>>,
            depth: usize,
        ) -> Vec<(u32, f64)> {
            if let Some(m) = memo.get(&node) {
                return m.clone();
            }
            let out = match hanging.get(&node) {
                None => vec![(free_index[node as usize], 1.0)],
                Some(masters) => {
                    assert!(depth < 64, "cyclic hanging-node constraints");
                    let mut acc: Vec<(u32, f64)> = Vec::new();
                    for &(m, w) in masters {
                        for (f, wf) in resolve(m, hanging, free_index, memo, depth + 1) {
                            match acc.iter_mut().find(|(g, _)| *g == f) {
                                Some(slot) => slot.1 += w * wf,
                                None => acc.push((f, w * wf)),
                            }
                        }
                    }
                    acc.sort_by_key(|p| p.0);
                    acc
                }
            };
            memo.insert(node, out.clone());
            out
        }
        let mut memo = HashMap::new();
        let mut exp_ptr = Vec::with_capacity(n_nodes + 1);
        let mut expansion = Vec::new();
        exp_ptr.push(0u32);
        for node in 0..n_nodes as u32 {
            expansion.extend(resolve(node, &hanging, &free_index, &mut memo, 0));
            exp_ptr.push(expansion.len() as u32);
        }

        let mut boundary_nodes = HashMap::new();
        for tag in mesh.boundary_tags() {
            let mut set = BTreeSet::new();
            for f in mesh.facets(tag)? {
                for k in basis.edge_nodes(f.edge) {
                    set.insert(cell_nodes[f.cell * nloc + k]);
                }
            }
            boundary_nodes.insert(tag.to_string(), set.into_iter().collect());
        }
        let positions = keys.iter().map(|&k| mesh.key_position(k)).collect();
        let n_free = free_node.len();
        Ok(Self { mesh, family, basis, keys, positions, cell_nodes, exp_ptr, expansion, free_node, n_free, boundary_nodes })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn components(&self) -> usize {
        self.family.components()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &LagrangeQuad {
        &self.basis
    }

    /// Geometric nodes, including hanging ones.
    pub fn n_nodes(&self) -> usize {
        self.keys.len()
    }

    /// Free scalar coefficients per component.
    pub fn n_scalar_dofs(&self) -> usize {
        self.n_free
    }

    pub fn n_dofs(&self) -> usize {
        self.n_free * self.components()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.basis.len()
    }

    pub fn cell_nodes(&self, c: usize) -> &[u32] {
        let n = self.basis.len();
        &self.cell_nodes[c * n..(c + 1) * n]
    }

    pub fn node_key(&self, node: usize) -> [u32; 2] {
        self.keys[node]
    }

    pub fn node_position(&self, node: usize) -> [f64; 2] {
        self.positions[node]
    }

    pub fn node_positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    /// Free coefficients (and weights) defining the value at `node`.
    pub fn node_expansion(&self, node: usize) -> &[(u32, f64)] {
        &self.expansion[self.exp_ptr[node] as usize..self.exp_ptr[node + 1] as usize]
    }

    pub fn is_hanging(&self, node: usize) -> bool {
        let e = self.node_expansion(node);
        !(e.len() == 1 && self.free_node[e[0].0 as usize] as usize == node)
    }

    /// Geometric node carrying scalar free coefficient `k`.
    pub fn free_node(&self, k: usize) -> usize {
        self.free_node[k] as usize
    }

    pub fn dof(&self, component: usize, scalar: usize) -> usize {
        component * self.n_free + scalar
    }

    /// Scalar free index of a non-hanging node.
    pub fn scalar_dof_of_node(&self, node: usize) -> Option<usize> {
        if self.is_hanging(node) {
            None
        } else {
            Some(self.node_expansion(node)[0].0 as usize)
        }
    }

    /// Global DOFs the basis of cell `c` depends on.
    pub fn cell_dofs(&self, c: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for comp in 0..self.components() {
            for &n in self.cell_nodes(c) {
                for &(k, _) in self.node_expansion(n as usize) {
                    out.insert(self.dof(comp, k as usize));
                }
            }
        }
        out.into_iter().collect()
    }

    /// Geometric nodes on facets tagged `tag`, in increasing node order.
    pub fn boundary_nodes(&self, tag: &str) -> Result<&[u32]> {
        self.boundary_nodes.get(tag).map(|v| v.as_slice()).ok_or_else(|| FemError::UnknownTag(tag.to_string()))
    }

    /// DOFs of one component on `tag`.
    pub fn boundary_dofs_component(&self, tag: &str, component: usize) -> Result<BTreeSet<usize>> {
        Ok(self
            .boundary_nodes(tag)?
            .iter()
            .map(|&n| self.dof(component, self.scalar_dof_of_node(n as usize).expect("boundary nodes are free")))
            .collect())
    }

    pub fn boundary_dofs(&self, tag: &str) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for comp in 0..self.components() {
            out.extend(self.boundary_dofs_component(tag, comp)?);
        }
        Ok(out)
    }

    /// Values at every geometric node of one component.
    pub fn expand_component(&self, coeffs: &[f64], component: usize) -> Vec<f64> {
        let off = component * self.n_free;
        (0..self.n_nodes())
            .map(|n| self.node_expansion(n).iter().map(|&(k, w)| w * coeffs[off + k as usize]).sum())
            .collect()
    }

    pub fn expand_scalar(&self, coeffs: &[f64]) -> Vec<f64> {
        self.expand_component(coeffs, 0)
    }

    pub fn expand_vector(&self, coeffs: &[f64]) -> Vec<[f64; 2]> {
        let x = self.expand_component(coeffs, 0);
        let y = self.expand_component(coeffs, 1);
        x.into_iter().zip(y).map(|(a, b)| [a, b]).collect()
    }

    /// Nodal interpolant of `f` evaluated at reference positions.
    pub fn interpolate<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_free).map(|k| f(self.positions[self.free_node[k] as usize])).collect()
    }

    pub fn interpolate_vector<F: Fn([f64; 2]) -> [f64; 2]>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n_free];
        for k in 0..self.n_free {
            let v = f(self.positions[self.free_node[k] as usize]);
            out[k] = v[0];
            out[self.n_free + k] = v[1];
        }
        out
    }

    /// Free coefficients from values at all nodes (hanging values are ignored).
    pub fn restrict_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        (0..self.n_free).map(|k| nodal[self.free_node[k] as usize]).collect()
    }

    pub fn restrict_vector(&self, nodal: &[[f64; 2]]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n_free];
        for k in 0..self.n_free {
            let v = nodal[self.free_node[k] as usize];
            out[k] = v[0];
            out[self.n_free + k] = v[1];
        }
        out
    }
}

/// Coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct Field {
    pub space: Arc<FunctionSpace>,
    pub coefficients: Vec<f64>,
    pub units: String,
}

impl Field {
    pub fn new(space: Arc<FunctionSpace>, coefficients: Vec<f64>, units: &str) -> Result<Self> {
        if coefficients.len() != space.n_dofs() {
            return Err(FemError::Assembly(format!(
                "field has {} coefficients, space has {} DOFs",
                coefficients.len(),
                space.n_dofs()
            )));
        }
        Ok(Self { space, coefficients, units: units.to_string() })
    }

    pub fn zeros(space: Arc<FunctionSpace>, units: &str) -> Self {
        let n = space.n_dofs();
        Self { space, coefficients: vec![0.0; n], units: units.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rect, RefineBox};

    fn graded() -> Arc<Mesh> {
        let boxes = [RefineBox { region: Rect::new(0.0, 0.2, 0.0, 0.2), levels: 3 }];
        Arc::new(build_structured_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), (2, 2), &boxes).unwrap())
    }

    #[test]
    fn uniform_q2_counts() {
        let m = Arc::new(build_structured_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), (3, 2), &[]).unwrap());
        let s = FunctionSpace::new(m.clone(), Family::Scalar, 2).unwrap();
        assert_eq!(s.n_dofs(), 7 * 5);
        let v = FunctionSpace::new(m, Family::Vector, 1).unwrap();
        assert_eq!(v.n_dofs(), 2 * 4 * 3);
    }

    #[test]
    fn dof_map_is_surjective() {
        let m = graded();
        for p in [1, 2] {
            let s = FunctionSpace::new(m.clone(), Family::Vector, p).unwrap();
            let mut hit = vec![false; s.n_dofs()];
            for c in 0..m.num_cells() {
                for d in s.cell_dofs(c) {
                    hit[d] = true;
                }
            }
            assert!(hit.iter().all(|&h| h));
        }
    }

    #[test]
    fn hanging_nodes_reproduce_quadratics() {
        let m = graded();
        let s = FunctionSpace::new(m, Family::Scalar, 2).unwrap();
        assert!((0..s.n_nodes()).any(|n| s.is_hanging(n)));
        let f = |p: [f64; 2]| 1.0 + p[0] - 2.0 * p[1] + 3.0 * p[0] * p[0] - p[0] * p[1] + 0.5 * p[1] * p[1];
        let nodal = s.expand_scalar(&s.interpolate(f));
        for n in 0..s.n_nodes() {
            assert!((nodal[n] - f(s.node_position(n))).abs() < 1e-13);
        }
    }

    #[test]
    fn bilinear_chains_reproduce_linears() {
        let boxes = [RefineBox { region: Rect::new(0.0, 0.01, 0.0, 0.01), levels: 5 }];
        let m = Arc::new(build_structured_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), (1, 1), &boxes).unwrap());
        let s = FunctionSpace::new(m, Family::Scalar, 1).unwrap();
        let f = |p: [f64; 2]| 2.0 - p[0] + 4.0 * p[1];
        let nodal = s.expand_scalar(&s.interpolate(f));
        for n in 0..s.n_nodes() {
            assert!((nodal[n] - f(s.node_position(n))).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_nodes_are_free_and_on_facets() {
        let m = graded();
        let s = FunctionSpace::new(m, Family::Scalar, 2).unwrap();
        for &n in s.boundary_nodes("bottom").unwrap() {
            assert!(!s.is_hanging(n as usize));
            assert_eq!(s.node_position(n as usize)[1], 0.0);
        }
        assert!(s.boundary_nodes("nowhere").is_err());
    }
}
