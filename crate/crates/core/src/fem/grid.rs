//! Uniform hexahedral grid with a per-element material table and a
//! matrix-free stiffness operator.
//!
//! The operator gathers, for every node, the rows of the eight adjacent
//! element matrices, so each output entry is written by exactly one task
//! and no reduction buffers are needed.

use std::collections::HashMap;

use crate::fem::element::Hex8;
use crate::par::{self, Exec};
use crate::tensor::ElasticTensor;

#[derive(Debug, Clone)]
pub struct Grid {
    nx: usize,
    nn: usize,
    origin: f64,
    periodic: bool,
    el: Hex8,
    mats: Vec<ElasticTensor>,
    ke: Vec<Box<[f64; 576]>>,
    elem_mat: Vec<u32>,
    fixed: Vec<bool>,
}

impl Grid {
    /// `nx³` elements of side `h` starting at `origin` along every axis.
    ///
    /// `material(ex, ey, ez)` gives each element's tensor. Without
    /// periodicity the boundary nodes are fixed; with it, node 0 is pinned.
    pub fn new<F>(nx: usize, h: f64, origin: f64, periodic: bool, material: F) -> Self
    where
        F: Fn(usize, usize, usize) -> ElasticTensor,
    {
        let el = Hex8::new(h);
        let nn = if periodic { nx } else { nx + 1 };
        let mut index: HashMap<[u64; 21], u32> = HashMap::new();
        let mut mats = Vec::new();
        let mut elem_mat = Vec::with_capacity(nx * nx * nx);
        for ez in 0..nx {
            for ey in 0..nx {
                for ex in 0..nx {
                    let a = material(ex, ey, ez);
                    let id = *index.entry(a.key()).or_insert_with(|| {
                        mats.push(a);
                        (mats.len() - 1) as u32
                    });
                    elem_mat.push(id);
                }
            }
        }
        let ke = mats.iter().map(|a| el.stiffness(a)).collect();
        let mut fixed = vec![false; nn * nn * nn];
        if periodic {
            fixed[0] = true;
        } else {
            for k in 0..nn {
                for j in 0..nn {
                    for i in 0..nn {
                        let edge = |c: usize| c == 0 || c == nn - 1;
                        if edge(i) || edge(j) || edge(k) {
                            fixed[i + nn * (j + nn * k)] = true;
                        }
                    }
                }
            }
        }
        Grid {
            nx,
            nn,
            origin,
            periodic,
            el,
            mats,
            ke,
            elem_mat,
            fixed,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        self.el.h
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn element(&self) -> &Hex8 {
        &self.el
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nn
    }

    pub fn n_nodes(&self) -> usize {
        self.nn * self.nn * self.nn
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.nx * self.nx
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.n_nodes()
    }

    /// Number of distinct element matrices.
    pub fn n_materials(&self) -> usize {
        self.mats.len()
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node]
    }

    pub fn element_material(&self, e: usize) -> &ElasticTensor {
        &self.mats[self.elem_mat[e] as usize]
    }

    pub fn element_coords(&self, e: usize) -> (usize, usize, usize) {
        (e % self.nx, (e / self.nx) % self.nx, e / (self.nx * self.nx))
    }

    /// Coordinates of node `(i, j, k)`.
    pub fn node_position(&self, node: usize) -> [f64; 3] {
        let nn = self.nn;
        let (i, j, k) = (node % nn, (node / nn) % nn, node / (nn * nn));
        let h = self.h();
        [
            self.origin + i as f64 * h,
            self.origin + j as f64 * h,
            self.origin + k as f64 * h,
        ]
    }

    /// Global node numbers of element `(ex, ey, ez)` in local order.
    #[inline]
    pub fn element_nodes(&self, ex: usize, ey: usize, ez: usize) -> [usize; 8] {
        let nn = self.nn;
        let w = |c: usize| if c == nn { 0 } else { c };
        std::array::from_fn(|a| {
            let i = w(ex + (a & 1));
            let j = w(ey + ((a >> 1) & 1));
            let k = w(ez + ((a >> 2) & 1));
            i + nn * (j + nn * k)
        })
    }

    #[inline]
    pub fn gather(&self, nodes: &[usize; 8], x: &[f64]) -> [f64; 24] {
        let mut ue = [0.0; 24];
        for (a, &n) in nodes.iter().enumerate() {
            ue[3 * a..3 * a + 3].copy_from_slice(&x[3 * n..3 * n + 3]);
        }
        ue
    }

    /// Element `e`'s nodal values.
    pub fn element_values(&self, e: usize, x: &[f64]) -> [f64; 24] {
        let (ex, ey, ez) = self.element_coords(e);
        self.gather(&self.element_nodes(ex, ey, ez), x)
    }

    #[inline]
    fn adjacent(&self, c: usize, d: usize) -> Option<usize> {
        if self.periodic {
            Some((c + self.nx + d - 1) % self.nx)
        } else {
            (c + d).checked_sub(1).filter(|&e| e < self.nx)
        }
    }

    /// `y = K x` on free degrees of freedom; fixed entries of `y` are zero.
    pub fn apply(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        let nn = self.nn;
        par::for_each_chunk_mut(exec, y, 3 * nn, |row, yrow| {
            let (j, k) = (row % nn, row / nn);
            for i in 0..nn {
                let node = i + nn * row;
                let out = &mut yrow[3 * i..3 * i + 3];
                if self.fixed[node] {
                    out.fill(0.0);
                    continue;
                }
                let mut acc = [0.0; 3];
                for a in 0..8 {
                    let (dx, dy, dz) = (a & 1, (a >> 1) & 1, (a >> 2) & 1);
                    let (Some(ex), Some(ey), Some(ez)) =
                        (self.adjacent(i, dx), self.adjacent(j, dy), self.adjacent(k, dz))
                    else {
                        continue;
                    };
                    // the node is local vertex 7 − a of that element
                    let local = 7 - a;
                    let e = ex + self.nx * (ey + self.nx * ez);
                    let ke = &self.ke[self.elem_mat[e] as usize];
                    let ue = self.gather(&self.element_nodes(ex, ey, ez), x);
                    for (r, acc_r) in acc.iter_mut().enumerate() {
                        let kr = &ke[24 * (3 * local + r)..24 * (3 * local + r) + 24];
                        *acc_r += kr.iter().zip(&ue).map(|(p, q)| p * q).sum::<f64>();
                    }
                }
                out.copy_from_slice(&acc);
            }
        });
    }

    /// Diagonal of `K`, with ones on fixed entries.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_dofs()];
        for ez in 0..self.nx {
            for ey in 0..self.nx {
                for ex in 0..self.nx {
                    let e = ex + self.nx * (ey + self.nx * ez);
                    let ke = &self.ke[self.elem_mat[e] as usize];
                    for (a, &n) in self.element_nodes(ex, ey, ez).iter().enumerate() {
                        for r in 0..3 {
                            let l = 3 * a + r;
                            d[3 * n + r] += ke[24 * l + l];
                        }
                    }
                }
            }
        }
        for (n, &f) in self.fixed.iter().enumerate() {
            if f {
                d[3 * n..3 * n + 3].fill(1.0);
            }
        }
        d
    }

    /// Assembles `Σ_e P_eᵀ f_e` over the elements for which `f` returns a vector.
    pub fn assemble<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize) -> Option<[f64; 24]>,
    {
        let mut out = vec![0.0; self.n_dofs()];
        for e in 0..self.n_elements() {
            if let Some(fe) = f(e) {
                let (ex, ey, ez) = self.element_coords(e);
                for (a, &n) in self.element_nodes(ex, ey, ez).iter().enumerate() {
                    for r in 0..3 {
                        out[3 * n + r] += fe[3 * a + r];
                    }
                }
            }
        }
        self.mask(&mut out);
        out
    }

    /// Zeroes fixed degrees of freedom.
    pub fn mask(&self, v: &mut [f64]) {
        for (n, &f) in self.fixed.iter().enumerate() {
            if f {
                v[3 * n..3 * n + 3].fill(0.0);
            }
        }
    }

    /// `uᵀ K_e u` for element `e`.
    pub fn element_energy(&self, e: usize, ue: &[f64; 24]) -> f64 {
        let ke = &self.ke[self.elem_mat[e] as usize];
        let mut s = 0.0;
        for r in 0..24 {
            let kr = &ke[24 * r..24 * r + 24];
            s += ue[r] * kr.iter().zip(ue).map(|(p, q)| p * q).sum::<f64>();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::IsoModuli;

    fn checker(nx: usize, periodic: bool) -> Grid {
        let a = IsoModuli::new(1.0, 0.5).unwrap().to_tensor();
        let b = IsoModuli::new(3.0, 1.2).unwrap().to_tensor();
        Grid::new(nx, 0.5, -1.0, periodic, |i, j, k| if (i + j + k) % 2 == 0 { a } else { b })
    }

    fn dense_apply(g: &Grid, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; g.n_dofs()];
        for e in 0..g.n_elements() {
            let ue = g.element_values(e, x);
            let ke = &g.ke[g.elem_mat[e] as usize];
            let (ex, ey, ez) = g.element_coords(e);
            for (a, &n) in g.element_nodes(ex, ey, ez).iter().enumerate() {
                for r in 0..3 {
                    let row = 3 * a + r;
                    y[3 * n + r] += (0..24).map(|c| ke[24 * row + c] * ue[c]).sum::<f64>();
                }
            }
        }
        g.mask(&mut y);
        y
    }

    #[test]
    fn gather_operator_matches_scatter_assembly() {
        for periodic in [false, true] {
            let g = checker(4, periodic);
            assert_eq!(g.n_materials(), 2);
            let mut x: Vec<f64> = (0..g.n_dofs()).map(|i| ((i * 37 % 17) as f64).sin()).collect();
            g.mask(&mut x);
            let want = dense_apply(&g, &x);
            for exec in [Exec::Sequential, Exec::Parallel] {
                let mut y = vec![0.0; g.n_dofs()];
                g.apply(exec, &x, &mut y);
                for (p, q) in y.iter().zip(&want) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn operator_is_symmetric_positive() {
        let g = checker(3, false);
        let n = g.n_dofs();
        let mut u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut v: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).sin()).collect();
        g.mask(&mut u);
        g.mask(&mut v);
        let (mut ku, mut kv) = (vec![0.0; n], vec![0.0; n]);
        g.apply(Exec::Sequential, &u, &mut ku);
        g.apply(Exec::Sequential, &v, &mut kv);
        let vku: f64 = v.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let ukv: f64 = u.iter().zip(&kv).map(|(a, b)| a * b).sum();
        assert!((vku - ukv).abs() < 1e-12 * vku.abs().max(1.0));
        assert!(u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>() > 0.0);
    }

    #[test]
    fn fixed_nodes() {
        let g = checker(2, false);
        assert_eq!(g.n_nodes(), 27);
        assert_eq!((0..27).filter(|&n| !g.is_fixed(n)).count(), 1);
        let p = checker(2, true);
        assert_eq!(p.n_nodes(), 8);
        assert_eq!((0..8).filter(|&n| p.is_fixed(n)).count(), 1);
        assert_eq!(g.node_position(13), [-0.5, -0.5, -0.5]);
    }
}
