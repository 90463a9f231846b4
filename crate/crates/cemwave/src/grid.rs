//! Nested periodic tensor meshes in 1D/2D. The coarse mesh partitions the
//! box into N_c cells per axis; each coarse cell is refined r times per
//! axis. Degrees of freedom live at fine nodes with opposite faces
//! identified, so the dof count per axis equals the fine cell count.
//!
//! Index conventions, x fastest:
//!   coarse element j   = jy * nc_x + jx
//!   fine element  e    = ey * nf_x + ex
//!   fine dof      p    = py * nf_x + px

use std::collections::BTreeSet;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PeriodicGrid {
    d: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    nc: [usize; 2],
    r: [usize; 2],
}

/// Oversampled patch around one coarse element: the Chebyshev ball of `m`
/// coarse layers with periodic wrap. Boundary dofs are the member dofs that
/// touch at least one non-member fine element; a full-cover patch has none.
#[derive(Debug, Clone)]
pub struct Patch {
    pub center: usize,
    pub m: usize,
    pub coarse_members: Vec<usize>,
    pub fine_elements: Vec<usize>,
    pub dofs: Vec<usize>,
    pub local_of_global: Vec<i64>,
    pub boundary_local: Vec<usize>,
    pub interior_local: Vec<usize>,
    pub full_cover: bool,
}

pub fn build_grid(d: usize, lo: &[f64], hi: &[f64], nc: &[usize], r: &[usize]) -> Result<PeriodicGrid> {
    if d != 1 && d != 2 {
        return Err(Error::InvalidGrid(format!("dimension {d} not supported")));
    }
    if lo.len() != d || hi.len() != d || nc.len() != d || r.len() != d {
        return Err(Error::InvalidGrid("axis counts do not match dimension".into()));
    }
    let mut glo = [0.0; 2];
    let mut ghi = [0.0; 2];
    let mut gnc = [1usize; 2];
    let mut gr = [1usize; 2];
    let mut total: u128 = 1;
    for k in 0..d {
        if !(hi[k] > lo[k]) {
            return Err(Error::InvalidGrid(format!("axis {k}: empty interval")));
        }
        if nc[k] < 2 {
            return Err(Error::InvalidGrid(format!("axis {k}: need at least 2 coarse cells")));
        }
        if r[k] < 1 {
            return Err(Error::InvalidGrid(format!("axis {k}: refinement must be positive")));
        }
        glo[k] = lo[k];
        ghi[k] = hi[k];
        gnc[k] = nc[k];
        gr[k] = r[k];
        total = total
            .checked_mul((nc[k] * r[k]) as u128)
            .ok_or_else(|| Error::InvalidGrid("index overflow".into()))?;
    }
    if total > (i64::MAX as u128) || total > 1_000_000_000 {
        return Err(Error::InvalidGrid("fine grid too large for index space".into()));
    }
    Ok(PeriodicGrid {
        d,
        lo: glo,
        hi: ghi,
        nc: gnc,
        r: gr,
    })
}

impl PeriodicGrid {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    /// Coarse cell count on axis k (1 for the unused axis in 1D).
    pub fn nc_axis(&self, k: usize) -> usize {
        self.nc[k]
    }

    pub fn refine_axis(&self, k: usize) -> usize {
        self.r[k]
    }

    /// Fine cells (= periodic dofs) on axis k.
    pub fn nf_axis(&self, k: usize) -> usize {
        self.nc[k] * self.r[k]
    }

    pub fn coarse_h(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.nc[k] as f64
    }

    pub fn fine_h(&self, k: usize) -> f64 {
        self.coarse_h(k) / self.r[k] as f64
    }

    /// Largest coarse cell side; the H quoted in reports.
    pub fn coarse_h_max(&self) -> f64 {
        (0..self.d).map(|k| self.coarse_h(k)).fold(0.0, f64::max)
    }

    pub fn fine_h_max(&self) -> f64 {
        (0..self.d).map(|k| self.fine_h(k)).fold(0.0, f64::max)
    }

    pub fn n_coarse(&self) -> usize {
        self.nc[0] * self.nc[1]
    }

    pub fn n_fine_elems(&self) -> usize {
        self.nf_axis(0) * self.nf_axis(1)
    }

    pub fn n_dofs(&self) -> usize {
        self.nf_axis(0) * self.nf_axis(1)
    }

    /// Nodes per element: 2 in 1D (P1 segment), 4 in 2D (Q1 quad).
    pub fn nodes_per_elem(&self) -> usize {
        1 << self.d
    }

    pub fn coarse_coords(&self, j: usize) -> [usize; 2] {
        [j % self.nc[0], j / self.nc[0]]
    }

    pub fn coarse_index(&self, jx: usize, jy: usize) -> usize {
        jy * self.nc[0] + jx
    }

    pub fn fine_elem_coords(&self, e: usize) -> [usize; 2] {
        [e % self.nf_axis(0), e / self.nf_axis(0)]
    }

    pub fn fine_elem_index(&self, ex: usize, ey: usize) -> usize {
        ey * self.nf_axis(0) + ex
    }

    pub fn dof_coords(&self, p: usize) -> [usize; 2] {
        [p % self.nf_axis(0), p / self.nf_axis(0)]
    }

    pub fn dof_index(&self, px: usize, py: usize) -> usize {
        (py % self.nf_axis(1).max(1)) * self.nf_axis(0) + (px % self.nf_axis(0))
    }

    /// Physical position of a fine dof.
    pub fn dof_position(&self, p: usize) -> [f64; 2] {
        let c = self.dof_coords(p);
        let mut x = [0.0; 2];
        for k in 0..self.d {
            x[k] = self.lo[k] + c[k] as f64 * self.fine_h(k);
        }
        x
    }

    /// Lower-left corner of a fine element.
    pub fn fine_elem_origin(&self, e: usize) -> [f64; 2] {
        let c = self.fine_elem_coords(e);
        let mut x = [0.0; 2];
        for k in 0..self.d {
            x[k] = self.lo[k] + c[k] as f64 * self.fine_h(k);
        }
        x
    }

    /// Corner dofs of a fine element with periodic wrap. 1D: [left, right];
    /// 2D: counterclockwise from the lower-left corner.
    pub fn fine_elem_nodes(&self, e: usize) -> ([usize; 4], usize) {
        let [ex, ey] = self.fine_elem_coords(e);
        let nfx = self.nf_axis(0);
        let xp = (ex + 1) % nfx;
        if self.d == 1 {
            ([ex, xp, 0, 0], 2)
        } else {
            let nfy = self.nf_axis(1);
            let yp = (ey + 1) % nfy;
            (
                [
                    ey * nfx + ex,
                    ey * nfx + xp,
                    yp * nfx + xp,
                    yp * nfx + ex,
                ],
                4,
            )
        }
    }

    /// Coarse element owning a fine element.
    pub fn owner_of_fine_elem(&self, e: usize) -> usize {
        let [ex, ey] = self.fine_elem_coords(e);
        self.coarse_index(ex / self.r[0], ey / self.r[1])
    }

    /// Fine elements of one coarse element (the r^d refinement block).
    pub fn fine_elems_of_coarse(&self, j: usize) -> Vec<usize> {
        let [jx, jy] = self.coarse_coords(j);
        let mut out = Vec::with_capacity(self.r[0] * self.r[1]);
        for sy in 0..self.r[1] {
            for sx in 0..self.r[0] {
                out.push(self.fine_elem_index(jx * self.r[0] + sx, jy * self.r[1] + sy));
            }
        }
        out
    }

    /// Fine elements incident to a dof (2 in 1D, 4 in 2D, periodic wrap).
    pub fn elems_around_dof(&self, p: usize) -> ([usize; 4], usize) {
        let [px, py] = self.dof_coords(p);
        let nfx = self.nf_axis(0);
        let xm = (px + nfx - 1) % nfx;
        if self.d == 1 {
            ([xm, px, 0, 0], 2)
        } else {
            let nfy = self.nf_axis(1);
            let ym = (py + nfy - 1) % nfy;
            (
                [
                    ym * nfx + xm,
                    ym * nfx + px,
                    py * nfx + xm,
                    py * nfx + px,
                ],
                4,
            )
        }
    }

    /// Nodal sample of a complex-valued function at all dofs.
    pub fn interpolate_nodal<F: Fn([f64; 2]) -> num_complex::Complex64>(
        &self,
        f: F,
    ) -> Vec<num_complex::Complex64> {
        (0..self.n_dofs()).map(|p| f(self.dof_position(p))).collect()
    }
}

/// Axis offsets covered by an m-layer ball on a periodic axis of n cells.
fn axis_offsets(n: usize, m: usize) -> Vec<usize> {
    if 2 * m + 1 >= n {
        (0..n).collect()
    } else {
        // -m..=m as wrapped nonnegative offsets
        let mut v: Vec<usize> = Vec::with_capacity(2 * m + 1);
        for off in 0..=m {
            v.push(off);
        }
        for off in 1..=m {
            v.push(n - off);
        }
        v
    }
}

pub fn extract_patch(grid: &PeriodicGrid, j: usize, m: usize) -> Result<Patch> {
    if j >= grid.n_coarse() {
        return Err(Error::InvalidGrid(format!(
            "element {j} out of range (N = {})",
            grid.n_coarse()
        )));
    }
    let [jx, jy] = grid.coarse_coords(j);
    let offs_x = axis_offsets(grid.nc_axis(0), m);
    let offs_y = if grid.dim() == 2 {
        axis_offsets(grid.nc_axis(1), m)
    } else {
        vec![0]
    };
    let mut members = BTreeSet::new();
    for &oy in &offs_y {
        for &ox in &offs_x {
            let cx = (jx + ox) % grid.nc_axis(0);
            let cy = (jy + oy) % grid.nc_axis(1).max(1);
            members.insert(grid.coarse_index(cx, cy));
        }
    }
    let coarse_members: Vec<usize> = members.iter().copied().collect();
    let full_cover = coarse_members.len() == grid.n_coarse();

    let mut member_mask = vec![false; grid.n_coarse()];
    for &c in &coarse_members {
        member_mask[c] = true;
    }

    let mut fine_elements: Vec<usize> = coarse_members
        .iter()
        .flat_map(|&c| grid.fine_elems_of_coarse(c))
        .collect();
    fine_elements.sort_unstable();

    let mut dof_set = BTreeSet::new();
    for &e in &fine_elements {
        let (nodes, nv) = grid.fine_elem_nodes(e);
        for &p in &nodes[..nv] {
            dof_set.insert(p);
        }
    }
    let dofs: Vec<usize> = dof_set.iter().copied().collect();

    let mut local_of_global = vec![-1i64; grid.n_dofs()];
    for (loc, &g) in dofs.iter().enumerate() {
        local_of_global[g] = loc as i64;
    }

    let mut boundary_local = Vec::new();
    let mut interior_local = Vec::new();
    for (loc, &p) in dofs.iter().enumerate() {
        let (around, na) = grid.elems_around_dof(p);
        let on_boundary = around[..na]
            .iter()
            .any(|&e| !member_mask[grid.owner_of_fine_elem(e)]);
        if on_boundary {
            boundary_local.push(loc);
        } else {
            interior_local.push(loc);
        }
    }

    Ok(Patch {
        center: j,
        m,
        coarse_members,
        fine_elements,
        dofs,
        local_of_global,
        boundary_local,
        interior_local,
        full_cover,
    })
}

impl Patch {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_local.len()
    }

    /// Global dof ids of the interior, in local interior order.
    pub fn interior_global(&self) -> Vec<usize> {
        self.interior_local.iter().map(|&l| self.dofs[l]).collect()
    }

    pub fn contains_coarse(&self, j: usize) -> bool {
        self.coarse_members.binary_search(&j).is_ok()
    }
}
