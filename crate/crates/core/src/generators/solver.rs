//! Two-phase Laplace solver on a rasterized partition.
//!
//! Each phase satisfies the five-point equation at its interior nodes. A
//! neighbor across the curve is replaced by the crossing point on the edge,
//! where the phase vanishes, contributing `1/θ` to the diagonal (`θ` the
//! crossing fraction). The resulting matrix couples only same-phase nodes,
//! symmetrically, so the two phases are solved together as one SPD system.
//!
//! The default method is conjugate gradients preconditioned by a Galerkin
//! multigrid V-cycle; red-black SOR is kept as a reference.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::raster::Partition;
use crate::grid::GridField;
use crate::pair::{validate_pair, AdmissiblePair, Tolerances};
use crate::{Error, Result};

/// Smallest crossing fraction used in the stencil.
const THETA_MIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    /// CG with a multigrid V-cycle preconditioner (2D grids).
    MultigridCg,
    /// Red-black successive over-relaxation.
    RedBlackSor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Iteration cap: CG steps or SOR sweeps.
    pub max_sweeps: usize,
    /// Bound on `max |residual_i| / diag_i`, relative to the boundary data.
    pub residual_tol: f64,
    /// Sweep red nodes before black ones (`true`) or the reverse; SOR only.
    pub red_first: bool,
    /// Over-relaxation factor for SOR; `None` picks the optimum for the grid.
    pub omega: Option<f64>,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_sweeps: 60_000,
            residual_tol: 1e-10,
            red_first: true,
            omega: None,
            method: SolverMethod::MultigridCg,
        }
    }
}

/// Constant outer-boundary values for the two phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    pub plus: f64,
    pub minus: f64,
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData { plus: 1.0, minus: 1.0 }
    }
}

/// Assembled system in 2D nine-point form. Fixed nodes carry identity rows.
struct Level {
    nx: usize,
    ny: usize,
    /// Row coefficients, offset `(di, dj)` stored at `3(di+1) + (dj+1)`.
    a: Vec<[f64; 9]>,
    /// Nodes whose row is not an identity row.
    active: Vec<bool>,
}

impl Level {
    #[inline]
    fn nbr(&self, idx: usize, k: usize) -> Option<usize> {
        let (i, j) = (idx / self.ny, idx % self.ny);
        let (di, dj) = (k / 3, k % 3);
        if (i == 0 && di == 0) || (i + 1 == self.nx && di == 2) || (j == 0 && dj == 0) || (j + 1 == self.ny && dj == 2) {
            return None;
        }
        Some((i + di - 1) * self.ny + (j + dj - 1))
    }

    fn is_edge(&self, idx: usize) -> bool {
        let (i, j) = (idx / self.ny, idx % self.ny);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    #[inline]
    fn off_sum(&self, idx: usize, x: &[f64]) -> f64 {
        let row = &self.a[idx];
        let mut s = 0.0;
        if self.is_edge(idx) {
            for k in 0..9 {
                if k != 4 && row[k] != 0.0 {
                    if let Some(q) = self.nbr(idx, k) {
                        s += row[k] * x[q];
                    }
                }
            }
        } else {
            let ny = self.ny;
            let base = idx - ny - 1;
            s = row[0] * x[base] + row[1] * x[base + 1] + row[2] * x[base + 2]
                + row[3] * x[idx - 1] + row[5] * x[idx + 1]
                + row[6] * x[base + 2 * ny] + row[7] * x[base + 2 * ny + 1] + row[8] * x[base + 2 * ny + 2];
        }
        s
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = self.a[i][4] * x[i] + self.off_sum(i, x);
        }
    }

    fn gauss_seidel(&self, b: &[f64], x: &mut [f64], forward: bool) {
        let n = x.len();
        for t in 0..n {
            let i = if forward { t } else { n - 1 - t };
            if self.active[i] {
                x[i] = (b[i] - self.off_sum(i, x)) / self.a[i][4];
            } else {
                x[i] = b[i];
            }
        }
    }

    /// Galerkin coarse operator `Pᵀ A P`, `P` bilinear and masked by `active`.
    fn coarsen(&self) -> Option<Level> {
        if self.nx.is_multiple_of(2) || self.ny.is_multiple_of(2) || self.nx < 5 || self.ny < 5 {
            return None;
        }
        let (cx, cy) = (self.nx.div_ceil(2), self.ny.div_ceil(2));
        let mut a = vec![[0.0f64; 9]; cx * cy];
        let parents = |idx: usize, out: &mut [(usize, f64); 4]| -> usize {
            let (i, j) = (idx / self.ny, idx % self.ny);
            let is: &[(usize, f64)] = if i.is_multiple_of(2) { &[(i / 2, 1.0)] } else { &[(i / 2, 0.5), (i / 2 + 1, 0.5)] };
            let js: &[(usize, f64)] = if j.is_multiple_of(2) { &[(j / 2, 1.0)] } else { &[(j / 2, 0.5), (j / 2 + 1, 0.5)] };
            let mut n = 0;
            for &(ci, wi) in is {
                for &(cj, wj) in js {
                    out[n] = (ci * cy + cj, wi * wj);
                    n += 1;
                }
            }
            n
        };
        let mut pf = [(0usize, 0.0f64); 4];
        let mut pg = [(0usize, 0.0f64); 4];
        for f in 0..self.a.len() {
            if !self.active[f] {
                continue;
            }
            let nf = parents(f, &mut pf);
            for k in 0..9 {
                let afg = self.a[f][k];
                if afg == 0.0 {
                    continue;
                }
                let g = if k == 4 { f } else {
                    match self.nbr(f, k) {
                        Some(g) => g,
                        None => continue,
                    }
                };
                if !self.active[g] {
                    continue;
                }
                let ng = parents(g, &mut pg);
                for &(c, wc) in &pf[..nf] {
                    let (ci, cj) = ((c / cy) as isize, (c % cy) as isize);
                    for &(d, wd) in &pg[..ng] {
                        let (di, dj) = ((d / cy) as isize - ci, (d % cy) as isize - cj);
                        a[c][(3 * (di + 1) + (dj + 1)) as usize] += wc * afg * wd;
                    }
                }
            }
        }
        let mut active = vec![true; a.len()];
        for (c, row) in a.iter_mut().enumerate() {
            if !(row[4] > 0.0) {
                *row = [0.0; 9];
                row[4] = 1.0;
                active[c] = false;
            }
        }
        Some(Level { nx: cx, ny: cy, a, active })
    }

    fn restrict(&self, coarse: &Level, r: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let cy = coarse.ny;
        for f in 0..r.len() {
            if !self.active[f] || r[f] == 0.0 {
                continue;
            }
            let (i, j) = (f / self.ny, f % self.ny);
            for_parents(i, j, |ci, cj, w| out[ci * cy + cj] += w * r[f]);
        }
        for c in 0..out.len() {
            if !coarse.active[c] {
                out[c] = 0.0;
            }
        }
    }

    fn prolong_add(&self, coarse: &Level, xc: &[f64], x: &mut [f64]) {
        let cy = coarse.ny;
        for f in 0..x.len() {
            if !self.active[f] {
                continue;
            }
            let (i, j) = (f / self.ny, f % self.ny);
            let mut s = 0.0;
            for_parents(i, j, |ci, cj, w| s += w * xc[ci * cy + cj]);
            x[f] += s;
        }
    }
}

#[inline]
fn for_parents(i: usize, j: usize, mut f: impl FnMut(usize, usize, f64)) {
    let is: [(usize, f64); 2] = if i.is_multiple_of(2) { [(i / 2, 1.0), (0, 0.0)] } else { [(i / 2, 0.5), (i / 2 + 1, 0.5)] };
    let js: [(usize, f64); 2] = if j.is_multiple_of(2) { [(j / 2, 1.0), (0, 0.0)] } else { [(j / 2, 0.5), (j / 2 + 1, 0.5)] };
    for &(ci, wi) in &is {
        if wi == 0.0 {
            continue;
        }
        for &(cj, wj) in &js {
            if wj != 0.0 {
                f(ci, cj, wi * wj);
            }
        }
    }
}

struct Hierarchy {
    levels: Vec<Level>,
}

impl Hierarchy {
    fn new(fine: Level) -> Self {
        let mut levels = vec![fine];
        while levels.last().unwrap().a.len() > 81 {
            match levels.last().unwrap().coarsen() {
                Some(c) => levels.push(c),
                None => break,
            }
        }
        Hierarchy { levels }
    }

    /// One symmetric V-cycle applied to `b` from a zero guess.
    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let lev = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        if l + 1 == self.levels.len() {
            for _ in 0..100 {
                lev.gauss_seidel(b, x, true);
                lev.gauss_seidel(b, x, false);
            }
            return;
        }
        for _ in 0..2 {
            lev.gauss_seidel(b, x, true);
        }
        let mut r = vec![0.0; x.len()];
        lev.apply(x, &mut r);
        for i in 0..r.len() {
            r[i] = b[i] - r[i];
        }
        let coarse = &self.levels[l + 1];
        let mut bc = vec![0.0; coarse.a.len()];
        lev.restrict(coarse, &r, &mut bc);
        let mut xc = vec![0.0; coarse.a.len()];
        self.vcycle(l + 1, &bc, &mut xc);
        lev.prolong_add(coarse, &xc, x);
        for _ in 0..2 {
            lev.gauss_seidel(b, x, false);
        }
    }
}

fn cut_theta(part: &Partition, p: usize, q: usize, axis: usize, forward: bool) -> f64 {
    let t = if forward {
        part.cuts.get(&(p, axis)).map(|c| c.0)
    } else {
        part.cuts.get(&(q, axis)).map(|c| c.1)
    };
    t.unwrap_or(0.5).max(THETA_MIN)
}

/// The fine system: rows, right-hand side and initial values.
struct Assembly {
    diag: Vec<f64>,
    /// Same-phase free neighbors of each free node.
    nbrs: Vec<Vec<usize>>,
    free: Vec<bool>,
    rhs: Vec<f64>,
    fixed: Vec<f64>,
}

fn assemble(part: &Partition, boundary: &BoundaryData) -> Assembly {
    let g = &part.grid;
    let side = &part.side;
    let len = g.len();
    let free: Vec<bool> = (0..len).map(|i| side[i] != 0 && g.is_interior(i)).collect();
    let mut fixed = vec![0.0; len];
    for i in 0..len {
        if side[i] != 0 && !free[i] {
            fixed[i] = if side[i] > 0 { boundary.plus } else { boundary.minus };
        }
    }
    let mut diag = vec![1.0; len];
    let mut rhs = fixed.clone();
    let mut nbrs = vec![Vec::new(); len];
    for p in 0..len {
        if !free[p] {
            continue;
        }
        let s = side[p];
        let (mut d, mut b) = (0.0, 0.0);
        for axis in 0..g.dim() {
            for forward in [true, false] {
                let q = g.neighbor(p, axis, forward).unwrap();
                if side[q] == s {
                    d += 1.0;
                    if free[q] {
                        nbrs[p].push(q);
                    } else {
                        b += fixed[q];
                    }
                } else if side[q] == 0 {
                    d += 1.0;
                } else {
                    let t = if forward { cut_theta(part, p, q, axis, true) } else { cut_theta(part, q, p, axis, false) };
                    d += 1.0 / t;
                }
            }
        }
        diag[p] = d;
        rhs[p] = b;
    }
    Assembly { diag, nbrs, free, rhs, fixed }
}

fn fine_level(part: &Partition, asm: &Assembly) -> Level {
    let g = &part.grid;
    let (nx, ny) = (g.counts()[0], g.counts()[1]);
    let mut a = vec![[0.0f64; 9]; g.len()];
    for p in 0..g.len() {
        a[p][4] = asm.diag[p];
        for &q in &asm.nbrs[p] {
            let k = if q + ny == p { 1 } else if q == p + ny { 7 } else if q + 1 == p { 3 } else { 5 };
            a[p][k] = -1.0;
        }
    }
    Level { nx, ny, a, active: asm.free.clone() }
}

/// `max_i |r_i| / diag_i` over free nodes.
fn scaled_residual(asm: &Assembly, x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..x.len() {
        if asm.free[p] {
            let mut ax = asm.diag[p] * x[p];
            for &q in &asm.nbrs[p] {
                ax -= x[q];
            }
            worst = worst.max((asm.rhs[p] - ax).abs() / asm.diag[p]);
        }
    }
    worst
}

fn solve_mgcg(part: &Partition, asm: &Assembly, cfg: &SolverConfig, scale: f64) -> Result<Vec<f64>> {
    let fine = fine_level(part, asm);
    let h = Hierarchy::new(fine);
    let lev = &h.levels[0];
    let n = asm.rhs.len();
    let mut x = asm.fixed.clone();
    let mut r = vec![0.0; n];
    lev.apply(&x, &mut r);
    for i in 0..n {
        r[i] = asm.rhs[i] - r[i];
    }
    let mut z = vec![0.0; n];
    h.vcycle(0, &r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut residual = scaled_residual(asm, &x) / scale;
    let mut it = 0;
    while residual >= cfg.residual_tol && it < cfg.max_sweeps {
        lev.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        h.vcycle(0, &r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        residual = scaled_residual(asm, &x) / scale;
    }
    if residual < cfg.residual_tol {
        Ok(x)
    } else {
        Err(Error::SolverStall { sweeps: it, residual })
    }
}

fn solve_sor(part: &Partition, asm: &Assembly, cfg: &SolverConfig, scale: f64) -> Result<Vec<f64>> {
    let g = &part.grid;
    let n = g.dim();
    let mut x = asm.fixed.clone();
    let mut colors: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut m = [0usize; crate::grid::MAX_DIM];
    for p in 0..x.len() {
        if asm.free[p] {
            g.multi_index(p, &mut m);
            colors[m[..n].iter().sum::<usize>() % 2].push(p);
        }
    }
    let big = g.counts().iter().cloned().max().unwrap() as f64;
    let omega = cfg.omega.unwrap_or(2.0 / (1.0 + (core::f64::consts::PI / big).sin()));
    let order = if cfg.red_first { [0, 1] } else { [1, 0] };
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        for &c in &order {
            for &p in &colors[c] {
                let mut acc = asm.rhs[p];
                for &q in &asm.nbrs[p] {
                    acc += x[q];
                }
                let old = x[p];
                x[p] = old + omega * (acc / asm.diag[p] - old);
            }
        }
        sweeps += 1;
        if sweeps % 16 == 0 {
            residual = scaled_residual(asm, &x) / scale;
            if residual < cfg.residual_tol {
                return Ok(x);
            }
        }
    }
    Err(Error::SolverStall { sweeps, residual })
}

/// Solves for `u` on the positive side and `v` on the negative side, both
/// vanishing on the curve and equal to the boundary data on the grid boundary.
pub fn solve_two_sided_harmonic(
    part: &Partition,
    boundary: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<AdmissiblePair> {
    if !(cfg.residual_tol > 0.0) {
        return Err(Error::InvalidInput("residual tolerance must be positive"));
    }
    let g = &part.grid;
    let side = &part.side;
    let touches = |s: i8| (0..g.len()).any(|i| side[i] == s && !g.is_interior(i));
    if !touches(1) || !touches(-1) {
        return Err(Error::InvalidInput("both phases must reach the grid boundary"));
    }
    let asm = assemble(part, boundary);
    let scale = boundary.plus.abs().max(boundary.minus.abs()).max(f64::MIN_POSITIVE);
    let val = match cfg.method {
        SolverMethod::MultigridCg if g.dim() == 2 => solve_mgcg(part, &asm, cfg, scale)?,
        _ => solve_sor(part, &asm, cfg, scale)?,
    };

    let mut u = vec![0.0; g.len()];
    let mut v = vec![0.0; g.len()];
    for i in 0..g.len() {
        match side[i] {
            1 => u[i] = val[i].max(0.0),
            -1 => v[i] = val[i].max(0.0),
            _ => {}
        }
    }
    let u = GridField::new(g.clone(), u)?;
    let v = GridField::new(g.clone(), v)?;
    let tol = Tolerances { disjoint: Some(0.0), ..Tolerances::default() };
    validate_pair(u, v, &tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::curve::{CurveKind, InterfaceCurveSpec, WedgeProfile};
    use crate::generators::raster::rasterize_interface;
    use crate::Grid;

    fn solve_with(kind: CurveKind, nodes: usize, cfg: &SolverConfig) -> AdmissiblePair {
        let g = Grid::cube(2, 1.0, nodes).unwrap();
        let part = rasterize_interface(&InterfaceCurveSpec::new(kind), &g).unwrap();
        solve_two_sided_harmonic(&part, &BoundaryData::default(), cfg).unwrap()
    }

    fn solve(kind: CurveKind, nodes: usize) -> AdmissiblePair {
        solve_with(kind, nodes, &SolverConfig::default())
    }

    #[test]
    fn line_pair_is_symmetric_and_admissible() {
        let pair = solve(CurveKind::Line, 65);
        assert!(pair.report.pass, "{:?}", pair.report);
        let g = pair.grid().clone();
        for i in 0..g.len() {
            let mut m = [0usize; 2];
            g.multi_index(i, &mut m);
            let mirror = g.index(&[m[0], g.counts()[1] - 1 - m[1]]);
            assert!((pair.u.value(i) - pair.v.value(mirror)).abs() < 1e-8);
            assert!(pair.u.value(i) <= 1.0 + 1e-12 && pair.u.value(i) >= 0.0);
        }
    }

    #[test]
    fn flat_wedge_matches_line() {
        let a = solve(CurveKind::Line, 33);
        let b = solve(CurveKind::Wedge(WedgeProfile::Linear { slope: 0.0 }), 33);
        for i in 0..a.grid().len() {
            assert!((a.u.value(i) - b.u.value(i)).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_value_property_in_the_interior() {
        let pair = solve(CurveKind::Wedge(WedgeProfile::Linear { slope: 0.3 }), 65);
        assert!(pair.report.pass, "{:?}", pair.report);
        let g = pair.grid();
        let h2 = g.spacing() * g.spacing();
        for i in 0..g.len() {
            if !g.is_interior(i) || pair.u.value(i) == 0.0 {
                continue;
            }
            let all_pos = (0..2).all(|k| {
                pair.u.value(g.neighbor(i, k, true).unwrap()) > 0.0
                    && pair.u.value(g.neighbor(i, k, false).unwrap()) > 0.0
            });
            if all_pos {
                assert!(pair.u.laplacian(i).unwrap().abs() * h2 < 1e-8);
            }
        }
    }

    #[test]
    fn methods_agree() {
        let kind = CurveKind::Wedge(WedgeProfile::Linear { slope: 0.4 });
        let a = solve(kind, 65);
        let cfg = SolverConfig { method: SolverMethod::RedBlackSor, ..SolverConfig::default() };
        let b = solve_with(kind, 65, &cfg);
        for i in 0..a.grid().len() {
            assert!((a.u.value(i) - b.u.value(i)).abs() < 1e-7);
            assert!((a.v.value(i) - b.v.value(i)).abs() < 1e-7);
        }
    }

    #[test]
    fn stall_reports_residual() {
        let g = Grid::cube(2, 1.0, 33).unwrap();
        let part = rasterize_interface(&InterfaceCurveSpec::new(CurveKind::Line), &g).unwrap();
        for method in [SolverMethod::MultigridCg, SolverMethod::RedBlackSor] {
            let cfg = SolverConfig { max_sweeps: 1, method, ..SolverConfig::default() };
            match solve_two_sided_harmonic(&part, &BoundaryData::default(), &cfg) {
                Err(Error::SolverStall { residual, .. }) => assert!(residual > 0.0),
                other => panic!("{other:?}"),
            }
        }
    }
}
