//! Uniform grids on axis-aligned boxes, fields on them, and trajectories.
//!
//! A [`GridField`] is a scalar field sampled on the nodes of a uniform grid,
//! together with a [`TailSpec`] describing the function on the rest of `ℝᵈ`.
//! Between nodes the field is piecewise multilinear; this keeps the discrete
//! maximum principle available to the evolution module.
//!
//! On-disk format (`.field` files): a plain-text header of `key = value`
//! lines, a `---` separator, then a CSV body of node values in row-major
//! order, one row per flattened leading index, columns along the last axis.
//! Trajectories are saved as a directory of slice files plus `index.csv`
//! listing `k,t,file`.

use crate::error::{Error, Result};
use crate::tail::TailSpec;
use std::fmt::Write as _;
use std::path::Path;

/// Geometry of a uniform grid: box center, nodes per axis, spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    center: Vec<f64>,
    n: Vec<usize>,
    h: f64,
}

impl Grid {
    pub fn new(center: Vec<f64>, n: Vec<usize>, h: f64) -> Result<Self> {
        let d = center.len();
        if d == 0 || d > 3 {
            return Err(Error::Domain(format!("grid dimension {d} not in 1..=3")));
        }
        if n.len() != d {
            return Err(Error::Domain("center/node-count length mismatch".into()));
        }
        if n.iter().any(|&k| k < 3) {
            return Err(Error::Domain("need at least 3 nodes per axis".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("grid spacing must be positive: {h}")));
        }
        Ok(Self { center, n, h })
    }

    /// Symmetric 1D grid on `[-half_width, half_width]` with `nodes` nodes.
    pub fn symmetric_1d(half_width: f64, nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::Domain("need at least 3 nodes".into()));
        }
        let h = 2.0 * half_width / (nodes - 1) as f64;
        Grid::new(vec![0.0], vec![nodes], h)
    }

    pub fn d(&self) -> usize {
        self.center.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        self.h * (self.n[axis] - 1) as f64 / 2.0
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width(axis)
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_width(axis)
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Closed-box membership; points outside belong to the tail.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.d()).all(|a| x[a] >= self.lo(a) && x[a] <= self.hi(a))
    }

    /// Distance from `x` to the complement of the box (0 outside).
    pub fn interior_margin(&self, x: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for a in 0..self.d() {
            m = m.min(x[a] - self.lo(a)).min(self.hi(a) - x[a]);
        }
        m.max(0.0)
    }

    pub fn node_coord(&self, axis: usize, i: usize) -> f64 {
        self.lo(axis) + i as f64 * self.h
    }

    /// Multi-index of the flat index, row-major.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let d = self.d();
        let mut out = vec![0usize; d];
        for a in (0..d).rev() {
            out[a] = idx % self.n[a];
            idx /= self.n[a];
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        let mut idx = 0usize;
        for a in 0..self.d() {
            idx = idx * self.n[a] + multi[a];
        }
        idx
    }

    pub fn node_position(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.node_coord(a, i))
            .collect()
    }

    /// True if the node has at least `layers` node layers between it and the
    /// box boundary on every axis.
    pub fn is_interior(&self, idx: usize, layers: usize) -> bool {
        self.unflatten(idx)
            .iter()
            .zip(&self.n)
            .all(|(&i, &na)| i >= layers && i + layers < na)
    }
}

/// Scalar field on a grid plus exterior data.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
    tail: TailSpec,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, tail: TailSpec) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite node value".into()));
        }
        Ok(Self { grid, values, tail })
    }

    /// Samples `f` at every node.
    pub fn sample(grid: Grid, tail: TailSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.node_position(i))).collect();
        GridField::new(grid, values, tail)
    }

    pub fn constant(grid: Grid, c: f64, tail: TailSpec) -> Result<Self> {
        let n = grid.len();
        GridField::new(grid, vec![c; n], tail)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn tail(&self) -> &TailSpec {
        &self.tail
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn oscillation(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    /// Piecewise-multilinear interpolation inside the box. `x` must be in
    /// the (closed) box.
    pub fn interp(&self, x: &[f64]) -> f64 {
        let d = self.grid.d();
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..d {
            let t = (x[a] - self.grid.lo(a)) / self.grid.h();
            let mut i = t.floor() as isize;
            let max_cell = self.grid.n[a] as isize - 2;
            if i < 0 {
                i = 0;
            } else if i > max_cell {
                i = max_cell;
            }
            cell[a] = i as usize;
            frac[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut multi = [0usize; 3];
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    multi[a] = cell[a] + 1;
                } else {
                    w *= 1.0 - frac[a];
                    multi[a] = cell[a];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.grid.flatten(&multi[..d])];
            }
        }
        acc
    }

    /// The extended function: grid interpolation inside the box, tail
    /// outside.
    pub fn eval_extended(&self, x: &[f64]) -> f64 {
        if self.grid.contains(x) {
            self.interp(x)
        } else {
            self.tail.eval(x)
        }
    }

    /// Node-wise `self ≥ other` on a shared grid.
    pub fn ge_nodewise(&self, other: &GridField) -> Result<Option<usize>> {
        if self.grid != other.grid {
            return Err(Error::Domain("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a < b))
    }

    pub fn save(&self, path: &Path, params_line: Option<(f64, f64)>) -> Result<()> {
        let mut out = String::new();
        out.push_str("fpheat-field v1\n");
        writeln!(out, "d = {}", self.grid.d()).unwrap();
        writeln!(out, "center = {}", join_f64(self.grid.center())).unwrap();
        writeln!(
            out,
            "n = {}",
            self.grid.n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        )
        .unwrap();
        writeln!(out, "h = {}", self.grid.h()).unwrap();
        writeln!(
            out,
            "half_width = {}",
            join_f64(&(0..self.grid.d()).map(|a| self.grid.half_width(a)).collect::<Vec<_>>())
        )
        .unwrap();
        if let Some((s, p)) = params_line {
            writeln!(out, "s = {s}").unwrap();
            writeln!(out, "p = {p}").unwrap();
        }
        writeln!(out, "tail = {}", self.tail.tag()).unwrap();
        out.push_str("---\n");
        let row_len = *self.grid.n.last().unwrap();
        for row in self.values.chunks(row_len) {
            out.push_str(&join_csv(row));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let magic = lines.next().unwrap_or_default();
        if magic.trim() != "fpheat-field v1" {
            return Err(Error::Domain(format!("not a field file: {}", path.display())));
        }
        let mut d = None;
        let mut center = None;
        let mut n = None;
        let mut h = None;
        let mut tail = None;
        for line in lines.by_ref() {
            let line = line.trim();
            if line == "---" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("bad header line: {line}")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(bad_num)?),
                "center" => center = Some(parse_f64_list(v)?),
                "n" => {
                    n = Some(
                        v.split_whitespace()
                            .map(|t| t.parse::<usize>().map_err(bad_num))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "h" => h = Some(v.parse::<f64>().map_err(bad_num)?),
                "tail" => tail = Some(TailSpec::parse(v)?),
                // informational entries (half_width, s, p) are not needed to
                // reconstruct the field
                _ => {}
            }
        }
        let (Some(_d), Some(center), Some(n), Some(h), Some(tail)) = (d, center, n, h, tail)
        else {
            return Err(Error::Domain("incomplete field header".into()));
        };
        let grid = Grid::new(center, n, h)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split(',') {
                values.push(tok.trim().parse::<f64>().map_err(bad_num)?);
            }
        }
        GridField::new(grid, values, tail)
    }
}

fn bad_num<E: std::fmt::Display>(e: E) -> Error {
    Error::Domain(format!("bad number in field file: {e}"))
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn join_csv(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| t.parse::<f64>().map_err(bad_num)).collect()
}



/// Ordered sequence of time slices sharing one grid and tail family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    tail: TailSpec,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid, tail: TailSpec) -> Self {
        Self { grid, tail, times: Vec::new(), slices: Vec::new() }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::Domain("slice size mismatch".into()));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Domain(format!(
                    "timestamps must be strictly increasing ({t} after {last})"
                )));
            }
        }
        self.times.push(t);
        self.slices.push(values);
        Ok(())
    }

    pub fn from_slices(grid: Grid, tail: TailSpec, times: Vec<f64>, slices: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = SpaceTimeField::new(grid, tail);
        for (t, v) in times.into_iter().zip(slices) {
            out.push(t, v)?;
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tail(&self) -> &TailSpec {
        &self.tail
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn slice_values(&self, k: usize) -> &[f64] {
        &self.slices[k]
    }

    pub fn slice_field(&self, k: usize) -> GridField {
        GridField::new(self.grid.clone(), self.slices[k].clone(), self.tail.clone())
            .expect("slice consistent by construction")
    }

    /// Index of the stored time closest to `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let mut best = 0;
        let mut err = f64::INFINITY;
        for (k, &tk) in self.times.iter().enumerate() {
            let e = (tk - t).abs();
            if e < err {
                err = e;
                best = k;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn save_dir(&self, dir: &Path, params_line: Option<(f64, f64)>) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let mut index = String::from("k,t,file\n");
        let mut files = Vec::new();
        for k in 0..self.len() {
            let name = format!("slice_{k:05}.field");
            self.slice_field(k).save(&dir.join(&name), params_line)?;
            writeln!(index, "{k},{},{}", self.times[k], name).unwrap();
            files.push(name);
        }
        std::fs::write(dir.join("index.csv"), index)?;
        files.push("index.csv".into());
        Ok(files)
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("index.csv"))?;
        let mut out: Option<SpaceTimeField> = None;
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(3, ',').collect();
            if parts.len() != 3 {
                return Err(Error::Domain(format!("bad index line: {line}")));
            }
            let t: f64 = parts[1].parse().map_err(bad_num)?;
            let field = GridField::load(&dir.join(parts[2]))?;
            let st = out.get_or_insert_with(|| {
                SpaceTimeField::new(field.grid().clone(), field.tail().clone())
            });
            if st.grid != *field.grid() || st.tail != *field.tail() {
                return Err(Error::Domain("slices disagree on grid or tail".into()));
            }
            st.push(t, field.values().to_vec())?;
        }
        out.ok_or_else(|| Error::Domain("empty trajectory directory".into()))
    }
}

/// `B_r(x₀) × (t₀ − r², t₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicCylinder {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t_end: f64,
}

impl ParabolicCylinder {
    pub fn new(center: Vec<f64>, radius: f64, t_end: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("cylinder radius must be positive: {radius}")));
        }
        Ok(Self { center, radius, t_end })
    }

    pub fn t_start(&self) -> f64 {
        self.t_end - self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_roundtrip_indexing() {
        let g = Grid::new(vec![0.0, 1.0], vec![4, 5], 0.5).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flatten(&g.unflatten(idx)), idx);
        }
        assert_eq!(g.len(), 20);
        assert!((g.half_width(0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn interp_reproduces_linear_fields() {
        let g = Grid::symmetric_1d(1.0, 11).unwrap();
        let f = GridField::sample(g, TailSpec::Zero, |x| 3.0 * x[0] + 1.0).unwrap();
        for &x in &[-0.93, -0.5, 0.0, 0.123, 0.999] {
            assert!((f.interp(&[x]) - (3.0 * x + 1.0)).abs() < 1e-14);
        }

        let g2 = Grid::new(vec![0.0, 0.0], vec![5, 5], 0.5).unwrap();
        let f2 = GridField::sample(g2, TailSpec::Zero, |x| 2.0 * x[0] - x[1] + 0.25).unwrap();
        for &(x, y) in &[(-0.9, 0.3), (0.1, -0.7), (0.99, 0.99)] {
            assert!((f2.interp(&[x, y]) - (2.0 * x - y + 0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn extended_eval_switches_to_tail() {
        let g = Grid::symmetric_1d(1.0, 5).unwrap();
        let f = GridField::constant(g, 2.0, TailSpec::Constant(7.0)).unwrap();
        assert_eq!(f.eval_extended(&[0.3]), 2.0);
        assert_eq!(f.eval_extended(&[1.5]), 7.0);
    }

    #[test]
    fn rejects_non_finite_and_mismatched() {
        let g = Grid::symmetric_1d(1.0, 3).unwrap();
        assert!(GridField::new(g.clone(), vec![0.0; 2], TailSpec::Zero).is_err());
        assert!(GridField::new(g, vec![0.0, f64::NAN, 0.0], TailSpec::Zero).is_err());
        assert!(Grid::symmetric_1d(1.0, 2).is_err());
        assert!(Grid::new(vec![0.0], vec![5], 0.0).is_err());
    }

    #[test]
    fn trajectory_requires_increasing_times() {
        let g = Grid::symmetric_1d(1.0, 3).unwrap();
        let mut st = SpaceTimeField::new(g, TailSpec::Zero);
        st.push(0.0, vec![0.0; 3]).unwrap();
        st.push(0.1, vec![1.0; 3]).unwrap();
        assert!(st.push(0.1, vec![2.0; 3]).is_err());
    }

    #[test]
    fn field_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("fpheat-grid-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::symmetric_1d(1.0, 7).unwrap();
        let f = GridField::sample(g, TailSpec::Constant(0.25), |x| (x[0] * 3.1).sin()).unwrap();
        let path = dir.join("f.field");
        f.save(&path, Some((0.5, 3.0))).unwrap();
        let back = GridField::load(&path).unwrap();
        assert_eq!(f, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn trajectory_dir_roundtrip() {
        let dir = std::env::temp_dir().join(format!("fpheat-traj-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::symmetric_1d(1.0, 5).unwrap();
        let mut st = SpaceTimeField::new(g, TailSpec::Zero);
        st.push(0.0, vec![0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        st.push(0.5, vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        st.save_dir(&dir, None).unwrap();
        let back = SpaceTimeField::load_dir(&dir).unwrap();
        assert_eq!(st, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn cylinder_window() {
        let q = ParabolicCylinder::new(vec![0.0], 0.5, 1.0).unwrap();
        assert!((q.t_start() - 0.75).abs() < 1e-15);
        assert!(ParabolicCylinder::new(vec![0.0], 0.0, 1.0).is_err());
    }
}
