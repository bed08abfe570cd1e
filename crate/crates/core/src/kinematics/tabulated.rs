//! Cell motions given as tables of deformed positions.
//!
//! File layout (whitespace separated, `#` starts a comment line):
//!
//! ```text
//! # thermohom motion table: dim times points grid
//! 2 2 1 4
//! times 0.0 0.5
//! point 0 0.5 0.5
//! center 0.5 0.5            (optional, defaults to the cell centre)
//! 0 0  s values...
//! 1 0  s values...
//! ```
//!
//! Every data row starts with a time index and a point index followed by the
//! deformed positions on the uniform `(grid+1)^dim` node lattice of the unit
//! cell, row-major (last lattice index fastest), `dim` components per node.
//! Positions are interpolated multilinearly in `y`, linearly in `t`, and the
//! nearest tabulated macro point is used.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Mat3, Vec3};

#[derive(Clone, Debug)]
pub struct TabulatedMotion {
    pub dim: usize,
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    pub grid: usize,
    pub center: Vec3,
    /// Difference step used for curvature.
    pub fd_step: f64,
    /// `values[((k * points + p) * nodes + node) * dim + comp]`.
    values: Vec<f64>,
}

impl TabulatedMotion {
    fn nodes(&self) -> usize {
        (self.grid + 1).pow(self.dim as u32)
    }

    /// Samples a motion given as a closure on the table lattice.
    pub fn sample(
        dim: usize,
        times: Vec<f64>,
        points: Vec<Vec3>,
        grid: usize,
        center: Vec3,
        mut position: impl FnMut(f64, &Vec3, &Vec3) -> Vec3,
    ) -> Self {
        let mut tab = TabulatedMotion {
            dim,
            times,
            points,
            grid,
            center,
            fd_step: 1.0 / grid as f64,
            values: Vec::new(),
        };
        let nodes = tab.nodes();
        let mut values = Vec::with_capacity(tab.times.len() * tab.points.len() * nodes * dim);
        for &t in &tab.times {
            for x in &tab.points {
                for node in 0..nodes {
                    let y = tab.node_position(node);
                    let s = position(t, x, &y);
                    values.extend((0..dim).map(|c| s[c]));
                }
            }
        }
        tab.values = values;
        tab
    }

    fn node_position(&self, node: usize) -> Vec3 {
        let mut y = Vec3::zeros();
        let mut rest = node;
        for a in (0..self.dim).rev() {
            y[a] = (rest % (self.grid + 1)) as f64 / self.grid as f64;
            rest /= self.grid + 1;
        }
        y
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let nums = |line: usize, s: &str| -> std::result::Result<Vec<f64>, (usize, String)> {
            s.split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| (line, format!("not a number: `{w}`"))))
                .collect()
        };
        let (hl, header) = lines.next().ok_or((0, "empty table".to_string()))?;
        let h = nums(hl, header)?;
        if h.len() != 4 {
            return Err((hl, "header needs: dim times points grid".into()));
        }
        let (dim, nt, np, grid) = (h[0] as usize, h[1] as usize, h[2] as usize, h[3] as usize);
        if !(dim == 2 || dim == 3) || nt == 0 || np == 0 || grid == 0 {
            return Err((hl, "dim must be 2 or 3 and counts positive".into()));
        }
        let mut times = Vec::new();
        let mut points = vec![None; np];
        let mut center = Vec3::new(0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 });
        let nodes = (grid + 1).pow(dim as u32);
        let mut values = vec![f64::NAN; nt * np * nodes * dim];
        let mut seen = vec![false; nt * np];
        for (ln, line) in lines {
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match head {
                "times" => {
                    times = nums(ln, rest)?;
                    if times.len() != nt || times.windows(2).any(|w| w[1] <= w[0]) {
                        return Err((ln, format!("expected {nt} increasing times")));
                    }
                }
                "point" => {
                    let v = nums(ln, rest)?;
                    if v.len() != dim + 1 || v[0] as usize >= np {
                        return Err((ln, "point line needs an index and dim coordinates".into()));
                    }
                    let mut x = Vec3::zeros();
                    for a in 0..dim {
                        x[a] = v[a + 1];
                    }
                    points[v[0] as usize] = Some(x);
                }
                "center" => {
                    let v = nums(ln, rest)?;
                    if v.len() != dim {
                        return Err((ln, "center needs dim coordinates".into()));
                    }
                    for a in 0..dim {
                        center[a] = v[a];
                    }
                }
                _ => {
                    let v = nums(ln, line)?;
                    if v.len() != 2 + nodes * dim {
                        return Err((ln, format!("data row needs 2 + {} numbers, found {}", nodes * dim, v.len())));
                    }
                    let (k, p) = (v[0] as usize, v[1] as usize);
                    if k >= nt || p >= np {
                        return Err((ln, "time or point index out of range".into()));
                    }
                    let start = (k * np + p) * nodes * dim;
                    values[start..start + nodes * dim].copy_from_slice(&v[2..]);
                    seen[k * np + p] = true;
                }
            }
        }
        if times.len() != nt {
            return Err((0, "missing `times` line".into()));
        }
        let points: Vec<Vec3> = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or((0, format!("missing point {i}"))))
            .collect::<std::result::Result<_, _>>()?;
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err((0, format!("missing data row for time {} point {}", i / np, i % np)));
        }
        Ok(TabulatedMotion {
            dim,
            times,
            points,
            grid,
            center,
            fd_step: 1.0 / grid as f64,
            values,
        })
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("# thermohom motion table: dim times points grid\n");
        let _ = writeln!(out, "{} {} {} {}", self.dim, self.times.len(), self.points.len(), self.grid);
        let _ = write!(out, "times");
        for t in &self.times {
            let _ = write!(out, " {t:.17e}");
        }
        out.push('\n');
        for (i, x) in self.points.iter().enumerate() {
            let _ = write!(out, "point {i}");
            for a in 0..self.dim {
                let _ = write!(out, " {:.17e}", x[a]);
            }
            out.push('\n');
        }
        let _ = write!(out, "center");
        for a in 0..self.dim {
            let _ = write!(out, " {:.17e}", self.center[a]);
        }
        out.push('\n');
        let row = self.nodes() * self.dim;
        for k in 0..self.times.len() {
            for p in 0..self.points.len() {
                let _ = write!(out, "{k} {p}");
                let start = (k * self.points.len() + p) * row;
                for v in &self.values[start..start + row] {
                    let _ = write!(out, " {v:.17e}");
                }
                out.push('\n');
            }
        }
        out
    }

    fn nearest_point(&self, x: &Vec3) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Bracketing time indices, interpolation weight and slope factor `1/Δt`.
    fn time_bracket(&self, t: f64) -> (usize, usize, f64, f64) {
        let n = self.times.len();
        if n == 1 {
            return (0, 0, 0.0, 0.0);
        }
        let hi = self.times.partition_point(|&s| s <= t).clamp(1, n - 1);
        let lo = hi - 1;
        let dt = self.times[hi] - self.times[lo];
        let w = ((t - self.times[lo]) / dt).clamp(0.0, 1.0);
        (lo, hi, w, 1.0 / dt)
    }

    /// Multilinear value and gradient of the table at time slot `k`.
    fn interpolate(&self, k: usize, p: usize, y: &Vec3) -> (Vec3, Mat3) {
        let d = self.dim;
        let n = self.grid;
        let mut base = [0usize; 3];
        let mut loc = [0.0; 3];
        for a in 0..d {
            let u = (y[a] * n as f64).clamp(0.0, n as f64);
            let i = (u.floor() as usize).min(n - 1);
            base[a] = i;
            loc[a] = u - i as f64;
        }
        let nodes = self.nodes();
        let start = (k * self.points.len() + p) * nodes * d;
        let mut s = Vec3::zeros();
        let mut f = Mat3::zeros();
        for corner in 0..(1usize << d) {
            let mut node = 0;
            let mut w = 1.0;
            let mut dw = [1.0; 3];
            for a in 0..d {
                let bit = (corner >> a) & 1;
                node = node * (n + 1) + base[a] + bit;
                let (wa, dwa) = if bit == 1 { (loc[a], 1.0) } else { (1.0 - loc[a], -1.0) };
                for (b, dwb) in dw.iter_mut().enumerate().take(d) {
                    *dwb *= if b == a { dwa * n as f64 } else { wa };
                }
                w *= wa;
            }
            for c in 0..d {
                let v = self.values[start + node * d + c];
                s[c] += w * v;
                for b in 0..d {
                    f[(c, b)] += dw[b] * v;
                }
            }
        }
        for a in d..3 {
            f[(a, a)] = 1.0;
        }
        (s, f)
    }

    pub fn position(&self, t: f64, x: &Vec3, y: &Vec3) -> Vec3 {
        let p = self.nearest_point(x);
        let (lo, hi, w, _) = self.time_bracket(t);
        let (a, _) = self.interpolate(lo, p, y);
        let (b, _) = self.interpolate(hi, p, y);
        a * (1.0 - w) + b * w
    }

    pub fn gradient_and_velocity(&self, t: f64, x: &Vec3, y: &Vec3) -> (Mat3, Vec3) {
        let p = self.nearest_point(x);
        let (lo, hi, w, rate) = self.time_bracket(t);
        let (a, fa) = self.interpolate(lo, p, y);
        let (b, fb) = self.interpolate(hi, p, y);
        (fa * (1.0 - w) + fb * w, (b - a) * rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_preserves_samples() {
        let tab = TabulatedMotion::sample(
            2,
            vec![0.0, 0.5],
            vec![Vec3::new(0.5, 0.5, 0.0)],
            4,
            Vec3::new(0.5, 0.5, 0.0),
            |t, _, y| y + Vec3::new(t * y[1], 0.0, 0.0),
        );
        let back = TabulatedMotion::parse(&tab.to_text()).unwrap();
        assert_eq!(back.values, tab.values);
        let y = Vec3::new(0.3, 0.7, 0.0);
        let (f, v) = back.gradient_and_velocity(0.25, &Vec3::zeros(), &y);
        // the sampled map is bilinear, so interpolation is exact
        assert!((f[(0, 1)] - 0.25).abs() < 1e-14 && (f[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((v[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = TabulatedMotion::parse("2 1 1 1\ntimes 0\npoint 0 0.5 0.5\n0 0 1 2 x\n").unwrap_err();
        assert_eq!(err.0, 4);
    }
}
