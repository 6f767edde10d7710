//! Occupancy grid and its plain-text map format.
//!
//! ```text
//! resolution 0.1
//! origin 0 0
//! ##########
//! #........#
//! ##########
//! ```
//!
//! `#` is occupied, `.` free. The first map row is the top (largest y).
//! The `origin` line is optional and gives the map coordinates of the
//! bottom-left corner.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("map has no rows")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    /// Cell edge length, metres.
    pub resolution: f64,
    /// Map coordinates of the bottom-left corner of cell (0, 0).
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    /// Row-major from the bottom row; `true` means occupied.
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    /// All-free grid.
    pub fn empty(width: usize, height: usize, resolution: f64, origin: Vec2) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self { resolution, origin, width, height, cells: vec![false; width * height] }
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn occupied(&self, col: usize, row: usize) -> bool {
        self.cells[self.index(col, row)]
    }

    pub fn set(&mut self, col: usize, row: usize, occupied: bool) {
        let i = self.index(col, row);
        self.cells[i] = occupied;
    }

    /// Cell containing `p`, if on the map.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let c = ((p.x - self.origin.x) / self.resolution).floor();
        let r = ((p.y - self.origin.y) / self.resolution).floor();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((c as usize, r as usize))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    /// True for occupied cells and for points off the map.
    pub fn blocked(&self, p: Vec2) -> bool {
        self.cell_of(p).is_none_or(|(c, r)| self.occupied(c, r))
    }

    /// Map extent `(min, max)` corners.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let size = Vec2::new(self.width as f64 * self.resolution, self.height as f64 * self.resolution);
        (self.origin, self.origin + size)
    }

    /// Fills every cell whose centre lies within `radius` of `center`.
    pub fn fill_disc(&mut self, center: Vec2, radius: f64) {
        for r in 0..self.height {
            for c in 0..self.width {
                if self.cell_center(c, r).dist(center) <= radius {
                    self.set(c, r, true);
                }
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut resolution = None;
        let mut origin = Vec2::ZERO;
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |m: &str| MapError::Syntax { line: line_no, message: m.to_string() };
            let mut words = line.split_whitespace();
            match words.next() {
                Some("resolution") if rows.is_empty() => {
                    let v: f64 = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| syntax("bad resolution"))?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(syntax("resolution must be positive"));
                    }
                    resolution = Some(v);
                }
                Some("origin") if rows.is_empty() => {
                    let x: f64 = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| syntax("bad origin"))?;
                    let y: f64 = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| syntax("bad origin"))?;
                    origin = Vec2::new(x, y);
                }
                _ => {
                    let row = line
                        .chars()
                        .map(|ch| match ch {
                            '#' => Ok(true),
                            '.' => Ok(false),
                            other => Err(syntax(&format!("unexpected character {other:?}"))),
                        })
                        .collect::<Result<Vec<bool>, _>>()?;
                    if let Some(first) = rows.first() {
                        if first.len() != row.len() {
                            return Err(syntax("rows differ in length"));
                        }
                    }
                    rows.push(row);
                }
            }
        }
        let resolution = resolution.ok_or(MapError::Syntax { line: 1, message: "missing resolution header".into() })?;
        if rows.is_empty() {
            return Err(MapError::Empty);
        }
        let (width, height) = (rows[0].len(), rows.len());
        let mut grid = Self::empty(width, height, resolution, origin);
        for (i, row) in rows.iter().enumerate() {
            let r = height - 1 - i;
            for (c, &occ) in row.iter().enumerate() {
                grid.set(c, r, occ);
            }
        }
        Ok(grid)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("resolution {}\norigin {} {}\n", self.resolution, self.origin.x, self.origin.y);
        for r in (0..self.height).rev() {
            for c in 0..self.width {
                s.push(if self.occupied(c, r) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut j = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let d = q as f64 - v[j] as f64;
        *o = d * d + f[v[j]];
    }
}

/// Exact Euclidean distance (metres) from every cell centre to the nearest
/// occupied cell centre; infinite when nothing is occupied.
pub fn distance_transform(grid: &OccupancyGrid) -> Vec<f64> {
    let (w, h) = (grid.width, grid.height);
    let mut d: Vec<f64> = grid.cells.iter().map(|&o| if o { 0.0 } else { f64::INFINITY }).collect();
    let mut col = vec![0.0; h];
    let mut out = vec![0.0; h.max(w)];
    for c in 0..w {
        for r in 0..h {
            col[r] = d[r * w + c];
        }
        edt_1d(&col, &mut out[..h]);
        for r in 0..h {
            d[r * w + c] = out[r];
        }
    }
    let mut row = vec![0.0; w];
    for r in 0..h {
        row.copy_from_slice(&d[r * w..(r + 1) * w]);
        edt_1d(&row, &mut out[..w]);
        d[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    d.iter().map(|v| v.sqrt() * grid.resolution).collect()
}
