//! ESRI ASCII grid rasters. One `Grid` type serves both terrain models and
//! water-depth fields; rows are stored north to south exactly as they appear
//! in the file.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Lower-left corner easting (m).
    pub xllcorner: f64,
    /// Lower-left corner northing (m).
    pub yllcorner: f64,
    pub cellsize: f64,
    pub rows: usize,
    pub cols: usize,
    pub nodata: f64,
    /// Row-major values, row 0 being the northernmost.
    data: Vec<f64>,
}

pub type Dem = Grid;
pub type DepthGrid = Grid;

impl Grid {
    pub fn filled(rows: usize, cols: usize, xll: f64, yll: f64, cellsize: f64, value: f64) -> Self {
        Grid {
            xllcorner: xll,
            yllcorner: yll,
            cellsize,
            rows,
            cols,
            nodata: -9999.0,
            data: vec![value; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn in_bounds(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    /// Centre coordinates (easting, northing) of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x = self.xllcorner + (col as f64 + 0.5) * self.cellsize;
        let y = self.yllcorner + ((self.rows - 1 - row) as f64 + 0.5) * self.cellsize;
        (x, y)
    }

    /// Axis-aligned extent `(x0, y0, x1, y1)` of cell `(row, col)`.
    pub fn cell_extent(&self, row: usize, col: usize) -> (f64, f64, f64, f64) {
        let x0 = self.xllcorner + col as f64 * self.cellsize;
        let y0 = self.yllcorner + (self.rows - 1 - row) as f64 * self.cellsize;
        (x0, y0, x0 + self.cellsize, y0 + self.cellsize)
    }

    /// Cell containing the point, if inside the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.xllcorner) / self.cellsize).floor();
        let row_from_bottom = ((y - self.yllcorner) / self.cellsize).floor();
        if col < 0.0 || row_from_bottom < 0.0 {
            return None;
        }
        let (col, rfb) = (col as usize, row_from_bottom as usize);
        if col >= self.cols || rfb >= self.rows {
            return None;
        }
        Some((self.rows - 1 - rfb, col))
    }

    /// True when the two grids describe the same raster frame.
    pub fn same_frame(&self, other: &Grid) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.xllcorner == other.xllcorner
            && self.yllcorner == other.yllcorner
            && self.cellsize == other.cellsize
    }

    pub fn read_ascii(path: &Path) -> Result<Grid> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_ascii(&text)
            .map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    pub fn parse_ascii(text: &str) -> std::result::Result<Grid, String> {
        let mut tokens = text.split_ascii_whitespace();
        let mut header = std::collections::HashMap::new();
        // header lines are `key value` pairs; data starts at the first
        // token that is not a known key
        let first_value: f64 = loop {
            let tok = tokens.next().ok_or("missing grid data")?;
            let key = tok.to_ascii_lowercase();
            match key.as_str() {
                "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value" => {
                    let val = tokens.next().ok_or_else(|| format!("missing value for {key}"))?;
                    let parsed: f64 = val
                        .parse()
                        .map_err(|_| format!("invalid numeric value {val:?} for {key}"))?;
                    header.insert(key, parsed);
                }
                _ => break tok.parse().map_err(|_| format!("invalid grid value {tok:?}"))?,
            }
        };
        let need = |k: &str| -> std::result::Result<f64, String> {
            header.get(k).copied().ok_or_else(|| format!("missing header key {k}"))
        };
        let cols = need("ncols")? as usize;
        let rows = need("nrows")? as usize;
        if rows == 0 || cols == 0 {
            return Err("grid must have positive dimensions".into());
        }
        let xll = need("xllcorner")?;
        let yll = need("yllcorner")?;
        let cellsize = need("cellsize")?;
        if !(cellsize > 0.0) {
            return Err("cellsize must be positive".into());
        }
        let nodata = header.get("nodata_value").copied().unwrap_or(-9999.0);

        let mut data = Vec::with_capacity(rows * cols);
        data.push(first_value);
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|_| format!("invalid grid value {tok:?}"))?;
            data.push(v);
        }
        if data.len() != rows * cols {
            return Err(format!(
                "expected {} values ({rows} rows x {cols} cols), found {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Grid { xllcorner: xll, yllcorner: yll, cellsize, rows, cols, nodata, data })
    }

    /// Serialise in ESRI ASCII format. Values use the shortest decimal form
    /// that parses back to the identical f64, so write/read round trips are
    /// bit-exact.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.cols);
        let _ = writeln!(out, "nrows {}", self.rows);
        let _ = writeln!(out, "xllcorner {}", self.xllcorner);
        let _ = writeln!(out, "yllcorner {}", self.yllcorner);
        let _ = writeln!(out, "cellsize {}", self.cellsize);
        let _ = writeln!(out, "NODATA_value {}", self.nodata);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", self.get(r, c));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ascii())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_basic_grid() {
        let text = "ncols 3\nnrows 2\nxllcorner 100.0\nyllcorner 200.0\ncellsize 2.0\nNODATA_value -9999\n1 2 3\n4 5 6\n";
        let g = Grid::parse_ascii(text).unwrap();
        assert_eq!((g.rows, g.cols), (2, 3));
        assert_eq!(g.get(0, 0), 1.0); // northernmost row first
        assert_eq!(g.get(1, 2), 6.0);
        // row 1 is the southern row, adjacent to yllcorner
        assert_eq!(g.cell_center(1, 0), (101.0, 201.0));
        assert_eq!(g.cell_at(101.0, 201.0), Some((1, 0)));
        assert_eq!(g.cell_at(99.0, 201.0), None);
    }

    #[test]
    fn malformed_grids_are_rejected() {
        assert!(Grid::parse_ascii("ncols 2\nnrows 2\n1 2 3 4").is_err()); // missing corners
        assert!(Grid::parse_ascii(
            "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3"
        )
        .is_err()); // count mismatch
        assert!(Grid::parse_ascii(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 x"
        )
        .is_err()); // bad token
    }

    #[test]
    fn frame_comparison() {
        let a = Grid::filled(2, 2, 0.0, 0.0, 1.0, 0.0);
        let mut b = a.clone();
        assert!(a.same_frame(&b));
        b.xllcorner = 1.0;
        assert!(!a.same_frame(&b));
    }

    proptest! {
        #[test]
        fn ascii_round_trip_is_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(-1e6f64..1e6, 36),
        ) {
            let mut g = Grid::filled(rows, cols, 412.325, 56001.5, 4.0, 0.0);
            for (i, v) in g.values_mut().iter_mut().enumerate() {
                *v = seed[i % seed.len()] / 3.0; // non-round decimals
            }
            let parsed = Grid::parse_ascii(&g.to_ascii()).unwrap();
            prop_assert_eq!(parsed, g);
        }
    }
}
