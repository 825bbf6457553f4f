//! The 25×5 spatial discretization shared by neighbor pooling and target fusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A grid cell; `row` is longitudinal (rear to front), `col` lateral
/// (right to left, following +y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// A rectangular area centered on a reference vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Longitudinal extent, meters.
    pub length: f64,
    /// Lateral extent, meters.
    pub width: f64,
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridSpec {
    /// 200 × 35 ft, 25 × 5 cells.
    fn default() -> Self {
        Self { length: 60.96, width: 10.67, rows: 25, cols: 5 }
    }
}

impl GridSpec {
    pub fn cell_length(&self) -> f64 {
        self.length / self.rows as f64
    }

    pub fn cell_width(&self) -> f64 {
        self.width / self.cols as f64
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major flat index.
    pub fn flat(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell_at(&self, flat: usize) -> Cell {
        Cell::new(flat / self.cols, flat % self.cols)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).map(|i| self.cell_at(i))
    }

    /// Cell holding `offset` (position minus reference). The area is
    /// half-open: the lower edges belong to the grid, the upper edges don't.
    pub fn cell_index(&self, offset: Point) -> Option<Cell> {
        let u = offset.x + 0.5 * self.length;
        let v = offset.y + 0.5 * self.width;
        if !(0.0..self.length).contains(&u) || !(0.0..self.width).contains(&v) {
            return None;
        }
        let row = ((u / self.cell_length()).floor() as usize).min(self.rows - 1);
        let col = ((v / self.cell_width()).floor() as usize).min(self.cols - 1);
        Some(Cell::new(row, col))
    }

    /// Offset of the center of `cell` from the reference.
    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            (cell.row as f64 + 0.5) * self.cell_length() - 0.5 * self.length,
            (cell.col as f64 + 0.5) * self.cell_width() - 0.5 * self.width,
        )
    }

    /// The cell holding the reference vehicle itself.
    pub fn center_cell(&self) -> Cell {
        Cell::new(self.rows / 2, self.cols / 2)
    }
}

/// Per-cell channel vectors plus an occupancy mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    /// Row-major `rows × cols × channels`.
    pub values: Vec<f64>,
    pub occupancy: Vec<bool>,
}

impl GridTensor {
    pub fn zeros(spec: &GridSpec, channels: usize) -> Self {
        Self {
            rows: spec.rows,
            cols: spec.cols,
            channels,
            values: vec![0.0; spec.num_cells() * channels],
            occupancy: vec![false; spec.num_cells()],
        }
    }

    fn offset(&self, cell: Cell) -> Result<usize> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return Err(Error::Grid(format!(
                "cell ({}, {}) outside {}×{} grid",
                cell.row, cell.col, self.rows, self.cols
            )));
        }
        Ok(cell.row * self.cols + cell.col)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn is_occupied(&self, cell: Cell) -> Result<bool> {
        Ok(self.occupancy[self.offset(cell)?])
    }
}

/// Places each vector at its cell; all other cells stay zero.
pub fn scatter(entries: &[(Cell, Vec<f64>)], spec: &GridSpec, channels: usize) -> Result<GridTensor> {
    let mut tensor = GridTensor::zeros(spec, channels);
    for (cell, vector) in entries {
        if vector.len() != channels {
            return Err(Error::Grid(format!(
                "vector of length {} for a {channels}-channel grid",
                vector.len()
            )));
        }
        let at = tensor.offset(*cell)?;
        if tensor.occupancy[at] {
            return Err(Error::Grid(format!("duplicate entry for cell ({}, {})", cell.row, cell.col)));
        }
        tensor.occupancy[at] = true;
        tensor.values[at * channels..(at + 1) * channels].copy_from_slice(vector);
    }
    Ok(tensor)
}

/// The channel vector at `cell`.
pub fn gather(tensor: &GridTensor, cell: Cell) -> Result<&[f64]> {
    let at = tensor.offset(cell)?;
    Ok(&tensor.values[at * tensor.channels..(at + 1) * tensor.channels])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_dimensions() {
        let g = GridSpec::default();
        assert!((g.cell_length() - 2.4384).abs() < 1e-12);
        assert!((g.cell_width() - 2.134).abs() < 1e-12);
        assert_eq!(g.num_cells(), 125);
    }

    #[test]
    fn cell_index_examples() {
        let g = GridSpec::default();
        assert_eq!(g.cell_index(Point::new(0.0, 0.0)), Some(Cell::new(12, 2)));
        assert_eq!(g.cell_index(Point::new(30.48, 0.0)), None);
        assert_eq!(g.cell_index(Point::new(0.0, 5.335)), None);
        assert_eq!(g.cell_index(Point::new(-30.48, -5.335)), Some(Cell::new(0, 0)));
        assert_eq!(g.cell_index(Point::new(-30.49, 0.0)), None);
        assert_eq!(g.center_cell(), Cell::new(12, 2));
    }

    #[test]
    fn cell_centers_map_back() {
        let g = GridSpec::default();
        for c in g.cells() {
            assert_eq!(g.cell_index(g.cell_center(c)), Some(c));
        }
    }

    #[test]
    fn scatter_rejects_duplicates_and_bad_cells() {
        let g = GridSpec::default();
        let c = Cell::new(3, 1);
        assert!(scatter(&[(c, vec![1.0]), (c, vec![2.0])], &g, 1).is_err());
        assert!(scatter(&[(Cell::new(25, 0), vec![1.0])], &g, 1).is_err());
        assert!(scatter(&[(c, vec![1.0, 2.0])], &g, 1).is_err());
    }

    #[test]
    fn scatter_gather_basics() {
        let g = GridSpec::default();
        let empty = scatter(&[], &g, 4).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0.0));
        assert_eq!(empty.occupied_count(), 0);

        let t = scatter(&[(Cell::new(12, 2), vec![1.0, -2.0])], &g, 2).unwrap();
        assert_eq!(t.occupied_count(), 1);
        assert_eq!(gather(&t, Cell::new(12, 2)).unwrap(), &[1.0, -2.0]);
        assert_eq!(gather(&t, Cell::new(0, 0)).unwrap(), &[0.0, 0.0]);
        assert!(gather(&t, Cell::new(0, 5)).is_err());
    }
}
