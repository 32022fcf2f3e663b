use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Floor,
    Start,
    Goal,
    Hole,
    Wall,
    /// Floor cell where a ghost starts.
    Ghost,
}

/// Rectangular ASCII map. The first text line is the top row; coordinates
/// are `(row, col)` with row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl GridMap {
    /// Parses `S` start, `G` goal, `H` hole, `#` wall, `.`/`F` floor and `g`
    /// ghost start. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let row: Vec<Cell> = line
                .chars()
                .map(|c| match c {
                    '.' | 'F' => Ok(Cell::Floor),
                    'S' => Ok(Cell::Start),
                    'G' => Ok(Cell::Goal),
                    'H' => Ok(Cell::Hole),
                    '#' => Ok(Cell::Wall),
                    'g' => Ok(Cell::Ghost),
                    other => Err(invalid(format!("unknown map character {other:?}"))),
                })
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(invalid("map rows have different lengths"))
                }
                _ => {}
            }
            cells.extend(row);
            rows += 1;
        }
        let cols = cols.ok_or_else(|| invalid("empty map"))?;
        let map = Self { rows, cols, cells };
        if map.count(Cell::Start) != 1 || map.count(Cell::Goal) != 1 {
            return Err(invalid("map needs exactly one start and one goal"));
        }
        Ok(map)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> Cell {
        self.cells[idx]
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.cols, idx % self.cols)
    }

    pub fn find(&self, kind: Cell) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(move |&i| self.cells[i] == kind)
    }

    fn count(&self, kind: Cell) -> usize {
        self.find(kind).count()
    }

    pub fn start(&self) -> usize {
        self.find(Cell::Start).next().expect("validated")
    }

    pub fn goal(&self) -> usize {
        self.find(Cell::Goal).next().expect("validated")
    }

    /// Neighbour of `idx` one step in direction `(dr, dc)`, or `None` when
    /// that leaves the grid.
    pub fn step(&self, idx: usize, dr: isize, dc: isize) -> Option<usize> {
        let (r, c) = self.coords(idx);
        let r = r.checked_add_signed(dr)?;
        let c = c.checked_add_signed(dc)?;
        (r < self.rows && c < self.cols).then(|| self.index(r, c))
    }
}
