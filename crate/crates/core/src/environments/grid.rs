//! Cell lattice helpers shared by the two BoxNet variants.

/// Row-major grid coordinates.
pub type Cell = (u16, u16);

/// Picks `rows × cols` for `n` cells: the most square factorisation with
/// `rows <= cols`. Gives 2×2, 2×4, 4×4 and 4×8 for 4, 8, 16 and 32.
pub fn default_dims(n: usize) -> (u16, u16) {
    let mut rows = 1;
    let mut r = 1;
    while r * r <= n {
        if n.is_multiple_of(r) {
            rows = r;
        }
        r += 1;
    }
    (rows as u16, (n / rows) as u16)
}

/// Orthogonal neighbours inside the grid, in sorted order.
pub fn neighbors(cell: Cell, rows: u16, cols: u16) -> Vec<Cell> {
    let (r, c) = cell;
    let mut out = Vec::with_capacity(4);
    if r > 0 {
        out.push((r - 1, c));
    }
    if c > 0 {
        out.push((r, c - 1));
    }
    if c + 1 < cols {
        out.push((r, c + 1));
    }
    if r + 1 < rows {
        out.push((r + 1, c));
    }
    out.sort_unstable();
    out
}

/// The four lattice vertices bounding a cell, sorted.
pub fn cell_corners(cell: Cell) -> [Cell; 4] {
    let (r, c) = cell;
    [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]
}

/// Cells (within the grid) that have `corner` as a vertex.
pub fn cells_around_corner(corner: Cell, rows: u16, cols: u16) -> Vec<Cell> {
    let (r, c) = corner;
    let mut out = Vec::with_capacity(4);
    for dr in [1u16, 0] {
        for dc in [1u16, 0] {
            if r >= dr && c >= dc {
                let cell = (r - dr, c - dc);
                if cell.0 < rows && cell.1 < cols {
                    out.push(cell);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// First `n` cells in row-major order.
pub fn row_major_cells(rows: u16, cols: u16, n: usize) -> Vec<Cell> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .take(n)
        .collect()
}

pub fn cell_name(cell: Cell) -> String {
    format!("cell_{}_{}", cell.0, cell.1)
}

pub fn corner_name(corner: Cell) -> String {
    format!("corner_{}_{}", corner.0, corner.1)
}

/// Colour names used as box/goal labels in the BoxNet environments.
pub const COLORS: [&str; 32] = [
    "red", "blue", "green", "yellow", "purple", "orange", "pink", "brown", "black", "white",
    "gray", "cyan", "magenta", "lime", "olive", "navy", "teal", "maroon", "silver", "gold",
    "beige", "coral", "indigo", "ivory", "khaki", "lavender", "mint", "peach", "plum", "salmon",
    "tan", "violet",
];

/// Label for the `i`-th box; colours first, then numbered colours.
pub fn color_label(i: usize) -> String {
    let base = COLORS[i % COLORS.len()];
    match i / COLORS.len() {
        0 => base.to_string(),
        k => format!("{base}{}", k + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_dims() {
        assert_eq!(default_dims(4), (2, 2));
        assert_eq!(default_dims(8), (2, 4));
        assert_eq!(default_dims(16), (4, 4));
        assert_eq!(default_dims(32), (4, 8));
        assert_eq!(default_dims(1), (1, 1));
        assert_eq!(default_dims(2), (1, 2));
        assert_eq!(default_dims(7), (1, 7));
    }

    #[test]
    fn corner_membership_is_symmetric() {
        let (rows, cols) = (2, 3);
        for r in 0..rows {
            for c in 0..cols {
                for corner in cell_corners((r, c)) {
                    assert!(cells_around_corner(corner, rows, cols).contains(&(r, c)));
                }
            }
        }
        assert_eq!(cells_around_corner((1, 1), 2, 2).len(), 4);
        assert_eq!(cells_around_corner((0, 0), 2, 2), vec![(0, 0)]);
    }

    #[test]
    fn neighbors_in_corner_cell() {
        assert_eq!(neighbors((0, 0), 2, 2), vec![(0, 1), (1, 0)]);
        assert!(neighbors((0, 0), 1, 1).is_empty());
    }

    #[test]
    fn labels_are_unique() {
        let labels: std::collections::HashSet<String> = (0..100).map(color_label).collect();
        assert_eq!(labels.len(), 100);
    }
}
