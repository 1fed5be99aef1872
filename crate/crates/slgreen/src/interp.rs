//! Piecewise-linear interpolation on sorted grids.

/// Index i with grid[i] <= x <= grid[i+1], clamped into [0, n-2].
/// Callers guarantee grid.len() >= 2 and strictly increasing nodes.
pub(crate) fn cell_of(grid: &[f64], x: f64) -> usize {
    debug_assert!(grid.len() >= 2);
    let i = grid.partition_point(|g| *g <= x);
    i.saturating_sub(1).min(grid.len() - 2)
}

/// Linear interpolation of vals over grid at x; clamps outside the range.
pub(crate) fn lerp(grid: &[f64], vals: &[f64], x: f64) -> f64 {
    let i = cell_of(grid, x);
    let (x0, x1) = (grid[i], grid[i + 1]);
    let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    vals[i] + t * (vals[i + 1] - vals[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_handles_edges() {
        let g = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(cell_of(&g, -0.5), 0);
        assert_eq!(cell_of(&g, 0.0), 0);
        assert_eq!(cell_of(&g, 0.5), 0);
        assert_eq!(cell_of(&g, 1.0), 1);
        assert_eq!(cell_of(&g, 2.999), 2);
        assert_eq!(cell_of(&g, 3.0), 2);
        assert_eq!(cell_of(&g, 9.0), 2);
    }

    #[test]
    fn lerp_reproduces_linear_data() {
        let g = [0.0, 0.5, 2.0];
        let v = [1.0, 2.0, 5.0];
        assert_eq!(lerp(&g, &v, 0.25), 1.5);
        assert_eq!(lerp(&g, &v, 0.5), 2.0);
        assert_eq!(lerp(&g, &v, 1.25), 3.5);
        assert_eq!(lerp(&g, &v, -1.0), 1.0);
        assert_eq!(lerp(&g, &v, 99.0), 5.0);
    }
}
