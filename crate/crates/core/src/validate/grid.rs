use nalgebra::DVector;

use crate::condense::condense;
use crate::error::{Error, Result};
use crate::model::MpcProblem;
use crate::optim::{bounding_box, feasibility_check, QueryCounter, Tolerances};

/// Cell-center membership of the feasible set on a regular grid over the
/// bounding box of the state set.
///
/// Cells are stored in lexicographic order of their multi-index: the first
/// coordinate varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOracle {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub resolution: usize,
    pub membership: Vec<bool>,
}

impl GridOracle {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn n_cells(&self) -> usize {
        self.membership.len()
    }

    pub fn cell_widths(&self) -> DVector<f64> {
        (&self.upper - &self.lower) / self.resolution as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_widths().product()
    }

    pub fn feasible_cells(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    /// Estimated volume of the feasible set.
    pub fn area(&self) -> f64 {
        self.feasible_cells() as f64 * self.cell_area()
    }

    /// Feasible fraction of the bounding box.
    pub fn area_ratio(&self) -> f64 {
        self.feasible_cells() as f64 / self.n_cells() as f64
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0; n];
        let mut rest = flat;
        for k in (0..n).rev() {
            idx[k] = rest % self.resolution;
            rest /= self.resolution;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.resolution + i)
    }

    pub fn center(&self, flat: usize) -> DVector<f64> {
        let w = self.cell_widths();
        let idx = self.multi_index(flat);
        DVector::from_fn(self.dim(), |k, _| self.lower[k] + (idx[k] as f64 + 0.5) * w[k])
    }

    /// Cell containing `x`, or `None` outside the box. Points on the upper
    /// face belong to the last cell.
    pub fn cell_of(&self, x: &DVector<f64>) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let w = self.cell_widths();
        let mut idx = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            if !(x[k] >= self.lower[k] && x[k] <= self.upper[k]) {
                return None;
            }
            let i = ((x[k] - self.lower[k]) / w[k]).floor() as usize;
            idx.push(i.min(self.resolution - 1));
        }
        Some(self.flat_index(&idx))
    }
}

/// Evaluates the feasibility check at every cell center of a
/// `resolution^{n_x}` grid over the bounding box of the state set.
pub fn build_grid_oracle(p: &MpcProblem, resolution: usize) -> Result<GridOracle> {
    if p.nx() > 3 {
        return Err(Error::DimensionTooHigh(p.nx()));
    }
    if resolution < 16 {
        return Err(Error::InvalidArgument("grid resolution must be at least 16".into()));
    }
    let tol = Tolerances::default();
    let (lower, upper) = bounding_box(p.state_set(), &tol)?;
    let cp = condense(p);
    let mut grid = GridOracle {
        lower,
        upper,
        resolution,
        membership: Vec::new(),
    };
    let total = resolution.pow(p.nx() as u32);
    let mut counter = QueryCounter::default();
    grid.membership = (0..total)
        .map(|c| feasibility_check(&cp, &grid.center(c), &tol, &mut counter))
        .collect::<Result<_>>()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_static_box_problem;

    #[test]
    fn static_box_area() {
        let g = build_grid_oracle(&make_static_box_problem(), 64).unwrap();
        assert_eq!(g.n_cells(), 64 * 64);
        assert!((g.area() - 4.0).abs() <= 0.08);
    }

    #[test]
    fn index_round_trip() {
        let g = GridOracle {
            lower: DVector::from_vec(vec![0.0, 0.0, 0.0]),
            upper: DVector::from_vec(vec![1.0, 1.0, 1.0]),
            resolution: 16,
            membership: vec![true; 16 * 16 * 16],
        };
        for flat in [0, 1, 17, 300, 4095] {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
            assert_eq!(g.cell_of(&g.center(flat)), Some(flat));
        }
        assert_eq!(g.cell_of(&DVector::from_vec(vec![1.0, 1.0, 1.0])), Some(4095));
        assert_eq!(g.cell_of(&DVector::from_vec(vec![1.1, 0.0, 0.0])), None);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(build_grid_oracle(&make_static_box_problem(), 8).is_err());
    }
}
