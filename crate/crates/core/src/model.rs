//! Model matrices of the conditional model and the main-effects information matrix.

use nalgebra::DMatrix;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::param::{bit, class_members, valid_class};

/// Columns of `X_sl` or `Z_sl`, stored column-major (`data[c * runs + u]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlock<T> {
    pub s: u8,
    pub l: usize,
    /// Effect indices of the columns, in lexicographic order.
    pub labels: Vec<usize>,
    pub runs: usize,
    pub data: Vec<T>,
}

impl<T: Copy> ModelBlock<T> {
    pub fn width(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.data[c * self.runs..(c + 1) * self.runs]
    }
}

impl ModelBlock<f64> {
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.as_matrix();
        m.transpose() * m
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.runs, self.width(), &self.data)
    }
}

impl ModelBlock<i32> {
    /// Exact `X^T X`.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        (0..self.width()).map(|a| (0..self.width()).map(|b| dot(self.column(a), self.column(b))).collect()).collect()
    }

    pub fn to_f64(&self) -> ModelBlock<f64> {
        ModelBlock {
            s: self.s,
            l: self.l,
            labels: self.labels.clone(),
            runs: self.runs,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

pub(crate) fn dot(a: &[i32], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| i64::from(x * y)).sum()
}

/// Column `x(j1 ... jn)`: row-wise product of the design columns with `j = 1`.
pub fn x_column(design: &DesignMatrix, label: usize) -> Vec<i32> {
    let n = design.factors();
    let active: Vec<usize> = (0..n).filter(|&k| bit(label, n, k) == 1).collect();
    design.rows().map(|row| active.iter().map(|&k| i32::from(row[k])).product()).collect()
}

fn check_class(design: &DesignMatrix, s: u8, l: usize) -> Result<()> {
    let n = design.factors();
    design.require_factors(4)?;
    if !valid_class(n, s, l) {
        return Err(Error::InvalidClass { s, l, n });
    }
    Ok(())
}

pub fn build_x_block(design: &DesignMatrix, s: u8, l: usize) -> Result<ModelBlock<i32>> {
    check_class(design, s, l)?;
    let labels = class_members(design.factors(), s, l);
    let data = labels.iter().flat_map(|&lab| x_column(design, lab)).collect();
    Ok(ModelBlock { s, l, labels, runs: design.runs(), data })
}

/// `z` columns: an orthogonal recombination of `x` columns within the block.
pub fn build_z_block(design: &DesignMatrix, s: u8, l: usize) -> Result<ModelBlock<f64>> {
    check_class(design, s, l)?;
    let n = design.factors();
    let labels = class_members(n, s, l);
    // role bits j1..j4 sit at positions n-1..n-4 of the label
    let (b1, b2, b3, b4) = (1 << (n - 1), 1 << (n - 2), 1 << (n - 3), 1 << (n - 4));
    let sign = |on: bool| if on { -1.0 } else { 1.0 };
    let x = |label: usize| -> Vec<f64> { x_column(design, label).into_iter().map(f64::from).collect() };
    let mut data = Vec::with_capacity(labels.len() * design.runs());
    for &lab in &labels {
        let (j1, j2, j3, j4) = (lab & b1 != 0, lab & b2 != 0, lab & b3 != 0, lab & b4 != 0);
        // (coefficient, parent label) pairs
        let parents: Vec<(f64, usize)> = match (j1, j3) {
            (false, false) => vec![(1.0, lab)],
            (true, false) => {
                let base = lab & !b2;
                let c = std::f64::consts::FRAC_1_SQRT_2;
                vec![(c, base), (c * sign(j2), base | b2)]
            }
            (false, true) => {
                let base = lab & !b4;
                let c = std::f64::consts::FRAC_1_SQRT_2;
                vec![(c, base), (c * sign(j4), base | b4)]
            }
            (true, true) => {
                let base = lab & !(b2 | b4);
                vec![
                    (0.5, base),
                    (0.5 * sign(j4), base | b4),
                    (0.5 * sign(j2), base | b2),
                    (0.5 * sign(j2) * sign(j4), base | b2 | b4),
                ]
            }
        };
        let mut col = vec![0.0; design.runs()];
        for (coef, parent) in parents {
            for (acc, v) in col.iter_mut().zip(x(parent)) {
                *acc += coef * v;
            }
        }
        data.extend(col);
    }
    Ok(ModelBlock { s, l, labels, runs: design.runs(), data })
}

/// `M = Z1^T (I - 11^T / N) Z1` for `Z1 = (Z_01, Z_11)`; side `(n - 2) + 4`.
pub fn info_matrix(design: &DesignMatrix) -> Result<DMatrix<f64>> {
    design.require_factors(5)?;
    let z01 = build_z_block(design, 0, 1)?.as_matrix();
    let z11 = build_z_block(design, 1, 1)?.as_matrix();
    let runs = design.runs();
    let mut z1 = DMatrix::zeros(runs, z01.ncols() + z11.ncols());
    z1.columns_mut(0, z01.ncols()).copy_from(&z01);
    z1.columns_mut(z01.ncols(), z11.ncols()).copy_from(&z11);
    let col_sums = z1.row_sum();
    let correction = col_sums.transpose() * &col_sums / runs as f64;
    Ok(z1.transpose() * &z1 - correction)
}

/// `max |M - N I| <= tol`.
pub fn optimality_check(design: &DesignMatrix, tol: f64) -> Result<bool> {
    let m = info_matrix(design)?;
    let target = DMatrix::<f64>::identity(m.nrows(), m.ncols()) * design.runs() as f64;
    Ok((m - target).abs().max() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{expand, RegularSpec};
    use crate::param::class_size;

    const TOL: f64 = 1e-9;

    fn table1_n5() -> DesignMatrix {
        expand(&RegularSpec::new(4, vec![1, 2, 4, 8, 15]).unwrap())
    }

    #[test]
    fn s0_order1_block_is_unconditional_design_columns() {
        let d = table1_n5();
        let x = build_x_block(&d, 0, 1).unwrap();
        // labels 01000, 00010, 00001 in lexicographic order -> F5, F4, F2
        let mut cols: Vec<Vec<i32>> = (0..x.width()).map(|c| x.column(c).to_vec()).collect();
        cols.sort();
        let mut expected: Vec<Vec<i32>> =
            [1, 3, 4].iter().map(|&j| d.column(j).into_iter().map(i32::from).collect()).collect();
        expected.sort();
        assert_eq!(cols, expected);
    }

    #[test]
    fn full_factorial_blocks_are_orthogonal() {
        let d = DesignMatrix::full_factorial(5);
        for (s, l) in [(0u8, 2usize), (1, 2), (2, 3)] {
            let g = build_x_block(&d, s, l).unwrap().gram();
            for (a, row) in g.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    assert_eq!(v, if a == b { 32 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn aliased_columns_in_n5_design() {
        let d = table1_n5();
        assert_eq!(x_column(&d, 0b11110), x_column(&d, 0b00001));
    }

    #[test]
    fn z_equals_x_for_unconditional_blocks() {
        let d = table1_n5();
        for l in 1..=3 {
            let x = build_x_block(&d, 0, l).unwrap().to_f64();
            let z = build_z_block(&d, 0, l).unwrap();
            assert_eq!(x, z);
        }
    }

    #[test]
    fn z_blocks_preserve_trace_and_gram() {
        let d = expand(&RegularSpec::new(4, vec![1, 8, 2, 4, 7, 11]).unwrap());
        for (s, l) in crate::param::hierarchy_order(6) {
            let x = build_x_block(&d, s, l).unwrap().to_f64();
            let z = build_z_block(&d, s, l).unwrap();
            assert_eq!(z.width(), class_size(6, s, l));
            let trace = z.gram().trace();
            assert!((trace - (16 * z.width()) as f64).abs() < TOL);
            // X X^T = Z Z^T since Z is an orthogonal recombination of X
            let (xm, zm) = (x.as_matrix(), z.as_matrix());
            let diff = &xm * xm.transpose() - &zm * zm.transpose();
            assert!(diff.abs().max() < TOL, "s={s} l={l}");
        }
    }

    #[test]
    fn z_entries_on_aliased_parents() {
        // two +-1 parents combined with weight 1/sqrt(2)
        let d = table1_n5();
        let z = build_z_block(&d, 1, 2).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        for c in 0..z.width() {
            for &v in z.column(c) {
                assert!(v.abs() < TOL || (v.abs() - r2).abs() < TOL, "{v}");
            }
        }
    }

    #[test]
    fn info_matrix_table1_n5() {
        let m = info_matrix(&table1_n5()).unwrap();
        assert_eq!(m.nrows(), 7);
        let target = DMatrix::<f64>::identity(7, 7) * 16.0;
        assert!((m - target).abs().max() < TOL);
    }

    #[test]
    fn z1_columns_sum_to_zero_under_conditions() {
        let d = expand(&RegularSpec::new(4, vec![1, 8, 2, 4, 7, 11]).unwrap());
        for (s, l) in [(0, 1), (1, 1)] {
            let z = build_z_block(&d, s, l).unwrap();
            for c in 0..z.width() {
                assert!(z.column(c).iter().sum::<f64>().abs() < TOL);
            }
        }
    }

    #[test]
    fn violating_condition_iv_breaks_optimality() {
        // b1 + b2 + b3 + b4 = 0
        let d = expand(&RegularSpec::new(4, vec![1, 2, 4, 7, 8]).unwrap());
        let m = info_matrix(&d).unwrap();
        let off = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
            .any(|(i, j)| m[(i, j)].abs() > TOL);
        assert!(off);
        assert!(!optimality_check(&d, TOL).unwrap());
    }

    #[test]
    fn optimality_examples() {
        assert!(optimality_check(&table1_n5(), TOL).unwrap());
        assert!(optimality_check(&DesignMatrix::full_factorial(5), TOL).unwrap());
        let repeated = table1_n5().permute_columns(&[0, 1, 2, 3, 4, 4]);
        assert!(!optimality_check(&repeated, TOL).unwrap());
    }
}
