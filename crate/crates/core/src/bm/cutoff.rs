//! The frozen bump profile and its pullbacks to toric charts.

use num_complex::Complex64;

use super::quad::{integrate, Tolerance};
use crate::Result;

/// `x^3 (10 - 15x + 6x^2)`: the degree-5 smoothstep.
fn smoothstep(x: f64) -> f64 {
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

fn smoothstep_d(x: f64) -> f64 {
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// Radial bump with `R = 1`: 1 on `r <= 1/2`, 0 on `r >= 1`.
pub fn bump(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep(2.0 * r - 1.0)
    }
}

pub fn bump_d(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        0.0
    } else {
        -2.0 * smoothstep_d(2.0 * r - 1.0)
    }
}

/// `prod_l bump(|t_l|)` on the base chart, seen through `t_l = s^(row l of matrix)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartCutoff {
    pub matrix: Vec<Vec<i64>>,
}

impl ChartCutoff {
    pub fn identity(k: usize) -> Self {
        ChartCutoff { matrix: (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect() }
    }

    pub fn k(&self) -> usize {
        self.matrix.len()
    }

    /// Value from the radii `|s_j|`.
    pub fn at_radii(&self, r: &[f64]) -> f64 {
        self.matrix
            .iter()
            .map(|row| bump(row.iter().zip(r).map(|(&e, &x)| x.powi(e as i32)).product()))
            .product()
    }

    pub fn at(&self, s: &[Complex64]) -> f64 {
        let r: Vec<f64> = s.iter().map(|z| z.norm()).collect();
        self.at_radii(&r)
    }

    /// Radial profile in `s_j` with every other variable set to zero.
    pub fn profile(&self, j: usize) -> impl Fn(f64) -> f64 + '_ {
        move |r: f64| {
            let mut radii = vec![0.0; self.k()];
            radii[j] = r;
            self.at_radii(&radii)
        }
    }

    /// Radii in `s_j` where some factor leaves the plateau.
    pub fn breaks(&self, j: usize) -> Vec<f64> {
        let mut b: Vec<f64> = self.matrix.iter().filter(|row| row[j] > 0).map(|row| 0.5f64.powf(1.0 / row[j] as f64)).collect();
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        b.dedup();
        b
    }

    /// Radii in `s_j` where some factor changes regime, the other radii fixed.
    pub fn breaks_given(&self, j: usize, radii: &[f64]) -> Vec<f64> {
        let mut b = Vec::new();
        for row in &self.matrix {
            if row[j] == 0 {
                continue;
            }
            let c: f64 = (0..self.k()).filter(|&o| o != j).map(|o| radii[o].powi(row[o] as i32)).product();
            if c <= 0.0 {
                continue;
            }
            for level in [0.5, 1.0] {
                let r = (level / c).powf(1.0 / row[j] as f64);
                if r > 0.0 && r < 1.0 {
                    b.push(r);
                }
            }
        }
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        b.dedup();
        b
    }

    /// `int_0^1 r^e cutoff(radii with r in slot j) dr`.
    pub fn moment_given(&self, j: usize, e: u32, radii: &[f64]) -> Result<f64> {
        let f = |r: f64| {
            let mut rr = radii.to_vec();
            rr[j] = r;
            Complex64::new(r.powi(e as i32) * self.at_radii(&rr), 0.0)
        };
        let tol = Tolerance { rel: 1e-12, abs: 1e-15 };
        Ok(integrate(&f, 0.0, 1.0, &self.breaks_given(j, radii), tol)?.value.re)
    }

    /// `int_0^1 r^e profile_j(r) dr`.
    pub fn moment(&self, j: usize, e: u32) -> Result<f64> {
        let p = self.profile(j);
        let f = |r: f64| Complex64::new(r.powi(e as i32) * p(r), 0.0);
        let tol = Tolerance { rel: 1e-13, abs: 1e-15 };
        Ok(integrate(&f, 0.0, 1.0, &self.breaks(j), tol)?.value.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_frozen() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert!((bump(0.75) - 0.5).abs() < 1e-15);
        // int_0^1 r bump(r) dr = 1/8 + int_{1/2}^1 r (1 - S(2r - 1)) dr = 1/2 - 3/14.
        let c = ChartCutoff::identity(1);
        let m = c.moment(0, 1).unwrap();
        assert!((m - (0.5 - 3.0 / 14.0)).abs() < 1e-13, "{m}");
    }
}
