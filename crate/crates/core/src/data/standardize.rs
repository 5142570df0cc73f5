use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Per-feature z-scoring fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fits means and population standard deviations. Constant features get
/// `std = 1`, so they map to zero.
pub fn fit_standardizer(x: &Matrix) -> Standardizer {
    let (n, d) = x.shape();
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    if n == 0 {
        return Standardizer { mean, std };
    }
    for j in 0..d {
        let col = (0..n).map(|i| x.get(i, j));
        let (lo, hi) = col
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo == hi {
            mean[j] = lo;
            continue;
        }
        let m = col.clone().sum::<f64>() / n as f64;
        let var = col.map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        mean[j] = m;
        std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    Standardizer { mean, std }
}

impl Standardizer {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "standardizer fitted on {} features, applied to {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        let d = x.cols();
        for row in out.data_mut().chunks_exact_mut(d.max(1)) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::standard_normal;
    use crate::rng::SeededRng;

    fn moments(x: &Matrix, j: usize) -> (f64, f64) {
        let n = x.rows() as f64;
        let m = (0..x.rows()).map(|i| x.get(i, j)).sum::<f64>() / n;
        let v = (0..x.rows()).map(|i| (x.get(i, j) - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    }

    fn sample() -> Matrix {
        let mut rng = SeededRng::new(12);
        let mut data = standard_normal(&mut rng, 300 * 3);
        for (i, v) in data.iter_mut().enumerate() {
            match i % 3 {
                0 => *v = 50.0 + 7.0 * *v,
                1 => *v *= 1e-3,
                _ => *v = 0.1,
            }
        }
        Matrix::from_vec(300, 3, data).unwrap()
    }

    #[test]
    fn own_fit_gives_unit_moments_and_zero_constant_column() {
        let x = sample();
        let z = fit_standardizer(&x).apply(&x).unwrap();
        for j in 0..2 {
            let (m, s) = moments(&z, j);
            assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10, "col {j}: {m} {s}");
        }
        assert!((0..z.rows()).all(|i| z.get(i, 2) == 0.0));
    }

    #[test]
    fn refit_on_standardized_is_identity_transform() {
        let x = sample();
        let z = fit_standardizer(&x).apply(&x).unwrap();
        let again = fit_standardizer(&z);
        for j in 0..2 {
            assert!(again.mean[j].abs() < 1e-10);
            assert!((again.std[j] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn width_mismatch() {
        let s = fit_standardizer(&Matrix::zeros(3, 2));
        assert!(s.apply(&Matrix::zeros(3, 4)).is_err());
    }
}
