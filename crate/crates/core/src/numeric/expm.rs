//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Linalg("expm needs a square matrix".into()));
    }
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::Linalg("expm of a non-finite matrix".into()));
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]) + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &id * B[1];
    let u = &a * inner_u;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]) + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &id * B[0];
    let p = &v + &u;
    let q = &v - &u;
    let lu = q.lu();
    let mut r = lu.solve(&p).ok_or_else(|| Error::Linalg("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        let th = 7.3;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, th, -th, 0.0]);
        let e = expm(&a).unwrap();
        let exact = DMatrix::from_row_slice(2, 2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
        assert!((e - exact).amax() < 1e-13);
    }

    #[test]
    fn symmetric_matches_eigen_route() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6);
        let s = &a + a.transpose();
        let eig = s.clone().symmetric_eigen();
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
        let exact = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        let e = expm(&s).unwrap();
        assert!((e - &exact).amax() < 1e-11 * exact.amax());
    }

    #[test]
    fn nilpotent_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        let exact = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 3.5, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert!((e - exact).amax() < 1e-15);
    }
}
