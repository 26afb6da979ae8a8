use crate::error::{Error, Result};

/// Smallest `s >= lo` with `f(s) >= target` for nondecreasing `f`, to within `tol` in `f`
/// or machine resolution in `s`.
///
/// The upper end of the bracket starts at `lo + 1` and doubles; it gives up once it
/// passes `limit`.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, tol: f64, limit: f64, what: &'static str) -> Result<f64> {
    if f(lo) >= target {
        return Ok(lo);
    }
    let mut a = lo;
    let mut step = 1.0f64.max(lo.abs());
    let mut b = lo + step;
    while f(b) < target {
        a = b;
        step *= 2.0;
        b = lo + step;
        if !(b <= limit) {
            return Err(Error::Overflow { what, limit });
        }
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm >= target {
            b = m;
            if fm - target <= tol {
                break;
            }
        } else {
            a = m;
            if target - fm <= tol && b - a <= 4.0 * f64::EPSILON * b.abs() {
                break;
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_cube() {
        let s = invert_increasing(|x| x * x * x, 27.0, 0.0, 1e-13, 1e300, "cube").unwrap();
        assert!((s - 3.0).abs() < 1e-13);
    }

    #[test]
    fn reports_runaway() {
        let e = invert_increasing(|x| x.min(10.0), 11.0, 0.0, 1e-12, 1e6, "capped");
        assert!(matches!(e, Err(Error::Overflow { .. })));
    }

    #[test]
    fn returns_lower_end_when_already_above() {
        assert_eq!(invert_increasing(|_| 5.0, 1.0, 2.0, 1e-12, 1e10, "flat").unwrap(), 2.0);
    }
}
