//! Integer-order Bessel functions of the first kind and their zeros.

use crate::{Error, Result};

/// Largest supported order.
pub const MAX_ORDER: usize = 8;

const SERIES_LIMIT: f64 = 8.0;

/// `J_m(z)` for `0 ≤ m ≤ 8`, `z ≥ 0`.
pub fn bessel_j(m: usize, z: f64) -> Result<f64> {
    check(m, z)?;
    Ok(jn(m, z))
}

/// `J_m′(z)` for `0 ≤ m ≤ 8`, `z ≥ 0`.
pub fn bessel_j_prime(m: usize, z: f64) -> Result<f64> {
    check(m, z)?;
    Ok(jn_prime(m, z))
}

fn check(m: usize, z: f64) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::config(format!("Bessel order {m} exceeds {MAX_ORDER}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::config(format!("Bessel argument must be finite and non-negative, got {z}")));
    }
    Ok(())
}

pub(crate) fn jn_prime(m: usize, z: f64) -> f64 {
    if m == 0 {
        -jn(1, z)
    } else {
        0.5 * (jn(m - 1, z) - jn(m + 1, z))
    }
}

pub(crate) fn jn(m: usize, z: f64) -> f64 {
    if z == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if z < SERIES_LIMIT {
        series(m, z)
    } else {
        miller(m, z)
    }
}

/// `Σ_k (−1)^k (z/2)^{2k+m} / (k! (k+m)!)`.
fn series(m: usize, z: f64) -> f64 {
    let h = 0.5 * z;
    let mut term = 1.0;
    for i in 1..=m {
        term *= h / i as f64;
    }
    let q = -h * h;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence normalized by `J₀ + 2 Σ J_{2k} = 1`.
fn miller(m: usize, z: f64) -> f64 {
    let start = 2 * ((z.max(m as f64) as usize + 40) / 2);
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-300; // J_n
    let mut norm = 0.0;
    let mut result = 0.0;
    let mut n = start;
    while n > 0 {
        let prev = 2.0 * n as f64 / z * cur - next;
        next = cur;
        cur = prev;
        n -= 1;
        if n == m {
            result = cur;
        }
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    norm += cur;
    if m == 0 {
        result = cur;
    }
    result / norm
}

/// Which function a zero belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroKind {
    J,
    JPrime,
}

/// `n`-th strictly positive zero of `J_m` or `J_m′`, `0 ≤ m ≤ 4`, `1 ≤ n ≤ 4`.
pub fn bessel_zero(kind: ZeroKind, m: usize, n: usize) -> Result<f64> {
    if m > 4 || !(1..=4).contains(&n) {
        return Err(Error::config(format!("Bessel zero ({m}, {n}) outside the supported table")));
    }
    let f = |z: f64| match kind {
        ZeroKind::J => jn(m, z),
        ZeroKind::JPrime => jn_prime(m, z),
    };
    let step = 0.05;
    let mut a = 0.1;
    let mut fa = f(a);
    let mut found = 0;
    while a < 40.0 {
        let b = a + step;
        let fb = f(b);
        if fa == 0.0 {
            found += 1;
            if found == n {
                return Ok(a);
            }
        } else if fa * fb < 0.0 {
            found += 1;
            if found == n {
                return Ok(bisect(f, a, b));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::Internal(format!("no bracket for Bessel zero ({m}, {n})")))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Zeros `j_{m,n}` and `j′_{m,n}` for `m ≤ 4`, `n ≤ 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    pub j: [[f64; 4]; 5],
    pub j_prime: [[f64; 4]; 5],
}

impl BesselTable {
    pub fn new() -> Result<Self> {
        let mut j = [[0.0; 4]; 5];
        let mut j_prime = [[0.0; 4]; 5];
        for m in 0..5 {
            for n in 0..4 {
                j[m][n] = bessel_zero(ZeroKind::J, m, n + 1)?;
                j_prime[m][n] = bessel_zero(ZeroKind::JPrime, m, n + 1)?;
            }
        }
        Ok(Self { j, j_prime })
    }

    /// `j_{m,n}` with 1-based `n`.
    pub fn j(&self, m: usize, n: usize) -> f64 {
        self.j[m][n - 1]
    }

    /// `j′_{m,n}` with 1-based `n`.
    pub fn j_prime(&self, m: usize, n: usize) -> f64 {
        self.j_prime[m][n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `(1/2π) ∫₀^{2π} cos(mτ − z sin τ) dτ` by the trapezoid rule, which is
    /// spectrally accurate for this periodic integrand.
    fn integral_oracle(m: usize, z: f64) -> f64 {
        let n = 512;
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let t = i as f64 * h;
                (m as f64 * t - z * t.sin()).cos()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for m in 1..=8 {
            assert_eq!(bessel_j(m, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_integral_representation() {
        let mut worst: f64 = 0.0;
        for m in 0..=MAX_ORDER {
            for i in 0..=600 {
                let z = i as f64 * 0.1;
                worst = worst.max((jn(m, z) - integral_oracle(m, z)).abs());
            }
        }
        assert!(worst < 1e-12, "worst abs error {worst}");
    }

    #[test]
    fn recurrence_identity() {
        for z in [1.0, 5.0, 20.0] {
            for m in 1..MAX_ORDER {
                let lhs = jn(m - 1, z) + jn(m + 1, z);
                let rhs = 2.0 * m as f64 / z * jn(m, z);
                assert!((lhs - rhs).abs() < 1e-11, "m={m} z={z}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for m in 0..=4 {
            for z in [0.5, 3.0, 9.0, 17.0] {
                let h = 1e-5;
                let fd = (jn(m, z + h) - jn(m, z - h)) / (2.0 * h);
                assert!((jn_prime(m, z) - fd).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn known_zeros() {
        let cases = [
            (ZeroKind::J, 0, 2.404825557695773),
            (ZeroKind::J, 1, 3.8317059702075125),
            (ZeroKind::JPrime, 1, 1.841183781340659),
            (ZeroKind::JPrime, 2, 3.0542369282271404),
        ];
        for (kind, m, want) in cases {
            let z = bessel_zero(kind, m, 1).unwrap();
            assert!((z - want).abs() < 1e-10, "{kind:?} {m}: {z}");
        }
        // j′_{0,1} is the first strictly positive stationary point of J₀.
        let z = bessel_zero(ZeroKind::JPrime, 0, 1).unwrap();
        assert!((z - 3.8317059702075125).abs() < 1e-10);
    }

    #[test]
    fn table_is_accurate_and_ordered() {
        let t = BesselTable::new().unwrap();
        for m in 0..5 {
            for n in 1..=4 {
                assert!(jn(m, t.j(m, n)).abs() < 1e-12);
                assert!(jn_prime(m, t.j_prime(m, n)).abs() < 1e-12);
                if n > 1 {
                    assert!(t.j(m, n) > t.j(m, n - 1));
                    assert!(t.j_prime(m, n) > t.j_prime(m, n - 1));
                }
            }
        }
    }

    #[test]
    fn out_of_range_orders() {
        assert!(matches!(bessel_j(9, 1.0), Err(Error::Config(_))));
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_zero(ZeroKind::J, 5, 1).is_err());
        assert!(bessel_zero(ZeroKind::J, 0, 5).is_err());
    }
}
