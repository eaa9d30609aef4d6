//! Level census of tree spheres and the generating function
//! `a_n(z) = Σ_{|x|=n} z^{L(x)}`.

use crate::error::{Error, Result};

/// Below this distance from the removable singularity `b z² = 1` the closed
/// form switches to its limiting branch.
pub const SINGULAR_SWITCH_TOL: f64 = 1e-9;

/// Relative tolerance of the reflection check `a_n(1/(bz)) = a_n(z)`.
pub const REFLECTION_TOL: f64 = 1e-10;

fn check_b(b: u32) -> Result<()> {
    if b < 2 {
        return Err(Error::Domain(format!("branching number b must be >= 2, got {b}")));
    }
    Ok(())
}

/// Number of sphere vertices with `|x| = n` and `L(x) = n - 2t`:
/// `b^n` for `t = 0`, `(b-1) b^(n-t-1)` for `0 < t < n`, and 1 for `t = n`.
pub fn stacey_count(n: u32, t: u32, b: u32) -> Result<u64> {
    check_b(b)?;
    if t > n {
        return Err(Error::Domain(format!("t = {t} must lie in 0..={n}")));
    }
    let b = b as u64;
    let overflow = || Error::Resource(format!("count for n = {n}, b = {b} overflows 64 bits"));
    if t == n {
        // Also covers n = 0: the origin alone.
        Ok(1)
    } else if t == 0 {
        b.checked_pow(n).ok_or_else(overflow)
    } else {
        b.checked_pow(n - t - 1)
            .and_then(|v| v.checked_mul(b - 1))
            .ok_or_else(overflow)
    }
}

/// Full census `[count(t) for t in 0..=n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCensus {
    pub n: u32,
    pub b: u32,
    pub counts: Vec<u64>,
}

impl LevelCensus {
    pub fn new(n: u32, b: u32) -> Result<Self> {
        let counts = (0..=n).map(|t| stacey_count(n, t, b)).collect::<Result<Vec<_>>>()?;
        Ok(LevelCensus { n, b, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("z must be a positive real, got {z}")));
    }
    Ok(())
}

/// `a_n(z)` as the explicit sum over the census.
pub fn a_n_direct(n: u32, z: f64, b: u32) -> Result<f64> {
    check_z(z)?;
    let mut sum = 0.0;
    for t in 0..=n {
        let c = stacey_count(n, t, b)? as f64;
        sum += c * z.powi(n as i32 - 2 * t as i32);
    }
    Ok(sum)
}

/// `a_n(z)` from the rational closed form, using the limiting branch
/// `√b^n ((n+1) - (n-1)/b)` when `b z²` is within [`SINGULAR_SWITCH_TOL`] of 1.
pub fn a_n_closed(n: u32, z: f64, b: u32) -> Result<f64> {
    check_b(b)?;
    check_z(z)?;
    if n == 0 {
        return Ok(1.0);
    }
    let bf = b as f64;
    let n_i = n as i32;
    let denom = bf * z * z - 1.0;
    if denom.abs() < SINGULAR_SWITCH_TOL {
        let nf = n as f64;
        return Ok(bf.sqrt().powi(n_i) * ((nf + 1.0) - (nf - 1.0) / bf));
    }
    let num = bf.powi(n_i - 1) * z.powi(n_i) * (bf * bf * z * z - 1.0) + z.powi(-n_i) * (z * z - 1.0);
    Ok(num / denom)
}

/// Whether `|a_n(z) - a_n(1/(bz))| <= 1e-10 · a_n(z)`.
pub fn check_reflection(n: u32, z: f64, b: u32) -> Result<bool> {
    let a = a_n_direct(n, z, b)?;
    let r = a_n_direct(n, 1.0 / (b as f64 * z), b)?;
    Ok((a - r).abs() <= REFLECTION_TOL * a)
}

/// One row of the `an-table` output.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AnRow {
    pub n: u32,
    pub z: f64,
    pub direct: f64,
    pub closed: f64,
    pub reflected: bool,
}

pub fn an_table(n_max: u32, zs: &[f64], b: u32) -> Result<Vec<AnRow>> {
    let mut rows = Vec::with_capacity(zs.len() * n_max as usize);
    for &z in zs {
        for n in 0..=n_max {
            rows.push(AnRow {
                n,
                z,
                direct: a_n_direct(n, z, b)?,
                closed: a_n_closed(n, z, b)?,
                reflected: check_reflection(n, z, b)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn stacey_examples() {
        assert_eq!(stacey_count(2, 0, 2).unwrap(), 4);
        assert_eq!(stacey_count(2, 2, 2).unwrap(), 1);
        assert_eq!(stacey_count(2, 1, 2).unwrap(), 1);
        assert!(matches!(stacey_count(2, 3, 2), Err(Error::Domain(_))));
        assert!(matches!(stacey_count(70, 0, 2), Err(Error::Resource(_))));
    }

    #[test]
    fn census_matches_sphere_enumeration() {
        for d in [3u32, 4, 5] {
            let l = Lattice::new(d).unwrap();
            for n in 1..=7u32 {
                let mut counts = vec![0u64; n as usize + 1];
                for x in l.sphere(n).unwrap() {
                    let level = l.level(&x);
                    let t = (n as i64 - level) / 2;
                    assert_eq!((n as i64 - level) % 2, 0);
                    counts[t as usize] += 1;
                }
                assert_eq!(LevelCensus::new(n, d - 1).unwrap().counts, counts, "d={d} n={n}");
            }
        }
    }

    #[test]
    fn census_totals_are_sphere_sizes() {
        for b in 2..=4u32 {
            for n in 1..=20u32 {
                let census = LevelCensus::new(n, b).unwrap();
                assert_eq!(census.total(), (b as u64 + 1) * (b as u64).pow(n - 1));
            }
        }
    }

    #[test]
    fn direct_sum_examples() {
        assert_eq!(a_n_direct(1, 1.0, 2).unwrap(), 3.0);
        assert_eq!(a_n_direct(2, 1.0, 2).unwrap(), 6.0);
        let expect = 4.0 * 0.7f64.powi(2) + 1.0 + 0.7f64.powi(-2);
        assert!(rel(a_n_direct(2, 0.7, 2).unwrap(), expect) < 1e-14);
        assert!(rel(a_n_closed(2, 0.7, 2).unwrap(), expect) < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        assert!(rel(a_n_closed(2, 1.0, 2).unwrap(), 6.0) < 1e-15);
        let z = 1.0 / 2f64.sqrt();
        assert!(rel(a_n_closed(3, z, 2).unwrap(), 6.0 * 2f64.sqrt()) < 1e-12);
        assert!(rel(a_n_closed(4, 0.6, 2).unwrap(), a_n_direct(4, 0.6, 2).unwrap()) < 1e-12);
    }

    #[test]
    fn reflection_examples() {
        // a_2(1/2) = 4/4 + 1 + 4 = 6 = a_2(1).
        assert!(rel(a_n_direct(2, 0.5, 2).unwrap(), 6.0) < 1e-15);
        assert!(check_reflection(2, 1.0, 2).unwrap());
        assert!(check_reflection(1, 1.0 / 2f64.sqrt(), 2).unwrap());
        for n in 1..=12 {
            for i in 0..=12 {
                let z = 0.3 + 0.1 * i as f64;
                assert!(check_reflection(n, z, 2).unwrap(), "n={n} z={z}");
            }
        }
    }

    #[test]
    fn closed_form_agrees_across_the_switch() {
        for b in 2..=4u32 {
            let zc = 1.0 / (b as f64).sqrt();
            for n in 1..=15u32 {
                for dz in [0.0, 1e-12, -1e-12, 1e-3, -1e-3, 0.05] {
                    let z = zc + dz;
                    let direct = a_n_direct(n, z, b).unwrap();
                    let closed = a_n_closed(n, z, b).unwrap();
                    assert!(rel(closed, direct) < 1e-10, "b={b} n={n} dz={dz}: {closed} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_z() {
        assert!(a_n_direct(2, 0.0, 2).is_err());
        assert!(a_n_closed(2, -1.0, 2).is_err());
    }
}
