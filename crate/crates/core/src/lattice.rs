//! The discrete path space and its piecewise-linear embedding into
//! continuous paths.
//!
//! Path values are stored as integer indices `j`; the value is `j * h` with
//! `h = sqrt(T) / (n * sqrt(n))`. A step with volatility `k/n` moves the
//! index by exactly `k`.

use serde::Serialize;

use crate::domain::{SigmaSet, VolatilityDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    n: usize,
    horizon: f64,
    spacing: f64,
    j_max: i64,
}

impl Lattice {
    pub fn new(domain: &VolatilityDomain, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("step count n must be at least 1".into()));
        }
        let nf = n as f64;
        let horizon = domain.horizon();
        Ok(Self {
            n,
            horizon,
            spacing: horizon.sqrt() / (nf * nf.sqrt()),
            j_max: (nf * nf * domain.upper().sqrt()).ceil() as i64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Spacing `h` between neighbouring lattice values.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Largest admissible index magnitude, `ceil(n^2 sqrt(R_D))`.
    pub fn j_max(&self) -> i64 {
        self.j_max
    }

    pub fn value(&self, j: i64) -> f64 {
        j as f64 * self.spacing
    }

    pub fn contains(&self, j: i64) -> bool {
        j.abs() <= self.j_max
    }

    /// Step size in path units for volatility `sigma`: `sigma * sqrt(T/n)`.
    pub fn step_size(&self, sigma: f64) -> f64 {
        sigma * (self.horizon / self.n as f64).sqrt()
    }

    /// Time of vertex `k`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            return self.horizon;
        }
        k as f64 * self.horizon / self.n as f64
    }
}

/// A lattice path `x_0 = 0, x_1, ..., x_n`, stored as indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePath {
    indices: Vec<i64>,
}

impl LatticePath {
    /// Checks `x_0 = 0`, length `n + 1` and `|j| <= j_max`.
    pub fn new(lattice: &Lattice, indices: Vec<i64>) -> Result<Self> {
        if indices.len() != lattice.n() + 1 {
            return Err(Error::DomainError(format!(
                "path has {} vertices, expected {}",
                indices.len(),
                lattice.n() + 1
            )));
        }
        if indices[0] != 0 {
            return Err(Error::DomainError("path must start at 0".into()));
        }
        if let Some(&j) = indices.iter().find(|&&j| !lattice.contains(j)) {
            return Err(Error::DomainError(format!(
                "index {j} is outside the lattice bound {}",
                lattice.j_max()
            )));
        }
        Ok(Self { indices })
    }

    pub(crate) fn from_indices_unchecked(indices: Vec<i64>) -> Self {
        debug_assert_eq!(indices.first(), Some(&0));
        Self { indices }
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn steps(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn terminal_index(&self) -> i64 {
        *self.indices.last().expect("path is nonempty")
    }

    pub fn max_index(&self) -> i64 {
        *self.indices.iter().max().expect("path is nonempty")
    }

    pub fn values(&self, lattice: &Lattice) -> Vec<f64> {
        self.indices.iter().map(|&j| lattice.value(j)).collect()
    }

    /// Whether every increment is `+-k` for a numerator `k` in `sigmas`.
    pub fn steps_admissible(&self, sigmas: &SigmaSet) -> bool {
        self.indices
            .windows(2)
            .all(|w| sigmas.numerators().contains(&(w[1] - w[0]).unsigned_abs()))
    }
}

/// The continuous path `t -> x_hat(t)` obtained by linear interpolation of a
/// lattice path.
#[derive(Debug, Clone, Copy)]
pub struct InterpolatedPath<'a> {
    lattice: &'a Lattice,
    path: &'a LatticePath,
}

impl<'a> InterpolatedPath<'a> {
    pub fn new(lattice: &'a Lattice, path: &'a LatticePath) -> Self {
        Self { lattice, path }
    }

    pub fn horizon(&self) -> f64 {
        self.lattice.horizon()
    }

    /// Vertex values `x_0..x_n`.
    pub fn vertex(&self, k: usize) -> f64 {
        self.lattice.value(self.path.indices[k])
    }

    pub fn steps(&self) -> usize {
        self.path.steps()
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        interpolate(self.lattice, self.path, t)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(self.lattice, self.path)
    }
}

/// `x_hat(t) = (floor(nt/T) + 1 - nt/T) x_floor + (nt/T - floor(nt/T)) x_{floor+1}`.
pub fn interpolate(lattice: &Lattice, path: &LatticePath, t: f64) -> Result<f64> {
    let horizon = lattice.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::DomainError(format!("t = {t} outside [0, {horizon}]")));
    }
    let n = path.steps();
    let mut s = n as f64 * t / horizon;
    // t_k = kT/n does not always map back to exactly k
    let nearest = s.round();
    if (s - nearest).abs() <= 4.0 * f64::EPSILON * nearest.max(1.0) {
        s = nearest;
    }
    let k = (s.floor() as usize).min(n);
    if k == n {
        return Ok(lattice.value(path.indices[n]));
    }
    let frac = s - k as f64;
    Ok((1.0 - frac) * lattice.value(path.indices[k]) + frac * lattice.value(path.indices[k + 1]))
}

/// `max_k |x_k|`, which is the uniform norm of the interpolated path.
pub fn sup_norm(lattice: &Lattice, path: &LatticePath) -> f64 {
    let j = path.indices.iter().map(|j| j.abs()).max().unwrap_or(0);
    lattice.value(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize, horizon: f64) -> Lattice {
        Lattice::new(&VolatilityDomain::new(0.25, 1.0, horizon).unwrap(), n).unwrap()
    }

    #[test]
    fn spacing_and_bound() {
        let l = lattice(4, 1.0);
        assert_eq!(l.spacing(), 1.0 / 8.0);
        assert_eq!(l.j_max(), 16);
        // a step with sigma = k/n is exactly k lattice spacings
        assert!((l.step_size(0.75) - 3.0 * l.spacing()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_examples() {
        let l = lattice(2, 1.0);
        let h = l.spacing();
        let p = LatticePath::new(&l, vec![0, 1, 2]).unwrap();
        assert_eq!(interpolate(&l, &p, 0.25).unwrap(), 0.5 * h);
        assert_eq!(interpolate(&l, &p, 0.0).unwrap(), 0.0);

        let l = lattice(4, 2.0);
        let p = LatticePath::new(&l, vec![0, 1, 2, 1, 0]).unwrap();
        assert_eq!(interpolate(&l, &p, 2.0).unwrap(), 0.0);
        assert!(interpolate(&l, &p, 2.0 + 1e-9).is_err());
        assert!(interpolate(&l, &p, -1e-9).is_err());
    }

    #[test]
    fn vertices_are_reproduced() {
        let l = lattice(4, 2.0);
        let p = LatticePath::new(&l, vec![0, 3, 5, 2, -1]).unwrap();
        for k in 0..=4 {
            assert_eq!(interpolate(&l, &p, l.time(k)).unwrap(), l.value(p.indices()[k]));
        }
    }

    #[test]
    fn sup_norm_examples() {
        let l = lattice(2, 1.0);
        let h = l.spacing();
        assert_eq!(sup_norm(&l, &LatticePath::new(&l, vec![0, 1, -2]).unwrap()), 2.0 * h);
        assert_eq!(sup_norm(&l, &LatticePath::new(&l, vec![0, 0, 0]).unwrap()), 0.0);
        assert_eq!(sup_norm(&l, &LatticePath::new(&l, vec![0, 3, 1]).unwrap()), 3.0 * h);
    }

    #[test]
    fn path_validation() {
        let l = lattice(2, 1.0);
        assert!(LatticePath::new(&l, vec![1, 1, 2]).is_err());
        assert!(LatticePath::new(&l, vec![0, 1]).is_err());
        assert!(LatticePath::new(&l, vec![0, 1, 5]).is_err());
    }
}
