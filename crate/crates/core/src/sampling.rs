//! Seeded point sampling in coordinate boxes.
//!
//! Points are drawn with `ChaCha8Rng`, seeded once per sweep and switched to
//! stream `i` for the `i`-th point, so every point is reproducible on its own
//! and sweeps can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Point;

/// Closed box `[lo, hi]` per chart coordinate, ordered `x1..xn, y1..yn`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() || !bounds.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "a domain box needs 2n intervals, got {}",
                bounds.len()
            )));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "interval {k} is degenerate: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// The same interval for every coordinate.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); 2 * dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len() / 2
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, u: &Point) -> bool {
        u.dim() == self.dim()
            && u.slots()
                .iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| (lo..=hi).contains(v))
    }

    /// Index of the first coordinate outside the box.
    pub fn violation(&self, u: &Point) -> Option<usize> {
        u.slots()
            .iter()
            .zip(&self.bounds)
            .position(|(v, &(lo, hi))| !(lo..=hi).contains(v))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let slots: Vec<f64> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        Point::from_slots(&slots).expect("even slot count")
    }
}

/// The `index`-th point of the sweep seeded by `seed`.
pub fn sample_point(domain: &DomainBox, seed: u64, index: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    domain.sample(&mut rng)
}

/// The first `count` points of the sweep seeded by `seed`.
pub fn sample_points(domain: &DomainBox, seed: u64, count: usize) -> Vec<Point> {
    (0..count as u64)
        .map(|i| sample_point(domain, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_inside_and_reproducible() {
        let b = DomainBox::new(vec![(-1.0, 1.0), (0.5, 2.0), (-3.0, 3.0), (0.0, 0.1)]).unwrap();
        let a = sample_points(&b, 7, 50);
        assert!(a.iter().all(|p| b.contains(p)));
        assert_eq!(a, sample_points(&b, 7, 50));
        assert_ne!(a, sample_points(&b, 8, 50));
        assert_eq!(a[13], sample_point(&b, 7, 13));
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(DomainBox::new(vec![(0.0, 1.0)]).is_err());
        assert!(DomainBox::new(vec![(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(DomainBox::new(vec![(0.0, f64::NAN), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn violation_index() {
        let b = DomainBox::cube(1, 0.0, 1.0).unwrap();
        let u = Point::new(vec![0.5], vec![2.0]).unwrap();
        assert_eq!(b.violation(&u), Some(1));
        assert!(!b.contains(&u));
    }
}
