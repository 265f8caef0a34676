//! Oriented rectangle overlap via the separating axis test.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect<F> {
    pub x: F,
    pub y: F,
    pub heading: F,
    pub length: F,
    pub width: F,
}

impl<F: Scalar> OrientedRect<F> {
    pub fn new(x: F, y: F, heading: F, length: F, width: F) -> Self {
        Self {
            x,
            y,
            heading,
            length,
            width,
        }
    }

    /// Unit vectors along the length and the width.
    #[inline]
    fn axes(&self) -> [(F, F); 2] {
        let (sin, cos) = self.heading.sin_cos();
        [(cos, sin), (-sin, cos)]
    }

    pub fn corners(&self) -> [(F, F); 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let hl = self.length * F::half();
        let hw = self.width * F::half();
        let mut out = [(F::zero(), F::zero()); 4];
        for (slot, (a, b)) in out.iter_mut().zip([(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)]) {
            *slot = (self.x + ux * a + vx * b, self.y + uy * a + vy * b);
        }
        out
    }

    /// Half extent of the rectangle projected on the unit axis `(ax, ay)`.
    #[inline]
    fn radius_on(&self, ax: F, ay: F) -> F {
        let [(ux, uy), (vx, vy)] = self.axes();
        self.length * F::half() * (ux * ax + uy * ay).abs() + self.width * F::half() * (vx * ax + vy * ay).abs()
    }

    /// True unless some edge normal of either rectangle separates them.
    /// Touching rectangles count as overlapping.
    pub fn overlaps(&self, other: &Self) -> bool {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        self.axes().into_iter().chain(other.axes()).all(|(ax, ay)| {
            let distance = (dx * ax + dy * ay).abs();
            distance <= self.radius_on(ax, ay) + other.radius_on(ax, ay)
        })
    }
}
