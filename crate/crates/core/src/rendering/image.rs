//! Linear RGB float images with bilinear sampling.

use nalgebra::{Matrix3x2, Vector2, Vector3};

use crate::real::{real, Real};

/// Row-major linear-RGB image. Pixel centers sit at integer coordinates, so
/// sampling at `(x, y)` with integral values returns the stored pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T: Real> {
    width: usize,
    height: usize,
    data: Vec<Vector3<T>>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Vector3::zeros(); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Vector3<T>) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<Vector3<T>>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vector3<T> {
        self.data[y * self.width + x]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut Vector3<T> {
        &mut self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[Vector3<T>] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Vector3<T>] {
        &mut self.data
    }

    /// True when `p` keeps at least one pixel of margin to every border, the
    /// precondition for observation sampling.
    pub fn in_sample_bounds(&self, p: &Vector2<T>) -> bool {
        let w = real::<T>(self.width as f64);
        let h = real::<T>(self.height as f64);
        let one = T::one();
        p.x >= one && p.y >= one && p.x <= w - one - one && p.y <= h - one - one
    }

    /// Bilinear sample of the linear-RGB image; `None` outside the sampling
    /// margin (the caller drops that vertex-view pair).
    pub fn sample_bilinear(&self, p: &Vector2<T>) -> Option<Vector3<T>> {
        if !self.in_sample_bounds(p) {
            return None;
        }
        let (x0, y0, fx, fy) = self.cell(p);
        let p00 = self.pixel(x0, y0);
        let p10 = self.pixel(x0 + 1, y0);
        let p01 = self.pixel(x0, y0 + 1);
        let p11 = self.pixel(x0 + 1, y0 + 1);
        let one = T::one();
        Some(
            p00 * ((one - fx) * (one - fy))
                + p10 * (fx * (one - fy))
                + p01 * ((one - fx) * fy)
                + p11 * (fx * fy),
        )
    }

    /// Bilinear sample plus the 3x2 gradient w.r.t. the pixel coordinates.
    pub fn sample_bilinear_grad(&self, p: &Vector2<T>) -> Option<(Vector3<T>, Matrix3x2<T>)> {
        if !self.in_sample_bounds(p) {
            return None;
        }
        let (x0, y0, fx, fy) = self.cell(p);
        let p00 = self.pixel(x0, y0);
        let p10 = self.pixel(x0 + 1, y0);
        let p01 = self.pixel(x0, y0 + 1);
        let p11 = self.pixel(x0 + 1, y0 + 1);
        let one = T::one();
        let value = p00 * ((one - fx) * (one - fy))
            + p10 * (fx * (one - fy))
            + p01 * ((one - fx) * fy)
            + p11 * (fx * fy);
        let ddx = (p10 - p00) * (one - fy) + (p11 - p01) * fy;
        let ddy = (p01 - p00) * (one - fx) + (p11 - p10) * fx;
        let mut grad = Matrix3x2::zeros();
        grad.set_column(0, &ddx);
        grad.set_column(1, &ddy);
        Some((value, grad))
    }

    fn cell(&self, p: &Vector2<T>) -> (usize, usize, T, T) {
        let xf = p.x.floor();
        let yf = p.y.floor();
        let mut x0 = xf.to_usize().unwrap_or(0);
        let mut y0 = yf.to_usize().unwrap_or(0);
        // Keep the 2x2 stencil inside the image when sampling exactly on the
        // last in-bounds lattice line.
        if x0 + 1 >= self.width {
            x0 = self.width - 2;
        }
        if y0 + 1 >= self.height {
            y0 = self.height - 2;
        }
        let fx = p.x - real::<T>(x0 as f64);
        let fy = p.y - real::<T>(y0 as f64);
        (x0, y0, fx, fy)
    }
}
