use crate::field::{GradientField, ImageGrid};

/// Periodic forward differences.
pub fn grad(u: &ImageGrid) -> GradientField {
    let (h, w) = u.shape();
    let mut g = GradientField::zeros(h, w);
    grad_into(u, &mut g);
    g
}

pub fn grad_into(u: &ImageGrid, g: &mut GradientField) {
    let (h, w) = u.shape();
    debug_assert_eq!(g.shape(), (h, w));
    let v = u.as_slice();
    for i in 0..h {
        let row = i * w;
        let down = ((i + 1) % h) * w;
        for j in 0..w {
            let right = if j + 1 == w { 0 } else { j + 1 };
            let c = v[row + j];
            g.dx[row + j] = v[row + right] - c;
            g.dy[row + j] = v[down + j] - c;
        }
    }
}

/// Exact adjoint of [`grad`] (the negative discrete divergence).
pub fn grad_adjoint(g: &GradientField) -> ImageGrid {
    let (h, w) = g.shape();
    let mut out = ImageGrid::zeros(h, w);
    grad_adjoint_into(g, &mut out);
    out
}

pub fn grad_adjoint_into(g: &GradientField, out: &mut ImageGrid) {
    let (h, w) = g.shape();
    debug_assert_eq!(out.shape(), (h, w));
    let o = crate::field::Field::values_mut(out);
    for i in 0..h {
        let row = i * w;
        let up = ((i + h - 1) % h) * w;
        for j in 0..w {
            let left = if j == 0 { w - 1 } else { j - 1 };
            o[row + j] = g.dx[row + left] - g.dx[row + j] + g.dy[up + j] - g.dy[row + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let u = ImageGrid::from_fn(4, 5, |_, _| 2.5);
        let g = grad(&u);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_by_two_periodic_differences() {
        let u = ImageGrid::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let g = grad(&u);
        assert_eq!(g.dx, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(g.dy, vec![0.0; 4]);
    }

    #[test]
    fn adjoint_identity_7x5() {
        let u = ImageGrid::from_fn(7, 5, |i, j| ((i * 5 + j) as f64 * 1.3).sin());
        let mut gy = GradientField::zeros(7, 5);
        for (k, v) in gy.iter_mut().enumerate() {
            *v = (k as f64 * 0.71).cos();
        }
        let lhs = grad(&u).dot(&gy);
        let adj = grad_adjoint(&gy);
        let rhs: f64 = u
            .as_slice()
            .iter()
            .zip(adj.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() <= 1e-13);
    }
}
