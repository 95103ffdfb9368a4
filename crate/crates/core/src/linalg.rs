//! Closed-form singular values for the `d x d` Jacobians that occur here (`d <= 2`).

/// Largest and smallest singular value of a row-major `d x d` matrix.
pub(crate) fn singular_extremes(m: &[f64], d: usize) -> (f64, f64) {
    match d {
        1 => (m[0].abs(), m[0].abs()),
        2 => {
            let fro = m.iter().map(|v| v * v).sum::<f64>();
            let det = (m[0] * m[3] - m[1] * m[2]).abs();
            let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
            let hi = (0.5 * (fro + disc)).sqrt();
            let lo = if hi > 0.0 { det / hi } else { 0.0 };
            (hi, lo)
        }
        _ => unreachable!("dimension above 2"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_and_rotation() {
        assert_eq!(singular_extremes(&[-3.0], 1), (3.0, 3.0));
        let (hi, lo) = singular_extremes(&[2.0, 0.0, 0.0, 0.5], 2);
        assert_relative_eq!(hi, 2.0, epsilon = 1e-15);
        assert_relative_eq!(lo, 0.5, epsilon = 1e-15);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let (hi, lo) = singular_extremes(&[c, -s, s, c], 2);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-14);
        assert_relative_eq!(lo, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn shear() {
        // [[1, 1], [0, 1]]: singular values are the golden ratio and its inverse
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let (hi, lo) = singular_extremes(&[1.0, 1.0, 0.0, 1.0], 2);
        assert_relative_eq!(hi, phi, epsilon = 1e-14);
        assert_relative_eq!(lo, 1.0 / phi, epsilon = 1e-14);
    }
}
