//! Thin n-dimensional wrapper over `rustfft` for the flat row-major lattices
//! used by [`super::SpectralField`].

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `e^{-i k x}` kernel, unnormalized.
    Forward,
    /// `e^{+i k x}` kernel, unnormalized.
    Inverse,
}

/// In-place transform of one `n^dim` block.
pub(crate) fn transform(data: &mut [Complex64], n: usize, dim: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    match dim {
        1 => fft.process(data),
        2 => {
            // rows are contiguous
            fft.process(data);
            let mut column = vec![Complex64::default(); n];
            for c in 0..n {
                for r in 0..n {
                    column[r] = data[r * n + c];
                }
                fft.process(&mut column);
                for r in 0..n {
                    data[r * n + c] = column[r];
                }
            }
        }
        _ => unreachable!("grid dimension validated at construction"),
    }
}
