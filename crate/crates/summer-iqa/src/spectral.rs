//! 2-D DFT kernel and log-magnitude pooling.
//!
//! The forward transform is unnormalized:
//! `F(u,v) = sum_{m,n} x(m,n) * exp(-j*2*pi*(u*m/H + v*n/W))`,
//! computed row-column with mixed-radix FFTs so arbitrary sizes (512x384 and
//! the like) transform without padding.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::raster::Plane;

/// Magnitudes below this clamp to EPSILON before a log; keeps the all-zero
/// error map (identical images) finite.
pub const EPSILON: f64 = 1e-12;

/// Unnormalized forward 2-D DFT output. Row `u` and column `v` index
/// frequency bins; DC sits at (0,0).
#[derive(Debug, Clone)]
pub struct ComplexGrid {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.values[u * self.width + v]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Per-bin |F(u,v)| as a plane.
    pub fn magnitude(&self) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.values.iter().map(|c| c.norm()).collect(),
        )
    }

    /// Per-bin ln(max(|F(u,v)|, EPSILON)) as a plane.
    pub fn log_magnitude(&self) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.values.iter().map(|c| c.norm().max(EPSILON).ln()).collect(),
        )
    }
}

/// Per-channel, per-scale diagnostics behind a final quality score.
///
/// `log_mag_mean[c][i-1]` holds the mean log-magnitude of the channel-`c`
/// error plane at scale `i` (1..=4); `weight_component[c][j]` holds the
/// frequency-weight component at scale 3 (`j = 0`) and scale 4 (`j = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralSummary {
    pub log_mag_mean: [[f64; 4]; 3],
    pub weight_component: [[f64; 2]; 3],
}

impl SpectralSummary {
    pub fn is_finite(&self) -> bool {
        self.log_mag_mean.iter().flatten().all(|v| v.is_finite())
            && self.weight_component.iter().flatten().all(|v| v.is_finite())
    }
}

thread_local! {
    // Planner memoizes per length; thread-local keeps plan reuse without
    // cross-thread locking.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward 2-D DFT of a real plane.
pub fn dft2(plane: &Plane) -> ComplexGrid {
    let (w, h) = (plane.width(), plane.height());
    let mut values: Vec<Complex64> = plane
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();

    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = planner.plan_fft_forward(w);
        let col_fft = planner.plan_fft_forward(h);

        for row in values.chunks_exact_mut(w) {
            row_fft.process(row);
        }

        let mut column = vec![Complex64::default(); h];
        for v in 0..w {
            for u in 0..h {
                column[u] = values[u * w + v];
            }
            col_fft.process(&mut column);
            for u in 0..h {
                values[u * w + v] = column[u];
            }
        }
    });

    ComplexGrid {
        width: w,
        height: h,
        values,
    }
}

/// Mean over all bins of ln(max(|F(u,v)|, EPSILON)); natural log.
pub fn log_magnitude_mean(plane: &Plane) -> f64 {
    let grid = dft2(plane);
    let n = grid.values.len() as f64;
    grid.values
        .iter()
        .map(|c| c.norm().max(EPSILON).ln())
        .sum::<f64>()
        / n
}

/// Quadrant swap placing the DC bin at (⌊H/2⌋, ⌊W/2⌋). Display-only; mean
/// pooling is invariant under this permutation.
pub fn fft_shift(grid: &Plane) -> Plane {
    let (w, h) = (grid.width(), grid.height());
    let row_shift = h / 2;
    let col_shift = w / 2;
    Plane::from_fn(w, h, |row, col| {
        // Output (row, col) takes the input bin that lands there after the
        // +⌊N/2⌋ circular shift.
        let src_row = (row + h - row_shift) % h;
        let src_col = (col + w - col_shift) % w;
        grid.get(src_row, src_col)
    })
}
