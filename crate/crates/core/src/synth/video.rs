//! Background removal with simultaneous deblurring.
//!
//! Frames `V` with pixels in `[0, 1]` are turned into `M = 1 − V`. With a
//! static background `B`, `M = (1 − B) + (B − V)`: the first term is rank one
//! after unfolding and the second is nonzero only where moving objects cover
//! the background. A framewise blur `H` gives `M₀ = H M`, and the
//! preconditioned tensor solver recovers the deblurred sparse part.

use rand::Rng;

use super::rng;
use crate::error::{Error, Result};
use crate::numerics::{mat3, Tensor3};
use crate::separation::{pgts, FilterSpec, SeparationResult, SolverConfig};

/// Settings used for video separation.
pub fn video_config() -> SolverConfig {
    SolverConfig {
        rho_outer: 1.0,
        rho_inner: 1.0,
        tol_outer: 1e-8,
        tol_inner: 1e-6,
        max_outer: 100,
        max_inner: 10,
        ..SolverConfig::default()
    }
}

/// A synthetic clip with known decomposition.
#[derive(Clone, Debug)]
pub struct SyntheticVideo {
    /// Frames `V` in `[0, 1]`.
    pub frames: Tensor3,
    /// `1 − B`
    pub low_rank: Tensor3,
    /// `B − V`
    pub sparse: Tensor3,
}

/// Static random background plus a 2-pixel dark dot that moves two pixels
/// per frame along the middle row.
pub fn synthetic_video(d1: usize, d2: usize, frames: usize, seed: u64) -> Result<SyntheticVideo> {
    if d1 == 0 || d2 < 2 || frames == 0 {
        return Err(Error::shape("synthetic video needs at least 1x2 frames and one frame"));
    }
    let mut rng = rng(seed);
    let background: Vec<f64> = (0..d1 * d2).map(|_| rng.random_range(0.3..0.9)).collect();
    let row = d1 / 2;
    let dot = |j: usize, k: usize| {
        let c = (2 * k) % (d2 - 1);
        j == c || j == c + 1
    };
    let bg = |i: usize, j: usize| background[i + j * d1];
    let low_rank = Tensor3::from_fn(d1, d2, frames, |i, j, _| 1.0 - bg(i, j));
    // the dot is nearly black
    let sparse = Tensor3::from_fn(d1, d2, frames, |i, j, k| if i == row && dot(j, k) { bg(i, j) - 0.05 } else { 0.0 });
    let frames_t = Tensor3::from_fn(d1, d2, frames, |i, j, k| bg(i, j) - sparse.get(i, j, k));
    Ok(SyntheticVideo {
        frames: frames_t,
        low_rank,
        sparse,
    })
}

/// Output of [`separate_video`].
#[derive(Clone, Debug)]
pub struct VideoSeparation {
    /// `1 − Ŝ`, clamped to `[0, 1]`.
    pub foreground: Tensor3,
    /// `1 − L̂` (the blurred background), clamped to `[0, 1]`.
    pub background: Tensor3,
    pub result: SeparationResult<Tensor3>,
}

/// `M = 1 − V`.
pub fn video_to_data(frames: &Tensor3) -> Tensor3 {
    frames.map(|v| 1.0 - v)
}

/// Separates a (possibly blurred) video. With `blur` set, the clean frames
/// are blurred first (`M₀ = H(1 − V)`); otherwise `M₀ = 1 − V` and the
/// filter is the identity.
pub fn separate_video(frames: &Tensor3, blur: Option<&FilterSpec>, cfg: &SolverConfig) -> Result<VideoSeparation> {
    if !mat3(frames).all_finite() {
        return Err(Error::Data("video frames contain NaN or infinite values".into()));
    }
    let (d1, d2, _) = frames.dims();
    let m = video_to_data(frames);
    let identity;
    let h = match blur {
        Some(h) => h,
        None => {
            identity = FilterSpec::Block {
                e1: crate::numerics::DenseMatrix::identity(1),
                e2: crate::numerics::DenseMatrix::identity(1),
                k1: d1,
                k2: d2,
            };
            &identity
        }
    };
    let m0 = match blur {
        Some(h) => h.apply_tensor(&m)?,
        None => m,
    };
    let result = pgts(&m0, h, cfg, None)?;
    let foreground = result.s_hat.map(|s| (1.0 - s).clamp(0.0, 1.0));
    let background = result.l_hat.map(|l| (1.0 - l).clamp(0.0, 1.0));
    Ok(VideoSeparation {
        foreground,
        background,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_decomposition_is_consistent() {
        let v = synthetic_video(8, 8, 4, 1).unwrap();
        let m = video_to_data(&v.frames);
        for ((a, b), c) in m.data().iter().zip(v.low_rank.data()).zip(v.sparse.data()) {
            assert!((a - (b + c)).abs() < 1e-15);
        }
        assert!(v.frames.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let nnz = v.sparse.data().iter().filter(|&&x| x != 0.0).count();
        assert_eq!(nnz, 8);
        assert_eq!(mat3(&v.low_rank).svd().unwrap().rank(1e-10), 1);
    }
}
