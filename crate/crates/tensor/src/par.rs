//! Work distribution for the kernels. `Mode::Par` splits the output buffer
//! into disjoint chunks and hands them to rayon; `Mode::Seq` walks the same
//! chunks in order on the calling thread. Each chunk is computed by the same
//! code either way, so the two modes produce identical bytes.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Seq,
    #[cfg(feature = "parallel")]
    Par,
}

impl Mode {
    pub(crate) fn auto() -> Mode {
        #[cfg(feature = "parallel")]
        {
            Mode::Par
        }
        #[cfg(not(feature = "parallel"))]
        {
            Mode::Seq
        }
    }
}

/// Runs `f(chunk_index, chunk)` over consecutive `size`-element chunks; the
/// final chunk may be shorter.
pub(crate) fn for_chunks_mut<T, F>(mode: Mode, data: &mut [T], size: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    debug_assert!(size > 0);
    match mode {
        Mode::Seq => {
            for (i, chunk) in data.chunks_mut(size).enumerate() {
                f(i, chunk);
            }
        }
        #[cfg(feature = "parallel")]
        Mode::Par => {
            use rayon::prelude::*;
            data.par_chunks_mut(size)
                .enumerate()
                .for_each(|(i, chunk)| f(i, chunk));
        }
    }
}
