//! Ising model on finite layered patches of hyperbolic {p,q} tilings with a
//! frozen minus boundary: closed forms, lattice construction, exact energies,
//! Metropolis dynamics and exact energy-landscape analysis.

pub mod error;
pub mod flags;
pub mod hp;
pub mod lattice;
pub mod energy;
pub mod params;
pub mod dynamics;
pub mod landscape;

pub use error::{Error, Result};
pub use flags::Flag;
pub use params::{Field, ModelParams, Tiling};

/// Data-parallel helpers that fall back to plain iteration when the
/// `parallel` feature is off.
pub mod par {
    #[cfg(feature = "parallel")]
    pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }

    #[cfg(feature = "parallel")]
    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }

    pub fn enabled() -> bool {
        cfg!(feature = "parallel")
    }
}
