pub mod bmo;
pub mod czo;
pub mod error;
pub mod fourier;
pub mod metric;
pub mod opalg;
pub mod qtorus;
pub mod semigroup;
pub mod transference;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/semigroups.md")]
    mod semigroups {}
    #[doc = include_str!("../../../book/src/bmo.md")]
    mod bmo {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/czo.md")]
    mod czo {}
    #[doc = include_str!("../../../book/src/qtorus.md")]
    mod qtorus {}
    #[doc = include_str!("../../../book/src/transference.md")]
    mod transference {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
