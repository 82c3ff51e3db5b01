//! Flat norms and minimal connections of atomic distributions on planar
//! domains with holes.
//!
//! The library works with finite signed sums of Dirac masses written as
//! positive/negative pole pairs. It computes the weighted flat norm
//! `min |R| + beta * |S|` over decompositions `T = R + dS` (point charges
//! plus oriented dipole segments, with the boundary acting as a free sink),
//! builds the matching optimal Lipschitz dual certificate, extracts such
//! distributions from circle-valued fields by winding counts, and assembles
//! the resulting graph-area upper bounds and their puncture refinements.
//!
//! Modules follow the pipeline:
//!
//! * [`geom`] — polygonal domains, membership, boundary distances, clipping;
//! * [`currents`] — pole-pair distributions and their canonical forms;
//! * [`flatnorm`] — exact solvers (brute force and assignment reduction) and
//!   structure checks on minimizers;
//! * [`dual`] — dual Lipschitz certificates and primal-dual verification;
//! * [`jacobian`] — circle-valued map families, sampling, winding extraction;
//! * [`area`] — graph-area quadrature and relaxed-area upper bounds;
//! * [`io`] — file formats shared with the command-line front end;
//! * [`selftest`] — the deterministic verification suite.
//!
//! A two-pole example end to end:
//!
//! ```
//! use flatconn::{dual, AtomicDistribution, Domain, NormKind, Point2, PolePair};
//! use std::sync::Arc;
//!
//! let domain = Arc::new(Domain::disc(1.0)?);
//! let t = AtomicDistribution::from_pairs(
//!     vec![PolePair::new(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0))?],
//!     domain,
//! )?;
//! let dec = flatconn::solve_matching(&t, NormKind::flat_alpha())?;
//! assert!((dec.value - 0.4).abs() < 1e-9);
//!
//! let cert = dual::build_certificate(&t, &dec)?;
//! assert!(dual::verify_duality(&cert, &t, &dec, 0).optimal());
//! # Ok::<(), flatconn::Error>(())
//! ```

pub mod area;
pub mod currents;
pub mod dual;
pub mod flatnorm;
pub mod geom;
pub mod io;
pub mod jacobian;
pub mod selftest;

pub use area::{AreaReport, QuadratureMeta};
pub use currents::{AtomicDistribution, PolePair, SignedAtom, SignedAtomList};
pub use dual::{DualCertificate, DualityReport};
pub use flatnorm::{
    solve_bruteforce, solve_matching, verify_structure, CheckStatus, Decomposition, DipoleSegment,
    MatchingAssignment, NormKind, StructureReport,
};
pub use geom::{BBox, DistRoute, Domain, Membership, Point2, Polygon, Segment};
pub use jacobian::{MapFamily, S1Field, Vortex, WindingChart};

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the domain closure")]
    ExteriorPoint(f64, f64),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("degenerate segment: endpoints coincide at ({0}, {1})")]
    ZeroLengthSegment(f64, f64),
    #[error(
        "instance has {atoms} interior atoms, above the brute-force guard of {max}; \
         use solve_matching"
    )]
    BruteForceGuard { atoms: usize, max: usize },
    #[error("evaluation at singular center ({0}, {1})")]
    SingularCenter(f64, f64),
    #[error(
        "winding residual {residual:.3} at {n_samples} samples exceeds 0.1; \
         increase the sampling resolution"
    )]
    ResolutionError { residual: f64, n_samples: usize },
    #[error("dual certificate construction requires beta = 2, got beta = {0}")]
    CertificateUnavailable(f64),
    #[error("unsupported map family for this operation: {0}")]
    UnsupportedFamily(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
