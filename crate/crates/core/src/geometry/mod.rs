//! Manifold representations, curvature verifiers and Legendre transforms.

mod bump;
mod curvature;
mod implicit;
mod legendre;
mod manifold;
mod poly;
mod region;

pub use bump::BumpWeight;
pub use curvature::{
    cc_defect, complex_cc_defect, nd_vs_cnd_residual, nd_vs_cnd_sides, theta_samples,
    CurvatureReport, CC_TOLERANCE,
};
pub use implicit::{
    bordered_det_complex, bordered_det_real, implicit_cc_residual, implicit_cc_residual_at,
    sphere_normalized_bordered_det, ComplexImplicitMap, ComplexSpherePhi, ImplicitJet, ImplicitMap,
    ImplicitSurface, ON_SURFACE_TOL,
};
pub use legendre::{
    complex_legendre, complex_legendre_from, complex_legendre_residuals, legendre, legendre_check,
    legendre_directions, legendre_from, legendre_residuals, ComplexLegendreValue, LegendreCache,
    LegendreCheck, LegendreValue, NEWTON_MAX_ITERS, NEWTON_TOL, SINGULAR_DET,
};
pub use manifold::{
    builtin, builtin_holomorphic, builtin_real, cauchy_riemann_residual,
    finite_difference_residual, realify, to_complex, to_real, BuiltinParams, ComplexJet,
    HolomorphicGraphManifold, HolomorphicMap, Manifold, RealGraphManifold, RealGraphMap, RealJet,
    BUILTIN_NAMES, DEFAULT_SPHERE_RADIUS,
};
pub use poly::{CompiledPoly, ComplexPoly, RealPoly};
pub use region::{Region, Shape};

pub(crate) use legendre::{invert_complex_gradient, invert_gradient};
pub(crate) use region::ExactRegion;
