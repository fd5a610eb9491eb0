#pragma once

namespace aniflow {

/// The three normal velocities handled by the library.
enum class FlowKind {
    SurfaceDiffusion,            // V_n = d^2 mu / ds^2
    CurvatureFlow,               // V_n = -mu
    AreaConservedCurvatureFlow,  // V_n = -mu + lambda
};

} // namespace aniflow
