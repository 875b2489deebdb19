#pragma once

#include <memory>
#include <mutex>

#include "ttomo/fiber.hpp"

namespace ttomo {

// Principal solutions of the dbar problem on the disk via the Cauchy
// transform C[f](z) = (1/pi) iint_D f(w)/(z-w) dA(w), discretized as an
// FFT convolution on a 2n-padded grid. Cells crossing the rim enter with
// their clipped area; kernel cells near the singularity use exact cell
// integrals (Gauss-Legendre), far cells the midpoint value 1/(pi z), which
// is superconvergent here because 1/(z-w) is harmonic in w.
//
// Output values are produced on the full square, so downstream interpolation
// and boundary traces stay regular.
class CauchySolver {
public:
    explicit CauchySolver(GridPtr grid);
    ~CauchySolver();

    CauchySolver(const CauchySolver&) = delete;
    CauchySolver& operator=(const CauchySolver&) = delete;

    // C[density restricted to the disk].
    Field cauchy_transform(const Field& density) const;

    // Solve eta_minus u = rhs (target_k = rhs.k + 1) or eta_plus u = rhs
    // (target_k = rhs.k - 1) for the principal (Cauchy) solution at fiber
    // frequency target_k. When check is set, the finite-difference residual
    // relative to ||rhs|| is measured away from the rim layer and an
    // AccuracyError is thrown above residual_tol.
    ModeFunction dbar_solve(const Surface& s, const ModeFunction& rhs, int target_k,
                            double residual_tol = 1e-3, bool check = true) const;

    // Relative eta-residual of a candidate solution, measured on the disk
    // eroded by 4h (the rim ring carries the jump of the derivative of the
    // principal solution and is excluded by contract).
    double residual(const Surface& s, const ModeFunction& u, const ModeFunction& rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Shared per-grid solver instances (plans and kernel FFTs are reused).
std::shared_ptr<CauchySolver> cauchy_solver_for(const GridPtr& grid);

} // namespace ttomo
