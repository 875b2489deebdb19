#pragma once

#include "ttomo/fiber.hpp"
#include "ttomo/solver.hpp"

namespace ttomo {

// Unique splitting of a single fiber-frequency component:
//   sign Plus:  f_k = eta_+ g_{k-1} + h_k,   h_k in ker eta_-,
//   sign Minus: f_k = eta_- g_{k+1} + h_k,   h_k in ker eta_+,
// with g of zero boundary trace, realized by least squares in the SM measure
// (CGLS on the normal equations of the zero-Dirichlet eta composition);
// h := f - eta g is exact by construction.
//
// n_ker > 0 adds an explicit block of ker basis elements to the fit. The two
// conventions bracket the continuum splitting: with the block, kernel content
// of f stays out of g to solver precision (the discrete normal equations
// alone leak it at O(h) through the rim); without it (n_ker = 0), the
// remainder h is exactly W-orthogonal to the fitted range. Pipelines use the
// kernel block.
struct EllipticDecomposition {
    ModeFunction g;
    ModeFunction h;
    CglsResult cg;
    double h_residual = 0.0; // relative eta_{-/+} h on the eroded disk
};

EllipticDecomposition elliptic_decompose(const Surface& s, const ModeFunction& f, EtaSign sign,
                                         double tol = 1e-8, int max_iter = 3000, int n_ker = 16);

// Relative size of eta_{opposite} h, measured away from the rim stencils.
double ker_residual(const Surface& s, const ModeFunction& h, EtaSign annihilator,
                    double reference_norm);

} // namespace ttomo
