#pragma once

#include "ttomo/cauchy.hpp"
#include "ttomo/elliptic.hpp"
#include "ttomo/fiber.hpp"

namespace ttomo {

// Orthonormal basis of the degree-k fiber-holomorphic space ker^k eta_-
// (sign Minus) or its conjugate ker^{-k} eta_+ (sign Plus; note the sign
// names the annihilating operator). Construction: Gram-Schmidt on
// e^{-k lambda} z^j e^{ik theta} in the SM inner product; for sign Plus the
// elements are conjugates of the Minus family.
std::vector<ModeFunction> basis_ker_eta(const Surface& s, int k, EtaSign annihilator, int count);

// Fiberwise holomorphic (modes >= 0, orientation Holo) or antiholomorphic
// (modes <= 0) solution w of X w = conj(a), built by the ladder
//   w_1 = dbar_solve(conj(a)),   eta_- w_{j+2} = -eta_+ w_j,
// truncated at mode depth N. Throws ConvergenceError when the rung norms
// stop decreasing.
enum class Orientation { Holo, AntiHolo };

struct LadderResult {
    FiberFunction w;
    double tail_norm = 0.0;   // SM norm of the last retained rung
    double rung_ratio = 0.0;  // last/first rung norm
};

LadderResult integrating_factor(const Surface& s, const Field& a, Orientation orient,
                                int ladder_depth);

// Invariant extension: given phi in ker^k eta_- (k >= 1) and an attenuation
// field a, builds psi = e^w vtilde with
//   vtilde_k = phi, vtilde_{k+1} = 0, eta_- vtilde_{j+2} = -eta_+ vtilde_j
// so that psi = phi + higher modes solves X psi = conj(a) psi up to the
// reported truncation residual. The mirrored variant (phi in ker^{-k} eta_+,
// modes extending downward) is obtained by conjugation symmetry.
struct InvariantExtension {
    FiberFunction psi;
    double flow_residual = 0.0; // ||X psi - conj(a) psi|| / ||psi|| (eroded disk)
    double tail_norm = 0.0;
};

InvariantExtension invariant_extension(const Surface& s, const ModeFunction& phi, const Field& a,
                                       int ladder_depth, double residual_tol = 0.5);

} // namespace ttomo
