#pragma once

#include "ttomo/elliptic.hpp"
#include "ttomo/holomorphic.hpp"
#include "ttomo/solver.hpp"
#include "ttomo/transforms.hpp"

namespace ttomo {

struct StageReport {
    std::string name;
    double residual = 0.0;
    int iterations = 0;
    bool ok = true;
    std::string note;
};

struct ReconstructionReport {
    std::vector<StageReport> stages;
    bool ok = true;

    void add(StageReport r)
    {
        ok = ok && r.ok;
        stages.push_back(std::move(r));
    }
};

// --- gauge decomposition --------------------------------------------------

// l_m f = (X+a) p + h0 + X_perp h_perp + sum_k (h_{k,+} + h_{k,-}).
struct DecompositionResult {
    FiberFunction p; // degree m-1, zero trace
    Field h0;
    Field h_perp;
    // index k-1 holds the pair at fiber frequencies (+k, -k), k = 1..m
    std::vector<std::pair<ModeFunction, ModeFunction>> hk;
    double residual = 0.0; // relative reassembly error on SM
    ReconstructionReport report;
};

DecompositionResult decompose_tensor(const SurfacePtr& s, const SymmetricTensorField& f,
                                     const Attenuation& a, double cg_tol = 1e-8,
                                     int cg_max_iter = 3000);

// h-part as a fiber stack (h0 + X_perp h_perp + sum h_k).
FiberFunction assemble_hform(const SurfacePtr& s, const Field& h0, const Field& h_perp,
                             const std::vector<std::pair<ModeFunction, ModeFunction>>& hk);

// --- scalar least-squares solver -------------------------------------------

// One scalar unknown h entering the data as I_w[(tau-t)^moment fold h e^{ik theta}].
struct ScalarChannel {
    int mode = 0;
    WeightSpec weight;
    Field fold; // empty = 1
    int moment_k = 0;
    // binomial reparametrization passes: the unknown is h = S^passes y, which
    // bandlimits the iterates to what the fan sampling resolves
    int smooth_passes = 2;
};

struct ScalarSolveResult {
    std::vector<Field> fields;
    std::vector<CglsResult> cg;
    bool ok = true;
};

// Channel i is fit independently to data[i] by CGLS with the exact adjoint
// of the discrete quadrature (stagnation is reported, never silently
// accepted).
ScalarSolveResult scalar_solve(const RayEngine& engine, const std::vector<BoundaryData>& data,
                               const std::vector<ScalarChannel>& channels, int max_iter = 300,
                               double tol = 1e-6);

// LinearMap over a single scalar channel, exposed for operator-level tests.
std::unique_ptr<LinearMap> make_channel_map(const RayEngine& engine, const ScalarChannel& ch);

// The joint low-frequency map (h0, h_perp, ker^{+-1} coefficients), exposed
// for operator-level tests. The attenuation reference must outlive the map.
std::unique_ptr<LinearMap> make_lowmode_map(const RayEngine& engine, const Attenuation& a,
                                            bool with_h1, int n_basis);

// --- pairing reconstruction (attenuated tensor tomography) ----------------

struct PairingOptions {
    int n_basis = 16;
    int n_basis_cap = 32;        // automatic doubling limit
    double tail_fraction = 0.05; // decay requirement head -> tail
    int ladder_depth = 12;
    double extension_tol = 1.0;  // flow residual allowed for the extensions
                                 // (polynomial basis tails truncate slowly)
};

struct HkRecovery {
    ModeFunction h_plus;  // in ker^k eta_-
    ModeFunction h_minus; // in ker^{-k} eta_+
    std::vector<cdouble> coef_plus, coef_minus;
    double tail_ratio_plus = 0.0, tail_ratio_minus = 0.0;
    int n_basis_used = 0;
    bool decay_warning = false;
};

// Recovers the frequency-(+-k) solenoidal pair from boundary data by pairing
// against traces of invariant extensions. The measured data is converted to
// the trace of the transport solution by removing the full-path attenuation
// factor node-wise.
HkRecovery reconstruct_hk_pairing(const RayEngine& engine, const BoundaryData& data,
                                  const Attenuation& a, int k, const PairingOptions& opt = {});

struct AttOptions {
    PairingOptions pairing;
    // pair the +-1 solenoidal parts by invariant extensions as well: the
    // boundary pairing at k = 1 is exact because range(eta|zero-trace) is
    // L2-orthogonal to the kernels, leaving only (h0, h_perp) to the joint
    // least-squares stage
    bool pair_k1 = true;
    int lowmode_basis = 16; // ker^{+-1} coefficients when pair_k1 is off
    // polynomial degree of the direct coarse (h0, h_perp) fit; -1 disables
    int coarse_degree = 10;
    int max_iter = 400;
    double tol = 1e-8;
    bool mu_weighted_fit = false; // drop the cos(alpha) factor in the fit by
                                  // default: grazing rays carry the h0/h_perp
                                  // separation
};

struct AttReconstruction {
    FiberFunction h; // full gauge representative
    Field h0;
    Field h_perp;
    std::vector<std::pair<ModeFunction, ModeFunction>> hk; // k = 1..m (k>=2 from pairing)
    ReconstructionReport report;
};

// Descending pairing loop k = m..2 with data subtraction, then a joint
// least-squares stage for (h0, h_perp, h_{1,+-}).
AttReconstruction att_tensor_tomography(const RayEngine& engine, const BoundaryData& data,
                                        const Attenuation& a, int order, const AttOptions& opt = {});

// --- moment and transverse inversions -------------------------------------

struct MomentOptions {
    AttOptions att;
    int scalar_max_iter = 300;
    double scalar_tol = 1e-7;
    double min_effective_digits = 6.0;
};

struct MomentInversion {
    FiberFunction f_hat;          // estimate of l_m f on SM
    SymmetricTensorField tensor;  // parity-m component export
    double offparity_fraction = 0.0;
    std::vector<double> effective_digits; // one per recursion difference
    ReconstructionReport report;
};

// data[k] = I_a[tau^k l_m f], k = 0..order.
MomentInversion moment_inversion(const RayEngine& engine, const std::vector<BoundaryData>& data,
                                 const Attenuation& a, int order, const MomentOptions& opt = {});

struct TransverseOptions {
    int max_iter = 300;
    double tol = 1e-7;
};

struct TransverseInversion {
    SymmetricTensorField tensor;
    double algebra_residual = 0.0; // A (A^{-1} stack) vs stack
    std::vector<CglsResult> cg;
    ReconstructionReport report;
};

// data[k] = I_w[l_{m,k} f]; applies the inverse pairing matrix node-wise and
// runs one scalar channel solve per component.
TransverseInversion transverse_inversion(const RayEngine& engine,
                                         const std::vector<BoundaryData>& data, const WeightSpec& w,
                                         int order, const TransverseOptions& opt = {});

} // namespace ttomo
