#pragma once

#include <memory>
#include <string>

#include "ttomo/fiber.hpp"
#include "ttomo/geometry.hpp"
#include "ttomo/tensor.hpp"

namespace ttomo {

using FanPtr = std::shared_ptr<const BoundaryFan>;
FanPtr make_fan(const ConformalMetric& m, int n_beta, int n_alpha);

// Complex attenuation coefficient on the disk; w_a = exp(-remaining line
// integral of a) is accumulated along each ray in a single pass.
struct Attenuation {
    Field a;
    bool zero = true;

    static Attenuation none(const Grid& g) { return {Field(g.size(), cdouble(0.0)), true}; }
    static Attenuation from_field(Field f)
    {
        Attenuation at{std::move(f), true};
        for (const auto& v : at.a)
            if (v != cdouble(0.0)) {
                at.zero = false;
                break;
            }
        return at;
    }
};

struct WeightSpec {
    enum class Kind { Unit, Atten, Custom };
    Kind kind = Kind::Unit;
    const Attenuation* atten = nullptr;
    const FiberFunction* custom = nullptr;

    static WeightSpec unit() { return {}; }
    static WeightSpec attenuated(const Attenuation& a)
    {
        WeightSpec w;
        if (!a.zero) {
            w.kind = Kind::Atten;
            w.atten = &a;
        }
        return w;
    }
    static WeightSpec custom_weight(const FiberFunction& f)
    {
        WeightSpec w;
        w.kind = Kind::Custom;
        w.custom = &f;
        return w;
    }
};

struct TransformTag {
    std::string kind;  // "ray", "attenuated", "moment", "transverse", ...
    int index = 0;     // moment order k or transverse slot
};

// Complex samples over the inflow fan, the output of every transform.
class BoundaryData {
public:
    BoundaryData() = default;
    BoundaryData(FanPtr fan, TransformTag tag = {});

    const BoundaryFan& fan() const { return *fan_; }
    const FanPtr& fan_ptr() const { return fan_; }
    TransformTag& tag() { return tag_; }
    const TransformTag& tag() const { return tag_; }

    std::vector<cdouble>& values() { return values_; }
    const std::vector<cdouble>& values() const { return values_; }
    cdouble& at(int ib, int ia) { return values_[fan_->idx(ib, ia)]; }
    cdouble at(int ib, int ia) const { return values_[fan_->idx(ib, ia)]; }

    // L2 norm in the mu-weighted boundary measure.
    double norm_mu() const;
    double max_abs() const;

private:
    FanPtr fan_;
    TransformTag tag_;
    std::vector<cdouble> values_;
};

double data_distance_mu(const BoundaryData& a, const BoundaryData& b); // ||a-b||_mu

// Uniform per-chord quadrature: every ray is sampled at steps+1 points
// (steps forced even). Simpson is the accuracy rule for data generation;
// Trapezoid keeps the sample weights uniform, which the least-squares
// inversions prefer (alternating Simpson weights imprint grid-scale ripple
// on the backprojections). Attenuation integrals accumulate in the same pass
// by a fourth-order cumulative rule either way.
struct QuadratureSpec {
    int steps = 2000;
    enum class Rule { Simpson, Trapezoid } rule = Rule::Simpson;
};

// Fan sweep engine bound to (surface, fan, quadrature). Exit times are
// computed once and shared; each sweep is data-parallel over fan nodes with
// deterministic assembly. Euclidean chords short-circuit the RK4 tracer
// through the closed-form line parametrization (verified against the flow in
// the tests).
class RayEngine {
public:
    RayEngine(SurfacePtr s, FanPtr fan, QuadratureSpec q = {});
    ~RayEngine();

    const Surface& surface() const;
    SurfacePtr surface_ptr() const;
    const BoundaryFan& fan() const;
    FanPtr fan_ptr() const;
    const QuadratureSpec& quadrature() const;

    const std::vector<double>& exit_times() const;

    // Path integrals int_0^tau a(gamma(t)) dt per fan node.
    std::vector<cdouble> path_integrals(const Field& a) const;

    // I_w[(tau - t)^k F], the general weighted/attenuated/moment forward.
    BoundaryData transform(const FiberFunction& F, const WeightSpec& w = {},
                           int moment_k = 0, TransformTag tag = {}) const;

    // Exact conjugate-transpose of the sampling chain behind transform() for
    // a set of fiber modes: accumulates
    //   out[mode] += sum_nodes coef(node) * conj(per-sample factors) * stencil
    // where coef already carries the data-side weights. Deterministic
    // reduction over per-thread buffers.
    void adjoint_sweep(const std::vector<cdouble>& coef, const WeightSpec& w, int moment_k,
                       const std::vector<int>& modes, std::vector<Field>& out) const;

    // Transport value u(x,v) = int_t^tau (w_a F) deposited on a spatial x
    // angular grid and reduced to a fiber stack of the given band; the trace
    // is the k=0 moment transform (they are produced in one pass).
    std::pair<FiberFunction, BoundaryData> transport(const FiberFunction& F,
                                                     const Attenuation& a, int n_theta,
                                                     int band) const;

    // Boundary pairing  sum_nodes area_w * mu * d * extra * conj(psi|node).
    cdouble boundary_pairing(const BoundaryData& d, const FiberFunction& psi,
                             const std::vector<cdouble>* extra = nullptr) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

using EnginePtr = std::shared_ptr<const RayEngine>;
EnginePtr make_engine(SurfacePtr s, FanPtr fan, QuadratureSpec q = {});

// --- spec-surface operations (one-shot convenience wrappers) -------------

BoundaryData ray_transform(const SurfacePtr& s, const FiberFunction& F, const WeightSpec& w,
                           const FanPtr& fan, QuadratureSpec q = {});
BoundaryData attenuated_transform(const SurfacePtr& s, const FiberFunction& F,
                                  const Attenuation& a, const FanPtr& fan, QuadratureSpec q = {});
BoundaryData moment_transform(const SurfacePtr& s, const FiberFunction& F, const Attenuation& a,
                              int k, const FanPtr& fan, QuadratureSpec q = {});
std::pair<FiberFunction, BoundaryData> transport_solve(const SurfacePtr& s,
                                                       const FiberFunction& F,
                                                       const Attenuation& a, const FanPtr& fan,
                                                       QuadratureSpec q = {}, int n_theta = 64,
                                                       int band = 12);
std::vector<BoundaryData> transverse_collection(const SymmetricTensorField& f,
                                                const WeightSpec& w, const FanPtr& fan,
                                                QuadratureSpec q = {});

} // namespace ttomo
