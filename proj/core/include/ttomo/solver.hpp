#pragma once

#include <functional>
#include <vector>

#include "ttomo/common.hpp"

namespace ttomo {

// Linear map between weighted complex coordinate spaces. adjoint() must be
// the exact adjoint with respect to the weighted inner products
//   <x,x'>_X = sum wX_i x_i conj(x'_i),   <y,y'>_Y = sum wY_i y_i conj(y'_i),
// with missing weights meaning the plain dot product. The dot-product test
// in the suite holds implementations to ~1e-12 relative.
class LinearMap {
public:
    virtual ~LinearMap() = default;
    virtual std::size_t domain_size() const = 0;
    virtual std::size_t range_size() const = 0;
    virtual void forward(const std::vector<cdouble>& x, std::vector<cdouble>& y) const = 0;
    virtual void adjoint(const std::vector<cdouble>& y, std::vector<cdouble>& x) const = 0;
    virtual const std::vector<double>* domain_weight() const { return nullptr; }
    virtual const std::vector<double>* range_weight() const { return nullptr; }
};

cdouble weighted_dot(const std::vector<cdouble>& a, const std::vector<cdouble>& b,
                     const std::vector<double>* w);
double weighted_norm(const std::vector<cdouble>& a, const std::vector<double>* w);

struct CglsOptions {
    int max_iter = 300;
    double tol = 1e-6;         // relative residual target
    double normal_tol = 0.0;   // if > 0, also stop at ||A* r|| / ||A* b|| <= normal_tol
    int stagnation_window = 25;
    double stagnation_gain = 2e-3; // required relative improvement per window
};

struct CglsResult {
    int iterations = 0;
    double rel_residual = 1.0;
    bool converged = false;
    bool stagnated = false;
    std::vector<double> history; // relative residual per iteration
};

// Conjugate gradient on the normal equations (CGLS form), least squares
// min ||A x - b||_Y starting from the given x (normally zero).
CglsResult cgls(const LinearMap& A, const std::vector<cdouble>& b, std::vector<cdouble>& x,
                const CglsOptions& opt = {});

// |<A x, y>_Y - <x, A* y>_X| / (|Ax| |y|), for randomized adjoint checks.
double adjoint_mismatch(const LinearMap& A, std::uint64_t seed = 1234);

} // namespace ttomo
