#pragma once

#include "ttomo/fiber.hpp"

namespace ttomo {

// Dense order-m tensor over C^2: component at a multi-index encoded as m
// bits (bit 0 = first basis slot, 1 = second). Capped at m <= 10.
struct DenseTensor {
    int order = 0;
    std::vector<cdouble> values; // size 2^order

    cdouble& at(unsigned idx) { return values[idx]; }
    const cdouble& at(unsigned idx) const { return values[idx]; }
};

DenseTensor tensor_product(const std::vector<std::array<cdouble, 2>>& covectors);

// Symmetrization sigma: average over all slot permutations; exact via
// popcount classes, no factorial loops.
DenseTensor symmetrize(const DenseTensor& t);

// Permanent inner product of two slot families: per(Gram), Gram_ij =
// <u_i, v_j> Hermitian in the second argument. Ryser evaluation with a Gray
// code; m <= 10.
cdouble permanent_inner(const std::vector<std::array<cdouble, 2>>& u,
                        const std::vector<std::array<cdouble, 2>>& v);

// Brute-force permutation sum, kept as the independent small-m oracle.
cdouble permanent_inner_enumerate(const std::vector<std::array<cdouble, 2>>& u,
                                  const std::vector<std::array<cdouble, 2>>& v);

// Constant pairing matrix relating the transverse restrictions of a tensor
// to the scalar channels of its components:
//   l_{m,p} f = sum_q A_{pq} e^{-m lambda} f_q e^{i(m-2q) theta}.
// Entries are computed by direct slot evaluation of <T_{m,q}, v^{m-p} (vperp)^p>
// at lambda = 0, theta = 0; the inverse by dense LU with a residual check.
struct PairingMatrix {
    int m = 0;
    std::vector<cdouble> entries; // (m+1)^2 row-major
    std::vector<cdouble> inverse;
    double condition = 0.0;

    cdouble a(int p, int q) const { return entries[std::size_t(p) * (m + 1) + q]; }
    cdouble ainv(int p, int q) const { return inverse[std::size_t(p) * (m + 1) + q]; }
};

PairingMatrix pairing_matrix(int m);

// Dense LU helpers exposed for reuse (small complex systems).
std::vector<cdouble> dense_inverse(const std::vector<cdouble>& a, int n);

// Symmetric m-tensor field in the basis T_{m,q} = sigma(dz^{m-q} (x) dzbar^q):
// m+1 component fields f_q on the grid.
class SymmetricTensorField {
public:
    SymmetricTensorField() = default;
    SymmetricTensorField(SurfacePtr s, int order);

    int order() const { return order_; }
    const SurfacePtr& surface() const { return surf_; }
    Field& component(int q) { return comps_.at(q); }
    const Field& component(int q) const { return comps_.at(q); }

    // real-valued tensors satisfy f_q = conj(f_{m-q})
    double conjugation_asymmetry() const;

    double norm() const; // root sum of component disk L2 norms

private:
    SurfacePtr surf_;
    int order_ = 0;
    std::vector<Field> comps_;
};

// Longitudinal/transverse restriction l_{m,k} f as a fiber stack with band
// {-m, -m+2, ..., m}.
FiberFunction ell(const SymmetricTensorField& f, int k);

// Slot-wise evaluation f_x(v,...,v,vperp,...,vperp) through symmetrize and
// per-slot products; the independent route used to cross-check ell.
cdouble ell_slotwise(const SymmetricTensorField& f, int k, double x, double y, double theta);

// (X + a) p for p of degree m-1 with zero boundary trace; realizes the
// potential-tensor kernel direction (a = 0 gives the symmetrized derivative).
// Throws ContractViolation when p does not vanish on the boundary ring.
FiberFunction potential(const Surface& s, const FiberFunction& p, const Field& a,
                        double trace_tol = 1e-5);

} // namespace ttomo
