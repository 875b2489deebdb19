#include "ttomo/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ttomo {

DenseTensor tensor_product(const std::vector<std::array<cdouble, 2>>& covectors)
{
    const int m = int(covectors.size());
    if (m > 10) throw DomainError("tensor_product: order cap is 10 (dense 2^m storage)");
    DenseTensor t;
    t.order = m;
    t.values.assign(std::size_t(1) << m, cdouble(1.0));
    for (unsigned idx = 0; idx < t.values.size(); ++idx) {
        cdouble v = 1.0;
        for (int s = 0; s < m; ++s) v *= covectors[s][(idx >> (m - 1 - s)) & 1u];
        t.values[idx] = v;
    }
    return t;
}

DenseTensor symmetrize(const DenseTensor& t)
{
    const int m = t.order;
    if (m > 10) throw DomainError("symmetrize: order cap is 10");
    DenseTensor out;
    out.order = m;
    out.values.assign(t.values.size(), cdouble(0.0));
    // class sums by popcount: sigma(T) at idx = mean of T over indices with
    // the same number of second-slot picks
    std::vector<cdouble> class_sum(m + 1, cdouble(0.0));
    std::vector<double> class_cnt(m + 1, 0.0);
    for (unsigned idx = 0; idx < t.values.size(); ++idx) {
        const int c = std::popcount(idx);
        class_sum[c] += t.values[idx];
        class_cnt[c] += 1.0;
    }
    for (unsigned idx = 0; idx < t.values.size(); ++idx) {
        const int c = std::popcount(idx);
        out.values[idx] = class_sum[c] / class_cnt[c];
    }
    return out;
}

namespace {

std::vector<cdouble> gram(const std::vector<std::array<cdouble, 2>>& u,
                          const std::vector<std::array<cdouble, 2>>& v)
{
    const std::size_t m = u.size();
    std::vector<cdouble> a(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            a[i * m + j] = u[i][0] * std::conj(v[j][0]) + u[i][1] * std::conj(v[j][1]);
    return a;
}

// Ryser with Gray-code column updates.
cdouble permanent(const std::vector<cdouble>& a, int n)
{
    if (n == 0) return 1.0;
    std::vector<cdouble> rowsum(n, cdouble(0.0));
    cdouble total = 0.0;
    unsigned prev = 0;
    const unsigned full = (n >= 32) ? 0u : (1u << n);
    for (unsigned g = 1; g < full; ++g) {
        const unsigned gray = g ^ (g >> 1);
        const unsigned diff = gray ^ prev;
        const int col = std::countr_zero(diff);
        const double sgn = (gray & diff) ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i) rowsum[i] += sgn * a[std::size_t(i) * n + col];
        prev = gray;
        cdouble prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= rowsum[i];
        const int bits = std::popcount(gray);
        total += ((n - bits) % 2 == 0 ? 1.0 : -1.0) * prod;
    }
    return total;
}

} // namespace

cdouble permanent_inner(const std::vector<std::array<cdouble, 2>>& u,
                        const std::vector<std::array<cdouble, 2>>& v)
{
    if (u.size() != v.size()) throw DomainError("permanent_inner: family sizes differ");
    if (u.size() > 10) throw DomainError("permanent_inner: order cap is 10");
    return permanent(gram(u, v), int(u.size()));
}

cdouble permanent_inner_enumerate(const std::vector<std::array<cdouble, 2>>& u,
                                  const std::vector<std::array<cdouble, 2>>& v)
{
    const int m = int(u.size());
    const auto a = gram(u, v);
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    cdouble total = 0.0;
    do {
        cdouble prod = 1.0;
        for (int i = 0; i < m; ++i) prod *= a[std::size_t(i) * m + perm[i]];
        total += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

std::vector<cdouble> dense_inverse(const std::vector<cdouble>& a, int n)
{
    // LU with partial pivoting on [A | I]
    std::vector<cdouble> m(a);
    std::vector<cdouble> inv(std::size_t(n) * n, cdouble(0.0));
    for (int i = 0; i < n; ++i) inv[std::size_t(i) * n + i] = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        double best = std::abs(m[std::size_t(c) * n + c]);
        for (int r = c + 1; r < n; ++r) {
            const double mag = std::abs(m[std::size_t(r) * n + c]);
            if (mag > best) {
                best = mag;
                piv = r;
            }
        }
        if (best == 0.0) throw ConvergenceError("dense_inverse: singular matrix");
        if (piv != c) {
            for (int j = 0; j < n; ++j) {
                std::swap(m[std::size_t(piv) * n + j], m[std::size_t(c) * n + j]);
                std::swap(inv[std::size_t(piv) * n + j], inv[std::size_t(c) * n + j]);
            }
        }
        const cdouble d = m[std::size_t(c) * n + c];
        for (int j = 0; j < n; ++j) {
            m[std::size_t(c) * n + j] /= d;
            inv[std::size_t(c) * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const cdouble f = m[std::size_t(r) * n + c];
            if (f == cdouble(0.0)) continue;
            for (int j = 0; j < n; ++j) {
                m[std::size_t(r) * n + j] -= f * m[std::size_t(c) * n + j];
                inv[std::size_t(r) * n + j] -= f * inv[std::size_t(c) * n + j];
            }
        }
    }
    return inv;
}

PairingMatrix pairing_matrix(int m)
{
    if (m < 0 || m > 10) throw DomainError("pairing_matrix: need 0 <= m <= 10");
    PairingMatrix pm;
    pm.m = m;
    const int n = m + 1;
    pm.entries.assign(std::size_t(n) * n, cdouble(0.0));

    const std::array<cdouble, 2> dz{1.0, kI};
    const std::array<cdouble, 2> dzbar{1.0, -kI};
    for (int q = 0; q <= m; ++q) {
        std::vector<std::array<cdouble, 2>> slots;
        for (int i = 0; i < m - q; ++i) slots.push_back(dz);
        for (int i = 0; i < q; ++i) slots.push_back(dzbar);
        const DenseTensor tq = symmetrize(tensor_product(slots));
        for (int p = 0; p <= m; ++p) {
            // pair with v^{m-p} (x) vperp^p at lambda=0, theta=0: v -> slot 0,
            // vperp -> slot 1, i.e. the component with the last p bits set
            unsigned idx = 0;
            for (int s = m - p; s < m; ++s) idx |= (1u << (m - 1 - s));
            pm.entries[std::size_t(p) * n + q] = (m == 0) ? cdouble(1.0) : tq.at(idx);
        }
    }

    pm.inverse = dense_inverse(pm.entries, n);

    // residual check A A^{-1} = I
    double resid = 0.0, norm1 = 0.0, norm1i = 0.0;
    for (int r = 0; r < n; ++r) {
        double c1 = 0.0, c2 = 0.0;
        for (int cc = 0; cc < n; ++cc) {
            cdouble s = 0.0;
            for (int t = 0; t < n; ++t)
                s += pm.entries[std::size_t(r) * n + t] * pm.inverse[std::size_t(t) * n + cc];
            resid = std::max(resid, std::abs(s - (r == cc ? 1.0 : 0.0)));
            c1 += std::abs(pm.entries[std::size_t(cc) * n + r]);
            c2 += std::abs(pm.inverse[std::size_t(cc) * n + r]);
        }
        norm1 = std::max(norm1, c1);
        norm1i = std::max(norm1i, c2);
    }
    pm.condition = norm1 * norm1i;
    if (resid > 1e-10)
        throw AccuracyError("pairing_matrix: inversion residual above 1e-10");
    return pm;
}

SymmetricTensorField::SymmetricTensorField(SurfacePtr s, int order)
    : surf_(std::move(s)), order_(order)
{
    if (order < 0 || order > 10) throw DomainError("SymmetricTensorField: need 0 <= m <= 10");
    comps_.assign(order + 1, Field(surf_->grid().size(), cdouble(0.0)));
}

double SymmetricTensorField::conjugation_asymmetry() const
{
    double num = 0.0, den = 0.0;
    const Grid& g = surf_->grid();
    for (int q = 0; q <= order_; ++q) {
        const Field& a = comps_[q];
        const Field& b = comps_[order_ - q];
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double w = g.disk_weight(i);
            num += w * std::norm(a[i] - std::conj(b[i]));
            den += w * std::norm(a[i]);
        }
    }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

double SymmetricTensorField::norm() const
{
    double acc = 0.0;
    for (const auto& c : comps_) {
        const double n = disk_norm(surf_->grid(), c);
        acc += n * n;
    }
    return std::sqrt(acc);
}

FiberFunction ell(const SymmetricTensorField& f, int k)
{
    const int m = f.order();
    if (k < 0 || k > m) throw DomainError("ell: k out of range [0, m]");
    const Surface& s = *f.surface();
    const PairingMatrix pm = pairing_matrix(m);
    const auto& w = s.exp_lambda(-m);

    FiberFunction out(s.grid_ptr());
    for (int q = 0; q <= m; ++q) {
        const cdouble apq = pm.a(k, q);
        if (apq == cdouble(0.0)) continue;
        const Field& comp = f.component(q);
        bool nonzero = false;
        for (const auto& v : comp)
            if (v != cdouble(0.0)) {
                nonzero = true;
                break;
            }
        if (!nonzero) continue;
        Field mode = comp;
        for (std::size_t i = 0; i < mode.size(); ++i) mode[i] *= apq * w[i];
        axpy(out.mode_ref(m - 2 * q), 1.0, mode);
    }
    return out;
}

cdouble ell_slotwise(const SymmetricTensorField& f, int k, double x, double y, double theta)
{
    const int m = f.order();
    const Surface& s = *f.surface();
    const double el = std::exp(-s.metric().lambda(x, y));
    const std::array<cdouble, 2> v{el * std::cos(theta), el * std::sin(theta)};
    const std::array<cdouble, 2> vperp{-el * std::sin(theta), el * std::cos(theta)};

    const std::array<cdouble, 2> dz{1.0, kI};
    const std::array<cdouble, 2> dzbar{1.0, -kI};

    cdouble acc = 0.0;
    for (int q = 0; q <= m; ++q) {
        std::vector<std::array<cdouble, 2>> slots;
        for (int i = 0; i < m - q; ++i) slots.push_back(dz);
        for (int i = 0; i < q; ++i) slots.push_back(dzbar);
        const DenseTensor tq = symmetrize(tensor_product(slots));
        // contract with v^{m-k} (x) vperp^k slot by slot
        cdouble val = 0.0;
        const unsigned count = 1u << m;
        for (unsigned idx = 0; idx < count; ++idx) {
            cdouble w = tq.at(idx);
            for (int sslot = 0; sslot < m; ++sslot) {
                const auto& vec = (sslot < m - k) ? v : vperp;
                w *= vec[(idx >> (m - 1 - sslot)) & 1u];
            }
            val += w;
        }
        if (m == 0) val = 1.0;
        acc += interp(s.grid(), f.component(q), x, y) * val;
    }
    return acc;
}

FiberFunction potential(const Surface& s, const FiberFunction& p, const Field& a, double trace_tol)
{
    const Grid& g = s.grid();
    // zero trace sampled on the rim circle itself (the fields may decay only
    // right at |x| = 1, e.g. 1 - |z|^2)
    double top = 0.0, rim = 0.0;
    const int n_rim = 180;
    for (const auto& [k, f] : p.modes()) {
        for (std::size_t i = 0; i < f.size(); ++i) top = std::max(top, std::abs(f[i]));
        for (int j = 0; j < n_rim; ++j) {
            const double b = 2.0 * kPi * j / n_rim;
            rim = std::max(rim, std::abs(interp(g, f, std::cos(b), std::sin(b))));
        }
    }
    if (top > 0.0 && rim > trace_tol * top)
        throw ContractViolation("potential: p does not vanish on the boundary circle");

    FiberFunction out = apply_X(s, p);
    for (const auto& [k, f] : p.modes()) {
        Field af = f;
        mul_inplace(af, a);
        axpy(out.mode_ref(k), 1.0, af);
    }
    return out;
}

} // namespace ttomo
