#include "ttomo/elliptic.hpp"

#include "ttomo/holomorphic.hpp"

#include <cmath>

namespace ttomo {

namespace {

// Joint least-squares map (g on interior nodes, kernel coefficients c)
//   -> eta g + sum_j c_j phi_j   in the SM measure.
// The explicit kernel block keeps smooth kernel content of f out of g: the
// discrete normal equations alone couple the two through an O(h) rim defect.
class EtaRangeMap final : public LinearMap {
public:
    EtaRangeMap(const Surface& s, int g_mode, EtaSign sign, int n_ker)
        : surf_(s), g_mode_(g_mode), sign_(sign)
    {
        const Grid& g = s.grid();
        free_.reserve(g.size());
        // zero trace pins the rim and everything beyond; the open disk is free
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix)
                if (std::hypot(g.x(ix), g.y(iy)) < 1.0 - 1e-12) free_.push_back(g.idx(ix, iy));

        const int f_mode = g_mode + (sign == EtaSign::Plus ? 1 : -1);
        if (std::abs(f_mode) >= 1 && n_ker > 0)
            basis_ = basis_ker_eta(s, std::abs(f_mode),
                                   sign == EtaSign::Plus ? EtaSign::Minus : EtaSign::Plus, n_ker);

        const auto& dw = g.disk_weights();
        const auto& aw = s.area_weight();
        range_w_.resize(g.size());
        for (std::size_t i = 0; i < range_w_.size(); ++i) range_w_[i] = dw[i] * aw[i];
    }

    std::size_t domain_size() const override { return free_.size() + basis_.size(); }
    std::size_t range_size() const override { return surf_.grid().size(); }
    const std::vector<double>* range_weight() const override { return &range_w_; }

    void forward(const std::vector<cdouble>& x, std::vector<cdouble>& y) const override
    {
        Field gfield(surf_.grid().size(), cdouble(0.0));
        for (std::size_t i = 0; i < free_.size(); ++i) gfield[free_[i]] = x[i];
        Field out;
        eta_apply(surf_, g_mode_, gfield, sign_, out);
        for (std::size_t j = 0; j < basis_.size(); ++j)
            axpy(out, x[free_.size() + j], basis_[j].field);
        y.assign(out.begin(), out.end());
    }

    void adjoint(const std::vector<cdouble>& y, std::vector<cdouble>& x) const override
    {
        Field wy(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) wy[i] = y[i] * range_w_[i];
        Field at;
        eta_adjoint_plain(surf_, g_mode_, wy, sign_, at);
        x.resize(domain_size());
        for (std::size_t i = 0; i < free_.size(); ++i) x[i] = at[free_[i]];
        for (std::size_t j = 0; j < basis_.size(); ++j) {
            cdouble acc = 0.0;
            for (std::size_t i = 0; i < wy.size(); ++i)
                acc += wy[i] * std::conj(basis_[j].field[i]);
            x[free_.size() + j] = acc;
        }
    }

    Field to_field(const std::vector<cdouble>& x) const
    {
        Field gfield(surf_.grid().size(), cdouble(0.0));
        for (std::size_t i = 0; i < free_.size(); ++i) gfield[free_[i]] = x[i];
        return gfield;
    }

private:
    const Surface& surf_;
    int g_mode_;
    EtaSign sign_;
    std::vector<std::size_t> free_;
    std::vector<ModeFunction> basis_;
    std::vector<double> range_w_;
};

} // namespace

double ker_residual(const Surface& s, const ModeFunction& h, EtaSign annihilator,
                    double reference_norm)
{
    const Grid& g = s.grid();
    Field eh;
    eta_apply(s, h.k, h.field, annihilator, eh);
    const auto mask = g.interior_mask(4.0 * g.h());
    const auto& aw = s.area_weight();
    double num = 0.0;
    for (std::size_t i = 0; i < eh.size(); ++i)
        if (mask[i]) num += g.disk_weight(i) * aw[i] * std::norm(eh[i]);
    if (reference_norm <= 0.0) return std::sqrt(num);
    return std::sqrt(num) / reference_norm;
}

EllipticDecomposition elliptic_decompose(const Surface& s, const ModeFunction& f, EtaSign sign,
                                         double tol, int max_iter, int n_ker)
{
    const int g_mode = f.k + (sign == EtaSign::Plus ? -1 : +1);
    EtaRangeMap A(s, g_mode, sign, n_ker);

    std::vector<cdouble> b(f.field.begin(), f.field.end());
    std::vector<cdouble> x(A.domain_size(), cdouble(0.0));
    CglsOptions opt;
    opt.max_iter = max_iter;
    // the plain residual plateaus at ||h||; convergence is measured on the
    // normal equations (orthogonality of the remainder)
    opt.tol = 1e-14;
    opt.normal_tol = tol;
    opt.stagnation_window = 60;
    EllipticDecomposition out;
    out.cg = cgls(A, b, x, opt);

    out.g.k = g_mode;
    out.g.field = A.to_field(x);
    Field eg;
    eta_apply(s, g_mode, out.g.field, sign, eg);
    out.h.k = f.k;
    out.h.field = f.field;
    sub_inplace(out.h.field, eg);

    const double fnorm = std::sqrt(std::abs(sm_inner_mode(s, f.field, f.field)));
    out.h_residual =
        ker_residual(s, out.h, sign == EtaSign::Plus ? EtaSign::Minus : EtaSign::Plus,
                     fnorm / std::sqrt(2.0 * kPi));
    return out;
}

} // namespace ttomo
