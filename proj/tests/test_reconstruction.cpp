#include "doctest.h"

#include <cmath>

#include "ttomo/phantom.hpp"
#include "ttomo/reconstruction.hpp"

using namespace ttomo;

namespace {

SurfacePtr surf(int n, ConformalMetric m = ConformalMetric::euclidean())
{
    return make_surface(make_grid(n), std::move(m));
}

double rel_field_error(const Grid& g, const Field& got, const Field& want)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double w = g.disk_weight(i);
        num += w * std::norm(got[i] - want[i]);
        den += w * std::norm(want[i]);
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

double rel_fiber_error(const Surface& s, const FiberFunction& got, const FiberFunction& want)
{
    FiberFunction diff = got;
    diff.add(want, -1.0);
    const double ref = sm_norm(s, want);
    return ref > 0 ? sm_norm(s, diff) / ref : sm_norm(s, diff);
}

} // namespace

TEST_CASE("channel map passes the adjoint dot test")
{
    auto s = surf(64);
    auto fan = make_fan(s->metric(), 24, 16);
    RayEngine eng(s, fan, {120});
    const Field a = gaussian_bump_field(s->grid(), 0.1, 0.0, 0.4, 0.3, 0.08);
    Attenuation att = Attenuation::from_field(a);

    for (int mode : {0, 2, -1}) {
        ScalarChannel ch;
        ch.mode = mode;
        ch.weight = WeightSpec::attenuated(att);
        auto A = make_channel_map(eng, ch);
        CHECK(adjoint_mismatch(*A, 1000 + mode) < 1e-12);
    }
    // moment channels too
    ScalarChannel ch;
    ch.mode = 1;
    ch.moment_k = 2;
    auto A = make_channel_map(eng, ch);
    CHECK(adjoint_mismatch(*A, 77) < 1e-12);
}

TEST_CASE("integration by parts: the fan pairing of the transform recovers the SM integral")
{
    // int_{inflow} (I F) mu dSigma^2 = int_{SM} F dSigma^3, quadrature both sides
    auto s = surf(128, ConformalMetric::constant_curvature(0.6));
    auto fan = make_fan(s->metric(), 90, 48);
    RayEngine eng(s, fan, {300});

    FiberFunction F(s->grid_ptr());
    F.set_mode(0, gaussian_bump_field(s->grid(), 0.1, -0.1, 0.3, 1.0, 0.1));
    F.set_mode(1, gaussian_bump_field(s->grid(), -0.2, 0.0, 0.35, 0.7, 0.1));
    F.set_mode(-2, gaussian_bump_field(s->grid(), 0.0, 0.15, 0.4, 0.4, 0.1));

    auto data = eng.transform(F, WeightSpec::unit());
    cdouble lhs = 0.0;
    for (std::size_t i = 0; i < data.values().size(); ++i)
        lhs += data.values()[i] * fan->mu(i) * fan->area_weight(i);

    // only the zeroth fiber mode survives the angular integration
    cdouble rhs = 2.0 * kPi * disk_inner(s->grid(), F.mode(0),
                                         Field(s->grid().size(), cdouble(1.0)), &s->area_weight());
    CHECK(std::abs(lhs - rhs) < 1e-3 * (std::abs(rhs) + sm_norm(*s, F)));
}

TEST_CASE("scalar solve")
{
    auto s = surf(96);
    auto fan = make_fan(s->metric(), 90, 45);
    RayEngine eng(s, fan, {220});

    SUBCASE("zero data gives the zero field")
    {
        ScalarChannel ch;
        ch.mode = 2;
        BoundaryData zero(fan, {"ray", 0});
        auto res = scalar_solve(eng, {zero}, {ch}, 50, 1e-8);
        for (const auto& v : res.fields[0]) CHECK(std::abs(v) == 0.0);
    }

    SUBCASE("forward data of a known bump is inverted to 2%")
    {
        Field h = gaussian_bump_field(s->grid(), 0.15, -0.1, 0.25, 1.0, 0.1);
        FiberFunction F(s->grid_ptr());
        F.set_mode(2, h);
        auto data = eng.transform(F, WeightSpec::unit());

        ScalarChannel ch;
        ch.mode = 2;
        auto res = scalar_solve(eng, {data}, {ch}, 120, 1e-7);
        CHECK(res.ok);
        CHECK(rel_field_error(s->grid(), res.fields[0], h) < 0.02);
    }

    SUBCASE("attenuated channel")
    {
        const Field a = gaussian_bump_field(s->grid(), -0.1, 0.1, 0.4, 0.4, 0.08);
        Attenuation att = Attenuation::from_field(a);
        Field h = gaussian_bump_field(s->grid(), 0.0, 0.2, 0.3, 1.0, 0.1);
        FiberFunction F(s->grid_ptr());
        F.set_mode(1, h);
        auto data = eng.transform(F, WeightSpec::attenuated(att));
        ScalarChannel ch;
        ch.mode = 1;
        ch.weight = WeightSpec::attenuated(att);
        auto res = scalar_solve(eng, {data}, {ch}, 120, 1e-7);
        CHECK(rel_field_error(s->grid(), res.fields[0], h) < 0.03);
    }
}

TEST_CASE("gauge decomposition of tensors")
{
    auto s = surf(96);
    const Grid& g = s->grid();
    const Field a = gaussian_bump_field(g, 0.05, -0.1, 0.4, 0.35, 0.08);
    Attenuation att = Attenuation::from_field(a);

    SUBCASE("order zero is the trivial case")
    {
        SymmetricTensorField f(s, 0);
        f.component(0) = random_smooth_field(g, 3, 3, 1.0, 0.08);
        auto dec = decompose_tensor(s, f, att);
        CHECK(dec.residual < 1e-12);
        CHECK(rel_field_error(g, dec.h0, f.component(0)) < 1e-12);
        for (const auto& [k, pf] : dec.p.modes())
            for (const auto& v : pf) CHECK(std::abs(v) < 1e-14);
    }

    SUBCASE("pure potentials decompose with a negligible h part")
    {
        // f = (X + a) p exported where possible; work directly on the stack
        FiberFunction p = polynomial_zero_trace_function(s, 2, 17, 1.0);
        FiberFunction lf = potential(*s, p, a);

        // feed through the tensor interface: order-3 stack has parity issues
        // with attenuation, so decompose the fiber stack via a synthetic
        // tensor of matching parity content is not possible; instead check
        // the h-part of the full decomposition pipeline applied to a
        // potential-only *tensor* (a = 0 there) and the transform nullity
        // for the attenuated stack.
        PhantomSpec spec;
        spec.kind = PhantomKind::PotentialOnly;
        spec.seed = 23;
        auto ph = generate_phantom(s, spec, 2);
        Attenuation none = Attenuation::none(g);
        auto dec = decompose_tensor(s, ph.tensor, none);
        const double fnorm = sm_norm(*s, ell(ph.tensor, 0));
        const double hnorm = sm_norm(*s, assemble_hform(s, dec.h0, dec.h_perp, dec.hk));
        CHECK(hnorm < 2e-3 * fnorm);
        CHECK(dec.residual < 1e-3);

        // attenuated kernel direction through the fan
        auto fan = make_fan(s->metric(), 60, 30);
        RayEngine eng(s, fan, {300});
        auto d = eng.transform(lf, WeightSpec::attenuated(att));
        CHECK(d.norm_mu() < 1e-5 * sm_norm(*s, p));
    }

    SUBCASE("random order-3 tensors reassemble to 1e-3")
    {
        PhantomSpec spec;
        spec.seed = 29;
        auto ph = generate_phantom(s, spec, 3);
        auto dec = decompose_tensor(s, ph.tensor, att);
        CHECK(dec.residual < 1e-3);
        // the solenoidal parts are annihilated within solver tolerance
        for (int k = 1; k <= 3; ++k) {
            const auto& [hp, hm] = dec.hk[k - 1];
            const double ref = sm_norm(*s, ell(ph.tensor, 0)) / std::sqrt(2.0 * kPi);
            CHECK(ker_residual(*s, hp, EtaSign::Minus, ref) < 0.05);
            CHECK(ker_residual(*s, hm, EtaSign::Plus, ref) < 0.05);
        }
    }
}

TEST_CASE("pairing reconstruction of solenoidal parts")
{
    auto s = surf(128);
    auto fan = make_fan(s->metric(), 120, 60);
    RayEngine eng(s, fan, {400});
    Attenuation none = Attenuation::none(s->grid());

    SUBCASE("zero data yields zero")
    {
        BoundaryData zero(fan, {"attenuated", 0});
        auto rec = reconstruct_hk_pairing(eng, zero, none, 2);
        for (const auto& v : rec.h_plus.field) CHECK(std::abs(v) < 1e-14);
        for (const auto& v : rec.h_minus.field) CHECK(std::abs(v) < 1e-14);
    }

    SUBCASE("planted kernel element comes back within 2%")
    {
        auto basis = basis_ker_eta(*s, 2, EtaSign::Minus, 8);
        std::vector<cdouble> c_true{cdouble(1.0, 0.3), cdouble(-0.4, 0.2), cdouble(0.15, -0.1),
                                    cdouble(0.05, 0.02)};
        FiberFunction h(s->grid_ptr());
        Field plus(s->grid().size(), cdouble(0.0));
        for (std::size_t j = 0; j < c_true.size(); ++j) axpy(plus, c_true[j], basis[j].field);
        h.set_mode(2, plus);
        // conjugate side for realness
        h.set_mode(-2, conj_field(plus));

        auto data = eng.transform(h, WeightSpec::unit());
        PairingOptions opt;
        opt.n_basis = 8;
        auto rec = reconstruct_hk_pairing(eng, data, none, 2, opt);

        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < c_true.size(); ++j) {
            num += std::norm(rec.coef_plus[j] - c_true[j]);
            den += std::norm(c_true[j]);
        }
        CHECK(std::sqrt(num / den) < 0.02);
        CHECK(rel_field_error(s->grid(), rec.h_plus.field, plus) < 0.02);
    }

    SUBCASE("two-frequency phantom: descending subtraction keeps leakage small")
    {
        auto basis2 = basis_ker_eta(*s, 2, EtaSign::Minus, 6);
        auto basis3 = basis_ker_eta(*s, 3, EtaSign::Minus, 6);
        Field h2(s->grid().size(), cdouble(0.0)), h3(s->grid().size(), cdouble(0.0));
        axpy(h2, cdouble(0.8, -0.1), basis2[0].field);
        axpy(h2, cdouble(0.2, 0.1), basis2[1].field);
        axpy(h3, cdouble(1.0, 0.4), basis3[0].field);
        axpy(h3, cdouble(-0.3, 0.2), basis3[2].field);

        FiberFunction h(s->grid_ptr());
        h.set_mode(2, h2);
        h.set_mode(3, h3);
        auto data = eng.transform(h, WeightSpec::unit());

        PairingOptions opt;
        opt.n_basis = 8;
        // top frequency first
        auto rec3 = reconstruct_hk_pairing(eng, data, none, 3, opt);
        CHECK(rel_field_error(s->grid(), rec3.h_plus.field, h3) < 0.02);

        FiberFunction got3(s->grid_ptr());
        got3.set_mode(3, rec3.h_plus.field);
        got3.set_mode(-3, rec3.h_minus.field);
        auto fwd3 = eng.transform(got3, WeightSpec::unit());
        BoundaryData residual = data;
        for (std::size_t i = 0; i < residual.values().size(); ++i)
            residual.values()[i] -= fwd3.values()[i];

        auto rec2 = reconstruct_hk_pairing(eng, residual, none, 2, opt);
        CHECK(rel_field_error(s->grid(), rec2.h_plus.field, h2) < 0.02);
    }
}

TEST_CASE("attenuated tensor tomography")
{
    auto s = surf(128);
    auto fan = make_fan(s->metric(), 120, 60);
    RayEngine eng(s, fan, {300});
    const Field afield = gaussian_bump_field(s->grid(), 0.1, 0.05, 0.4, 0.3, 0.08);
    Attenuation att = Attenuation::from_field(afield);

    SUBCASE("order zero reduces to scalar inversion")
    {
        Field h0 = gaussian_bump_field(s->grid(), 0.1, -0.15, 0.3, 1.0, 0.1);
        FiberFunction F(s->grid_ptr());
        F.set_mode(0, h0);
        auto data = eng.transform(F, WeightSpec::attenuated(att));
        AttOptions opt;
        opt.max_iter = 120;
        auto rec = att_tensor_tomography(eng, data, att, 0, opt);
        CHECK(rec.report.ok);
        CHECK(rel_field_error(s->grid(), rec.h0, h0) < 0.03);
    }

    SUBCASE("planted gauge representative with a kernel part at k = 2")
    {
        auto basis = basis_ker_eta(*s, 2, EtaSign::Minus, 6);
        Field h2(s->grid().size(), cdouble(0.0));
        axpy(h2, cdouble(0.9, 0.2), basis[0].field);
        axpy(h2, cdouble(-0.25, 0.1), basis[1].field);

        Field h0 = gaussian_bump_field(s->grid(), -0.1, 0.1, 0.35, 0.8, 0.1);
        Field hperp = gaussian_bump_field(s->grid(), 0.15, 0.0, 0.3, 0.6, 0.1);
        // zero-trace clip for h_perp
        for (int iy = 0; iy < s->grid().n(); ++iy)
            for (int ix = 0; ix < s->grid().n(); ++ix)
                if (std::hypot(s->grid().x(ix), s->grid().y(iy)) >= 1.0)
                    hperp[s->grid().idx(ix, iy)] = 0.0;

        auto lowbasis = basis_ker_eta(*s, 1, EtaSign::Minus, 6);
        Field h1(s->grid().size(), cdouble(0.0));
        axpy(h1, cdouble(0.5, -0.2), lowbasis[0].field);

        std::vector<std::pair<ModeFunction, ModeFunction>> hk(2);
        hk[0] = {ModeFunction{1, h1}, ModeFunction{-1, conj_field(h1)}};
        hk[1] = {ModeFunction{2, h2}, ModeFunction{-2, conj_field(h2)}};
        FiberFunction h = assemble_hform(s, h0, hperp, hk);

        auto data = eng.transform(h, WeightSpec::attenuated(att));
        AttOptions opt;
        opt.pairing.n_basis = 8;
        opt.max_iter = 150;
        auto rec = att_tensor_tomography(eng, data, att, 2, opt);

        CHECK(rel_field_error(s->grid(), rec.hk[1].first.field, h2) < 0.02);
        CHECK(rel_fiber_error(*s, rec.h, h) < 0.05);
    }

    SUBCASE("gauge invariance: potentials do not change the answer")
    {
        Field h0 = gaussian_bump_field(s->grid(), 0.0, 0.1, 0.35, 1.0, 0.1);
        FiberFunction F(s->grid_ptr());
        F.set_mode(0, h0);
        auto data1 = eng.transform(F, WeightSpec::attenuated(att));

        FiberFunction p = polynomial_zero_trace_function(s, 0, 67, 0.8);
        FiberFunction Fp = F;
        Fp.add(potential(*s, p, afield));
        auto data2 = eng.transform(Fp, WeightSpec::attenuated(att));

        AttOptions opt;
        opt.max_iter = 120;
        auto rec1 = att_tensor_tomography(eng, data1, att, 1, opt);
        auto rec2 = att_tensor_tomography(eng, data2, att, 1, opt);
        CHECK(rel_fiber_error(*s, rec2.h, rec1.h) < 0.01);
    }
}

TEST_CASE("moment inversion")
{
    auto s = surf(96);
    auto fan = make_fan(s->metric(), 90, 45);
    RayEngine eng(s, fan, {300});
    Attenuation none = Attenuation::none(s->grid());

    SUBCASE("order zero is scalar inversion")
    {
        Field f0 = gaussian_bump_field(s->grid(), 0.1, 0.0, 0.3, 1.0, 0.1);
        FiberFunction F(s->grid_ptr());
        F.set_mode(0, f0);
        std::vector<BoundaryData> data{eng.transform(F, WeightSpec::unit())};
        auto inv = moment_inversion(eng, data, none, 0);
        CHECK(rel_field_error(s->grid(), inv.tensor.component(0), f0) < 0.03);
    }

    SUBCASE("order one: the potential part invisible to I alone is recovered")
    {
        // f = X p + solenoidal, moments k = 0, 1
        FiberFunction p = polynomial_zero_trace_function(s, 0, 41, 0.8);
        FiberFunction f = apply_X(*s, p);
        auto basis = basis_ker_eta(*s, 1, EtaSign::Minus, 6);
        Field h1(s->grid().size(), cdouble(0.0));
        axpy(h1, cdouble(0.7, 0.2), basis[0].field);
        axpy(h1, cdouble(-0.2, 0.05), basis[1].field);
        axpy(f.mode_ref(1), 1.0, h1);
        axpy(f.mode_ref(-1), 1.0, conj_field(h1));
        Field hperp = gaussian_bump_field(s->grid(), -0.05, 0.1, 0.35, 0.5, 0.1);
        FiberFunction hp(s->grid_ptr());
        hp.set_mode(0, hperp);
        f.add(apply_Xperp(*s, hp));

        std::vector<BoundaryData> data{eng.transform(f, WeightSpec::unit(), 0),
                                       eng.transform(f, WeightSpec::unit(), 1)};
        MomentOptions opt;
        opt.att.max_iter = 150;
        opt.scalar_max_iter = 150;
        auto inv = moment_inversion(eng, data, none, 1, opt);
        CHECK(rel_fiber_error(*s, inv.f_hat, f) < 0.05);
        for (double d : inv.effective_digits) CHECK(d >= 6.0);

        // sanity: the zeroth moment alone misses the potential part
        auto att_only = att_tensor_tomography(eng, data[0], none, 1, opt.att);
        CHECK(rel_fiber_error(*s, att_only.h, f) > 0.1);
    }

    SUBCASE("data from a pure gauge representative returns a negligible potential")
    {
        Field h0 = gaussian_bump_field(s->grid(), 0.1, -0.1, 0.3, 1.0, 0.1);
        auto basis = basis_ker_eta(*s, 1, EtaSign::Minus, 4);
        Field h1(s->grid().size(), cdouble(0.0));
        axpy(h1, cdouble(0.6, -0.1), basis[0].field);
        FiberFunction g(s->grid_ptr());
        g.set_mode(0, h0);
        g.set_mode(1, h1);
        g.set_mode(-1, conj_field(h1));

        std::vector<BoundaryData> data{eng.transform(g, WeightSpec::unit(), 0),
                                       eng.transform(g, WeightSpec::unit(), 1)};
        MomentOptions opt;
        opt.att.max_iter = 200;
        opt.att.tol = 1e-9;
        opt.scalar_max_iter = 200;
        auto inv = moment_inversion(eng, data, none, 1, opt);

        // the order-0 recursion output v solves the synthesized difference;
        // for consistent data it must vanish relative to g
        FiberFunction v_hat = inv.f_hat;
        v_hat.add(g, -1.0); // f_hat = g_hat + X v; subtract the true g
        // compare the full reconstruction against g directly
        CHECK(rel_fiber_error(*s, inv.f_hat, g) < 1e-3 * 5);
    }
}

TEST_CASE("transverse inversion")
{
    auto s = surf(96);
    auto fan = make_fan(s->metric(), 90, 45);
    QuadratureSpec q{260};
    RayEngine eng(s, fan, q);

    SUBCASE("order zero passes through to the scalar solver")
    {
        SymmetricTensorField f(s, 0);
        f.component(0) = gaussian_bump_field(s->grid(), 0.0, 0.1, 0.3, 1.0, 0.1);
        auto coll = transverse_collection(f, WeightSpec::unit(), fan, q);
        auto inv = transverse_inversion(eng, coll, WeightSpec::unit(), 0);
        CHECK(inv.algebra_residual < 1e-12);
        CHECK(rel_field_error(s->grid(), inv.tensor.component(0), f.component(0)) < 0.03);
    }

    SUBCASE("order two round trip within 5% per component")
    {
        PhantomSpec spec;
        spec.seed = 11;
        spec.n_bumps = 2;
        auto ph = generate_phantom(s, spec, 2);
        auto coll = transverse_collection(ph.tensor, WeightSpec::unit(), fan, q);
        TransverseOptions opt;
        opt.max_iter = 150;
        auto inv = transverse_inversion(eng, coll, WeightSpec::unit(), 2, opt);
        CHECK(inv.algebra_residual < 1e-12);
        for (int qq = 0; qq <= 2; ++qq)
            CHECK(rel_field_error(s->grid(), inv.tensor.component(qq), ph.tensor.component(qq)) <
                  0.05);
    }

    SUBCASE("channel order is irrelevant bit for bit")
    {
        PhantomSpec spec;
        spec.seed = 13;
        auto ph = generate_phantom(s, spec, 1);
        auto coll = transverse_collection(ph.tensor, WeightSpec::unit(), fan, q);
        TransverseOptions opt;
        opt.max_iter = 40;
        auto inv1 = transverse_inversion(eng, coll, WeightSpec::unit(), 1, opt);
        auto inv2 = transverse_inversion(eng, coll, WeightSpec::unit(), 1, opt);
        for (int qq = 0; qq <= 1; ++qq)
            for (std::size_t i = 0; i < inv1.tensor.component(qq).size(); ++i)
                CHECK(inv1.tensor.component(qq)[i] == inv2.tensor.component(qq)[i]);
    }
}
