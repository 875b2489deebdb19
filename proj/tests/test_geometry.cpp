#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "ttomo/geometry.hpp"

using namespace ttomo;

TEST_CASE("geodesic vector field: Euclidean straight lines")
{
    const auto m = ConformalMetric::euclidean();
    auto v = geodesic_vector_field(m, {0.0, 0.0, 0.0});
    CHECK(v.dx == doctest::Approx(1.0));
    CHECK(v.dy == doctest::Approx(0.0));
    CHECK(v.dtheta == doctest::Approx(0.0));

    v = geodesic_vector_field(m, {0.3, 0.1, kPi / 2});
    CHECK(v.dx == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.dy == doctest::Approx(1.0));
    CHECK(v.dtheta == doctest::Approx(0.0));

    CHECK_THROWS_AS(geodesic_vector_field(m, {1.5, 0.0, 0.0}), DomainError);
}

TEST_CASE("geodesic vector field matches finite differences of the conformal factor")
{
    const auto m = ConformalMetric::constant_curvature(0.5);
    for (const PhasePoint p : {PhasePoint{0.2, 0.0, 0.0}, PhasePoint{0.2, 0.3, 0.7},
                               PhasePoint{-0.4, 0.1, 2.1}}) {
        const auto v = geodesic_vector_field(m, p);
        const auto g = oracles::fd_grad_lambda(m, p.x, p.y);
        const double el = std::exp(-m.lambda(p.x, p.y));
        CHECK(v.dtheta ==
              doctest::Approx(el * (-std::sin(p.theta) * g[0] + std::cos(p.theta) * g[1]))
                  .epsilon(1e-8));
        // unit speed is an identity of the parametrization
        const double speed =
            std::exp(2.0 * m.lambda(p.x, p.y)) * (v.dx * v.dx + v.dy * v.dy);
        CHECK(speed == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("flow: straight chords and identity")
{
    const auto m = ConformalMetric::euclidean();
    const auto q = flow(m, {0.0, 0.0, 0.0}, 0.5, 1e-3);
    CHECK(q.x == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(std::abs(q.y) < 1e-12);

    const auto id = flow(m, {0.1, -0.2, 1.1}, 0.0, 1e-3);
    CHECK(id.x == doctest::Approx(0.1));
    CHECK(id.y == doctest::Approx(-0.2));

    const auto across = flow(m, {-1.0, 0.0, 0.0}, 2.0, 1e-3);
    CHECK(across.x == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(across.y) < 1e-12);

    CHECK_THROWS_AS(flow(m, {0.0, 0.0, 0.0}, 1.5, 1e-3), DomainError);
}

TEST_CASE("flow group law")
{
    const auto m = ConformalMetric::constant_curvature(1.0);
    NormalSampler rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const double r = 0.4 * rng.next_uniform();
        const double ang = 2 * kPi * rng.next_uniform();
        const PhasePoint p{r * std::cos(ang), r * std::sin(ang), 2 * kPi * rng.next_uniform()};
        const double tau = exit_time(m, p, 1e-3);
        const double s = 0.3 * tau * rng.next_uniform();
        const double t = 0.3 * tau * rng.next_uniform();
        const auto one = flow(m, p, s + t, 1e-3);
        const auto two = flow(m, flow(m, p, t, 1e-3), s, 1e-3);
        CHECK(std::abs(one.x - two.x) < 1e-7);
        CHECK(std::abs(one.y - two.y) < 1e-7);
        CHECK(std::abs(one.theta - two.theta) < 1e-7);
    }
}

TEST_CASE("exit_time: unit disk radii and diameters")
{
    const auto m = ConformalMetric::euclidean();
    for (double th : {0.0, 0.9, 2.4, 4.0})
        CHECK(exit_time(m, {0.0, 0.0, th}, 1e-3) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(exit_time(m, {1.0, 0.0, kPi}, 1e-3) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("exit_time: radial sound speed against the adaptive oracle")
{
    const auto m = ConformalMetric::radial_sound_speed({1.0, 0.0, 0.2});
    const double t_lib = exit_time(m, {0.0, 0.0, 0.0}, 5e-4);
    const double t_orc = oracles::adaptive_exit_time(m, {0.0, 0.0, 0.0});
    // radial ray: closed form int_0^1 dr / (1 + 0.2 r^2)
    const double closed = std::atan(std::sqrt(0.2)) / std::sqrt(0.2);
    CHECK(t_orc == doctest::Approx(closed).epsilon(1e-9));
    CHECK(t_lib == doctest::Approx(t_orc).epsilon(1e-8));

    const PhasePoint skew{0.3, -0.2, 1.3};
    CHECK(exit_time(m, skew, 5e-4) ==
          doctest::Approx(oracles::adaptive_exit_time(m, skew)).epsilon(1e-7));
}

TEST_CASE("exit_time: time reversal recovers the full chord")
{
    const auto m = ConformalMetric::euclidean();
    NormalSampler rng(3);
    for (int trial = 0; trial < 6; ++trial) {
        const double x = 0.8 * (2 * rng.next_uniform() - 1);
        const double y = 0.8 * (2 * rng.next_uniform() - 1);
        if (x * x + y * y > 0.9) continue;
        const double th = 2 * kPi * rng.next_uniform();
        const double fwd = exit_time(m, {x, y, th}, 1e-3);
        const double bwd = exit_time(m, {x, y, th + kPi}, 1e-3);
        const double pd = x * std::cos(th) + y * std::sin(th);
        const double chord = 2.0 * std::sqrt(1.0 - (x * x + y * y) + pd * pd);
        CHECK(fwd + bwd == doctest::Approx(chord).epsilon(1e-8));
    }
}

TEST_CASE("X tau = -1 by Richardson finite differences")
{
    for (const auto& m : {ConformalMetric::euclidean(), ConformalMetric::constant_curvature(0.7)}) {
        const PhasePoint p{0.25, -0.15, 0.8};
        const double tau0 = exit_time(m, p, 2e-4);
        auto slope = [&](double h) {
            const auto q = flow(m, p, h, 2e-4);
            return (exit_time(m, q, 2e-4) - tau0) / h;
        };
        const double s3 = slope(1e-3);
        const double s4 = slope(1e-4);
        // first-order Richardson: the h->0 limit from two step sizes
        const double extrap = (10.0 * s4 - s3) / 9.0;
        CHECK(extrap == doctest::Approx(-1.0).epsilon(2e-5));
        CHECK(s4 == doctest::Approx(-1.0).epsilon(2e-3));
    }
}

TEST_CASE("boundary fan: mu values and total measure")
{
    const auto m = ConformalMetric::euclidean();
    const BoundaryFan fan(m, 64, 48);
    // mu = cos(alpha) at every node
    for (int ia = 0; ia < fan.n_alpha(); ++ia)
        CHECK(fan.mu(fan.idx(0, ia)) == doctest::Approx(std::cos(fan.alpha(ia))));

    double total = 0.0;
    for (int ib = 0; ib < fan.n_beta(); ++ib)
        for (int ia = 0; ia < fan.n_alpha(); ++ia) {
            const auto k = fan.idx(ib, ia);
            total += fan.mu(k) * fan.area_weight(k);
        }
    CHECK(total == doctest::Approx(4.0 * kPi).epsilon(1e-3));

    const double oracle = oracles::fan_quadrature(
        64, 48, [](double, double a) { return std::cos(a); });
    CHECK(total == doctest::Approx(2.0 * kPi * oracle / (2.0 * kPi)).epsilon(1e-12));

    CHECK_THROWS_AS(BoundaryFan(m, 1, 8), DomainError);
}

TEST_CASE("herglotz check")
{
    auto r1 = herglotz_check({1.0}, 64);
    CHECK(r1.ok);
    CHECK(r1.margin == doctest::Approx(1.0));

    auto r2 = herglotz_check({1.0, 0.0, 0.2}, 256);
    CHECK(r2.ok);
    // symbolic: d/dr (r/c) = (1 - 0.2 r^2) / (1 + 0.2 r^2)^2, minimum at r=1
    CHECK(r2.margin == doctest::Approx(0.8 / (1.2 * 1.2)).epsilon(1e-3));

    auto r3 = herglotz_check({1.0, 0.0, 2.0}, 256);
    CHECK_FALSE(r3.ok); // (1 - 2 r^2) < 0 for r > 1/sqrt(2)

    // decreasing profile: d/dr (r (1+5r^2)) = 1 + 15 r^2 > 0, so the
    // condition holds (recorded from the oracle run)
    std::vector<double> c_dec;
    {
        // c(r) = 1/(1+5r^2) is not polynomial; sample-check through a dense
        // polynomial fit is overkill -- evaluate the margin directly instead.
        double margin = 1e300;
        for (int i = 0; i < 256; ++i) {
            const double r = i / 255.0;
            const double c = 1.0 / (1.0 + 5.0 * r * r);
            const double dc = -10.0 * r / ((1.0 + 5.0 * r * r) * (1.0 + 5.0 * r * r));
            margin = std::min(margin, (c - r * dc) / (c * c));
        }
        CHECK(margin == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(herglotz_check({-1.0}, 16), DomainError);

    CHECK_THROWS_AS(ConformalMetric::radial_sound_speed({1.0, 0.0, 2.0}), DomainError);
}

TEST_CASE("conjugate point probe")
{
    const auto fan_metric = ConformalMetric::euclidean();
    const BoundaryFan fan(fan_metric, 12, 7);

    SUBCASE("Euclidean: J = t, never vanishes")
    {
        auto rep = conjugate_point_probe(ConformalMetric::euclidean(), fan, 2e-3);
        CHECK(rep.clean());
    }
    SUBCASE("curvature 1: chords shorter than pi are clean")
    {
        auto rep = conjugate_point_probe(ConformalMetric::constant_curvature(1.0), fan, 2e-3);
        CHECK(rep.conjugate.empty());
    }
    SUBCASE("curvature 4: J matches sin(2t)/2 along the diameter")
    {
        const auto m4 = ConformalMetric::constant_curvature(4.0);
        const auto jf = jacobi_field(m4, {-1.0, 0.0, 0.0}, 1e-3);
        for (std::size_t i = 0; i < jf.size(); i += 97) {
            const auto [t, J] = jf[i];
            CHECK(J == doctest::Approx(0.5 * std::sin(2.0 * t)).epsilon(5e-6));
        }
        // the diameter of this hemisphere model is exactly pi/2: the first
        // Jacobi zero touches the far boundary point
        CHECK(jf.back().first == doctest::Approx(kPi / 2).epsilon(1e-6));
        CHECK(std::abs(jf.back().second) < 2e-3);
    }
    SUBCASE("curvature 5: interior conjugate points are reported")
    {
        const auto m5 = ConformalMetric::constant_curvature(5.0);
        const BoundaryFan small(m5, 8, 5);
        auto rep = conjugate_point_probe(m5, small, 1e-3);
        CHECK(!rep.conjugate.empty());
        for (const auto& item : rep.conjugate)
            CHECK(item.t_conjugate == doctest::Approx(kPi / std::sqrt(5.0)).epsilon(0.02));
    }
}

TEST_CASE("trace_path samples end on the boundary at unit speed")
{
    const auto m = ConformalMetric::constant_curvature(0.5);
    const auto path = trace_path(m, {0.1, 0.2, 0.5}, 1e-3);
    CHECK(path.t.front() == 0.0);
    CHECK(path.tau > 0.0);
    const auto& last = path.samples.back();
    CHECK(std::hypot(last.x, last.y) == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t i = 0; i < path.samples.size(); i += 50) {
        const auto v = geodesic_vector_field(m, path.samples[i]);
        const double speed = std::exp(2 * m.lambda(path.samples[i].x, path.samples[i].y)) *
                             (v.dx * v.dx + v.dy * v.dy);
        CHECK(speed == doctest::Approx(1.0).epsilon(1e-8));
    }
}
