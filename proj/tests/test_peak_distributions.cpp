#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stem/field_model.hpp"
#include "stem/peak_distributions.hpp"

using namespace stem;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
template <typename Fn>
long double simpson(Fn f, long double a, long double b, int n) {
    const long double h = (b - a) / n;
    long double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
    return s * h / 3;
}

IsotropicHeightLaw unit_law(double kappa, double sigma = 1.0) { return {sigma, kappa, 0.005}; }

}  // namespace

TEST_CASE("hermite polynomials") {
    CHECK(hermite(0, 2.5) == 1.0);
    CHECK(hermite(1, 2.5) == 2.5);
    CHECK(hermite(2, 2.5) == doctest::Approx(2.5 * 2.5 - 1));
    CHECK(hermite(3, 2.5) == doctest::Approx(std::pow(2.5, 3) - 3 * 2.5));
    CHECK(hermite(4, 1.5) == doctest::Approx(std::pow(1.5, 4) - 6 * 1.5 * 1.5 + 3));
    CHECK_THROWS_AS(hermite(11, 0.0), DomainError);
}

TEST_CASE("density at the origin for kappa = 1") {
    CHECK(density_g(0.0, 1.0) == doctest::Approx(0.143108).epsilon(1e-5));
}

TEST_CASE("density agrees with the long-double oracle") {
    for (double k : {0.2, 0.7, 1.0, 1.3, 1.41}) {
        for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
            CHECK(density_g(x, k) == doctest::Approx(static_cast<double>(oracle::g(x, k))).epsilon(1e-12));
        }
    }
}

TEST_CASE("density integrates to one for six kappa values") {
    for (double k : {0.1, 0.5, 0.9, 1.0, 1.2, 1.4}) {
        const long double total = simpson([k](long double x) { return (long double)density_g((double)x, k); }, -14.0L, 14.0L, 20000);
        CHECK(std::abs(static_cast<double>(total) - 1.0) < 1e-8);
    }
}

TEST_CASE("kappa domain") {
    CHECK_THROWS_AS(density_g(0.0, 0.0), DomainError);
    CHECK_THROWS_AS(density_g(0.0, 1.5), DomainError);
    // the sqrt 2 endpoint is accepted and evaluated just inside it
    CHECK(density_g(0.3, std::numbers::sqrt2) == doctest::Approx(density_g(0.3, kMaxKappa)));
    CHECK(density_g(0.3, std::numbers::sqrt2) == doctest::Approx(density_g(0.3, 1.414)).epsilon(1e-3));
}

TEST_CASE("tail probability matches the Owen's T closed form") {
    for (double k : {0.3, 0.8, 1.0, 1.35}) {
        for (double x : {-5.0, -1.5, 0.0, 1.0, 2.5, 4.0, 6.0}) {
            const double ref = static_cast<double>(oracle::F(x, k));
            CHECK(tail_F(x, unit_law(k)) == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("tail probability scales with sigma and has correct limits") {
    const auto law = unit_law(1.0, 0.25);
    CHECK(tail_F(0.5, law) == doctest::Approx(static_cast<double>(oracle::F(2.0, 1.0))).epsilon(1e-9));
    CHECK(tail_F(-INFINITY, law) == 1.0);
    CHECK(tail_F(INFINITY, law) == 0.0);
    CHECK(tail_F(-100.0, law) == doctest::Approx(1.0).epsilon(1e-12));
    // heights of maxima are stochastically larger than the marginal Gaussian
    for (double x : {-1.0, 0.0, 1.0, 2.0}) CHECK(tail_F(x, unit_law(1.0)) > oracle::Phibar(x));
}

TEST_CASE("tail inversion round-trips") {
    for (double k : {0.5, 1.0, 1.4}) {
        const auto law = unit_law(k, 0.3);
        for (double p : {1e-8, 1e-4, 0.01, 0.3, 0.7, 0.99}) {
            const double u = inverse_tail_F(p, law);
            CHECK(std::abs(tail_F(u, law) - p) <= 1e-9 * std::max(p, 1e-3));
        }
        for (double u : {0.0, 0.15, 0.3, 0.6, 1.2}) {
            CHECK(std::abs(inverse_tail_F(tail_F(u, law), law) - u) < 1e-9);
        }
    }
    CHECK_THROWS_AS(inverse_tail_F(0.0, unit_law(1.0)), DomainError);
    CHECK_THROWS_AS(inverse_tail_F(1.0, unit_law(1.0)), DomainError);
}

TEST_CASE("conditional tail") {
    const auto law = unit_law(1.0);
    CHECK(tail_F_cond(2.0, 1.0, law) == doctest::Approx(tail_F(2.0, law) / tail_F(1.0, law)));
    CHECK(tail_F_cond(1.0, 1.0, law) == 1.0);
    CHECK_THROWS_AS(tail_F_cond(0.5, 1.0, law), DomainError);
}

TEST_CASE("expected maxima density from moments") {
    for (auto [xi, expected] : {std::pair{2.0, 0.01149}, std::pair{3.0, 0.005105}, std::pair{4.0, 0.002872}}) {
        const auto law = IsotropicHeightLaw::from_moments(closed_form_moments(xi, 0.0, 1.0));
        CHECK(law.em0 == doctest::Approx(1.0 / (4.0 * std::sqrt(3.0) * std::numbers::pi * xi * xi)));
        CHECK(law.em0 == doctest::Approx(expected).epsilon(5e-4));
        CHECK(expected_maxima(law, 0.0) == doctest::Approx(law.em0 * tail_F(0.0, law)));
    }
}

TEST_CASE("overshoot approximation") {
    const OvershootLaw law{0.5, 2, 0.75};
    const double xv = 1.5;
    const double xu = 3.0;
    const double ref = (xu / xv) * std::exp(-(xu * xu - xv * xv) / 2.0);
    CHECK(overshoot_K(1.5, law) == doctest::Approx(ref));
    CHECK(overshoot_K(0.75, law) == 1.0);
    CHECK(overshoot_K(INFINITY, law) == 0.0);
    CHECK_THROWS_AS(overshoot_K(0.5, 0.0, law), DomainError);   // v = 0 gives H_1 = 0
    CHECK_THROWS_AS(overshoot_K(0.5, 1.0, law), DomainError);   // u < v
    // in one dimension K reduces to the Gaussian ratio
    const OvershootLaw one_d{1.0, 1, 1.0};
    CHECK(overshoot_K(2.0, one_d) == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("beta reduces to sqrt3 x phi(x) / F(x) for kappa = 1 and lies in (0, 1)") {
    const FieldMoments m = closed_form_moments(3.0, 0.0, 1.0);
    const auto law = IsotropicHeightLaw::from_moments(m);
    for (double x : {0.25, 0.5, 1.0, 2.0, 3.0, 4.0}) {
        const double v = x * m.sigma_gamma;
        const double b = beta_factor(v, law, m.lambda_det);
        const double ref = std::sqrt(3.0) * x * static_cast<double>(oracle::phi(x) / oracle::F(x, 1.0));
        CHECK(b == doctest::Approx(ref).epsilon(1e-8));
        CHECK(b > 0.0);
        CHECK(b < 1.0);
    }
    CHECK_THROWS_AS(beta_factor(0.0, law, m.lambda_det), DomainError);
}
