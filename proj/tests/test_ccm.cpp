#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "netinf/ccm.hpp"
#include "netinf/error.hpp"

using namespace netinf;

namespace {

std::vector<double> logistic(std::size_t len, double r, double x0)
{
    std::vector<double> s(len);
    double x = x0;
    for (auto& v : s) {
        x = r * x * (1.0 - x);
        v = x;
    }
    return s;
}

// x drives y: y_{t+1} = y_t (3.7 - 3.7 y_t - beta x_t)
std::pair<std::vector<double>, std::vector<double>> coupled_logistic(std::size_t len, double beta)
{
    std::vector<double> x(len);
    std::vector<double> y(len);
    double a = 0.4;
    double b = 0.2;
    for (std::size_t t = 0; t < len; ++t) {
        const double na = a * (3.8 - 3.8 * a);
        const double nb = b * (3.5 - 3.5 * b - beta * a);
        a = na;
        b = nb;
        x[t] = a;
        y[t] = b;
    }
    return {x, y};
}

std::vector<double> white(std::size_t len, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> s(len);
    for (auto& v : s) {
        v = g(rng);
    }
    return s;
}

} // namespace

TEST_CASE("delay embedding layout")
{
    const std::vector<double> s{1, 2, 3, 4};
    const auto e = delay_embed(s, 2, 1);
    REQUIRE(e.size() == 3);
    CHECK(e.points(0, 0) == 2);
    CHECK(e.points(0, 1) == 1);
    CHECK(e.points(2, 0) == 4);
    CHECK(e.points(2, 1) == 3);
    CHECK(e.times == std::vector<std::size_t>{1, 2, 3});

    const auto one = delay_embed(s, 1, 1);
    CHECK(one.size() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(one.points(i, 0) == s[static_cast<std::size_t>(i)]);
    }

    const std::vector<double> flat(10, 3.5);
    const auto c = delay_embed(flat, 3, 2);
    CHECK(c.size() == 6);
    CHECK((c.points.array() == 3.5).all());

    CHECK_THROWS_AS(delay_embed(s, 3, 2), ParameterError);
    CHECK_THROWS_AS(delay_embed(s, 0, 1), ParameterError);
    CHECK_THROWS_AS(delay_embed(s, 2, 0), ParameterError);
}

TEST_CASE("embedding columns read back the series tail")
{
    const auto s = logistic(50, 3.8, 0.3);
    const auto e = delay_embed(s, 4, 3);
    CHECK(e.size() == 50 - 9);
    for (std::size_t r = 0; r < e.size(); ++r) {
        CHECK(e.points(static_cast<Eigen::Index>(r), 0) == s[9 + r]);
        CHECK(e.points(static_cast<Eigen::Index>(r), 3) == s[r]);
    }
}

TEST_CASE("pearson edge cases")
{
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{2, 4, 6};
    const std::vector<double> c{3, 2, 1};
    const std::vector<double> flat{1, 1, 1};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    CHECK(pearson(a, c) == doctest::Approx(-1.0));
    CHECK(pearson(a, flat) == 0.0);
    CHECK(pearson(a, std::vector<double>{1, 2}) == 0.0);
}

TEST_CASE("a chaotic series cross-maps itself")
{
    const auto s = logistic(400, 3.8, 0.4);
    CHECK(cross_map_correlation(s, s, 2, 1, 399) >= 0.95);
}

TEST_CASE("white noise does not cross-map")
{
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = white(300, seed);
        const auto y = white(300, 1000 + seed);
        const double rho = cross_map_correlation(x, y, 3, 1, 298);
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
        total += rho;
    }
    CHECK(std::abs(total / 20.0) <= 0.2);
}

TEST_CASE("cross-map skill converges with library size")
{
    const auto [x, y] = coupled_logistic(500, 0.3);
    // x drives y, so y's manifold recovers x
    std::vector<double> rho;
    for (std::size_t lib : {10, 40, 160, 498}) {
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            sum += cross_map_correlation(y, x, 2, 1, lib, seed);
        }
        rho.push_back(sum / 5.0);
    }
    for (std::size_t i = 1; i < rho.size(); ++i) {
        CHECK(rho[i] >= rho[i - 1] - 0.02);
    }
    CHECK(rho.back() - rho.front() > 0.1);
    CHECK(rho.back() > 0.8);
}

TEST_CASE("cross mapping is deterministic and checks its inputs")
{
    const auto s = logistic(200, 3.8, 0.2);
    const auto t = logistic(200, 3.7, 0.6);
    CHECK(cross_map_correlation(s, t, 3, 1, 50, 4) == cross_map_correlation(s, t, 3, 1, 50, 4));
    CHECK_THROWS_AS(cross_map_correlation(s, std::vector<double>(10, 0.0), 3, 1, 5), ParameterError);
    CHECK_THROWS_AS(cross_map_correlation(s, t, 3, 1, 199), ParameterError);
    CHECK_THROWS_AS(cross_map_correlation(s, t, 3, 1, 4), ParameterError);
    const std::vector<double> flat(200, 0.5);
    CHECK(cross_map_correlation(s, flat, 3, 1, 100) == 0.0);
}

TEST_CASE("duplicated channels map both ways")
{
    const auto s = logistic(300, 3.8, 0.35);
    Eigen::MatrixXd series(2, 300);
    for (Eigen::Index t = 0; t < 300; ++t) {
        series(0, t) = s[static_cast<std::size_t>(t)];
        series(1, t) = s[static_cast<std::size_t>(t)];
    }
    CcmOptions opt;
    opt.dim = 2;
    const auto res = ccm_infer_network(series, opt);
    CHECK(res.network.causes(0, 1));
    CHECK(res.network.causes(1, 0));
}

TEST_CASE("independent noise channels give an empty graph")
{
    std::size_t empty = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Eigen::MatrixXd series(3, 200);
        for (Eigen::Index i = 0; i < 3; ++i) {
            const auto row = white(200, seed * 10 + static_cast<std::uint64_t>(i));
            for (Eigen::Index t = 0; t < 200; ++t) {
                series(i, t) = row[static_cast<std::size_t>(t)];
            }
        }
        empty += ccm_infer_network(series, CcmOptions{}).network.edge_count() == 0 ? 1 : 0;
    }
    CHECK(empty >= 18);
}

TEST_CASE("driver recovered from the driven manifold")
{
    const auto [x, y] = coupled_logistic(400, 0.3);
    Eigen::MatrixXd series(2, 400);
    for (Eigen::Index t = 0; t < 400; ++t) {
        series(0, t) = x[static_cast<std::size_t>(t)];
        series(1, t) = y[static_cast<std::size_t>(t)];
    }
    CcmOptions opt;
    opt.dim = 2;
    const auto res = ccm_infer_network(series, opt);
    CHECK(res.network.causes(0, 1));
    CHECK(res.rho_full(1, 0) > res.rho_full(0, 1));
    CHECK(res.rho_full(0, 0) == 0.0);
}
