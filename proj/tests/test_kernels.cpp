#include <omp.h>

#include <cmath>
#include <vector>

#include "doctest.h"
#include "rfimp/kernels.hpp"
#include "rfimp/rng.hpp"

using namespace rfimp;
namespace k = rfimp::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::uint64_t seed, double zero_fraction = 0.0) {
    Rng rng(seed);
    std::vector<T> v(n);
    for (auto& x : v) x = rng.uniform() < zero_fraction ? T(0) : static_cast<T>(rng.normal());
    return v;
}

template <typename T>
double max_rel_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
        worst = std::max(worst, d / (1.0 + std::abs(static_cast<double>(b[i]))));
    }
    return worst;
}

struct Shape {
    std::size_t batch, fan_in, fan_out;
};

const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7}, {16, 129, 64}, {16, 8176, 13}, {5, 33, 1}, {2, 4, 130}};

template <typename T>
void check_agreement(double tol) {
    for (const auto& s : kShapes) {
        CAPTURE(s.batch);
        CAPTURE(s.fan_in);
        CAPTURE(s.fan_out);
        const auto x = random_vec<T>(s.batch * s.fan_in, 1, 0.3);
        const auto w = random_vec<T>(s.fan_out * s.fan_in, 2);
        const auto b = random_vec<T>(s.fan_out, 3);
        const auto dz = random_vec<T>(s.batch * s.fan_out, 4, 0.3);

        for (bool relu : {false, true}) {
            std::vector<T> ys(s.batch * s.fan_out), yp(ys.size());
            k::serial::dense_forward<T>(x, s.batch, s.fan_in, w, b, s.fan_out, ys, relu);
            k::parallel::dense_forward<T>(x, s.batch, s.fan_in, w, b, s.fan_out, yp, relu);
            CHECK(max_rel_diff(yp, ys) < tol);
        }

        std::vector<T> dws(w.size()), dwp(w.size(), T(7)), dbs(b.size()), dbp(b.size(), T(7));
        k::serial::dense_backward_params<T>(x, s.batch, s.fan_in, dz, s.fan_out, dws, dbs);
        k::parallel::dense_backward_params<T>(x, s.batch, s.fan_in, dz, s.fan_out, dwp, dbp);
        CHECK(max_rel_diff(dwp, dws) < tol);
        CHECK(max_rel_diff(dbp, dbs) < tol);

        std::vector<T> dxs(x.size()), dxp(x.size(), T(7));
        k::serial::dense_backward_input<T>(dz, s.batch, s.fan_out, w, s.fan_in, dxs);
        k::parallel::dense_backward_input<T>(dz, s.batch, s.fan_out, w, s.fan_in, dxp);
        CHECK(max_rel_diff(dxp, dxs) < tol);
    }
}

}  // namespace

TEST_CASE("dense kernels by hand") {
    // x = [1 2; 3 4], w = [1 0; -1 1; 2 -2], b = [0.5, 0, -1]
    const std::vector<double> x{1, 2, 3, 4}, w{1, 0, -1, 1, 2, -2}, b{0.5, 0, -1};
    std::vector<double> y(6);
    k::serial::dense_forward<double>(x, 2, 2, w, b, 3, y, false);
    CHECK(y == std::vector<double>{1.5, 1, -3, 3.5, 1, -3});
    k::serial::dense_forward<double>(x, 2, 2, w, b, 3, y, true);
    CHECK(y == std::vector<double>{1.5, 1, 0, 3.5, 1, 0});

    const std::vector<double> dz{1, 0, 2, -1, 1, 0};
    std::vector<double> dw(6), db(3), dx(4);
    k::serial::dense_backward_params<double>(x, 2, 2, dz, 3, dw, db);
    CHECK(dw == std::vector<double>{1 - 3, 2 - 4, 3, 4, 2, 4});
    CHECK(db == std::vector<double>{0, 1, 2});
    k::serial::dense_backward_input<double>(dz, 2, 3, w, 2, dx);
    CHECK(dx == std::vector<double>{1 + 4, -4, -1 - 1, 1});
}

TEST_CASE("relu single-unit example") {
    const std::vector<double> w{1.0}, b{0.0};
    std::vector<double> y(1);
    k::parallel::dense_forward<double>(std::vector<double>{-3.0}, 1, 1, w, b, 1, y, true);
    CHECK(y[0] == 0.0);
    k::parallel::dense_forward<double>(std::vector<double>{2.0}, 1, 1, w, b, 1, y, true);
    CHECK(y[0] == 2.0);
}

TEST_CASE("parallel kernels agree with the serial reference") {
    check_agreement<double>(1e-12);
    check_agreement<float>(1e-5);
}

TEST_CASE("parallel kernels do not depend on the thread count") {
    const std::size_t batch = 16, fan_in = 1000, fan_out = 37;
    const auto x = random_vec<float>(batch * fan_in, 5, 0.2);
    const auto w = random_vec<float>(fan_out * fan_in, 6);
    const auto b = random_vec<float>(fan_out, 7);
    const auto dz = random_vec<float>(batch * fan_out, 8);
    const auto run = [&](int threads) {
        omp_set_num_threads(threads);
        std::vector<float> y(batch * fan_out), dw(w.size()), db(b.size()), dx(x.size());
        k::parallel::dense_forward<float>(x, batch, fan_in, w, b, fan_out, y, true);
        k::parallel::dense_backward_params<float>(x, batch, fan_in, dz, fan_out, dw, db);
        k::parallel::dense_backward_input<float>(dz, batch, fan_out, w, fan_in, dx);
        y.insert(y.end(), dw.begin(), dw.end());
        y.insert(y.end(), db.begin(), db.end());
        y.insert(y.end(), dx.begin(), dx.end());
        return y;
    };
    const int before = omp_get_max_threads();
    const auto one = run(1);
    CHECK(run(3) == one);
    CHECK(run(4) == one);
    omp_set_num_threads(before);
}

TEST_CASE("Adam single step by hand") {
    std::vector<double> p{1.0}, m{0.0}, v{0.0};
    const std::vector<double> g{2.0};
    k::AdamCoefficients c;
    c.lr = 1e-3;
    c.step = 1;
    k::serial::adam_update<double>(p, g, m, v, c);
    CHECK(m[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(v[0] == doctest::Approx(0.004).epsilon(1e-15));
    CHECK(std::abs(p[0] - (1.0 - 1e-3 * 2.0 / (2.0 + 1e-8))) < 1e-12);

    std::vector<double> pp{1.0}, mp{0.0}, vp{0.0};
    k::parallel::adam_update<double>(pp, g, mp, vp, c);
    CHECK(pp == p);
    CHECK(mp == m);
    CHECK(vp == v);
}

TEST_CASE("Adam serial and parallel agree over many steps") {
    const std::size_t n = 5000;
    auto ps = random_vec<float>(n, 9), pp = ps;
    std::vector<float> ms(n), vs(n), mp(n), vp(n);
    for (std::uint64_t step = 1; step <= 20; ++step) {
        const auto g = random_vec<float>(n, 100 + step);
        k::AdamCoefficients c;
        c.step = step;
        k::serial::adam_update<float>(ps, g, ms, vs, c);
        k::parallel::adam_update<float>(pp, g, mp, vp, c);
    }
    CHECK(pp == ps);
    CHECK(mp == ms);
    CHECK(vp == vs);
}
