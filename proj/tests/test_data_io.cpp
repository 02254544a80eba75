#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ewlogit/data_io.hpp"
#include "ewlogit/rng.hpp"

using namespace ewlogit;

TEST_CASE("parse_libsvm basics") {
    std::istringstream in("+1 1:0.5 3:2.0\n");
    const Dataset ds = parse_libsvm(in);
    REQUIRE(ds.size() == 1);
    CHECK(ds.d == 3);
    CHECK(ds.examples[0].y == +1);
    CHECK(ds.examples[0].x == Vec{0.5, 0.0, 2.0});

    std::istringstream in2("0 2:1\n");
    const Dataset ds2 = parse_libsvm(in2);  // zero-maps-to-minus is the default
    CHECK(ds2.examples[0].y == -1);
    CHECK(ds2.examples[0].x == Vec{0.0, 1.0});

    LibsvmOptions strict;
    strict.zero_label_as_minus = false;
    std::istringstream in3("0 2:1\n");
    CHECK_THROWS_AS(parse_libsvm(in3, strict), ParseError);

    // comments, blank lines, truncation
    std::istringstream in4("# header\n\n+1 1:1\n-1 1:2 # trailing\n+1 1:3\n");
    LibsvmOptions trunc;
    trunc.max_examples = 2;
    const Dataset ds4 = parse_libsvm(in4, trunc);
    CHECK(ds4.size() == 2);
    CHECK(ds4.examples[1].x == Vec{2.0});
}

TEST_CASE("parse_libsvm error reporting carries the line number") {
    std::istringstream bad1("+1 1:0.5\n+3 1:1\n");
    try {
        parse_libsvm(bad1);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::istringstream bad2("+1 1:0.5\n-1 oops\n");
    CHECK_THROWS_AS(parse_libsvm(bad2), ParseError);
    std::istringstream bad3("+1 0:0.5\n");
    CHECK_THROWS_AS(parse_libsvm(bad3), ParseError);  // 1-based indices
    std::istringstream bad4("+1 2:1 2:2\n");
    CHECK_THROWS_AS(parse_libsvm(bad4), ParseError);  // non-increasing index
}

TEST_CASE("fixture round-trips bit-exactly") {
    std::ifstream f("data/roundtrip_fixture.libsvm", std::ios::binary);
    REQUIRE(f);
    std::ostringstream raw;
    raw << f.rdbuf();
    std::istringstream in(raw.str());
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.size() == 100);
    CHECK(serialize_libsvm(ds) == raw.str());
}

TEST_CASE("normalize flag rescales to unit norm and updates R") {
    std::istringstream in("+1 1:3 2:4\n-1 1:1\n");
    LibsvmOptions opts;
    opts.normalize = true;
    const Dataset ds = parse_libsvm(in, opts);
    CHECK(norm2(ds.examples[0].x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ds.R == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gen_hazan law") {
    HazanConfig cfg;
    cfg.n = 100000;
    cfg.B = std::log(100.0);
    cfg.eps = 0.01;
    cfg.chi = +1;
    cfg.seed = 7;
    const Dataset ds = gen_hazan(cfg);

    const double root = 0.1;
    const double x_plus = 1.0 - root / (2.0 * cfg.B);
    const double x_minus = root / (2.0 * cfg.B);
    const double p_plus = root / (2.0 * cfg.B) + cfg.eps / cfg.B;  // ~0.013029

    std::set<double> support;
    long plus = 0;
    for (const auto& e : ds.examples) {
        support.insert(e.x[0]);
        if (e.y == +1) {
            ++plus;
            CHECK(e.x[0] == x_plus);
        } else {
            CHECK(e.x[0] == x_minus);
        }
    }
    CHECK(support.size() == 2);
    const double freq = static_cast<double>(plus) / cfg.n;
    const double se = std::sqrt(p_plus * (1.0 - p_plus) / cfg.n);
    CHECK(std::abs(freq - p_plus) <= 3.0 * se);

    // determinism
    const Dataset again = gen_hazan(cfg);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(again.examples[i].y == ds.examples[i].y);
        CHECK(again.examples[i].x == ds.examples[i].x);
    }

    // degenerate config rejected: tiny B pushes the probability above 1
    HazanConfig bad = cfg;
    bad.B = 0.01;
    CHECK_THROWS_AS(gen_hazan(bad), std::invalid_argument);
}

TEST_CASE("gen_gaussian_design: coin flips at theta* = 0") {
    GaussianDesignConfig cfg;
    cfg.n = 100000;
    cfg.d = 2;
    cfg.seed = 11;
    const Dataset ds = gen_gaussian_design(cfg);
    double mean_y = 0.0;
    for (const auto& e : ds.examples) mean_y += e.y;
    mean_y /= cfg.n;
    CHECK(std::abs(mean_y) <= 3.0 / std::sqrt(static_cast<double>(cfg.n)));
}

TEST_CASE("gen_gaussian_design: huge |theta*| gives noiseless labels") {
    GaussianDesignConfig cfg;
    cfg.n = 1000;
    cfg.d = 3;
    cfg.theta_star = Vec{1e6, 0.0, 0.0};
    cfg.seed = 13;
    const Dataset ds = gen_gaussian_design(cfg);
    for (const auto& e : ds.examples) CHECK(e.y == (e.x[0] > 0.0 ? +1 : -1));
}

TEST_CASE("gen_gaussian_design: margin concentration across seeded repetitions") {
    // P(min_t |<u, x_t>| <= delta/(2n)) <= delta with u = theta*/|theta*|
    const int reps = 200, n = 50;
    const double delta = 0.3;
    int ok = 0;
    for (int r = 0; r < reps; ++r) {
        GaussianDesignConfig cfg;
        cfg.n = n;
        cfg.d = 4;
        cfg.theta_star = Vec{1e6, 0.0, 0.0, 0.0};
        cfg.seed = 1000 + r;
        const Dataset ds = gen_gaussian_design(cfg);
        double margin = 1e300;
        for (const auto& e : ds.examples) margin = std::min(margin, e.y * e.x[0]);
        if (margin >= delta / (2.0 * n)) ++ok;
    }
    CHECK(ok >= (1.0 - delta) * reps);
}

TEST_CASE("gen_gaussian_design: radius concentration across seeded repetitions") {
    const int reps = 200, n = 50, d = 5;
    const double delta = 0.3;
    const double thresh = std::sqrt(static_cast<double>(d)) + std::sqrt(2.0 * std::log(n / delta));
    int ok = 0;
    for (int r = 0; r < reps; ++r) {
        GaussianDesignConfig cfg;
        cfg.n = n;
        cfg.d = d;
        cfg.seed = 5000 + r;
        const Dataset ds = gen_gaussian_design(cfg);
        if (ds.R <= thresh) ++ok;
    }
    CHECK(ok >= (1.0 - delta) * reps);
}

TEST_CASE("permute is a deterministic bijection") {
    std::istringstream in("+1 1:1\n-1 1:2\n+1 1:3\n-1 1:4\n+1 1:5\n");
    Dataset base = parse_libsvm(in);
    while (base.size() < 100) {
        Dataset more = base;
        base.examples.push_back({Vec{static_cast<double>(base.size() + 1)}, +1});
    }
    base.recompute_radius();

    const Dataset p1 = permute(base, 42);
    const Dataset p2 = permute(base, 42);
    const Dataset p3 = permute(base, 43);

    auto values = [](const Dataset& d) {
        std::multiset<double> s;
        for (const auto& e : d.examples) s.insert(e.x[0]);
        return s;
    };
    CHECK(values(p1) == values(base));  // multiset preserved
    bool same12 = true, same13 = true;
    for (std::size_t i = 0; i < base.size(); ++i) {
        same12 = same12 && p1.examples[i].x == p2.examples[i].x;
        same13 = same13 && p1.examples[i].x == p3.examples[i].x;
    }
    CHECK(same12);
    CHECK_FALSE(same13);
}

TEST_CASE("head truncation recomputes the radius") {
    std::istringstream in("+1 1:1\n-1 1:5\n+1 1:2\n");
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.R == doctest::Approx(5.0));
    const Dataset h = ds.head(1);
    CHECK(h.size() == 1);
    CHECK(h.R == doctest::Approx(1.0));
}
