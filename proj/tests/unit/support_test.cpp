#include <atomic>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "fairrec/csv.hpp"
#include "fairrec/parallel.hpp"
#include "fairrec/random.hpp"

using namespace fairrec;

TEST_SUITE("support") {

TEST_CASE("rng streams are reproducible and derived streams differ") {
    Rng a(123), b(123);
    for (int k = 0; k < 100; ++k) CHECK(a.next() == b.next());

    Rng s0 = Rng::derive(5, 0), s0b = Rng::derive(5, 0), s1 = Rng::derive(5, 1);
    const auto x = s0.next();
    CHECK(x == s0b.next());
    CHECK(x != s1.next());
}

TEST_CASE("uniform draws stay in range") {
    Rng rng(9);
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform01();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(rng.uniform_index(7) < 7u);
        const double v = rng.uniform(-2.0, 3.0);
        CHECK((v >= -2.0 && v < 3.0));
    }
}

TEST_CASE("normal draws have roughly unit moments") {
    Rng rng(10);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(4);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 50; ++k) CHECK(sorted[k] == k);
}

TEST_CASE("parallel chunks cover the range exactly once") {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
        std::vector<std::atomic<int>> hits(n);
        parallel_chunks(n, 8, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) ++hits[k];
        });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
}

TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(parallel_for(100, [](std::size_t k) {
                        if (k == 42) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("format_number round-trips") {
    for (double v : {0.0, 1.0, -0.6, 0.1 + 0.2, 1e-300, 123456789.125}) {
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-0.0) == "0");
}

TEST_CASE("csv writer quotes and pads, reader inverts") {
    std::ostringstream out;
    {
        CsvWriter csv(out, {"a", "b", "c"});
        csv.row() << "plain" << "with,comma" << "say \"hi\"";
        csv.row() << 1;
    }
    CHECK(out.str() == "a,b,c\nplain,\"with,comma\",\"say \"\"hi\"\"\"\n1,,\n");
    std::istringstream in(out.str());
    const auto rows = read_csv(in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][1] == "with,comma");
    CHECK(rows[1][2] == "say \"hi\"");
    CHECK(rows[2] == std::vector<std::string>{"1", "", ""});
}

}  // TEST_SUITE
