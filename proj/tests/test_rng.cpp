#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "vrpseg/rng.hpp"

using namespace vrpseg;

TEST_CASE("rng: identical seeds give identical sequences") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(42), d(43);
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs |= (c.next_u64() != d.next_u64());
    CHECK(differs);
}

TEST_CASE("rng: uniform_int stays in bounds and hits every value") {
    Rng rng(7);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        const int v = rng.uniform_int(-3, 5);
        CHECK(v >= -3);
        CHECK(v <= 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 9);

    Rng one(9);
    for (int i = 0; i < 10; ++i) CHECK(one.uniform_int(4, 4) == 4);
}

TEST_CASE("rng: uniform_int is close to uniform") {
    Rng rng(11);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(0, 9))];
    for (int c : counts) {
        CHECK(c > n / 10 - n / 50);
        CHECK(c < n / 10 + n / 50);
    }
}

TEST_CASE("rng: uniform_real in [0, 1)") {
    Rng rng(3);
    double mean = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.uniform_real();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        mean += v;
    }
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 0.01);
}

TEST_CASE("rng: gaussian has unit moments") {
    Rng rng(5);
    double mean = 0.0, var = 0.0;
    const int n = 50000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = rng.gaussian();
        mean += xs[static_cast<std::size_t>(i)];
    }
    mean /= n;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("rng: derive_seed decorrelates streams deterministically") {
    CHECK(derive_seed(100, 0) == derive_seed(100, 0));
    CHECK(derive_seed(100, 0) != derive_seed(100, 1));
    CHECK(derive_seed(100, 1) != derive_seed(101, 1));
    // Consecutive streams should not produce consecutive seeds.
    CHECK(derive_seed(100, 1) != derive_seed(100, 0) + 1);
}
