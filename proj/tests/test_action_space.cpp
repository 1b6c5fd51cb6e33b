#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;
using namespace slicesim::actions;

namespace {

// Independent composition generator: straightforward recursion, no sharing
// with the library's iterative successor logic.
void gen_compositions(int total, int parts, std::vector<int>& prefix,
                      std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        if (total >= 1) {
            prefix.push_back(total);
            out.push_back(prefix);
            prefix.pop_back();
        }
        return;
    }
    for (int v = 1; v + (parts - 1) <= total; ++v) {
        prefix.push_back(v);
        gen_compositions(total - v, parts - 1, prefix, out);
        prefix.pop_back();
    }
}

std::vector<std::vector<int>> brute_compositions(int total, int parts) {
    std::vector<std::vector<int>> out;
    std::vector<int> prefix;
    gen_compositions(total, parts, prefix, out);
    std::sort(out.begin(), out.end());
    return out;
}

AllocationGrid grid_of(double w, double delta, int n) {
    AllocationGrid g;
    g.total_mhz = w;
    g.resolution_mhz = delta;
    g.slice_count = n;
    return g;
}

}  // namespace

TEST_CASE("units() survives the 10/0.2 representation trap") {
    CHECK(grid_of(10.0, 0.2, 3).units() == 50);
    CHECK(grid_of(10.0, 1.0, 3).units() == 10);
    CHECK(grid_of(1.0, 0.3, 3).units() == 3);
    CHECK(grid_of(4.0, 1.0, 3).units() == 4);
}

TEST_CASE("grid validation rejects degenerate setups") {
    CHECK_THROWS_AS(grid_of(10.0, 0.0, 3).validate(), ConfigError);
    CHECK_THROWS_AS(grid_of(-1.0, 0.2, 3).validate(), ConfigError);
    CHECK_THROWS_AS(grid_of(10.0, 0.2, 0).validate(), ConfigError);
    CHECK_THROWS_AS(grid_of(0.4, 0.2, 3).validate(), ConfigError);  // 2 units, 3 slices
    CHECK_NOTHROW(grid_of(0.6, 0.2, 3).validate());                 // exactly one allocation
}

TEST_CASE("reference grid has 1176 actions") {
    CHECK(action_count(grid_of(10.0, 0.2, 3)) == 1176);
    CHECK(enumerate_actions(grid_of(10.0, 0.2, 3)).size() == 1176);
}

TEST_CASE("enumeration order for the 4-unit, 3-slice grid") {
    auto acts = enumerate_actions(grid_of(4.0, 1.0, 3));
    REQUIRE(acts.size() == 3);
    CHECK(acts[0].units == std::vector<int>{1, 1, 2});
    CHECK(acts[1].units == std::vector<int>{1, 2, 1});
    CHECK(acts[2].units == std::vector<int>{2, 1, 1});
}

TEST_CASE("enumeration matches brute force for all small grids") {
    for (int parts = 1; parts <= 4; ++parts) {
        for (int total = parts; total <= 20; ++total) {
            auto grid = grid_of(static_cast<double>(total), 1.0, parts);
            auto acts = enumerate_actions(grid);
            auto expect = brute_compositions(total, parts);
            REQUIRE(action_count(grid) == expect.size());
            REQUIRE(acts.size() == expect.size());
            for (std::size_t i = 0; i < acts.size(); ++i) {
                REQUIRE(acts[i].units == expect[i]);
            }
        }
    }
}

TEST_CASE("action_index inverts enumeration") {
    for (auto grid : {grid_of(10.0, 0.2, 3), grid_of(10.0, 1.0, 3), grid_of(12.0, 1.0, 4),
                      grid_of(7.0, 1.0, 2), grid_of(5.0, 1.0, 1)}) {
        auto acts = enumerate_actions(grid);
        for (std::size_t i = 0; i < acts.size(); ++i) {
            REQUIRE(action_index(acts[i], grid) == i);
        }
    }
}

TEST_CASE("action_index rejects invalid allocations") {
    auto grid = grid_of(10.0, 0.2, 3);
    CHECK_THROWS_AS(action_index(Allocation{{50, 0, 0}}, grid), InvalidActionError);
    CHECK_THROWS_AS(action_index(Allocation{{10, 10, 10}}, grid), InvalidActionError);
    CHECK_THROWS_AS(action_index(Allocation{{25, 25}}, grid), InvalidActionError);
}

TEST_CASE("enumerate_actions refuses absurd grids") {
    CHECK_THROWS_AS(enumerate_actions(grid_of(10000.0, 0.01, 3)), CapacityError);
}

TEST_CASE("allocation unit/MHz/normalized views agree") {
    auto grid = grid_of(10.0, 0.2, 3);
    Allocation a{{16, 17, 17}};
    auto mhz = a.mhz(grid);
    CHECK(mhz[0] == doctest::Approx(3.2));
    CHECK(mhz[1] == doctest::Approx(3.4));
    CHECK(mhz[2] == doctest::Approx(3.4));
    auto norm = a.normalized(grid);
    CHECK(norm[0] == doctest::Approx(16.0 / 50.0));
    CHECK(std::accumulate(norm.begin(), norm.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("projection of a lattice point returns that point") {
    auto grid = grid_of(10.0, 0.2, 3);
    ActionSet set(grid);
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto mhz = set.at(i).mhz(grid);
        auto idx = set.project_indices(mhz, 1);
        REQUIRE(idx.size() == 1);
        REQUIRE(idx[0] == i);
    }
}

TEST_CASE("equal-split protos project to the documented allocations") {
    {
        auto grid = grid_of(10.0, 0.2, 3);
        std::vector<double> proto(3, grid.total_mhz / 3.0);
        auto best = project_knn(proto, grid, 1);
        REQUIRE(best.size() == 1);
        CHECK(best[0].units == std::vector<int>{16, 17, 17});  // 3.2, 3.4, 3.4 MHz
    }
    {
        auto grid = grid_of(10.0, 1.0, 3);
        std::vector<double> proto(3, grid.total_mhz / 3.0);
        auto best = project_knn(proto, grid, 1);
        REQUIRE(best.size() == 1);
        CHECK(best[0].units == std::vector<int>{3, 3, 4});
    }
}

TEST_CASE("distance ties break toward the lexicographically smaller vector") {
    auto grid = grid_of(4.0, 1.0, 3);
    // (1, 1.5, 1.5): exactly 0.5 away from both (1,1,2) and (1,2,1);
    // every term is a power of two so the tie is exact in binary too.
    std::vector<double> proto{1.0, 1.5, 1.5};
    auto got = project_knn(proto, grid, 2);
    REQUIRE(got.size() == 2);
    CHECK(got[0].units == std::vector<int>{1, 1, 2});
    CHECK(got[1].units == std::vector<int>{1, 2, 1});
}

TEST_CASE("k=3 projection ranks by distance then enumeration order") {
    auto grid = grid_of(4.0, 1.0, 3);
    std::vector<double> proto{1.6, 1.2, 1.2};
    auto got = project_knn(proto, grid, 3);
    REQUIRE(got.size() == 3);
    CHECK(got[0].units == std::vector<int>{2, 1, 1});  // distance 0.24
    // (1,1,2) and (1,2,1) are both at distance 1.04; index order decides.
    CHECK(got[1].units == std::vector<int>{1, 1, 2});
    CHECK(got[2].units == std::vector<int>{1, 2, 1});
}

TEST_CASE("projection matches an exhaustive long double oracle") {
    RngStream rng = RngStream::derive(777, "proj-oracle", 0, 0);
    for (auto grid : {grid_of(10.0, 0.2, 3), grid_of(10.0, 1.0, 3), grid_of(8.0, 0.5, 4)}) {
        ActionSet set(grid);
        const std::size_t dim = static_cast<std::size_t>(grid.slice_count);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> proto(dim);
            for (auto& p : proto) p = grid.total_mhz * rng.uniform01();
            const int k = 1 + static_cast<int>(rng.below(5));

            std::vector<std::pair<long double, std::size_t>> ranked(set.size());
            for (std::size_t i = 0; i < set.size(); ++i) {
                long double acc = 0.0L;
                for (std::size_t d = 0; d < dim; ++d) {
                    const long double t =
                        static_cast<long double>(set.at(i).units[d] * grid.resolution_mhz) -
                        static_cast<long double>(proto[d]);
                    acc += t * t;
                }
                ranked[i] = {acc, i};
            }
            std::sort(ranked.begin(), ranked.end());

            auto got = set.project_indices(proto, k);
            REQUIRE(got.size() == static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) {
                REQUIRE(got[static_cast<std::size_t>(j)] ==
                        ranked[static_cast<std::size_t>(j)].second);
            }
        }
    }
}

TEST_CASE("project_indices validates its arguments") {
    auto grid = grid_of(10.0, 0.2, 3);
    ActionSet set(grid);
    std::vector<double> bad_dim{1.0, 2.0};
    CHECK_THROWS_AS(set.project_indices(bad_dim, 1), ArgumentError);
    std::vector<double> proto{3.0, 3.0, 4.0};
    CHECK_THROWS_AS(set.project_indices(proto, 0), ArgumentError);
    CHECK_THROWS_AS(set.project_indices(proto, 1177), ArgumentError);
}
