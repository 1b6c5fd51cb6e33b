#include "slicesim/action_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"

namespace slicesim::actions {

namespace {

constexpr std::uint64_t kEnumerateGuard = 10'000'000;

// binom(n, k) in exact integer arithmetic; throws on overflow past 2^63.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    __uint128_t acc = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > static_cast<__uint128_t>(std::numeric_limits<std::int64_t>::max()))
            throw CapacityError("action count overflows 64-bit integer");
    }
    return static_cast<std::uint64_t>(acc);
}

std::uint64_t compositions(int total, int parts) {
    if (parts <= 0 || total < parts) return 0;
    return binomial(static_cast<std::uint64_t>(total - 1),
                    static_cast<std::uint64_t>(parts - 1));
}

}  // namespace

int AllocationGrid::units() const {
    return static_cast<int>(std::floor(total_mhz / resolution_mhz + 1e-9));
}

void AllocationGrid::validate() const {
    if (!(resolution_mhz > 0.0) || !(total_mhz > 0.0))
        throw ConfigError("allocation grid: W and delta must be positive");
    if (slice_count < 1)
        throw ConfigError("allocation grid: need at least one slice");
    if (units() < slice_count)
        throw ConfigError(
            "allocation grid: floor(W/delta) = " + std::to_string(units()) +
            " leaves no valid allocation for " + std::to_string(slice_count) +
            " slices");
}

std::vector<double> Allocation::mhz(const AllocationGrid& grid) const {
    std::vector<double> out(units.size());
    for (std::size_t i = 0; i < units.size(); ++i)
        out[i] = units[i] * grid.resolution_mhz;
    return out;
}

std::vector<double> Allocation::normalized(const AllocationGrid& grid) const {
    std::vector<double> out(units.size());
    const double total = static_cast<double>(grid.units());
    for (std::size_t i = 0; i < units.size(); ++i) out[i] = units[i] / total;
    return out;
}

std::uint64_t action_count(const AllocationGrid& grid) {
    grid.validate();
    return compositions(grid.units(), grid.slice_count);
}

std::vector<Allocation> enumerate_actions(const AllocationGrid& grid) {
    const std::uint64_t count = action_count(grid);
    if (count > kEnumerateGuard)
        throw CapacityError("refusing to materialize " + std::to_string(count) +
                            " actions (guard at 10^7)");
    const int n = grid.slice_count;
    const int m = grid.units();

    std::vector<Allocation> out;
    out.reserve(count);
    // First composition in lexicographic order: (1, ..., 1, m-n+1).
    std::vector<int> k(n, 1);
    k[n - 1] = m - n + 1;
    while (true) {
        out.push_back(Allocation{k});
        if (n == 1) break;
        // Successor: rightmost position whose suffix holds spare units gets
        // one of them; the suffix is reset to its lexicographic minimum.
        int i = n - 2;
        int suffix = k[n - 1];
        while (i >= 0 && suffix <= n - 1 - i) {
            suffix += k[i];
            --i;
        }
        if (i < 0) break;  // (m-n+1, 1, ..., 1) reached
        ++k[i];
        int remaining = suffix - 1;
        for (int j = i + 1; j < n - 1; ++j) {
            k[j] = 1;
            --remaining;
        }
        k[n - 1] = remaining;
    }
    return out;
}

std::size_t action_index(const Allocation& a, const AllocationGrid& grid) {
    grid.validate();
    const int n = grid.slice_count;
    const int m = grid.units();
    if (static_cast<int>(a.units.size()) != n)
        throw InvalidActionError("allocation has wrong slice count");
    int sum = 0;
    for (int v : a.units) {
        if (v < 1) throw InvalidActionError("allocation has a zero-unit slice");
        sum += v;
    }
    if (sum != m)
        throw InvalidActionError("allocation does not sum to the total bandwidth");

    std::uint64_t rank = 0;
    int rem = m;
    for (int i = 0; i + 1 < n; ++i) {
        for (int v = 1; v < a.units[i]; ++v)
            rank += compositions(rem - v, n - 1 - i);
        rem -= a.units[i];
    }
    return static_cast<std::size_t>(rank);
}

ActionSet::ActionSet(const AllocationGrid& grid)
    : grid_(grid), list_(enumerate_actions(grid)) {
    const std::size_t n = list_.size();
    const std::size_t dim = static_cast<std::size_t>(grid.slice_count);
    coords_.resize(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d)
            coords_[d * n + i] = list_[i].units[d] * grid.resolution_mhz;
}

std::vector<std::size_t> ActionSet::project_indices(
    std::span<const double> proto_mhz, int k) const {
    if (proto_mhz.size() != static_cast<std::size_t>(grid_.slice_count))
        throw ArgumentError("proto-action has wrong dimension");
    if (k < 1 || static_cast<std::size_t>(k) > list_.size())
        throw ArgumentError("k out of range for this action set");

    std::vector<double> dist(list_.size());
    kernels::sqdist_scan(coords_.data(), list_.size(),
                         static_cast<std::size_t>(grid_.slice_count),
                         proto_mhz.data(), dist.data());

    std::vector<std::size_t> idx(list_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Enumeration order is lexicographic in the multipliers, so comparing
    // indices implements the documented tie-break.
    auto cmp = [&dist](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

std::vector<Allocation> project_knn(std::span<const double> proto_mhz,
                                    const AllocationGrid& grid, int k) {
    ActionSet set(grid);
    std::vector<Allocation> out;
    out.reserve(static_cast<std::size_t>(k));
    for (std::size_t i : set.project_indices(proto_mhz, k))
        out.push_back(set.at(i));
    return out;
}

}  // namespace slicesim::actions
