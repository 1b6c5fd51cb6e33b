#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace slicesim::actions {

/// The discrete bandwidth lattice: total bandwidth W split into
/// floor(W/delta) units of delta MHz, shared by slice_count slices with at
/// least one unit each.
struct AllocationGrid {
    double total_mhz = 10.0;       // W
    double resolution_mhz = 0.2;   // delta
    int slice_count = 3;           // N

    /// floor(W/delta), computed with a small epsilon so that ratios like
    /// 10/0.2 that land a hair below an integer still count it.
    int units() const;

    /// Throws ConfigError if the invariants do not hold.
    void validate() const;
};

/// One point on the lattice, stored as the integer unit multipliers
/// (k_1..k_N), each >= 1, summing to grid.units(). Bandwidths in MHz are
/// derived on the boundary so the sum-to-W constraint never drifts.
struct Allocation {
    std::vector<int> units;

    std::vector<double> mhz(const AllocationGrid& grid) const;
    /// Bandwidths as fractions of W (k_i / units), used as the action vector
    /// fed to the value networks.
    std::vector<double> normalized(const AllocationGrid& grid) const;

    bool operator==(const Allocation& other) const = default;
};

/// Number of valid allocations: compositions of units() into slice_count
/// positive parts, i.e. binom(units - 1, slice_count - 1).
std::uint64_t action_count(const AllocationGrid& grid);

/// All valid allocations in lexicographic order of the multiplier vector.
/// Throws CapacityError above 10^7 actions.
std::vector<Allocation> enumerate_actions(const AllocationGrid& grid);

/// Position of an allocation in enumerate_actions order (combinatorial rank,
/// no table needed). Throws InvalidActionError if not a valid lattice point.
std::size_t action_index(const Allocation& a, const AllocationGrid& grid);

/// The k nearest valid allocations to a continuous proto-action (Euclidean
/// distance in MHz), sorted by nondecreasing distance; exact distance ties
/// break toward the lexicographically smaller multiplier vector.
std::vector<Allocation> project_knn(std::span<const double> proto_mhz,
                                    const AllocationGrid& grid, int k);

/// Materialized action set with a dimension-major coordinate matrix for the
/// projection scan. Agents keep one of these per run; the free functions
/// above build a temporary one.
class ActionSet {
public:
    explicit ActionSet(const AllocationGrid& grid);

    const AllocationGrid& grid() const { return grid_; }
    std::size_t size() const { return list_.size(); }
    const Allocation& at(std::size_t i) const { return list_[i]; }
    const std::vector<Allocation>& all() const { return list_; }

    /// Indices of the k nearest allocations, nondecreasing distance, ties by
    /// enumeration order (which is the lexicographic multiplier order).
    std::vector<std::size_t> project_indices(std::span<const double> proto_mhz,
                                             int k) const;

private:
    AllocationGrid grid_;
    std::vector<Allocation> list_;
    std::vector<double> coords_;  // dim-major MHz, coords_[d*size + i]
};

}  // namespace slicesim::actions
