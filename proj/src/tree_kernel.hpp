#pragma once

#include <span>
#include <vector>

#include "dyadic/operators.hpp"

namespace dyadic::detail {

/// Reusable buffers for repeated applications of T on one grid.
class TreeKernel {
 public:
  explicit TreeKernel(const CubeWeights& tau)
      : tau_(tau), grid_(tau.grid()), mass_(grid_.cube_count()),
        acc_(grid_.cube_count()) {}

  /// out[x] = sum over Q containing x of tau_Q * nu(Q) / |Q|, where nu has the
  /// given leaf masses.
  void apply(std::span<const double> leaf_mass, std::span<double> out) {
    accumulate(leaf_mass);
    acc_[0] = tau_[0] * (mass_[0] / grid_.volume(0));
    for (CubeIndex q = 1; q < grid_.cube_count(); ++q) {
      acc_[q] = acc_[grid_.parent(q)] + tau_[q] * (mass_[q] / grid_.volume(q));
    }
    const std::size_t leaf0 = grid_.level_offset(grid_.depth());
    for (LeafIndex x = 0; x < grid_.leaf_count(); ++x) out[x] = acc_[leaf0 + x];
  }

  /// Bottom-up cube masses of the given leaf masses.
  std::span<const double> accumulate(std::span<const double> leaf_mass) {
    const std::size_t leaf0 = grid_.level_offset(grid_.depth());
    for (LeafIndex x = 0; x < grid_.leaf_count(); ++x) mass_[leaf0 + x] = leaf_mass[x];
    for (CubeIndex q = leaf0; q-- > 0;) {
      double s = 0.0;
      for (CubeIndex c : grid_.children(q)) s += mass_[c];
      mass_[q] = s;
    }
    return mass_;
  }

  const DyadicGrid& grid() const { return grid_; }
  const CubeWeights& tau() const { return tau_; }

 private:
  const CubeWeights& tau_;
  const DyadicGrid& grid_;
  std::vector<double> mass_;
  std::vector<double> acc_;
};

}  // namespace dyadic::detail
