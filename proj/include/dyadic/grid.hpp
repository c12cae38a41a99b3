#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace dyadic {

inline constexpr int kMaxDimension = 8;

/// Canonical linear index of a real cube: level offset plus row-major
/// coordinate index within the level.
using CubeIndex = std::size_t;

/// Position of a leaf in canonical leaf order (row-major at the finest level).
using LeafIndex = std::size_t;

/// Geometric handle for a cube. Real cubes carry their level and integer
/// coordinates; virtual cubes sit above the root and only know their height.
struct CubeRef {
  enum class Kind : std::uint8_t { real, virtual_ancestor };

  Kind kind = Kind::real;
  /// Level for real cubes; minus the height above the root for virtual ones.
  int level = 0;
  std::array<std::uint32_t, kMaxDimension> coords{};

  static CubeRef virtual_at(int height) {
    CubeRef ref;
    ref.kind = Kind::virtual_ancestor;
    ref.level = -height;
    return ref;
  }

  bool is_virtual() const { return kind == Kind::virtual_ancestor; }
  int height_above_root() const { return is_virtual() ? -level : 0; }

  friend bool operator==(const CubeRef&, const CubeRef&) = default;
};

/// The finite dyadic lattice over [0,1)^d down to a fixed depth.
///
/// Cubes are enumerated level-major, row-major within a level, with the
/// first coordinate varying fastest. Alongside the canonical order the grid
/// keeps a Morton (z-order) permutation of the leaves so that the leaves of
/// any cube form one contiguous run.
class DyadicGrid {
 public:
  static constexpr std::size_t kDefaultMaxLeaves = std::size_t{1} << 20;
  static constexpr CubeIndex npos = static_cast<CubeIndex>(-1);

  DyadicGrid(int dimension, int depth,
             std::size_t max_leaves = kDefaultMaxLeaves);

  int dimension() const { return dimension_; }
  int depth() const { return depth_; }
  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t cube_count() const { return cube_count_; }
  std::size_t children_per_cube() const { return std::size_t{1} << dimension_; }

  std::size_t level_offset(int level) const { return offsets_[level]; }
  std::size_t level_size(int level) const {
    return std::size_t{1} << (dimension_ * level);
  }

  CubeIndex root() const { return 0; }
  int level(CubeIndex cube) const { return levels_[cube]; }
  double volume(CubeIndex cube) const { return volumes_[levels_[cube]]; }
  double volume_at_level(int level) const { return volumes_[level]; }

  bool is_leaf_cube(CubeIndex cube) const { return levels_[cube] == depth_; }
  CubeIndex leaf_cube(LeafIndex leaf) const { return offsets_[depth_] + leaf; }
  LeafIndex leaf_of(CubeIndex cube) const { return cube - offsets_[depth_]; }

  /// Parent of a real cube, or npos for the root.
  CubeIndex parent(CubeIndex cube) const { return parents_[cube]; }
  std::span<const CubeIndex> children(CubeIndex cube) const;

  /// Ancestor at the given level (level <= level(cube)).
  CubeIndex ancestor_at_level(CubeIndex cube, int level) const;
  /// True if `outer` contains `inner` (a cube contains itself).
  bool contains(CubeIndex outer, CubeIndex inner) const;
  bool contains_leaf(CubeIndex cube, LeafIndex leaf) const {
    return contains(cube, leaf_cube(leaf));
  }

  /// Leaves of a cube, in Morton order.
  std::span<const LeafIndex> leaves(CubeIndex cube) const;
  std::size_t leaves_per_cube(CubeIndex cube) const {
    return std::size_t{1} << (dimension_ * (depth_ - levels_[cube]));
  }

  CubeRef ref(CubeIndex cube) const;
  CubeIndex index(const CubeRef& ref) const;

 private:
  int dimension_;
  int depth_;
  std::size_t leaf_count_;
  std::size_t cube_count_;
  std::vector<std::size_t> offsets_;
  std::vector<double> volumes_;
  std::vector<std::uint8_t> levels_;
  std::vector<CubeIndex> parents_;
  std::vector<CubeIndex> children_;
  std::vector<std::size_t> morton_begin_;
  std::vector<LeafIndex> morton_leaves_;
};

using GridPtr = std::shared_ptr<const DyadicGrid>;

/// Builds a shared grid; throws SizeError when 2^{d*depth} exceeds max_leaves.
GridPtr build_grid(int dimension, int depth,
                   std::size_t max_leaves = DyadicGrid::kDefaultMaxLeaves);

/// The j-fold ancestor of a cube. Ancestors above the root are virtual.
CubeRef parent(const DyadicGrid& grid, const CubeRef& cube, int j = 1);

}  // namespace dyadic
