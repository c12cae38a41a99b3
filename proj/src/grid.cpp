#include "dyadic/grid.hpp"

#include <cmath>
#include <string>

#include "dyadic/error.hpp"

namespace dyadic {

namespace {

std::size_t row_major(const std::array<std::uint32_t, kMaxDimension>& coords,
                      int dimension, int level) {
  std::size_t index = 0;
  for (int k = dimension - 1; k >= 0; --k) {
    index = (index << level) | coords[k];
  }
  return index;
}

std::array<std::uint32_t, kMaxDimension> coords_of(std::size_t index,
                                                   int dimension, int level) {
  std::array<std::uint32_t, kMaxDimension> coords{};
  const std::size_t mask = (std::size_t{1} << level) - 1;
  for (int k = 0; k < dimension; ++k) {
    coords[k] = static_cast<std::uint32_t>(index & mask);
    index >>= level;
  }
  return coords;
}

}  // namespace

DyadicGrid::DyadicGrid(int dimension, int depth, std::size_t max_leaves)
    : dimension_(dimension), depth_(depth) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw ArgumentError("dimension must lie in [1, " +
                        std::to_string(kMaxDimension) + "]");
  }
  if (depth < 0) throw ArgumentError("depth must be nonnegative");
  if (dimension * depth >= 63 ||
      (std::size_t{1} << (dimension * depth)) > max_leaves) {
    throw SizeError("grid with 2^" + std::to_string(dimension * depth) +
                    " leaves exceeds the budget of " +
                    std::to_string(max_leaves) + " leaves");
  }
  leaf_count_ = std::size_t{1} << (dimension * depth);

  offsets_.resize(depth + 2);
  volumes_.resize(depth + 1);
  offsets_[0] = 0;
  for (int l = 0; l <= depth; ++l) {
    offsets_[l + 1] = offsets_[l] + level_size(l);
    volumes_[l] = std::ldexp(1.0, -dimension * l);
  }
  cube_count_ = offsets_[depth + 1];

  const std::size_t fan = children_per_cube();
  const std::size_t interior = cube_count_ - leaf_count_;
  levels_.resize(cube_count_);
  parents_.assign(cube_count_, npos);
  children_.resize(interior * fan);
  morton_begin_.resize(cube_count_);
  morton_leaves_.resize(leaf_count_);

  for (int l = 0; l <= depth; ++l) {
    for (std::size_t i = 0; i < level_size(l); ++i) {
      levels_[offsets_[l] + i] = static_cast<std::uint8_t>(l);
    }
  }

  morton_begin_[0] = 0;
  for (int l = 0; l < depth; ++l) {
    const std::size_t child_leaves =
        std::size_t{1} << (dimension * (depth - l - 1));
    for (std::size_t i = 0; i < level_size(l); ++i) {
      const CubeIndex cube = offsets_[l] + i;
      const auto coords = coords_of(i, dimension, l);
      for (std::size_t b = 0; b < fan; ++b) {
        std::array<std::uint32_t, kMaxDimension> child{};
        for (int k = 0; k < dimension; ++k) {
          child[k] = 2 * coords[k] + static_cast<std::uint32_t>((b >> k) & 1U);
        }
        const CubeIndex c = offsets_[l + 1] + row_major(child, dimension, l + 1);
        children_[cube * fan + b] = c;
        parents_[c] = cube;
        morton_begin_[c] = morton_begin_[cube] + b * child_leaves;
      }
    }
  }
  for (LeafIndex x = 0; x < leaf_count_; ++x) {
    morton_leaves_[morton_begin_[leaf_cube(x)]] = x;
  }
}

std::span<const CubeIndex> DyadicGrid::children(CubeIndex cube) const {
  if (is_leaf_cube(cube)) return {};
  const std::size_t fan = children_per_cube();
  return {children_.data() + cube * fan, fan};
}

CubeIndex DyadicGrid::ancestor_at_level(CubeIndex cube, int level) const {
  while (levels_[cube] > level) cube = parents_[cube];
  return cube;
}

bool DyadicGrid::contains(CubeIndex outer, CubeIndex inner) const {
  if (levels_[outer] > levels_[inner]) return false;
  return ancestor_at_level(inner, levels_[outer]) == outer;
}

std::span<const LeafIndex> DyadicGrid::leaves(CubeIndex cube) const {
  return {morton_leaves_.data() + morton_begin_[cube], leaves_per_cube(cube)};
}

CubeRef DyadicGrid::ref(CubeIndex cube) const {
  CubeRef r;
  r.level = levels_[cube];
  r.coords = coords_of(cube - offsets_[r.level], dimension_, r.level);
  return r;
}

CubeIndex DyadicGrid::index(const CubeRef& r) const {
  if (r.is_virtual()) throw ArgumentError("virtual cubes have no index");
  if (r.level < 0 || r.level > depth_) throw ArgumentError("level out of range");
  for (int k = 0; k < dimension_; ++k) {
    if (r.coords[k] >= (std::uint32_t{1} << r.level)) {
      throw ArgumentError("cube coordinate out of range");
    }
  }
  return offsets_[r.level] + row_major(r.coords, dimension_, r.level);
}

GridPtr build_grid(int dimension, int depth, std::size_t max_leaves) {
  return std::make_shared<const DyadicGrid>(dimension, depth, max_leaves);
}

CubeRef parent(const DyadicGrid& grid, const CubeRef& cube, int j) {
  if (j < 1) throw ArgumentError("ancestor order must be at least 1");
  if (cube.is_virtual()) return CubeRef::virtual_at(cube.height_above_root() + j);
  if (j > cube.level) return CubeRef::virtual_at(j - cube.level);
  CubeRef up;
  up.level = cube.level - j;
  for (int k = 0; k < grid.dimension(); ++k) up.coords[k] = cube.coords[k] >> j;
  return up;
}

}  // namespace dyadic
