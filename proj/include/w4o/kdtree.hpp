#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "w4o/geometry.hpp"

namespace w4o {

/// Static 3-d tree for nearest-neighbor queries. Ties resolve to the lowest point index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  struct Hit {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
  };

  /// Nearest point; distance is infinite for an empty tree.
  Hit nearest(const Vec3& query) const;
  bool empty() const { return points_.empty(); }

 private:
  struct Node {
    std::size_t point;
    int axis;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(int node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace w4o
