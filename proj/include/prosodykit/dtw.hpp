#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "prosodykit/matrix.hpp"

namespace prosodykit {

struct DtwPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;

  std::size_t length() const noexcept { return pairs.size(); }
};

// Minimum-cost monotone path from (0,0) to (I-1,J-1) with steps (1,1),
// (1,0), (0,1) and unit weights. Backtracking prefers the diagonal, then
// (1,0), then (0,1) on ties.
DtwPath dtw(const Matrix& cost);

}  // namespace prosodykit
