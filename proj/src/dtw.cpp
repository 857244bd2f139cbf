#include "prosodykit/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prosodykit/error.hpp"

namespace prosodykit {

DtwPath dtw(const Matrix& cost) {
  const std::size_t I = cost.rows();
  const std::size_t J = cost.cols();
  if (I == 0 || J == 0) throw Error(ErrorCode::EmptyInput, "dtw needs a non-empty cost matrix");
  for (double c : cost.data())
    if (!std::isfinite(c) || c < 0.0) throw Error(ErrorCode::InvalidValue, "dtw costs must be finite and >= 0");

  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix acc(I, J, inf);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else {
        best = inf;
        if (i > 0 && j > 0) best = acc(i - 1, j - 1);
        if (i > 0) best = std::min(best, acc(i - 1, j));
        if (j > 0) best = std::min(best, acc(i, j - 1));
      }
      acc(i, j) = best + cost(i, j);
    }
  }

  DtwPath path;
  path.cost = acc(I - 1, J - 1);
  std::size_t i = I - 1, j = J - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

}  // namespace prosodykit
