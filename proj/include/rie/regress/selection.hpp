#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace rie {

struct SelectionReport {
  std::size_t dimension = 0;
  std::vector<std::pair<std::string, double>> ranked;  // by |r| desc, then name
  std::vector<std::string> selected;
};

/// Pearson r of every column against y (constant columns get r = 0), then
/// the top-k by |r|. Throws TooFewSamples for n < 3.
SelectionReport rank_features(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                              const Eigen::VectorXd& y, std::size_t k = 8,
                              std::size_t dimension = 0);

/// Ranking step alone, for precomputed correlations.
SelectionReport rank_correlations(std::vector<std::pair<std::string, double>> correlations,
                                  std::size_t k = 8, std::size_t dimension = 0);

}  // namespace rie
