#include "rie/regress/selection.hpp"

#include <algorithm>
#include <cmath>

#include "rie/error.hpp"
#include "rie/stats.hpp"

namespace rie {

SelectionReport rank_correlations(std::vector<std::pair<std::string, double>> correlations,
                                  std::size_t k, std::size_t dimension) {
  std::stable_sort(correlations.begin(), correlations.end(), [](const auto& a, const auto& b) {
    double fa = std::fabs(a.second), fb = std::fabs(b.second);
    if (fa != fb) return fa > fb;
    return a.first < b.first;
  });
  SelectionReport rep;
  rep.dimension = dimension;
  rep.ranked = std::move(correlations);
  for (std::size_t i = 0; i < std::min(k, rep.ranked.size()); ++i) {
    rep.selected.push_back(rep.ranked[i].first);
  }
  return rep;
}

SelectionReport rank_features(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                              const Eigen::VectorXd& y, std::size_t k, std::size_t dimension) {
  if (x.rows() < 3) throw TooFewSamples("feature ranking needs at least 3 samples");
  if (static_cast<std::size_t>(x.cols()) != names.size() || x.rows() != y.size()) {
    throw FeatureMismatch("ranking inputs disagree in shape");
  }
  std::vector<std::pair<std::string, double>> r;
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, j);
    r.emplace_back(names[j], pearson(col, std::span(y.data(), y.size())).value_or(0.0));
  }
  return rank_correlations(std::move(r), k, dimension);
}

}  // namespace rie
