#pragma once

#include <optional>
#include <span>

namespace rie {

/// Pearson correlation; nullopt when either input is constant or the
/// lengths differ or fewer than two samples are given.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Lin's concordance correlation coefficient (population moments).
std::optional<double> ccc(std::span<const double> x, std::span<const double> y);

double mean_of(std::span<const double> x);

}  // namespace rie
