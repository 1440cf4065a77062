#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rie {

/// Real-input FFT of fixed size backed by FFTW. Plans are created once per
/// size under a lock and shared; transforms are safe to call concurrently.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// Forward transform of `in` zero-padded (or truncated) to size().
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) const;
  /// Unnormalized inverse: returns size() real samples scaled by size().
  void inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const;

  /// |X_k|^2 for k in [0, bins()).
  std::vector<double> power(std::span<const double> in) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace rie
