#include "rie/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace rie {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* r = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  PlanPair p{fftw_plan_dft_r2c_1d(n, r, c, FFTW_ESTIMATE),
             fftw_plan_dft_c2r_1d(n, c, r, FFTW_ESTIMATE)};
  fftw_free(r);
  fftw_free(c);
  cache.emplace(n, p);
  return p;
}

struct Scratch {
  double* real;
  fftw_complex* spec;
  explicit Scratch(int n)
      : real(fftw_alloc_real(static_cast<std::size_t>(n))),
        spec(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {}
  ~Scratch() {
    fftw_free(real);
    fftw_free(spec);
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
};

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  const auto p = plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::vector<std::complex<double>>& out) const {
  Scratch s(n_);
  const std::size_t m = std::min<std::size_t>(in.size(), static_cast<std::size_t>(n_));
  std::copy_n(in.begin(), m, s.real);
  std::fill(s.real + m, s.real + n_, 0.0);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), s.real, s.spec);
  out.resize(static_cast<std::size_t>(bins()));
  for (int k = 0; k < bins(); ++k) out[k] = {s.spec[k][0], s.spec[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const {
  Scratch s(n_);
  for (int k = 0; k < bins(); ++k) {
    const auto v = k < static_cast<int>(in.size()) ? in[k] : std::complex<double>{};
    s.spec[k][0] = v.real();
    s.spec[k][1] = v.imag();
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), s.spec, s.real);
  out.assign(s.real, s.real + n_);
}

std::vector<double> RealFft::power(std::span<const double> in) const {
  std::vector<std::complex<double>> spec;
  forward(in, spec);
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

}  // namespace rie
