#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scl/core.hpp"
#include "scl/error.hpp"

namespace testing {

/// Fresh empty directory under the system temp path, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Curve sampled at tokens 1..n with loss f(t).
inline scl::LossCurve make_curve(double p, std::int64_t seed, std::size_t n,
                                 const std::function<double(double)>& f) {
  std::vector<std::int64_t> steps;
  std::vector<double> tokens, loss;
  for (std::size_t i = 1; i <= n; ++i) {
    steps.push_back(static_cast<std::int64_t>(i));
    tokens.push_back(static_cast<double>(i));
    loss.push_back(f(static_cast<double>(i)));
  }
  return scl::LossCurve(p, seed, steps, tokens, loss);
}

/// Simpson's rule with n (even) panels; independent of the library's integrals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 2000) {
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

template <class Fn>
scl::ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const scl::Error& e) {
    return e.kind();
  }
  FAIL("expected an scl::Error");
  return scl::ErrorKind::data;
}

}  // namespace testing
