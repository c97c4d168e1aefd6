#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "lncass/dataset.hpp"
#include "lncass/error.hpp"
#include "lncass/random.hpp"

namespace lncass::testing {

// Plain density pieces used as oracles; deliberately not shared with the
// library so the tests do not inherit its mistakes.
inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * M_PI) - std::log(sd) - 0.5 * z * z;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Dataset random_dataset(Index n, Index p, bool binary, Rng& rng) {
  Dataset data;
  data.X.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) data.X(i, j) = rng.uniform();
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    data.y[i] = binary ? double(rng.below(2)) : rng.normal();
  }
  if (binary) {
    data.y[0] = 0.0;
    data.y[1] = 1.0;
  }
  for (Index j = 0; j < p; ++j) data.column_names.push_back("x" + std::to_string(j + 1));
  return data;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lncass_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lncass::testing
