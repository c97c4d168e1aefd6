#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lncass/types.hpp"

namespace lncass {

/// Design matrix plus response. Missing covariate values are stored as NaN
/// until an imputation step replaces them.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;
  std::string response_name = "y";
  /// Transforms applied so far, in application order.
  std::vector<std::string> provenance;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  Index missing_count() const;
  /// (row, column) of every missing cell, row-major order.
  std::vector<std::pair<Index, Index>> missing_cells() const;
  bool has_binary_response() const;

  Dataset rows(std::span<const Index> indices) const;
  Dataset columns(std::span<const Index> indices) const;
};

/// Throws unless y is 0/1 valued.
void require_binary_response(const Dataset& data);

}  // namespace lncass
