#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace semvb {

/// Outcome matrix with a per-cell observed mask plus covariates. Unobserved
/// outcome cells hold NaN so that any accidental read poisons the result.
struct Dataset {
  Eigen::MatrixXd y;                                  // N x M
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;  // N x M
  Eigen::MatrixXd x;                                  // N x p
  std::vector<std::string> outcome_names;
  std::vector<std::string> covariate_names;
  std::optional<Eigen::VectorXd> scale_factors;

  int n() const { return static_cast<int>(y.rows()); }
  int m() const { return static_cast<int>(y.cols()); }
  int p() const { return static_cast<int>(x.cols()); }

  int observed_count(int j) const;
  int observed_total() const;

  /// Checks the structural invariants (at least one observed outcome per
  /// row, no all-ones covariate column, finite observed values).
  void validate() const;
};

/// Reads a header CSV. Outcome cells equal to `missing_token` or empty are
/// flagged unobserved; covariate cells must all be present and numeric.
Dataset load_csv(const std::string& path,
                 const std::vector<std::string>& outcome_columns,
                 const std::vector<std::string>& covariate_columns,
                 const std::string& missing_token = "NA");

/// Writes outcomes then covariates, missing cells as empty strings, numbers
/// in shortest round-trip decimal form.
void write_csv(const Dataset& ds, const std::string& path);

/// Rescales every outcome column so its observed-cell sample sd equals
/// target_sd. Means are not shifted. Multipliers land in scale_factors.
Dataset standardize_outcomes(const Dataset& ds, double target_sd);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace semvb
