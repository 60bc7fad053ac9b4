#pragma once

#include <Eigen/Core>
#include <vector>

namespace mcpl {

/// Per-unlabeled-point class weights: an M x K matrix whose rows live on the
/// probability simplex. Rows are the soft labels q_i.
struct SoftLabels {
  Eigen::MatrixXd weights; // M x K

  int size() const { return static_cast<int>(weights.rows()); }
  int class_count() const { return static_cast<int>(weights.cols()); }

  static SoftLabels uniform(int m, int k);
  /// One-hot rows from hard labels (values in 1..K).
  static SoftLabels vertex(const std::vector<int>& labels, int k);

  /// True when every entry is nonnegative and every row sums to 1 within tol.
  bool is_valid(double tol = 1e-12) const;
  /// Throws InvalidArgument when !is_valid().
  void validate(double tol = 1e-12) const;
};

}  // namespace mcpl
