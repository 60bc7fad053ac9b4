#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcpl {

/// A parsed data set: one row per object, labels remapped to contiguous
/// 1..K in order of first appearance. `label_names[k-1]` holds the original
/// token of class k.
struct RawDataset {
  Eigen::MatrixXd features;               // N_total x D_raw
  std::vector<int> labels;                // values in 1..K
  int class_count = 0;                    // K
  std::vector<std::string> feature_names; // empty when the file had no header
  std::vector<std::string> label_names;   // remap table, size K
};

/// Fitted preprocessing transform: drop numerically constant features, scale
/// the rest to unit variance, then project onto the leading principal
/// components of the (centered) scaled data.
struct PreprocessModel {
  std::vector<std::uint8_t> kept; // size D_raw; 1 = feature retained
  Eigen::VectorXd scales;         // size D_kept; reciprocal standard deviations
  Eigen::VectorXd center;         // size D_kept; means of the scaled fit data
  Eigen::MatrixXd basis;          // d x D_kept, orthonormal rows
  double retain = 0.0;            // configured retention fraction
  double retained_variance = 0.0; // achieved on the fit data

  int raw_dim() const { return static_cast<int>(kept.size()); }
  int out_dim() const { return static_cast<int>(basis.rows()); }
};

struct LabeledDataset {
  Eigen::MatrixXd features; // N x d
  std::vector<int> labels;  // values in 1..K
  int class_count = 0;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Feature vectors without labels. When the set was carved out of labeled
/// data, the true labels travel along as `oracle_labels`; they are used only
/// for evaluation, never for estimation.
struct UnlabeledSet {
  Eigen::MatrixXd features; // M x d
  std::optional<std::vector<int>> oracle_labels;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

struct SplitSpec {
  int labeled_size = 0;            // 0 = auto: 2 * dim + class_count
  double unlabeled_fraction = 0.5; // of the rows left after the labeled draw
  std::uint64_t seed = 0;
};

struct Split {
  LabeledDataset labeled;
  UnlabeledSet unlabeled; // oracle labels populated
  LabeledDataset test;
  // Row indices into the source data; the three sets partition all rows.
  std::vector<int> labeled_indices;
  std::vector<int> unlabeled_indices;
  std::vector<int> test_indices;
};

/// Reads a comma-separated file with an optional header row. The label
/// column is chosen by header name or 0-based index; "" selects the last
/// column. All other cells must parse as finite reals.
RawDataset load_csv(const std::filesystem::path& path,
                    const std::string& label_column = "");

/// Variant used when the caller already split the selector into name/index.
RawDataset load_csv(const std::filesystem::path& path,
                    const std::optional<std::string>& label_name,
                    const std::optional<int>& label_index);

PreprocessModel fit_preprocess(const RawDataset& data, double retain = 0.999,
                               double zero_var_tol = 1e-12);

/// mask -> scale -> project (projection subtracts the fit-time center).
Eigen::MatrixXd apply_preprocess(const PreprocessModel& model,
                                 const Eigen::MatrixXd& features);

/// Copy of `data` with its feature matrix replaced (used to carry the
/// preprocessed features through the split).
RawDataset with_features(const RawDataset& data, Eigen::MatrixXd features);

/// Draws the labeled set uniformly without replacement, resampling the whole
/// draw until every class is represented, then divides the remainder into
/// unlabeled and test halves. Deterministic given spec.seed.
Split split(const RawDataset& data, const SplitSpec& spec);

}  // namespace mcpl
