#include "mcpl/dataset.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mcpl/errors.hpp"
#include "mcpl/rng.hpp"

namespace mcpl {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
  const std::string t = trim(token);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

RawDataset load_csv(const std::filesystem::path& path,
                    const std::string& label_column) {
  std::optional<std::string> name;
  std::optional<int> index;
  if (!label_column.empty()) {
    int idx = 0;
    const char* first = label_column.data();
    const char* last = first + label_column.size();
    auto [ptr, ec] = std::from_chars(first, last, idx);
    if (ec == std::errc{} && ptr == last) {
      index = idx;
    } else {
      name = label_column;
    }
  }
  return load_csv(path, name, index);
}

RawDataset load_csv(const std::filesystem::path& path,
                    const std::optional<std::string>& label_name,
                    const std::optional<int>& label_index) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ParseError("empty file: " + path.string());

  const auto first_cells = split_line(lines.front());
  const int ncols = static_cast<int>(first_cells.size());
  if (ncols < 2)
    throw ParseError(path.string() + ": need at least two columns");

  int label_col = ncols - 1;
  if (label_index) {
    label_col = *label_index;
    if (label_col < 0 || label_col >= ncols)
      throw ParseError(path.string() + ": label column index " +
                       std::to_string(label_col) + " out of range (" +
                       std::to_string(ncols) + " columns)");
  }

  // Header detection: a row whose non-label cells do not all parse as
  // numbers is treated as a header. A by-name label selector requires one.
  bool has_header = false;
  if (label_name) {
    has_header = true;
  } else {
    for (int c = 0; c < ncols; ++c) {
      if (c == label_col) continue;
      double v;
      if (!parse_double(first_cells[c], v)) {
        has_header = true;
        break;
      }
    }
  }

  std::vector<std::string> feature_names;
  std::size_t first_data_row = 0;
  if (has_header) {
    std::vector<std::string> header;
    header.reserve(first_cells.size());
    for (const auto& h : first_cells) header.push_back(trim(h));
    if (label_name) {
      auto it = std::find(header.begin(), header.end(), *label_name);
      if (it == header.end())
        throw ParseError(path.string() + ": label column \"" + *label_name +
                         "\" not found in header");
      label_col = static_cast<int>(it - header.begin());
    }
    for (int c = 0; c < ncols; ++c)
      if (c != label_col) feature_names.push_back(header[c]);
    first_data_row = 1;
  }
  if (lines.size() <= first_data_row)
    throw ParseError(path.string() + ": no data rows");

  const int nrows = static_cast<int>(lines.size() - first_data_row);
  const int nfeat = ncols - 1;
  Eigen::MatrixXd features(nrows, nfeat);
  std::vector<int> labels(nrows);
  std::vector<std::string> label_names;
  std::map<std::string, int> label_map;

  for (int r = 0; r < nrows; ++r) {
    const auto cells = split_line(lines[first_data_row + r]);
    // 1-based locations in messages, counting the header row if present.
    const std::string where =
        path.string() + ": row " + std::to_string(first_data_row + r + 1);
    if (static_cast<int>(cells.size()) != ncols)
      throw ParseError(where + ": expected " + std::to_string(ncols) +
                       " columns, got " + std::to_string(cells.size()));
    int fc = 0;
    for (int c = 0; c < ncols; ++c) {
      if (c == label_col) continue;
      double v;
      if (!parse_double(cells[c], v))
        throw ParseError(where + ", column " + std::to_string(c + 1) +
                         ": cannot parse \"" + trim(cells[c]) +
                         "\" as a number");
      if (!std::isfinite(v))
        throw ParseError(where + ", column " + std::to_string(c + 1) +
                         ": non-finite value");
      features(r, fc++) = v;
    }
    const std::string token = trim(cells[label_col]);
    if (token.empty())
      throw ParseError(where + ", column " + std::to_string(label_col + 1) +
                       ": empty label");
    auto [it, inserted] =
        label_map.try_emplace(token, static_cast<int>(label_names.size()) + 1);
    if (inserted) label_names.push_back(token);
    labels[r] = it->second;
  }

  const int k = static_cast<int>(label_names.size());
  if (k < 2)
    throw ParseError(path.string() + ": fewer than 2 classes (found " +
                     std::to_string(k) + ")");

  RawDataset out;
  out.features = std::move(features);
  out.labels = std::move(labels);
  out.class_count = k;
  out.feature_names = std::move(feature_names);
  out.label_names = std::move(label_names);
  return out;
}

PreprocessModel fit_preprocess(const RawDataset& data, double retain,
                               double zero_var_tol) {
  if (retain <= 0.0 || retain > 1.0)
    throw InvalidArgument("fit_preprocess: retain must be in (0, 1]");
  const int n = static_cast<int>(data.features.rows());
  const int d_raw = static_cast<int>(data.features.cols());
  if (n < 2) throw InvalidArgument("fit_preprocess: need at least 2 rows");

  const Eigen::VectorXd mean = data.features.colwise().mean();
  Eigen::VectorXd var(d_raw);
  for (int c = 0; c < d_raw; ++c) {
    var(c) =
        (data.features.col(c).array() - mean(c)).square().sum() / (n - 1.0);
  }
  const double max_var = var.maxCoeff();
  if (max_var <= 0.0)
    throw InvalidArgument("fit_preprocess: all features have zero variance");

  PreprocessModel model;
  model.retain = retain;
  model.kept.assign(static_cast<std::size_t>(d_raw), 0);
  std::vector<int> kept_cols;
  for (int c = 0; c < d_raw; ++c) {
    if (var(c) > zero_var_tol * max_var) {
      model.kept[static_cast<std::size_t>(c)] = 1;
      kept_cols.push_back(c);
    }
  }
  const int d_kept = static_cast<int>(kept_cols.size());

  model.scales.resize(d_kept);
  Eigen::MatrixXd scaled(n, d_kept);
  for (int j = 0; j < d_kept; ++j) {
    model.scales(j) = 1.0 / std::sqrt(var(kept_cols[static_cast<std::size_t>(j)]));
    scaled.col(j) =
        data.features.col(kept_cols[static_cast<std::size_t>(j)]) * model.scales(j);
  }
  model.center = scaled.colwise().mean();
  scaled.rowwise() -= model.center.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  Eigen::VectorXd energy = sv.array().square();
  const int rank_max = static_cast<int>(energy.size());

  // Sequential partial sums so the final fraction is exactly 1.
  Eigen::VectorXd partial(rank_max);
  double acc = 0.0;
  for (int i = 0; i < rank_max; ++i) {
    acc += energy(i);
    partial(i) = acc;
  }
  const double total = partial(rank_max - 1);

  int d = rank_max;
  for (int i = 0; i < rank_max; ++i) {
    if (partial(i) / total >= retain) {
      d = i + 1;
      break;
    }
  }
  model.basis = svd.matrixV().leftCols(d).transpose();
  model.retained_variance = partial(d - 1) / total;
  return model;
}

Eigen::MatrixXd apply_preprocess(const PreprocessModel& model,
                                 const Eigen::MatrixXd& features) {
  if (features.cols() != model.raw_dim())
    throw DimensionError("apply_preprocess: expected " +
                         std::to_string(model.raw_dim()) + " columns, got " +
                         std::to_string(features.cols()));
  const int n = static_cast<int>(features.rows());
  const int d_kept = static_cast<int>(model.scales.size());
  Eigen::MatrixXd scaled(n, d_kept);
  int j = 0;
  for (int c = 0; c < model.raw_dim(); ++c) {
    if (!model.kept[static_cast<std::size_t>(c)]) continue;
    scaled.col(j) = features.col(c) * model.scales(j);
    ++j;
  }
  scaled.rowwise() -= model.center.transpose();
  return scaled * model.basis.transpose();
}

RawDataset with_features(const RawDataset& data, Eigen::MatrixXd features) {
  if (features.rows() != data.features.rows())
    throw DimensionError("with_features: row count changed");
  RawDataset out = data;
  out.features = std::move(features);
  return out;
}

Split split(const RawDataset& data, const SplitSpec& spec) {
  const int n_total = static_cast<int>(data.features.rows());
  const int d = static_cast<int>(data.features.cols());
  const int k = data.class_count;
  const int labeled_size =
      spec.labeled_size > 0 ? spec.labeled_size : 2 * d + k;

  if (labeled_size < k)
    throw InvalidArgument("split: labeled_size must be at least class_count");
  if (labeled_size + 2 > n_total)
    throw InvalidArgument("split: not enough rows for labeled + two splits");
  if (!(spec.unlabeled_fraction > 0.0 && spec.unlabeled_fraction < 1.0))
    throw InvalidArgument("split: unlabeled_fraction must be in (0, 1)");
  std::vector<int> class_seen(static_cast<std::size_t>(k), 0);
  for (int y : data.labels) class_seen[static_cast<std::size_t>(y - 1)] = 1;
  for (int c = 0; c < k; ++c) {
    if (!class_seen[static_cast<std::size_t>(c)])
      throw InvalidArgument("split: class " + std::to_string(c + 1) +
                            " has no instances");
  }

  Rng rng(spec.seed);
  std::vector<int> idx(static_cast<std::size_t>(n_total));
  std::vector<int> counts(static_cast<std::size_t>(k));
  constexpr int kMaxAttempts = 10000;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
    for (int i = 0; i < n_total; ++i) idx[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: the first labeled_size entries are the draw.
    for (int i = 0; i < labeled_size; ++i) {
      const auto j = i + static_cast<int>(rng.uniform_below(
                             static_cast<std::uint64_t>(n_total - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < labeled_size; ++i)
      ++counts[static_cast<std::size_t>(
          data.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] - 1)];
    ok = std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; });
  }
  if (!ok)
    throw Error("split: could not draw a labeled set covering every class");

  std::vector<int> labeled_idx(idx.begin(), idx.begin() + labeled_size);
  std::vector<int> rest(idx.begin() + labeled_size, idx.end());
  std::sort(rest.begin(), rest.end());
  rng.shuffle(rest);

  const auto r = static_cast<double>(rest.size());
  const int m = static_cast<int>(std::floor(r * spec.unlabeled_fraction + 0.5));
  std::vector<int> unlabeled_idx(rest.begin(), rest.begin() + m);
  std::vector<int> test_idx(rest.begin() + m, rest.end());

  auto gather = [&](const std::vector<int>& rows) {
    LabeledDataset set;
    set.features.resize(static_cast<Eigen::Index>(rows.size()), d);
    set.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      set.features.row(static_cast<Eigen::Index>(i)) =
          data.features.row(rows[i]);
      set.labels[i] = data.labels[static_cast<std::size_t>(rows[i])];
    }
    set.class_count = k;
    return set;
  };

  Split out;
  out.labeled = gather(labeled_idx);
  LabeledDataset u = gather(unlabeled_idx);
  out.unlabeled.features = std::move(u.features);
  out.unlabeled.oracle_labels = std::move(u.labels);
  out.test = gather(test_idx);
  out.labeled_indices = std::move(labeled_idx);
  out.unlabeled_indices = std::move(unlabeled_idx);
  out.test_indices = std::move(test_idx);
  return out;
}

}  // namespace mcpl
