#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bfwer {

using Triple = std::array<double, 3>;

enum class QGridMode { tensor, sampled };

// Position of a node's cell relative to the diagonal of the cube.
// full: i<j<k; lower: i==j<k; upper: i<j==k; corner: i==j==k.
enum class CellShape : std::uint8_t { full, lower, upper, corner, none };

struct QNode {
  Triple u;
  double weight;
  std::array<std::uint32_t, 3> cell;
  CellShape shape;
};

struct QGridOptions {
  QGridMode mode = QGridMode::tensor;
  int n_per_axis = 70;
  // Axis breakpoints t(s) = (exp(grading*s) - 1)/(exp(grading) - 1) for
  // uniform s; grading = 0 gives equal cells.
  double grading = 10.0;
  // Extra axis breakpoints, e.g. to align cells with a known discontinuity.
  std::vector<double> knots;
  // sampled mode
  std::size_t n_samples = 60000;
  std::uint64_t seed = 20240601;
};

class QGrid {
 public:
  explicit QGrid(const QGridOptions& opts);

  const std::vector<QNode>& nodes() const { return nodes_; }
  std::size_t n_grid() const { return nodes_.size(); }
  QGridMode mode() const { return opts_.mode; }
  const QGridOptions& options() const { return opts_; }
  // Axis breakpoints 0 = t_0 < ... < t_m = 1 (tensor mode only).
  const std::vector<double>& axis() const { return axis_; }
  double total_weight() const;

  nlohmann::json meta() const;
  std::string id() const;

 private:
  QGridOptions opts_;
  std::vector<double> axis_;
  std::vector<QNode> nodes_;
};

QGrid build_qgrid(int n_per_axis);
QGrid build_qgrid(const QGridOptions& opts);

// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> values);

double integrate_on_q(const QGrid& grid, const std::function<double(const Triple&)>& f);

}  // namespace bfwer
