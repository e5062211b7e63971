#include "blockfwer/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bfwer {

namespace {

std::vector<double> make_axis(const QGridOptions& o) {
  std::vector<double> t(static_cast<std::size_t>(o.n_per_axis) + 1);
  const double n = o.n_per_axis;
  for (int i = 0; i <= o.n_per_axis; ++i) {
    const double s = i / n;
    t[i] = o.grading > 0.0 ? std::expm1(o.grading * s) / std::expm1(o.grading) : s;
  }
  t.front() = 0.0;
  t.back() = 1.0;
  for (double k : o.knots) {
    if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("QGrid knot outside (0,1)");
    t.push_back(k);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

QGrid::QGrid(const QGridOptions& opts) : opts_(opts) {
  if (opts_.mode == QGridMode::sampled) {
    if (opts_.n_samples < 1) throw std::invalid_argument("sampled QGrid needs n_samples >= 1");
    std::mt19937_64 rng(opts_.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double w = 1.0 / (6.0 * static_cast<double>(opts_.n_samples));
    nodes_.reserve(opts_.n_samples);
    for (std::size_t s = 0; s < opts_.n_samples; ++s) {
      Triple u{unif(rng), unif(rng), unif(rng)};
      std::sort(u.begin(), u.end());
      nodes_.push_back({u, w, {0, 0, 0}, CellShape::none});
    }
    return;
  }

  if (opts_.n_per_axis < 2) throw std::invalid_argument("build_qgrid: n_per_axis must be >= 2");
  if (opts_.grading < 0.0) throw std::invalid_argument("build_qgrid: grading must be >= 0");
  axis_ = make_axis(opts_);
  const auto m = static_cast<std::uint32_t>(axis_.size() - 1);
  nodes_.reserve(static_cast<std::size_t>(m) * (m + 1) * (m + 2) / 6);

  for (std::uint32_t i = 0; i < m; ++i) {
    const double ai = axis_[i], hi = axis_[i + 1] - axis_[i];
    for (std::uint32_t j = i; j < m; ++j) {
      const double aj = axis_[j], hj = axis_[j + 1] - axis_[j];
      for (std::uint32_t k = j; k < m; ++k) {
        const double ak = axis_[k], hk = axis_[k + 1] - axis_[k];
        QNode nd;
        nd.cell = {i, j, k};
        if (i < j && j < k) {
          nd.shape = CellShape::full;
          nd.weight = hi * hj * hk;
          nd.u = {ai + 0.5 * hi, aj + 0.5 * hj, ak + 0.5 * hk};
        } else if (i == j && j < k) {
          nd.shape = CellShape::lower;
          nd.weight = 0.5 * hi * hi * hk;
          nd.u = {ai + hi / 3.0, ai + 2.0 * hi / 3.0, ak + 0.5 * hk};
        } else if (i < j && j == k) {
          nd.shape = CellShape::upper;
          nd.weight = 0.5 * hi * hj * hj;
          nd.u = {ai + 0.5 * hi, aj + hj / 3.0, aj + 2.0 * hj / 3.0};
        } else {
          nd.shape = CellShape::corner;
          nd.weight = hi * hi * hi / 6.0;
          nd.u = {ai + 0.25 * hi, ai + 0.5 * hi, ai + 0.75 * hi};
        }
        nodes_.push_back(nd);
      }
    }
  }
}

double QGrid::total_weight() const {
  std::vector<double> w;
  w.reserve(nodes_.size());
  for (const auto& n : nodes_) w.push_back(n.weight);
  return pairwise_sum(w);
}

nlohmann::json QGrid::meta() const {
  nlohmann::json j;
  j["mode"] = opts_.mode == QGridMode::tensor ? "tensor" : "sampled";
  j["n_grid"] = nodes_.size();
  if (opts_.mode == QGridMode::tensor) {
    j["n_per_axis"] = opts_.n_per_axis;
    j["grading"] = opts_.grading;
    if (!opts_.knots.empty()) j["knots"] = opts_.knots;
  } else {
    j["n_samples"] = opts_.n_samples;
    j["seed"] = opts_.seed;
  }
  return j;
}

std::string QGrid::id() const { return meta().dump(); }

QGrid build_qgrid(int n_per_axis) {
  QGridOptions o;
  o.n_per_axis = n_per_axis;
  return QGrid(o);
}

QGrid build_qgrid(const QGridOptions& opts) { return QGrid(opts); }

double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kBase = 64;
  if (v.size() <= kBase) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double integrate_on_q(const QGrid& grid, const std::function<double(const Triple&)>& f) {
  const auto& nodes = grid.nodes();
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double val = f(nodes[i].u);
    if (!std::isfinite(val)) {
      std::ostringstream msg;
      msg << "integrate_on_q: non-finite integrand at node " << i << " (" << nodes[i].u[0] << ", "
          << nodes[i].u[1] << ", " << nodes[i].u[2] << ")";
      throw std::domain_error(msg.str());
    }
    terms[i] = nodes[i].weight * val;
  }
  return pairwise_sum(terms);
}

}  // namespace bfwer
