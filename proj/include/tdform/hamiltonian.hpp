#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdform/hilbert_scale.hpp"

namespace tdform {

using MatrixFunction = std::function<Mat(double)>;

// t -> H(t) on [t_begin, t_end] with a form domain common to all t (here:
// the whole coefficient space) and one semibound valid for every t.
// eval and deriv must be pure; they may be called concurrently.
struct TimeDependentHamiltonian {
  Index dim = 0;
  MatrixFunction eval;
  std::optional<MatrixFunction> deriv;
  double t_begin = 0.0;
  double t_end = 1.0;
  Semibound uniform_semibound{};
  std::string label;

  double span() const noexcept { return t_end - t_begin; }
  double shift() const noexcept { return uniform_semibound.m + 1.0; }
  Mat operator()(double t) const { return eval(t); }
  // A(t) = H(t) + (m + 1) I
  Mat shifted(double t) const { return eval(t) + shift() * Mat::Identity(dim, dim); }
  HilbertScale scale_at(double t) const { return HilbertScale(eval(t), uniform_semibound); }
};

class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  }

  static TimeGrid uniform(double a, double b, std::size_t npoints) {
    if (npoints < 2) throw std::invalid_argument("time grid needs at least 2 points");
    std::vector<double> p(npoints);
    const double h = (b - a) / static_cast<double>(npoints - 1);
    for (std::size_t j = 0; j < npoints; ++j) p[j] = a + h * static_cast<double>(j);
    p.back() = b;
    return TimeGrid(std::move(p));
  }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

  double min_spacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < points_.size(); ++j) h = std::min(h, points_[j] - points_[j - 1]);
    return h;
  }

  // Bisects every interval `levels` times; the original points are kept.
  TimeGrid refined(int levels) const {
    std::vector<double> p = points_;
    for (int l = 0; l < levels; ++l) {
      std::vector<double> q;
      q.reserve(2 * p.size());
      for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        q.push_back(p[j]);
        q.push_back(0.5 * (p[j] + p[j + 1]));
      }
      q.push_back(p.back());
      p = std::move(q);
    }
    return TimeGrid(std::move(p));
  }

  // Bisects the intervals adjacent to each flagged time `levels` times.
  TimeGrid refined_near(const std::vector<double>& times, int levels) const {
    std::vector<double> p = points_;
    for (int l = 0; l < levels; ++l) {
      std::vector<double> extra;
      for (double t : times) {
        auto it = std::lower_bound(p.begin(), p.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - p.begin());
        if (j > 0) extra.push_back(0.5 * (p[j - 1] + p[j]));
        if (j + 1 < p.size()) extra.push_back(0.5 * (p[j] + p[j + 1]));
      }
      p.insert(p.end(), extra.begin(), extra.end());
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    return TimeGrid(std::move(p));
  }

 private:
  std::vector<double> points_;
};

// Hermiticity and the uniform semibound on every grid point.
inline void validate_on_grid(const TimeDependentHamiltonian& tdh, const TimeGrid& grid) {
  for (double t : grid.points()) {
    const Mat h = tdh.eval(t);
    require_dim(h.rows(), tdh.dim, "H(t)");
    const double scale = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
    if (max_asymmetry(h) > kHermitianTolerance * scale) {
      std::ostringstream os;
      os << "H(t) is not Hermitian at t = " << t;
      throw NotHermitianError(os.str(), max_asymmetry(h));
    }
    const double lmin = lambda_min(h);
    if (lmin < -tdh.uniform_semibound.m - 1e-10) {
      std::ostringstream os;
      os << "semibound violated at t = " << t << ": lambda_min = " << lmin
         << " < -m = " << -tdh.uniform_semibound.m;
      throw NumericalError(os.str());
    }
  }
}

}  // namespace tdform
