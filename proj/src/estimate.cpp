#include "convexa/estimate.hpp"

#include "convexa/errors.hpp"

#include <cmath>
#include <ostream>

namespace convexa {

std::string to_string(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::monte_carlo: return "monte_carlo";
    case EstimateMethod::closed_form: return "closed_form";
    case EstimateMethod::quadrature: return "quadrature";
    case EstimateMethod::optimization_upper_bound: return "optimization_upper_bound";
  }
  return "unknown";
}

std::string to_string(BiasNote note) {
  switch (note) {
    case BiasNote::unbiased: return "unbiased";
    case BiasNote::upper_biased: return "upper_biased";
    case BiasNote::lower_biased: return "lower_biased";
  }
  return "unknown";
}

const EstimateCI& ProfileCurve::at(double index) const {
  for (const auto& p : points) {
    if (p.index == index) return p.estimate;
  }
  throw ArgumentError("ProfileCurve: index " + std::to_string(index) + " not present");
}

bool ProfileCurve::contains(double index) const {
  for (const auto& p : points) {
    if (p.index == index) return true;
  }
  return false;
}

void ProfileCurve::validate() const {
  if (points.empty()) throw ArgumentError("ProfileCurve: empty profile");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].index > points[i - 1].index)) throw ArgumentError("ProfileCurve: indices must be strictly increasing");
  }
}

void write_profile_csv(std::ostream& os, const ProfileCurve& curve) {
  os << "index,value,std_err,n_samples,bias_note\n";
  const auto old_precision = os.precision(17);
  for (const auto& p : curve.points) {
    os << p.index << ',' << p.estimate.value << ',' << p.estimate.std_err << ',' << p.estimate.n_samples << ','
       << to_string(curve.bias_note) << '\n';
  }
  os.precision(old_precision);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * nb / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

double RunningStats::std_error() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

}  // namespace convexa
