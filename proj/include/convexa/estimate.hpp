#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace convexa {

enum class EstimateMethod { monte_carlo, closed_form, quadrature, optimization_upper_bound };

std::string to_string(EstimateMethod method);

/// Scalar estimate with its standard error and provenance.
/// std_err is zero exactly for closed forms; quadrature and optimization
/// estimates carry their discretization / oracle-accuracy error instead.
struct EstimateCI {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n_samples = 1;
  std::uint64_t seed = 0;
  EstimateMethod method = EstimateMethod::closed_form;

  static EstimateCI exact(double value) { return {value, 0.0, 1, 0, EstimateMethod::closed_form}; }
};

enum class BiasNote { unbiased, upper_biased, lower_biased };

std::string to_string(BiasNote note);

struct ProfilePoint {
  double index = 0.0;
  EstimateCI estimate;
};

/// Map k -> estimate (or q -> estimate) with a one-sided bias flag for
/// profiles built from finite extremal searches.
struct ProfileCurve {
  std::string index_name = "k";
  std::vector<ProfilePoint> points;
  std::string subject_id;
  BiasNote bias_note = BiasNote::unbiased;
  /// Set when values at some indices were filled in by interpolation.
  bool interpolated = false;

  /// Exact lookup; throws ArgumentError when the index is absent.
  const EstimateCI& at(double index) const;
  bool contains(double index) const;
  void validate() const;
};

/// CSV with header index,value,std_err,n_samples,bias_note.
void write_profile_csv(std::ostream& os, const ProfileCurve& curve);

/// Welford accumulator; merge() is Chan's parallel update.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& other);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace convexa
