#include "convexa/functionals.hpp"

#include "convexa/errors.hpp"
#include "convexa/parallel.hpp"
#include "convexa/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace convexa {
namespace {

constexpr std::size_t kChunk = 4096;

std::size_t chunk_count(std::size_t n_samples) { return (n_samples + kChunk - 1) / kChunk; }

std::size_t chunk_size(std::size_t n_samples, std::size_t c) { return std::min(kChunk, n_samples - c * kChunk); }

// Relative accuracy reported for estimates whose only error is oracle round-off.
constexpr double kOracleRelErr = 1e-9;

EstimateCI quadrature_average(std::size_t n, std::size_t resolution, const std::function<double(const Vec&)>& f) {
  const std::size_t res = std::max<std::size_t>(resolution, 16);
  const auto grid = direction_grid(n, res);
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { values[i] = f(grid[i]); });
  double full = 0.0;
  for (double v : values) full += v;
  full /= static_cast<double>(values.size());
  double half;
  if (n == 2 && res % 2 == 0) {
    half = 0.0;
    for (std::size_t i = 0; i < values.size(); i += 2) half += values[i];
    half /= static_cast<double>(values.size() / 2);
  } else {
    const auto coarse = direction_grid(n, res / 2);
    half = 0.0;
    for (const auto& v : coarse) half += f(v);
    half /= static_cast<double>(coarse.size());
  }
  EstimateCI e;
  e.value = full;
  e.std_err = std::max(std::abs(full - half), std::numeric_limits<double>::epsilon() * std::abs(full));
  if (e.std_err == 0.0) e.std_err = std::numeric_limits<double>::min();
  e.n_samples = res;
  e.method = EstimateMethod::quadrature;
  return e;
}

std::string direction_context(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << " at direction [" << v.transpose() << "]";
  return os.str();
}

Route resolve(Route route, std::size_t n) {
  if (route != Route::automatic) return route;
  return n <= 2 ? Route::quadrature : Route::monte_carlo;
}

// Log-domain accumulation of exp(r_i): running max plus rescaled sums.
struct LogSumExp {
  double max = -std::numeric_limits<double>::infinity();
  double s1 = 0.0;  // sum exp(r - max)
  double s2 = 0.0;  // sum exp(2 (r - max))
  std::uint64_t count = 0;

  void add(double r) {
    if (r > max) {
      const double f = std::exp(max - r);
      s1 = s1 * f;
      s2 = s2 * f * f;
      max = r;
    }
    const double e = std::exp(r - max);
    s1 += e;
    s2 += e * e;
    ++count;
  }

  void merge(const LogSumExp& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double m = std::max(max, o.max);
    const double fa = std::exp(max - m);
    const double fb = std::exp(o.max - m);
    s1 = s1 * fa + o.s1 * fb;
    s2 = s2 * fa * fa + o.s2 * fb * fb;
    max = m;
    count += o.count;
  }
};

std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

std::vector<Subspace> coordinate_subspaces(std::size_t n, std::size_t k) {
  std::vector<Subspace> out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(Subspace::coordinate(n, idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

bool is_sup(Volumetric which) { return which == Volumetric::w_k || which == Volumetric::v_k; }
bool uses_sections(Volumetric which) { return which == Volumetric::w_k || which == Volumetric::w_k_minus; }

// Extremum of f over the sphere of R^k: sampling, then local search from the
// best five samples with shrinking random steps. sign = +1 maximizes.
double sphere_extremum(std::size_t k, std::size_t n_dirs, const RngStream& rng, double sign,
                       const std::function<double(const Vec&)>& f) {
  if (n_dirs == 0) throw ArgumentError("n_dirs must be >= 1");
  if (k == 1) {
    const Vec e{{1.0}};
    return f(e);  // f is even on the sphere {+1, -1}
  }
  struct Sample {
    double score;
    std::size_t order;
    Vec theta;
  };
  std::vector<Sample> samples(n_dirs);
  Generator gen = rng.generator(0);
  for (std::size_t i = 0; i < n_dirs; ++i) {
    samples[i].theta = sample_sphere(k, gen);
    samples[i].order = i;
  }
  parallel_for(n_dirs, [&](std::size_t i) { samples[i].score = sign * f(samples[i].theta); });
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.score > b.score; });

  const std::size_t restarts = std::min<std::size_t>(5, samples.size());
  std::vector<double> best(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    Generator local = rng.generator(1 + r);
    Vec theta = samples[r].theta;
    double score = samples[r].score;
    double step = 0.2;
    for (int s = 0; s < 100; ++s) {
      const Vec cand = perturb_direction(theta, step, local);
      const double v = sign * f(cand);
      if (v > score) {
        score = v;
        theta = cand;
      } else {
        step *= 0.95;
      }
    }
    best[r] = score;
  });
  return sign * *std::max_element(best.begin(), best.end());
}

}  // namespace

std::string to_string(Volumetric which) {
  switch (which) {
    case Volumetric::w_k: return "w_k";
    case Volumetric::v_k: return "v_k";
    case Volumetric::w_k_minus: return "w_k_minus";
    case Volumetric::v_k_minus: return "v_k_minus";
  }
  return "unknown";
}

EstimateCI sphere_average(std::size_t n, std::size_t n_samples, const RngStream& rng, Route route,
                          const std::function<double(const Vec&)>& f) {
  if (n == 0) throw ArgumentError("sphere_average: dimension must be >= 1");
  if (n == 1 && route != Route::monte_carlo) {
    const double v = 0.5 * (f(Vec{{1.0}}) + f(Vec{{-1.0}}));
    return EstimateCI::exact(v);
  }
  route = resolve(route, n);
  if (route == Route::quadrature) {
    if (n > 3) throw UnsupportedError("quadrature route is only available in dimension <= 3");
    return quadrature_average(n, n_samples, f);
  }
  if (n_samples < 2) throw ArgumentError("sphere_average: need at least 2 samples");
  const std::size_t chunks = chunk_count(n_samples);
  std::vector<RunningStats> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Generator gen = rng.generator(c);
    const std::size_t m = chunk_size(n_samples, c);
    for (std::size_t i = 0; i < m; ++i) {
      const Vec theta = sample_sphere(n, gen);
      double v;
      try {
        v = f(theta);
      } catch (const NumericError& e) {
        throw NumericError(e.what() + direction_context(theta), e.iterations());
      }
      partial[c].add(v);
    }
  });
  RunningStats total;
  for (const auto& p : partial) total.merge(p);
  EstimateCI e;
  e.value = total.mean();
  e.std_err = total.std_error();
  e.n_samples = n_samples;
  e.seed = rng.seed();
  e.method = EstimateMethod::monte_carlo;
  return e;
}

EstimateCI mean_norm(const Body& body, std::size_t n_samples, const RngStream& rng, Route route) {
  if (n_samples < 10) throw ArgumentError("mean_norm: n_samples must be >= 10");
  if (const auto r = body.ball_radius()) return EstimateCI::exact(1.0 / *r);
  return sphere_average(body.dim(), n_samples, rng, route, [&](const Vec& theta) { return body.gauge(theta); });
}

EstimateCI mean_width(const Body& body, std::size_t n_samples, const RngStream& rng, Route route) {
  if (n_samples < 10) throw ArgumentError("mean_width: n_samples must be >= 10");
  if (const auto r = body.ball_radius()) return EstimateCI::exact(*r);
  return sphere_average(body.dim(), n_samples, rng, route, [&](const Vec& theta) { return body.support(theta); });
}

EstimateCI vrad(const Body& body, std::size_t budget, const RngStream& rng, Route route) {
  const std::size_t n = body.dim();
  const double nd = static_cast<double>(n);
  if (const auto lv = body.log_volume(); lv && route == Route::automatic) {
    return EstimateCI::exact(std::exp((*lv - log_unit_ball_volume(n)) / nd));
  }
  const auto radial = [&](const Vec& theta) {
    const double g = body.gauge(theta);
    if (!(g > 0.0)) {
      throw NumericError("vrad: degenerate gauge (zero) on a sampled direction" + direction_context(theta));
    }
    return g;
  };
  if (n == 1) {
    return EstimateCI::exact(1.0 / radial(Vec{{1.0}}));
  }
  const Route r = resolve(route, n);
  if (r == Route::quadrature) {
    EstimateCI mean_rho_n = sphere_average(n, std::max<std::size_t>(budget, 16), rng, Route::quadrature,
                                           [&](const Vec& theta) { return std::pow(radial(theta), -nd); });
    EstimateCI e = mean_rho_n;
    e.value = std::pow(mean_rho_n.value, 1.0 / nd);
    e.std_err = e.value * mean_rho_n.std_err / (nd * mean_rho_n.value);
    return e;
  }
  if (n > kVradMonteCarloDimCap) {
    throw UnsupportedError("vrad: Monte-Carlo route is capped at dimension " + std::to_string(kVradMonteCarloDimCap) +
                           "; use a body with a closed-form volume (ball, ellipsoid, lp ball, linear image)");
  }
  if (budget < 100) throw ArgumentError("vrad: Monte-Carlo budget must be >= 100");

  const std::size_t chunks = chunk_count(budget);
  std::vector<LogSumExp> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Generator gen = rng.generator(c);
    const std::size_t m = chunk_size(budget, c);
    for (std::size_t i = 0; i < m; ++i) {
      const Vec theta = sample_sphere(n, gen);
      partial[c].add(-nd * std::log(radial(theta)));
    }
  });
  LogSumExp total;
  for (const auto& p : partial) total.merge(p);
  const double count = static_cast<double>(total.count);
  const double mean_scaled = total.s1 / count;                // E[rho^n] / e^max
  const double second_scaled = total.s2 / count;             // E[rho^2n] / e^2max
  const double var_scaled = std::max(0.0, second_scaled - mean_scaled * mean_scaled) * count / (count - 1.0);
  const double log_mean = total.max + std::log(mean_scaled);
  EstimateCI e;
  e.value = std::exp(log_mean / nd);
  // delta method: se(V^{1/n}) = V^{1/n} se(V) / (n V)
  e.std_err = e.value * std::sqrt(var_scaled / count) / (nd * mean_scaled);
  e.n_samples = budget;
  e.seed = rng.seed();
  e.method = EstimateMethod::monte_carlo;
  return e;
}

ExtremalSubspace extremal_subspace(const Body& body, Volumetric which, std::size_t k, const ProfileOptions& options,
                                   const RngStream& rng) {
  const std::size_t n = body.dim();
  if (k == 0 || k > n) throw ArgumentError("volumetric_profile: need 1 <= k <= n");
  if (options.trials_per_k == 0) throw ArgumentError("volumetric_profile: trials_per_k must be >= 1");
  const bool sup = is_sup(which);
  const bool sections = uses_sections(which);
  // Common random numbers: every candidate at this k sees the same directions.
  const RngStream vrad_rng = rng.substream("vrad");
  const auto evaluate = [&](const Subspace& e) {
    const Body piece = sections ? section(body, e) : project(body, e);
    return vrad(piece, options.budget, vrad_rng);
  };

  if (k == n) {
    const Subspace whole = Subspace::coordinate(n, [&] {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      return all;
    }());
    return {whole, vrad(body, options.budget, vrad_rng)};
  }

  std::vector<Subspace> candidates;
  if (options.include_coordinate_subspaces && binomial_capped(n, k, 512) <= 512) {
    candidates = coordinate_subspaces(n, k);
  }
  Generator gen = rng.generator(0);
  for (std::size_t t = 0; t < options.trials_per_k; ++t) candidates.push_back(sample_grassmannian(n, k, gen));

  std::vector<EstimateCI> values(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) { values[i] = evaluate(candidates[i]); });
  const auto better = [&](double a, double b) { return sup ? a > b : a < b; };
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (better(values[i].value, values[best].value)) best = i;
  }
  ExtremalSubspace result{candidates[best], values[best]};

  if (options.refine) {
    Generator local = rng.generator(1);
    double step = 0.3;
    for (std::size_t s = 0; s < options.refine_steps; ++s) {
      const Subspace cand = perturb_subspace(result.subspace, step, local);
      const EstimateCI v = evaluate(cand);
      if (better(v.value, result.vrad.value)) {
        result = {cand, v};
      } else {
        step *= 0.96;
      }
    }
  }
  return result;
}

ProfileCurve volumetric_profile(const Body& body, Volumetric which, const std::vector<std::size_t>& k_list,
                                const ProfileOptions& options, const RngStream& rng) {
  if (k_list.empty()) throw ArgumentError("volumetric_profile: empty k_list");
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (k_list[i] <= k_list[i - 1]) throw ArgumentError("volumetric_profile: k_list must be strictly increasing");
  }
  ProfileCurve curve;
  curve.index_name = "k";
  curve.subject_id = to_string(which) + ":" + body.describe();
  curve.bias_note = is_sup(which) ? BiasNote::lower_biased : BiasNote::upper_biased;
  curve.points.resize(k_list.size());
  if (const auto& shape = body.ellipsoid_shape()) {
    // Sections and projections of an ellipsoid interlace its semiaxes, so the
    // extremes are geometric means of the k largest or k smallest.
    Eigen::SelfAdjointEigenSolver<Mat> eig(*shape, Eigen::EigenvaluesOnly);
    const Vec log_axes = 0.5 * eig.eigenvalues().array().log().matrix();  // ascending
    const auto n = static_cast<Eigen::Index>(body.dim());
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(k_list[i]);
      if (k < 1 || k > n) throw ArgumentError("volumetric_profile: k out of range");
      const double s = is_sup(which) ? log_axes.tail(k).sum() : log_axes.head(k).sum();
      curve.points[i] = {static_cast<double>(k), EstimateCI::exact(std::exp(s / static_cast<double>(k)))};
    }
    curve.bias_note = BiasNote::unbiased;
    return curve;
  }
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    const std::size_t k = k_list[i];
    curve.points[i] = {static_cast<double>(k), extremal_subspace(body, which, k, options, rng.substream(k)).vrad};
  }
  return curve;
}

double out_radius_section(const Body& body, const Subspace& sub, std::size_t n_dirs, const RngStream& rng) {
  if (sub.ambient_dim() != body.dim()) throw ArgumentError("out_radius_section: dimension mismatch");
  return sphere_extremum(sub.dim(), n_dirs, rng, 1.0, [&](const Vec& theta) {
    const double g = body.gauge(sub.embed(theta));
    if (!(g > 0.0)) throw NumericError("out_radius_section: body is unbounded along a sampled direction");
    return 1.0 / g;
  });
}

double in_radius_projection(const Body& body, const Subspace& sub, std::size_t n_dirs, const RngStream& rng) {
  if (sub.ambient_dim() != body.dim()) throw ArgumentError("in_radius_projection: dimension mismatch");
  return sphere_extremum(sub.dim(), n_dirs, rng, -1.0, [&](const Vec& theta) { return body.support(sub.embed(theta)); });
}

namespace {

// Shared search over G_{n,m}: coordinate candidates, random candidates, then
// local perturbation of the best. sign = +1 maximizes score.
std::pair<Subspace, double> grassmann_search(std::size_t n, std::size_t m, const GelfandOptions& options,
                                             const RngStream& rng, double sign,
                                             const std::function<double(const Subspace&)>& score) {
  std::vector<Subspace> candidates;
  if (options.include_coordinate_subspaces && binomial_capped(n, m, 512) <= 512) candidates = coordinate_subspaces(n, m);
  Generator gen = rng.generator(0);
  for (std::size_t t = 0; t < options.subspace_trials; ++t) candidates.push_back(sample_grassmannian(n, m, gen));
  if (candidates.empty()) throw ArgumentError("subspace search: no candidates (subspace_trials = 0)");
  std::vector<double> values(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) { values[i] = sign * score(candidates[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  Subspace witness = candidates[best];
  double value = values[best];
  if (options.refine && m < n) {
    Generator local = rng.generator(1);
    double step = 0.3;
    for (std::size_t s = 0; s < options.refine_steps; ++s) {
      const Subspace cand = perturb_subspace(witness, step, local);
      const double v = sign * score(cand);
      if (v > value) {
        value = v;
        witness = cand;
      } else {
        step *= 0.93;
      }
    }
  }
  return {witness, sign * value};
}

}  // namespace

GelfandResult gelfand_upper(const Body& body, std::size_t codim, const GelfandOptions& options, const RngStream& rng) {
  const std::size_t n = body.dim();
  if (codim >= n) throw ArgumentError("gelfand_upper: need 0 <= codim < n");
  const std::size_t m = n - codim;
  const RngStream dir_rng = rng.substream("dirs");
  auto [witness, value] = grassmann_search(n, m, options, rng, -1.0, [&](const Subspace& f) {
    return out_radius_section(body, f, options.n_dirs, dir_rng);
  });
  EstimateCI e;
  e.value = value;
  e.std_err = kOracleRelErr * std::abs(value);
  e.n_samples = options.subspace_trials;
  e.seed = rng.seed();
  e.method = EstimateMethod::optimization_upper_bound;
  return {e, witness};
}

InRadiusWitness max_in_radius_projection(const Body& body, std::size_t m, const GelfandOptions& options,
                                         const RngStream& rng) {
  const std::size_t n = body.dim();
  if (m == 0 || m > n) throw ArgumentError("max_in_radius_projection: need 1 <= m <= n");
  const RngStream dir_rng = rng.substream("dirs");
  auto [witness, value] = grassmann_search(n, m, options, rng, 1.0, [&](const Subspace& f) {
    return in_radius_projection(body, f, options.n_dirs, dir_rng);
  });
  return {value, witness};
}

}  // namespace convexa
