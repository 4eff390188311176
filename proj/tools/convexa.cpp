#include "convexa/bounds.hpp"
#include "convexa/errors.hpp"
#include "convexa/functionals.hpp"
#include "convexa/harness.hpp"
#include "convexa/measure.hpp"
#include "convexa/parallel.hpp"
#include "convexa/spec_json.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

using namespace convexa;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kNumeric = 3 };

int report_error(const char* type, const std::string& message, int code) {
  const Json j{{"schema_version", kSchemaVersion}, {"error", {{"type", type}, {"message", message}}}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

// Inline JSON when the argument starts with '{' or '[', otherwise a file path.
Json load_json_arg(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return Json::parse(arg);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("inline JSON: ") + e.what());
    }
  }
  return read_json_file(arg);
}

Vec parse_direction(const std::string& s, std::size_t n) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
  if (s.size() > 1 && s[0] == 'e') {
    std::size_t i = 0;
    try {
      i = std::stoul(s.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("--dir: expected e<i> or a JSON array, got '" + s + "'");
    }
    if (i < 1 || i > n) throw ConfigError("--dir: index out of range 1.." + std::to_string(n));
    v[static_cast<Eigen::Index>(i - 1)] = 1.0;
    return v;
  }
  Json j;
  try {
    j = Json::parse(s);
  } catch (const Json::exception&) {
    throw ConfigError("--dir: expected e<i> or a JSON array, got '" + s + "'");
  }
  if (!j.is_array() || j.size() != n) throw ConfigError("--dir: need " + std::to_string(n) + " coordinates");
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ConfigError("--dir: coordinates must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  if (!(v.norm() > 0.0)) throw ConfigError("--dir: direction must be nonzero");
  return v;
}

struct ComputeArgs {
  std::string body, measure, functional, dir;
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  double q = 2.0;
  double alpha = 2.0;
  std::vector<std::size_t> k_list;
  std::vector<double> q_grid{2, 4, 8, 16};
  std::size_t dirs = 64;
  std::size_t trials = 8;
};

Json compute(const ComputeArgs& a) {
  const RngStream rng(a.seed);
  const bool body_functional = a.functional == "mean_norm" || a.functional == "mean_width" || a.functional == "vrad" ||
                               a.functional == "profile:w_k" || a.functional == "profile:v_k_minus";
  const bool measure_functional =
      a.functional == "isotropic_constant" || a.functional == "centroid_support" || a.functional == "psi_alpha";
  if (!body_functional && !measure_functional)
    throw ConfigError("unknown functional '" + a.functional +
                      "' (known: mean_norm, mean_width, vrad, profile:w_k, profile:v_k_minus, isotropic_constant, "
                      "centroid_support, psi_alpha)");
  Json out;
  if (body_functional) {
    if (a.body.empty()) throw ConfigError("--functional " + a.functional + " needs --body");
    const Body k = body_from_json(load_json_arg(a.body));
    if (a.functional == "mean_norm") out = to_json(mean_norm(k, a.samples, rng));
    if (a.functional == "mean_width") out = to_json(mean_width(k, a.samples, rng));
    if (a.functional == "vrad") out = to_json(vrad(k, a.samples, rng));
    if (a.functional.rfind("profile:", 0) == 0) {
      std::vector<std::size_t> ks = a.k_list;
      if (ks.empty())
        for (std::size_t i = 1; i <= k.dim(); ++i) ks.push_back(i);
      ProfileOptions opt;
      opt.budget = a.samples;
      opt.trials_per_k = a.trials;
      opt.include_coordinate_subspaces = true;
      const auto which = a.functional == "profile:w_k" ? Volumetric::w_k : Volumetric::v_k_minus;
      out = to_json(volumetric_profile(k, which, ks, opt, rng));
    }
  } else {
    if (a.measure.empty()) throw ConfigError("--functional " + a.functional + " needs --measure");
    const Measure mu = measure_from_json(load_json_arg(a.measure));
    if (a.functional == "isotropic_constant") out = to_json(isotropic_constant(mu, a.samples, rng));
    if (a.functional == "centroid_support") {
      if (a.dir.empty()) throw ConfigError("centroid_support needs --dir");
      out = to_json(centroid_body_support(mu, a.q, parse_direction(a.dir, mu.dim()), a.samples, rng));
    }
    if (a.functional == "psi_alpha") {
      const auto est = psi_alpha_constant(mu, a.alpha, a.q_grid, a.dirs, a.samples, rng);
      out = to_json(est.estimate);
      out["argmax_q"] = est.argmax_q;
    }
  }
  out["schema_version"] = kSchemaVersion;
  return out;
}

struct VerifyArgs {
  std::string config, out = ".", only;
  std::optional<std::uint64_t> seed;
};

int verify(const VerifyArgs& a) {
  auto configs = parse_experiments(load_json_arg(a.config), a.seed);
  if (!a.only.empty()) {
    const Check only = check_from_string(a.only);
    std::erase_if(configs, [&](const ExperimentConfig& c) { return c.check != only; });
  }
  std::filesystem::create_directories(a.out);
  const auto dir = std::filesystem::path(a.out);
  std::ofstream jsonl(dir / "report.jsonl"), csv(dir / "summary.csv");
  if (!jsonl || !csv) throw ConfigError("cannot write into '" + a.out + "'");
  std::vector<ReportRecord> all;
  bool failed = false;
  for (const auto& c : configs) {
    const auto recs = run(c);
    std::size_t pass = 0, fail = 0, inc = 0;
    for (const auto& r : recs) {
      if (r.verdict == Verdict::pass) ++pass;
      if (r.verdict == Verdict::fail) ++fail;
      if (r.verdict == Verdict::inconclusive) ++inc;
    }
    failed = failed || fail > 0;
    std::cout << (fail > 0 ? "FAIL " : "PASS ") << c.experiment_id << " [" << to_string(c.check) << "] pass=" << pass
              << " fail=" << fail << " inconclusive=" << inc << '\n';
    all.insert(all.end(), recs.begin(), recs.end());
  }
  write_jsonl(jsonl, all);
  write_summary_csv(csv, all);
  return failed ? kCheckFailed : kOk;
}

struct SweepArgs {
  std::string formula, grid, out;
};

std::vector<std::vector<double>> vector_values(const Json& j, const std::string& name) {
  std::vector<std::vector<double>> out;
  const auto one = [&](const Json& arr) {
    std::vector<double> v;
    for (const auto& x : arr) {
      if (!x.is_number()) throw ConfigError("grid." + name + ": entries must be numbers");
      v.push_back(x.get<double>());
    }
    return v;
  };
  if (!j.is_array() || j.empty()) throw ConfigError("grid." + name + " must be a nonempty array");
  if (j[0].is_array())
    for (const auto& x : j) out.push_back(one(x));
  else
    out.push_back(one(j));
  return out;
}

std::string num(double x) {
  if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 1e15) return std::to_string(static_cast<long long>(x));
  return Json(x).dump();
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + num(x);
  return s;
}

int sweep(const SweepArgs& a) {
  const FormulaInfo* info = find_formula(a.formula);
  if (!info) {
    std::string known;
    for (const auto& f : formula_registry()) known += (known.empty() ? "" : ", ") + f.id;
    throw ConfigError("unknown formula '" + a.formula + "' (registry: " + known + ")");
  }
  const Json grid = load_json_arg(a.grid);
  if (!grid.is_object()) throw ConfigError("--grid must be a JSON object of parameter lists");
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    const bool known = it.key() == info->vector_param ||
                       std::find(info->params.begin(), info->params.end(), it.key()) != info->params.end();
    if (!known) throw ConfigError("grid parameter '" + it.key() + "' is not used by " + info->id);
  }
  std::vector<std::vector<double>> axes;
  for (const auto& p : info->params) {
    if (!grid.contains(p)) throw ConfigError("grid is missing parameter '" + p + "'");
    const Json& v = grid.at(p);
    std::vector<double> vals;
    if (v.is_number()) vals.push_back(v.get<double>());
    else if (v.is_array() && !v.empty())
      for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("grid." + p + ": entries must be numbers");
        vals.push_back(x.get<double>());
      }
    else
      throw ConfigError("grid." + p + " must be a number or a nonempty array");
    axes.push_back(std::move(vals));
  }
  std::vector<std::vector<double>> vecs{{}};
  if (!info->vector_param.empty()) {
    if (!grid.contains(info->vector_param)) throw ConfigError("grid is missing vector parameter '" + info->vector_param + "'");
    vecs = vector_values(grid.at(info->vector_param), info->vector_param);
  }

  std::ofstream file;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out);
    if (!file) throw ConfigError("cannot write '" + a.out + "'");
  }
  std::ostream& os = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  os << "formula_id";
  for (const auto& p : info->params) os << ',' << p;
  if (!info->vector_param.empty()) os << ',' << info->vector_param;
  os << ",value,valid,interpolated,aux_name,aux\n";

  std::vector<std::size_t> idx(axes.size(), 0);
  for (const auto& vec : vecs) {
    std::fill(idx.begin(), idx.end(), 0);
    bool done = false;
    while (!done) {
      std::map<std::string, double> scalars;
      for (std::size_t i = 0; i < axes.size(); ++i) scalars[info->params[i]] = axes[i][idx[i]];
      const BoundValue b = evaluate_formula(info->id, scalars, vec);
      os << info->id;
      for (std::size_t i = 0; i < axes.size(); ++i) os << ',' << num(axes[i][idx[i]]);
      if (!info->vector_param.empty()) os << ',' << join(vec);
      os << ',' << Json(b.value).dump() << ',' << (b.valid ? "true" : "false") << ','
         << (b.interpolated ? "true" : "false") << ',' << b.aux_name << ',' << (b.aux ? Json(*b.aux).dump() : "") << '\n';
      // odometer over the scalar axes, last axis fastest
      done = true;
      for (std::size_t d = axes.size(); d-- > 0;) {
        if (++idx[d] < axes[d].size()) {
          done = false;
          break;
        }
        idx[d] = 0;
      }
    }
  }
  return kOk;
}

Json formulas_json() {
  Json list = Json::array();
  for (const auto& f : formula_registry())
    list.push_back({{"formula_id", f.id}, {"params", f.params}, {"vector_param", f.vector_param}, {"summary", f.summary}});
  return Json{{"schema_version", kSchemaVersion}, {"formulas", list}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convexa: convex body functionals, bounds and verification suites"};
  app.require_subcommand(1);
  std::optional<std::size_t> worker_flag;
  app.add_option("--workers", worker_flag, "Worker threads (default: CONVEXA_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);

  ComputeArgs ca;
  auto* c = app.add_subcommand("compute", "Evaluate one functional and print an estimate as JSON");
  auto* c_body = c->add_option("--body", ca.body, "Body spec (file or inline JSON)");
  auto* c_measure = c->add_option("--measure", ca.measure, "Measure spec (file or inline JSON)");
  c_body->excludes(c_measure);
  c->add_option("--functional", ca.functional, "mean_norm | mean_width | vrad | profile:w_k | profile:v_k_minus | "
                                               "isotropic_constant | centroid_support | psi_alpha")
      ->required();
  c->add_option("--samples", ca.samples, "Sample budget")->check(CLI::PositiveNumber);
  c->add_option("--seed", ca.seed, "Seed");
  c->add_option("--q", ca.q, "Moment order for centroid_support");
  c->add_option("--dir", ca.dir, "Direction: e<i> or a JSON array");
  c->add_option("--k", ca.k_list, "Indices for profiles (default 1..n)");
  c->add_option("--alpha", ca.alpha, "Exponent for psi_alpha");
  c->add_option("--q-grid", ca.q_grid, "q values for psi_alpha");
  c->add_option("--dirs", ca.dirs, "Directions for psi_alpha")->check(CLI::PositiveNumber);
  c->add_option("--trials", ca.trials, "Random subspaces per k for profiles")->check(CLI::PositiveNumber);

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "Run experiment suites and write report.jsonl and summary.csv");
  v->add_option("--config", va.config, "Experiment config (file or inline JSON)")->required();
  v->add_option("--out", va.out, "Output directory");
  v->add_option("--only", va.only, "Run only experiments of this check");
  v->add_option("--seed", va.seed, "Override every experiment seed");

  SweepArgs sa;
  auto* s = app.add_subcommand("sweep", "Tabulate a registered bound over a parameter grid as CSV");
  s->add_option("--formula", sa.formula, "Formula id (see `formulas`)")->required();
  s->add_option("--grid", sa.grid, "Grid JSON object (inline or file)")->required();
  s->add_option("--out", sa.out, "CSV path (default stdout)");

  auto* f = app.add_subcommand("formulas", "List the bound registry as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kConfig);
  }

  try {
    if (worker_flag) {
      set_workers(*worker_flag);
    } else if (const char* env = std::getenv("CONVEXA_WORKERS"); env && *env) {
      char* end = nullptr;
      const unsigned long w = std::strtoul(env, &end, 10);
      if (*end != '\0' || w == 0) throw ConfigError("CONVEXA_WORKERS must be a positive integer");
      set_workers(w);
    }
    if (c->parsed()) {
      std::cout << compute(ca).dump() << '\n';
      return kOk;
    }
    if (v->parsed()) return verify(va);
    if (s->parsed()) return sweep(sa);
    if (f->parsed()) {
      std::cout << formulas_json().dump() << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    return report_error("ConfigError", e.what(), kConfig);
  } catch (const ArgumentError& e) {
    return report_error("ArgumentError", e.what(), kConfig);
  } catch (const NumericError& e) {
    return report_error("NumericError", e.what(), kNumeric);
  } catch (const UnsupportedError& e) {
    return report_error("UnsupportedError", e.what(), kNumeric);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("ConfigError", e.what(), kConfig);
  } catch (const std::exception& e) {
    return report_error("NumericError", e.what(), kNumeric);
  }
  return kConfig;
}
