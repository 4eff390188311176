#include "convexa/spec_json.hpp"

#include "convexa/errors.hpp"
#include "convexa/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace convexa {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ConfigError(where + ": " + msg);
}

double number(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return std::numeric_limits<double>::infinity();
  }
  fail(where, "expected a number");
}

std::size_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(where, "expected a nonnegative integer");
  const auto v = j.get<long long>();
  if (v < 0) fail(where, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

Mat matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) fail(where, "rows must be nonempty arrays");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(where, "rows must all have the same length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
  }
  return m;
}

Vec vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing '") + key + "'");
  return obj.at(key);
}

// Parameter looked up by name in an object, or by position in an array.
const Json* param(const Json& params, const char* key, std::size_t pos) {
  if (params.is_object() && params.contains(key)) return &params.at(key);
  if (params.is_array() && pos < params.size() && !params[pos].is_array() && !params[pos].is_object())
    return &params[pos];
  return nullptr;
}

// Matrix given under `key`, or as the params value itself.
Mat matrix_param(const Json& params, const char* key, const std::string& where) {
  if (params.is_object()) return matrix(field(params, key, where), where + "." + key);
  return matrix(params, where);
}

Subspace subspace_param(const Json& params, std::size_t ambient, const std::string& where) {
  if (params.contains("coords")) {
    std::vector<std::size_t> coords;
    for (const auto& c : params.at("coords")) coords.push_back(count(c, where + ".coords"));
    try {
      return Subspace::coordinate(ambient, coords);
    } catch (const ArgumentError& e) {
      fail(where, e.what());
    }
  }
  const Mat basis = matrix(field(params, "basis", where), where + ".basis");
  if (static_cast<std::size_t>(basis.rows()) != ambient)
    fail(where, "basis has " + std::to_string(basis.rows()) + " rows, ambient dimension is " + std::to_string(ambient));
  try {
    return Subspace::span(basis);
  } catch (const ArgumentError& e) {
    fail(where, e.what());
  }
}

std::string variant_of(const Json& spec, const std::string& where) {
  if (!spec.is_object()) fail(where, "expected an object");
  const Json& v = field(spec, "variant", where);
  if (!v.is_string()) fail(where, "'variant' must be a string");
  return v.get<std::string>();
}

std::optional<std::size_t> declared_dim(const Json& spec, const std::string& where) {
  if (!spec.contains("dim")) return std::nullopt;
  const std::size_t n = count(spec.at("dim"), where + ".dim");
  if (n == 0) fail(where, "dim must be positive");
  return n;
}

std::size_t required_dim(const Json& spec, const std::string& where) {
  const auto n = declared_dim(spec, where);
  if (!n) fail(where, "missing 'dim'");
  return *n;
}

const Json& params_of(const Json& spec) {
  static const Json empty = Json::object();
  return spec.contains("params") ? spec.at("params") : empty;
}

Body body_impl(const Json& spec, const std::string& where) {
  const std::string variant = variant_of(spec, where);
  const Json& p = params_of(spec);
  const std::string w = where + "(" + variant + ")";
  Body out = [&]() -> Body {
    if (variant == "euclidean_ball") {
      const Json* r = param(p, "radius", 0);
      return Body::euclidean_ball(required_dim(spec, w), r ? number(*r, w + ".radius") : 1.0);
    }
    if (variant == "lp_ball") {
      const Json* pp = param(p, "p", 0);
      if (!pp) fail(w, "missing 'p'");
      const Json* r = param(p, "radius", 1);
      return Body::lp_ball(required_dim(spec, w), number(*pp, w + ".p"), r ? number(*r, w + ".radius") : 1.0);
    }
    if (variant == "cube") {
      const Json* r = param(p, "radius", 0);
      if (!r) r = param(p, "half_width", 0);
      return Body::cube(required_dim(spec, w), r ? number(*r, w + ".radius") : 1.0);
    }
    if (variant == "cross_polytope") {
      const Json* r = param(p, "radius", 0);
      return Body::cross_polytope(required_dim(spec, w), r ? number(*r, w + ".radius") : 1.0);
    }
    if (variant == "ellipsoid") {
      if (p.is_object() && p.contains("semiaxes")) return Body::ellipsoid_from_semiaxes(vector(p.at("semiaxes"), w));
      return Body::ellipsoid(matrix_param(p, "shape", w));
    }
    if (variant == "h_polytope") return Body::h_polytope(matrix_param(p, "rows", w));
    if (variant == "v_polytope") return Body::v_polytope(matrix_param(p, "vertices", w));
    if (variant == "linear_image") {
      const Body inner = body_impl(field(p, "inner", w), w + ".inner");
      return linear_image(inner, matrix(field(p, "matrix", w), w + ".matrix"));
    }
    if (variant == "polar") return polar(body_impl(field(p, "inner", w), w + ".inner"));
    if (variant == "scaled") {
      const Body inner = body_impl(field(p, "inner", w), w + ".inner");
      return scaled(inner, number(field(p, "factor", w), w + ".factor"));
    }
    if (variant == "section" || variant == "projection") {
      const Body inner = body_impl(field(p, "inner", w), w + ".inner");
      const Subspace sub = subspace_param(p, inner.dim(), w);
      return variant == "section" ? section(inner, sub) : project(inner, sub);
    }
    fail(where, "unknown body variant '" + variant + "'");
  }();
  if (const auto n = declared_dim(spec, w); n && *n != out.dim())
    fail(w, "declared dim " + std::to_string(*n) + " but the body has dim " + std::to_string(out.dim()));
  return out;
}

Law1D law(const Json& j, const std::string& where) {
  const Json& name = field(j, "law", where);
  if (!name.is_string()) fail(where, "'law' must be a string");
  const std::string s = name.get<std::string>();
  const double x = j.contains("param") ? number(j.at("param"), where + ".param") : 1.0;
  if (!(std::isfinite(x) && x > 0.0)) fail(where, "law parameter must be positive and finite");
  if (s == "gaussian") return Law1D::gaussian(x);
  if (s == "symmetric_exponential") return Law1D::symmetric_exponential(x);
  if (s == "uniform") return Law1D::uniform(x);
  fail(where, "unknown law '" + s + "'");
}

Measure measure_impl(const Json& spec, const std::string& where) {
  const std::string variant = variant_of(spec, where);
  const Json& p = params_of(spec);
  const std::string w = where + "(" + variant + ")";
  Measure out = [&]() -> Measure {
    if (variant == "standard_gaussian") return Measure::standard_gaussian(required_dim(spec, w));
    if (variant == "product") {
      std::vector<Law1D> laws;
      if (p.is_object() && p.contains("laws")) {
        const Json& arr = p.at("laws");
        if (!arr.is_array() || arr.empty()) fail(w, "'laws' must be a nonempty array");
        for (std::size_t i = 0; i < arr.size(); ++i) laws.push_back(law(arr[i], w + ".laws[" + std::to_string(i) + "]"));
      } else {
        const Law1D one = law(p, w);
        laws.assign(required_dim(spec, w), one);
      }
      return Measure::product(laws);
    }
    if (variant == "uniform_on_body") return Measure::uniform_on_body(body_impl(field(p, "body", w), w + ".body"));
    if (variant == "linear_image") {
      const Measure inner = measure_impl(field(p, "inner", w), w + ".inner");
      return linear_image(inner, matrix(field(p, "matrix", w), w + ".matrix"));
    }
    if (variant == "marginal") {
      const Measure inner = measure_impl(field(p, "inner", w), w + ".inner");
      return marginal(inner, subspace_param(p, inner.dim(), w));
    }
    fail(where, "unknown measure variant '" + variant + "'");
  }();
  if (const auto n = declared_dim(spec, w); n && *n != out.dim())
    fail(w, "declared dim " + std::to_string(*n) + " but the measure has dim " + std::to_string(out.dim()));
  return out;
}

}  // namespace

Body body_from_json(const Json& spec) {
  try {
    return body_impl(spec, "body");
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("body: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("body: ") + e.what());
  }
}

Measure measure_from_json(const Json& spec) {
  try {
    return measure_impl(spec, "measure");
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
}

std::string json_digest(const Json& value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(value.dump())));
  return buf;
}

Json to_json(const EstimateCI& e) {
  return Json{{"value", e.value},
              {"std_err", e.std_err},
              {"n_samples", e.n_samples},
              {"seed", e.seed},
              {"method", to_string(e.method)}};
}

Json to_json(const BoundValue& b) {
  Json j{{"value", b.value},
         {"formula_id", b.formula_id},
         {"inputs_digest", b.inputs_digest()},
         {"interpolated", b.interpolated},
         {"valid", b.valid}};
  if (b.aux) j[b.aux_name.empty() ? "aux" : b.aux_name] = *b.aux;
  return j;
}

Json to_json(const ProfileCurve& c) {
  Json pts = Json::array();
  for (const auto& p : c.points) {
    Json e = to_json(p.estimate);
    e[c.index_name] = p.index;
    pts.push_back(std::move(e));
  }
  return Json{{"index_name", c.index_name},
              {"bias_note", to_string(c.bias_note)},
              {"interpolated", c.interpolated},
              {"points", std::move(pts)}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

}  // namespace convexa
