#pragma once

#include "convexa/body.hpp"
#include "convexa/bounds.hpp"
#include "convexa/estimate.hpp"
#include "convexa/measure.hpp"

#include <json.hpp>

#include <string>

namespace convexa {

using Json = nlohmann::json;

/// Version stamped into every emitted JSON / JSONL artifact.
inline constexpr int kSchemaVersion = 1;

/// Body from {"variant": ..., "dim": n, "params": ...}. Variants:
///   euclidean_ball  params {"radius"} or [radius]
///   lp_ball         params {"p", "radius"} or [p, radius]; p may be "inf"
///   cube, cross_polytope  params {"radius"} (half-width for the cube)
///   ellipsoid       params {"shape": matrix} | {"semiaxes": [...]} | matrix
///   h_polytope      params {"rows": matrix} | matrix
///   v_polytope      params {"vertices": matrix} | matrix
///   linear_image    params {"inner": body, "matrix": matrix}
///   polar           params {"inner": body}
///   scaled          params {"inner": body, "factor": f}
///   section, projection  params {"inner": body, "basis": n x k} | {"inner", "coords": [...]}
/// Matrices are arrays of rows. Throws ConfigError on malformed input.
Body body_from_json(const Json& spec);

/// Measure from {"variant": ..., "dim": n, "params": ...}. Variants:
///   standard_gaussian
///   product          params {"laws": [{"law": "gaussian"|"symmetric_exponential"|"uniform", "param": x}, ...]}
///                    or {"law": name, "param": x} repeated dim times
///   uniform_on_body  params {"body": body}
///   linear_image     params {"inner": measure, "matrix": matrix}
///   marginal         params {"inner": measure, "basis": n x k} | {"inner", "coords": [...]}
Measure measure_from_json(const Json& spec);

/// Stable 16-hex-digit digest of a JSON value (FNV-1a of its compact dump).
std::string json_digest(const Json& value);

Json to_json(const EstimateCI& e);
Json to_json(const BoundValue& b);
Json to_json(const ProfileCurve& c);

/// Reads and parses a JSON file; ConfigError when unreadable or malformed.
Json read_json_file(const std::string& path);

}  // namespace convexa
