#include "synctl/config.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>

#include "synctl/errors.hpp"

namespace synctl {

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::sphere_sim: return "sphere-sim";
    case Mode::quad_sim: return "quad-sim";
    case Mode::gains: return "gains";
    case Mode::verify: return "verify";
    case Mode::geodesic_check: return "geodesic-check";
  }
  return "?";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "sphere-sim") return Mode::sphere_sim;
  if (name == "quad-sim") return Mode::quad_sim;
  if (name == "gains") return Mode::gains;
  if (name == "verify") return Mode::verify;
  if (name == "geodesic-check") return Mode::geodesic_check;
  return std::nullopt;
}

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

double get_number(const json& j, const std::string& path, const char* key, double fallback,
                  bool* present = nullptr) {
  if (!j.contains(key)) {
    if (present) *present = false;
    return fallback;
  }
  if (present) *present = true;
  if (!j[key].is_number()) fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

Vector get_vector(const json& j, const std::string& path, std::size_t expected) {
  if (!j.is_array()) fail(path, "expected an array of " + std::to_string(expected) + " numbers");
  if (expected != 0 && j.size() != expected) {
    fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path, "entry " + std::to_string(i) + " is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix6 get_matrix6(const json& j, const std::string& path, const Matrix6& fallback) {
  if (!j.contains(path.substr(path.rfind('.') + 1))) return fallback;
  const json& m = j[path.substr(path.rfind('.') + 1)];
  if (!m.is_array()) fail(path, "expected an array (6 diagonal entries or 36 row-major)");
  if (m.size() == 6) {
    Matrix6 out = Matrix6::Zero();
    for (int i = 0; i < 6; ++i) out(i, i) = m[static_cast<std::size_t>(i)].get<double>();
    return out;
  }
  if (m.size() == 36) {
    Matrix6 out;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) out(r, c) = m[static_cast<std::size_t>(r * 6 + c)].get<double>();
    return out;
  }
  fail(path, "expected 6 or 36 entries");
}

Eigen::Matrix3d get_matrix3(const json& parent, const std::string& path, const char* key,
                            const Eigen::Matrix3d& fallback) {
  if (!parent.contains(key)) return fallback;
  const json& m = parent[key];
  if (m.is_number()) return m.get<double>() * Eigen::Matrix3d::Identity();
  if (m.is_array() && m.size() == 3) {
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i) out(i, i) = m[static_cast<std::size_t>(i)].get<double>();
    return out;
  }
  if (m.is_array() && m.size() == 9) {
    Eigen::Matrix3d out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out(r, c) = m[static_cast<std::size_t>(r * 3 + c)].get<double>();
    return out;
  }
  fail(path + "." + key, "expected a scalar, 3 diagonal entries, or 9 row-major entries");
}

void require_spd(const Matrix6& m, const std::string& path) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) fail(path, "matrix must be symmetric");
  if (Eigen::SelfAdjointEigenSolver<Matrix6>(m).eigenvalues().minCoeff() <= 0.0) {
    fail(path, "matrix must be positive definite");
  }
}

UnitVector get_unit(const json& j, const std::string& path, std::size_t dim) {
  try {
    return UnitVector(get_vector(j, path, dim));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

Matrix6 default_h() {
  Matrix6 h = Matrix6::Zero();
  h.diagonal() << 500, 500, 500, 100, 100, 100;
  return h;
}

Matrix6 default_qhat0() {
  Matrix6 q = Matrix6::Zero();
  q.diagonal() << 10, 10, 100, 100, 100, 1;
  return q;
}

}  // namespace

ScenarioConfig load_config_json(const json& doc, Mode mode, const CliOverrides& overrides) {
  if (!doc.is_object()) throw ValidationError("config: root must be a JSON object");
  ScenarioConfig cfg;
  cfg.mode = mode;
  cfg.echo = doc;

  if (doc.contains("mode")) {
    const auto declared = mode_from_name(doc["mode"].get<std::string>());
    if (!declared) fail("mode", "unknown mode '" + doc["mode"].get<std::string>() + "'");
    if (*declared != mode) {
      fail("mode", "config declares '" + mode_name(*declared) + "' but the CLI ran '" +
                       mode_name(mode) + "'");
    }
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed", "expected an unsigned integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (doc.contains("samples")) {
    if (!doc["samples"].is_number_integer() || doc["samples"].get<long long>() < 1000) {
      fail("samples", "expected an integer >= 1000");
    }
    cfg.samples = doc["samples"].get<long long>();
  }
  if (doc.contains("output")) cfg.output = doc["output"].get<std::string>();
  if (overrides.output) cfg.output = *overrides.output;
  if (doc.contains("exec")) {
    const auto e = doc["exec"].get<std::string>();
    if (e == "serial") cfg.exec = Exec::serial;
    else if (e == "parallel") cfg.exec = Exec::parallel;
    else fail("exec", "expected 'serial' or 'parallel'");
  }

  // Quad block first so the potential's reference can default to r_body.
  const bool quad_mode = mode == Mode::quad_sim || mode == Mode::gains;
  const json quad = doc.value("quad", json::object());
  if (quad.contains("gravity")) {
    cfg.quad_params.gravity = Eigen::Vector3d(get_vector(quad["gravity"], "quad.gravity", 3));
  }
  if (quad.contains("r_body")) cfg.quad_params.r_body = get_unit(quad["r_body"], "quad.r_body", 3);
  cfg.reference.freq = get_number(quad, "quad", "freq", cfg.reference.freq);
  if (!(cfg.reference.freq > 0.0)) fail("quad.freq", "must be positive");
  if (quad.contains("saturation")) {
    const json& sj = quad["saturation"];
    cfg.sat.b = get_number(sj, "quad.saturation", "b", cfg.sat.b);
    cfg.sat.b_max = get_number(sj, "quad.saturation", "b_max", cfg.sat.b_max);
  }
  const json gains = quad.value("gains", json::object());
  cfg.H = get_matrix6(gains, "quad.gains.H", default_h());
  cfg.Qhat0 = get_matrix6(gains, "quad.gains.Qhat0", default_qhat0());
  cfg.Rhat = get_matrix3(gains, "quad.gains", "Rhat", 10.0 * Eigen::Matrix3d::Identity());
  cfg.kbar1 = get_number(gains, "quad.gains", "kbar1", cfg.kbar1);
  cfg.kp = get_number(gains, "quad.gains", "kp", cfg.kp);
  cfg.k1 = get_number(gains, "quad.gains", "k1", cfg.k1);
  if (!(cfg.kbar1 > 0.0)) fail("quad.gains.kbar1", "must be positive");
  if (!(cfg.kp > 0.0)) fail("quad.gains.kp", "must be positive");
  if (!(cfg.k1 > 0.0)) fail("quad.gains.k1", "must be positive");
  require_spd(cfg.H, "quad.gains.H");
  require_spd(cfg.Qhat0, "quad.gains.Qhat0");
  if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cfg.Rhat).eigenvalues().minCoeff() <= 0.0) {
    fail("quad.gains.Rhat", "matrix must be positive definite");
  }
  if (quad_mode) {
    try {
      validate_sat(cfg.sat, cfg.quad_params, cfg.reference);
    } catch (const ValidationError& e) {
      fail("quad.saturation", e.what());
    }
  }

  // Potential block.
  const json pot = doc.value("potential", json::object());
  UnitVector r = quad_mode ? cfg.quad_params.r_body : UnitVector{0.0, 0.0, 1.0};
  if (pot.contains("r")) {
    r = get_unit(pot["r"], "potential.r", quad_mode ? 3 : 0);
    if (quad_mode && (r.coords() - cfg.quad_params.r_body.coords()).norm() > 1e-9) {
      fail("potential.r", "must equal quad.r_body in quad modes (the attitude error lives on S^2 "
                          "relative to the body thrust axis)");
    }
  }
  const double k = get_number(pot, "potential", "k", 1.0);
  const double gamma = get_number(pot, "potential", "gamma", -0.5);
  const double delta = get_number(pot, "potential", "delta", 0.1);
  try {
    cfg.potential.emplace(r, k, gamma, delta);
  } catch (const std::invalid_argument& e) {
    fail("potential", e.what());
  }

  // Solver block.
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    cfg.solver.step = get_number(s, "solver", "step", cfg.solver.step);
    cfg.solver.event_tol = get_number(s, "solver", "event_tol", cfg.solver.event_tol);
    cfg.solver.max_time = get_number(s, "solver", "max_time", cfg.solver.max_time);
    cfg.solver.margin_tol = get_number(s, "solver", "margin_tol", cfg.solver.margin_tol);
    if (s.contains("max_jumps")) cfg.solver.max_jumps = s["max_jumps"].get<int>();
    if (s.contains("record_stride")) cfg.solver.record_stride = s["record_stride"].get<int>();
  }
  try {
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    fail("solver", e.what());
  }

  // Initial conditions.
  const json init = doc.value("initial", json::object());
  const PotentialConfig& pc = *cfg.potential;
  if (mode == Mode::sphere_sim || mode == Mode::geodesic_check) {
    if (init.contains("x")) {
      cfg.x0 = get_unit(init["x"], "initial.x", 0);
      if (cfg.x0->ambient_dim() != pc.r.ambient_dim()) {
        fail("initial.x", "ambient dimension mismatch with potential.r");
      }
    } else {
      fail("initial.x", "required for " + mode_name(mode));
    }
    if (init.contains("y")) {
      cfg.y0 = get_unit(init["y"], "initial.y", 0);
      if (cfg.y0->ambient_dim() != pc.r.ambient_dim()) {
        fail("initial.y", "ambient dimension mismatch with potential.r");
      }
      if (!pc.in_logic_set(*cfg.y0)) {
        fail("initial.y", "r^T y = " + std::to_string(pc.r.dot(*cfg.y0)) + " exceeds gamma = " +
                              std::to_string(pc.gamma) + " (y must lie in Y)");
      }
    } else if (mode == Mode::sphere_sim) {
      cfg.y0 = argmin_over_y(pc, *cfg.x0);  // gap-zero default
    } else {
      fail("initial.y", "required for geodesic-check (the run must start in the jump set)");
    }
  }
  if (mode == Mode::quad_sim) {
    const ReferenceSample r0 = reference_eval(cfg.reference, 0.0);
    Eigen::Vector3d p = init.contains("p") ? Eigen::Vector3d(get_vector(init["p"], "initial.p", 3)) : r0.p;
    Eigen::Vector3d v = init.contains("v") ? Eigen::Vector3d(get_vector(init["v"], "initial.v", 3)) : r0.v;
    Eigen::Matrix3d R = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    if (init.contains("R")) {
      const Vector flat = get_vector(init["R"], "initial.R", 9);
      for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc) R(rr, cc) = flat[rr * 3 + cc];
    }
    UnitVector y = init.contains("y") ? get_unit(init["y"], "initial.y", 3) : UnitVector{0.0, 0.0, 1.0};
    if (!pc.in_logic_set(y)) {
      fail("initial.y", "r^T y exceeds gamma (y must lie in Y)");
    }
    try {
      cfg.quad_initial = QuadFullState{p, v, Rotation(R), y};
    } catch (const std::invalid_argument& e) {
      fail("initial.R", e.what());
    }
  }

  return cfg;
}

ScenarioConfig load_config(const std::string& path, Mode mode, const CliOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("config: JSON parse failure in '" + path + "': " + e.what());
  }
  return load_config_json(doc, mode, overrides);
}

}  // namespace synctl
