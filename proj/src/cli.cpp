#include "synctl/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "synctl/arc_io.hpp"
#include "synctl/errors.hpp"
#include "synctl/kernels.hpp"
#include "synctl/stabilizer.hpp"

namespace synctl {

namespace {

using nlohmann::json;

json make_meta(const ScenarioConfig& cfg) {
  json meta;
  meta["config"] = cfg.echo;
  meta["seed"] = cfg.seed;
  meta["versions"] = {{"synctl", kVersion},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)}};
  return meta;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_arc(const ScenarioConfig& cfg, const HybridArc& arc,
               const std::vector<std::string>& state_names, const DerivedColumns& derived,
               std::ostream& log) {
  if (cfg.output.empty()) return;
  if (ends_with(cfg.output, ".json")) {
    export_arc_json(arc, cfg.output, state_names, &derived, make_meta(cfg));
  } else {
    export_arc_csv(arc, cfg.output, state_names, &derived);
  }
  log << "wrote " << arc.sample_count() << " samples to " << cfg.output << "\n";
}

void write_json_report(const ScenarioConfig& cfg, const json& body, std::ostream& log) {
  if (cfg.output.empty()) return;
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + cfg.output);
  json doc = body;
  doc["meta"] = make_meta(cfg);
  out << doc.dump(2) << "\n";
  log << "wrote report to " << cfg.output << "\n";
}

std::vector<std::string> sphere_state_names(int m) {
  std::vector<std::string> names;
  for (int i = 0; i < m; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 0; i < m; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

int run_sphere_sim(const ScenarioConfig& cfg, std::ostream& log) {
  const PotentialConfig& pc = cfg.potential_cfg();
  const HybridArc arc = simulate(pc, *cfg.x0, *cfg.y0, cfg.solver);
  const int m = pc.r.ambient_dim();
  DerivedColumns derived{{"V", "mu"}, [pc, m](double, const Vector& s) {
                           const double v = detail::potential_raw(pc, s.head(m), s.tail(m));
                           return std::vector<double>{
                               v, v - detail::min_over_y_raw(pc, s.head(m))};
                         }};
  write_arc(cfg, arc, sphere_state_names(m), derived, log);
  const DecayReport rep = check_exponential_decay(arc, pc);
  log << "jumps: " << arc.jump_count() << ", final geodesic distance to r: "
      << geodesic_distance(UnitVector(Vector(arc.last().state.head(m))), pc.r)
      << ", fitted decay rate: " << rep.lambda_emp << " (bound " << rep.lambda_bound << ")\n";
  return 0;
}

std::vector<std::string> quad_state_names() {
  std::vector<std::string> names{"px", "py", "pz", "vx", "vy", "vz"};
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) names.push_back("R" + std::to_string(r + 1) + std::to_string(c + 1));
  names.insert(names.end(), {"y0", "y1", "y2"});
  return names;
}

json gains_to_json(const PositionGains& g) {
  auto mat = [](const auto& m) {
    std::vector<double> flat;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
  };
  json j;
  j["K"] = mat(g.K);
  j["P"] = mat(g.P);
  j["Qhat"] = mat(g.Qhat);
  j["Rhat"] = mat(g.Rhat);
  j["H"] = mat(g.H);
  j["ellP"] = g.ellP;
  j["ellH"] = g.ellH;
  j["b"] = g.b;
  j["b_max"] = g.b_max;
  j["certificates"] = {{"epsilon", g.info.epsilon},
                       {"qr_residual_max_eig", g.info.qr_residual_max_eig},
                       {"ph_min_eig", g.info.ph_min_eig},
                       {"sv_sq", g.info.sv_sq},
                       {"sv_budget", g.info.sv_budget},
                       {"bark1_product_gg", g.info.bark1_product_gg},
                       {"bark1_product_unsquared", g.info.bark1_product_unsquared},
                       {"bark1_ok_gg", g.info.bark1_ok_gg},
                       {"bark1_ok_unsquared", g.info.bark1_ok_unsquared}};
  return j;
}

void log_gain_summary(const PositionGains& g, std::ostream& log) {
  log << "gain synthesis: epsilon = " << g.info.epsilon
      << ", qr residual max eig = " << g.info.qr_residual_max_eig
      << ", ph min eig = " << g.info.ph_min_eig << ", sv^2 = " << g.info.sv_sq << " (budget "
      << g.info.sv_budget << ")\n";
  if (!g.info.bark1_ok_gg) {
    log << "warning: k_p kbar1 lambda_1 = " << g.info.bark1_product_gg
        << " <= 1 under the squared-denominator lambda (unsquared variant: "
        << g.info.bark1_product_unsquared << ")\n";
  }
}

int run_quad_sim(const ScenarioConfig& cfg, std::ostream& log) {
  const PotentialConfig& pc = cfg.potential_cfg();
  const PositionGains gains = synthesize_gains(cfg.H, cfg.Rhat, cfg.Qhat0, cfg.sat, cfg.kbar1,
                                               cfg.kp, pc);
  log_gain_summary(gains, log);
  const HybridArc arc = simulate_tracking(cfg.quad_params, gains, pc, cfg.sat, cfg.k1, cfg.kp,
                                          cfg.reference, *cfg.quad_initial, cfg.solver);
  DerivedColumns derived{{"V", "mu", "norm_Kz", "kappa_u"},
                         [&cfg, gains, pc](double t, const Vector& s) {
                           const QuadDerived d = quad_derived(cfg.quad_params, gains, pc, cfg.sat,
                                                              cfg.reference, t, s);
                           return std::vector<double>{d.v1, d.mu, d.kz_norm, d.kappa_u};
                         }};
  write_arc(cfg, arc, quad_state_names(), derived, log);
  const TrackingMetrics m =
      tracking_metrics(arc, cfg.quad_params, gains, pc, cfg.sat, cfg.reference, cfg.kbar1);
  log << "jumps: " << arc.jump_count() << " (times:";
  for (double t : m.jump_times) log << " " << t;
  log << "), max |Kz| = " << m.max_kz_norm << (m.sat_bound_ok ? " <= b" : " EXCEEDS b")
      << ", final |p_err| = " << m.final_pos_err << ", |v_err| = " << m.final_vel_err << "\n";
  return 0;
}

int run_gains(const ScenarioConfig& cfg, std::ostream& log) {
  const PositionGains gains = synthesize_gains(cfg.H, cfg.Rhat, cfg.Qhat0, cfg.sat, cfg.kbar1,
                                               cfg.kp, cfg.potential_cfg());
  log_gain_summary(gains, log);
  write_json_report(cfg, json{{"gains", gains_to_json(gains)}}, log);
  return 0;
}

int run_verify(const ScenarioConfig& cfg, std::ostream& log) {
  const PropertyReport rep =
      verify_potential_properties(cfg.potential_cfg(), cfg.samples, cfg.seed, cfg.exec);
  json checks = json::array();
  for (const PropertyCheck& c : rep.checks) {
    log << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": violations " << c.violations << "/"
        << c.samples << ", observed [" << c.observed_lo << ", " << c.observed_hi << "]\n";
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"violations", c.violations},
                      {"samples", c.samples},
                      {"observed_lo", c.observed_lo},
                      {"observed_hi", c.observed_hi},
                      {"note", c.note}});
  }
  const ExpConstants ec = exp_constants(cfg.potential_cfg(), FlowSetGrid{}, cfg.exec);
  log << "exp constants: alpha_low = " << ec.alpha_low << ", alpha_up = " << ec.alpha_up
      << ", lambda = " << ec.lambda << ", V*_C grid = " << ec.v_flow_max << " (analytic bound "
      << ec.v_flow_max_bound << ")\n";
  write_json_report(cfg,
                    json{{"checks", checks},
                         {"all_pass", rep.all_pass()},
                         {"exp_constants",
                          {{"alpha_low", ec.alpha_low},
                           {"alpha_up", ec.alpha_up},
                           {"lambda", ec.lambda},
                           {"v_flow_max", ec.v_flow_max},
                           {"v_flow_max_bound", ec.v_flow_max_bound}}}},
                    log);
  return rep.all_pass() ? 0 : 3;
}

int run_geodesic_check(const ScenarioConfig& cfg, std::ostream& log) {
  const PotentialConfig& pc = cfg.potential_cfg();
  const HybridArc arc = simulate(pc, *cfg.x0, *cfg.y0, cfg.solver);
  const GeodesicReport rep = check_geodesic(arc, pc);
  constexpr double kTol = 1e-3;
  const bool pass = rep.abs_diff <= kTol;
  log << (pass ? "[pass] " : "[FAIL] ") << "path length " << rep.path_len
      << " vs geodesic distance " << rep.geodesic_dist << " (|diff| = " << rep.abs_diff
      << ", tol " << kTol << ")\n";
  write_json_report(cfg,
                    json{{"path_len", rep.path_len},
                         {"geodesic_dist", rep.geodesic_dist},
                         {"abs_diff", rep.abs_diff},
                         {"pass", pass}},
                    log);
  return pass ? 0 : 3;
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, std::ostream& log) {
  switch (cfg.mode) {
    case Mode::sphere_sim: return run_sphere_sim(cfg, log);
    case Mode::quad_sim: return run_quad_sim(cfg, log);
    case Mode::gains: return run_gains(cfg, log);
    case Mode::verify: return run_verify(cfg, log);
    case Mode::geodesic_check: return run_geodesic_check(cfg, log);
  }
  return 2;
}

int run(const std::string& config_path, Mode mode, const CliOverrides& overrides, std::ostream& log) {
  try {
    const ScenarioConfig cfg = load_config(config_path, mode, overrides);
    return run_scenario(cfg, log);
  } catch (const ValidationError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace synctl
