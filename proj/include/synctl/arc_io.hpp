#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synctl/hybrid.hpp"

namespace synctl {

/// Extra per-sample columns (V, mu, ...) computed from (t, state) at export.
struct DerivedColumns {
  std::vector<std::string> names;
  std::function<std::vector<double>(double, const Vector&)> eval;
};

/// Serializes a double with 17 significant digits (round-trips exactly).
std::string format_double17(double v);

/// CSV with header `t,j,<state columns>,<derived columns>`, one row per
/// sample, phases contiguous.
void export_arc_csv(const HybridArc& arc, const std::string& path,
                    const std::vector<std::string>& state_names,
                    const DerivedColumns* derived = nullptr);

/// JSON object { meta, phases: [{ j, samples: [{t, state, derived}] }] }.
nlohmann::json arc_to_json(const HybridArc& arc, const std::vector<std::string>& state_names,
                           const DerivedColumns* derived, const nlohmann::json& meta);

void export_arc_json(const HybridArc& arc, const std::string& path,
                     const std::vector<std::string>& state_names, const DerivedColumns* derived,
                     const nlohmann::json& meta);

/// Raw CSV round-trip carrier.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string serialize() const;
};

CsvTable import_csv(const std::string& path);

/// Rebuilds an arc from a table with columns t, j, <state...>; extra columns
/// are ignored.
HybridArc arc_from_table(const CsvTable& table, int state_dim);

HybridArc arc_from_json(const nlohmann::json& j);

}  // namespace synctl
