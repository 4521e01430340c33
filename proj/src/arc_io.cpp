#include "synctl/arc_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace synctl {

std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> header_columns(const std::vector<std::string>& state_names,
                                        const DerivedColumns* derived) {
  std::vector<std::string> cols{"t", "j"};
  cols.insert(cols.end(), state_names.begin(), state_names.end());
  if (derived) cols.insert(cols.end(), derived->names.begin(), derived->names.end());
  return cols;
}

void write_or_throw(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void export_arc_csv(const HybridArc& arc, const std::string& path,
                    const std::vector<std::string>& state_names, const DerivedColumns* derived) {
  std::ostringstream os;
  const auto cols = header_columns(state_names, derived);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const Phase& ph : arc.phases) {
    for (const Sample& s : ph.samples) {
      os << format_double17(s.t) << "," << ph.jump_index;
      for (Eigen::Index i = 0; i < s.state.size(); ++i) os << "," << format_double17(s.state[i]);
      if (derived) {
        for (double d : derived->eval(s.t, s.state)) os << "," << format_double17(d);
      }
      os << "\n";
    }
  }
  write_or_throw(path, os.str());
}

nlohmann::json arc_to_json(const HybridArc& arc, const std::vector<std::string>& state_names,
                           const DerivedColumns* derived, const nlohmann::json& meta) {
  nlohmann::json j;
  j["meta"] = meta;
  j["state_columns"] = state_names;
  if (derived) j["derived_columns"] = derived->names;
  nlohmann::json phases = nlohmann::json::array();
  for (const Phase& ph : arc.phases) {
    nlohmann::json jp;
    jp["j"] = ph.jump_index;
    nlohmann::json samples = nlohmann::json::array();
    for (const Sample& s : ph.samples) {
      nlohmann::json js;
      js["t"] = s.t;
      js["state"] = std::vector<double>(s.state.data(), s.state.data() + s.state.size());
      if (derived) js["derived"] = derived->eval(s.t, s.state);
      samples.push_back(std::move(js));
    }
    jp["samples"] = std::move(samples);
    phases.push_back(std::move(jp));
  }
  j["phases"] = std::move(phases);
  return j;
}

void export_arc_json(const HybridArc& arc, const std::string& path,
                     const std::vector<std::string>& state_names, const DerivedColumns* derived,
                     const nlohmann::json& meta) {
  write_or_throw(path, arc_to_json(arc, state_names, derived, meta).dump(2) + "\n");
}

std::string CsvTable::serialize() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      if (i == 1) {
        os << static_cast<long long>(row[i]);  // jump index column
      } else {
        os << format_double17(row[i]);
      }
    }
    os << "\n";
  }
  return os.str();
}

CsvTable import_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.columns.size()) {
      throw std::runtime_error("CSV row width mismatch in " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

HybridArc arc_from_table(const CsvTable& table, int state_dim) {
  if (table.columns.size() < static_cast<std::size_t>(2 + state_dim)) {
    throw std::runtime_error("arc_from_table: too few columns");
  }
  HybridArc arc;
  for (const auto& row : table.rows) {
    const int j = static_cast<int>(row[1]);
    if (arc.phases.empty() || arc.phases.back().jump_index != j) {
      arc.phases.push_back(Phase{j, {}});
    }
    Vector state(state_dim);
    for (int i = 0; i < state_dim; ++i) state[i] = row[static_cast<std::size_t>(2 + i)];
    arc.phases.back().samples.push_back(Sample{row[0], std::move(state)});
  }
  return arc;
}

HybridArc arc_from_json(const nlohmann::json& j) {
  HybridArc arc;
  for (const auto& jp : j.at("phases")) {
    Phase ph;
    ph.jump_index = jp.at("j").get<int>();
    for (const auto& js : jp.at("samples")) {
      const auto vals = js.at("state").get<std::vector<double>>();
      Vector state = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      ph.samples.push_back(Sample{js.at("t").get<double>(), std::move(state)});
    }
    arc.phases.push_back(std::move(ph));
  }
  return arc;
}

}  // namespace synctl
