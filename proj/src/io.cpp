#include "malab/io.hpp"

#include "malab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace malab {

namespace {

Point point_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError(std::string(what) + " must be a pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ConvexDomain domain_from_json(const json& j) {
  if (j.is_string()) {
    if (j == "unit_square") return ConvexDomain::unit_square();
    if (j == "unit_disc") return ConvexDomain::unit_disc();
    throw SchemaError("unknown domain name '" + j.get<std::string>() + "'");
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw SchemaError("domain needs a string field 'kind'");
  }
  const std::string kind = j["kind"];
  try {
    if (kind == "polygon") {
      if (!j.contains("vertices") || !j["vertices"].is_array()) throw SchemaError("polygon needs 'vertices'");
      std::vector<Point> v;
      for (const auto& p : j["vertices"]) v.push_back(point_from_json(p, "vertex"));
      const bool collinear = j.value("allow_collinear", false);
      return ConvexDomain::polygon(std::move(v), collinear);
    }
    if (kind == "disc") {
      if (!j.contains("radius") || !j["radius"].is_number()) throw SchemaError("disc needs a numeric 'radius'");
      const Point c = j.contains("center") ? point_from_json(j["center"], "center") : Point(0, 0);
      return ConvexDomain::disc(c, j["radius"].get<double>());
    }
  } catch (const ArgumentError& e) {
    throw SchemaError(std::string("invalid domain: ") + e.what());
  }
  throw SchemaError("unknown domain kind '" + kind + "'");
}

json domain_to_json(const ConvexDomain& domain) {
  if (domain.is_disc()) {
    return {{"kind", "disc"}, {"center", {domain.center().x(), domain.center().y()}}, {"radius", domain.radius()}};
  }
  json verts = json::array();
  for (const auto& v : domain.vertices()) verts.push_back({v.x(), v.y()});
  return {{"kind", "polygon"}, {"vertices", verts}};
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("missing CSV column '" + name + "'");
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  CsvTable t;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        throw ParseError("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError("empty CSV");
  if (t.rows.empty()) throw ParseError("CSV has a header but no rows");
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

CsvTable solution_table(const GridFunction& u) {
  CsvTable t;
  t.header = {"node_x", "node_y", "value"};
  const Grid& g = *u.grid;
  for (int i = 0; i < g.size(); ++i) t.rows.push_back({g.node(i).x(), g.node(i).y(), u.values[i]});
  return t;
}

GridFunction solution_from_table(const GridPtr& grid, const CsvTable& table) {
  const std::size_t cx = table.column("node_x"), cy = table.column("node_y"), cv = table.column("value");
  const double h = grid->spacing();
  GridFunction u(grid);
  std::vector<char> seen(grid->size(), 0);
  for (const auto& r : table.rows) {
    const int i = static_cast<int>(std::lround(r[cx] / h));
    const int j = static_cast<int>(std::lround(r[cy] / h));
    const int k = grid->node_at(i, j);
    if (k < 0 || (grid->node(k) - Point(r[cx], r[cy])).norm() > 1e-9 * h) {
      throw ParseError("CSV row at (" + format_double(r[cx]) + ", " + format_double(r[cy]) + ") is not a grid node");
    }
    u.values[k] = r[cv];
    seen[k] = 1;
  }
  for (int k = 0; k < grid->size(); ++k) {
    if (!seen[k]) throw ParseError("CSV is missing grid node " + std::to_string(k));
  }
  return u;
}

}  // namespace malab
