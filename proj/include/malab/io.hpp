#pragma once

#include "malab/geometry.hpp"
#include "malab/grid.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace malab {

using json = nlohmann::json;

/// {"kind":"polygon","vertices":[[x,y],...]}, {"kind":"disc","center":[x,y],"radius":r}
/// or one of the names "unit_square", "unit_disc".
/// Throws SchemaError on malformed input or a violated geometry invariant.
ConvexDomain domain_from_json(const json& j);
json domain_to_json(const ConvexDomain& domain);

/// Seventeen significant digits ("%.17g"): exact round trip, byte-stable files.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws ParseError
  std::string to_string() const;
};

/// Throws ParseError on an empty file, a ragged row or a non-numeric cell.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

/// node_x, node_y, value
CsvTable solution_table(const GridFunction& u);
/// Matches rows to grid nodes by position; every node must be present.
GridFunction solution_from_table(const GridPtr& grid, const CsvTable& table);

}  // namespace malab
