#include "malab/errors.hpp"
#include "malab/io.hpp"
#include "malab/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace malab;

TEST_CASE("doubles round-trip through their text form") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = U(rng) * std::pow(10.0, int(k % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("CSV tables") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1, 0.1}, {-2.5, 1e-300}};
  const CsvTable back = parse_csv(t.to_string());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("c"), ParseError);
  CHECK_THROWS_AS(parse_csv(""), ParseError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,x\n"), ParseError);
}

TEST_CASE("solutions round-trip through CSV") {
  const GridPtr g = build_grid(ConvexDomain::unit_disc(), 1.0 / 16);
  const auto u = sample(g, [](const Point& x) { return std::sin(x.x()) - 2; });
  const auto v = solution_from_table(g, parse_csv(solution_table(u).to_string()));
  CHECK(u.values == v.values);
}

TEST_CASE("domain descriptions") {
  const auto sq = domain_from_json("unit_square");
  CHECK(sq.is_polygon());
  CHECK(domain_from_json(json::parse(R"({"kind":"disc","center":[1,2],"radius":3})")).radius() == 3);
  const json poly = json::parse(R"({"kind":"polygon","vertices":[[0,0],[2,0],[0,1]]})");
  CHECK(domain_from_json(domain_to_json(domain_from_json(poly))).area() == doctest::Approx(1));
  CHECK_THROWS_AS(domain_from_json(json::parse(R"({"kind":"polygon","vertices":[[0,0],[0,1],[1,0]]})")),
                  SchemaError);
  CHECK_THROWS_AS(domain_from_json("triangle"), SchemaError);
  CHECK_THROWS_AS(domain_from_json(json::parse(R"({"kind":"disc","radius":-1,"center":[0,0]})")), SchemaError);
}

TEST_CASE("plots are deterministic and show every series") {
  Series measured{"measured", {0.01, 0.1, 0.3}, {0.02, 0.15, 0.3}, true};
  Series model{"model", {0.01, 0.1, 0.3}, {0.021, 0.14, 0.31}, false};
  PlotOptions o;
  o.log_x = o.log_y = true;
  const std::string a = line_plot({measured, model}, o);
  CHECK(a == line_plot({measured, model}, o));
  CHECK(a.find("measured") != std::string::npos);
  CHECK(a.find("model") != std::string::npos);
  CHECK(a.find("<polyline") != std::string::npos);
  CHECK_THROWS_AS(line_plot({}, o), ParseError);
  CHECK_THROWS_AS(line_plot({Series{"neg", {-1, -2}, {1, 2}}}, o), ParseError);
}
