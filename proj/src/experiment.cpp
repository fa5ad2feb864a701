#include "malab/experiment.hpp"

#include "malab/analysis.hpp"
#include "malab/eigensolver.hpp"
#include "malab/errors.hpp"
#include "malab/ma_solver.hpp"
#include "malab/svg.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <set>

namespace malab {

namespace fs = std::filesystem;

namespace {

class BusyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One run per output directory; the lock file is removed when the run ends.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".malab.lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST) throw BusyError("output directory '" + dir.string() + "' is locked by another run");
      throw std::runtime_error("cannot create lock file '" + path_.string() + "'");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

[[noreturn]] void schema(const std::string& msg) { throw SchemaError(msg); }

const json& field(const json& cfg, const char* key) {
  if (!cfg.contains(key)) schema(std::string("missing field '") + key + "'");
  return cfg[key];
}

double as_number(const json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  // "1/64" style fractions are accepted for grid spacings.
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    char* end = nullptr;
    if (slash != std::string::npos) {
      const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
      char* ea = nullptr;
      char* eb = nullptr;
      const double num = std::strtod(a.c_str(), &ea), den = std::strtod(b.c_str(), &eb);
      if (!a.empty() && !b.empty() && *ea == '\0' && *eb == '\0' && den != 0) return num / den;
    } else {
      const double x = std::strtod(s.c_str(), &end);
      if (!s.empty() && *end == '\0') return x;
    }
  }
  schema(what + " must be a number");
}

double num(const json& cfg, const char* key) { return as_number(field(cfg, key), std::string("'") + key + "'"); }
double num_or(const json& cfg, const char* key, double fallback) {
  return cfg.contains(key) ? num(cfg, key) : fallback;
}

int int_or(const json& cfg, const char* key, int fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg[key];
  if (!v.is_number_integer()) schema(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

std::string str(const json& cfg, const char* key) {
  const json& v = field(cfg, key);
  if (!v.is_string()) schema(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::string str_or(const json& cfg, const char* key, const std::string& fallback) {
  return cfg.contains(key) ? str(cfg, key) : fallback;
}

const std::set<std::string>& allowed_keys(const std::string& task) {
  static const std::set<std::string> grid_keys = {"task", "domain", "out", "seed", "h", "stencil_width",
                                                  "method", "tolerance", "max_sweeps", "damping_floor"};
  static const auto with = [](std::initializer_list<const char*> extra) {
    std::set<std::string> s = grid_keys;
    for (const char* k : extra) s.insert(k);
    return s;
  };
  static const std::map<std::string, std::set<std::string>> keys = {
      {"solve", with({"rhs"})},
      {"power", with({"p", "M", "omega", "tol", "max_iterations"})},
      {"eigen", with({"u0", "tol", "max_iterations", "ceiling_factor"})},
      {"barrier-check", {"task", "out", "seed", "variant", "params", "form", "p", "c", "samples", "region"}},
      {"profile", with({"u", "edge", "angle", "samples", "s"})},
      {"check", with({"u", "bound", "rhs_kind", "p", "M", "bound_tolerance"})},
      {"convergence", with({"rhs", "p", "M", "omega", "tol", "max_iterations"})},
  };
  const auto it = keys.find(task);
  if (it == keys.end()) schema("unknown task '" + task + "'");
  return it->second;
}

SolveOptions solve_options(const json& cfg, int threads) {
  SolveOptions o;
  o.tolerance = num_or(cfg, "tolerance", o.tolerance);
  o.max_sweeps = int_or(cfg, "max_sweeps", o.max_sweeps);
  o.stencil_width = int_or(cfg, "stencil_width", o.stencil_width);
  o.damping_floor = num_or(cfg, "damping_floor", o.damping_floor);
  const std::string method = str_or(cfg, "method", "damped_newton");
  if (method == "damped_newton") {
    o.method = SolveMethod::damped_newton;
  } else if (method == "gauss_seidel") {
    o.method = SolveMethod::gauss_seidel;
  } else {
    schema("unknown method '" + method + "'");
  }
  if (!(o.tolerance > 0)) schema("'tolerance' must be positive");
  if (o.stencil_width != 1 && o.stencil_width != 2) schema("'stencil_width' must be 1 or 2");
  if (o.max_sweeps < 0) schema("'max_sweeps' must be nonnegative");
  o.threads = threads;
  return o;
}

GridPtr grid_for(const json& cfg, const ConvexDomain& dom, double h) {
  try {
    return build_grid(dom, h, int_or(cfg, "stencil_width", 1));
  } catch (const ArgumentError& e) {
    schema(std::string("invalid grid: ") + e.what());
  }
}

Point centroid(const ConvexDomain& dom) {
  if (dom.is_disc()) return dom.center();
  const auto& v = dom.vertices();
  Point c = Point::Zero();
  double a2 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    const double cr = p.x() * q.y() - q.x() * p.y();
    a2 += cr;
    c += cr * (p + q);
  }
  return c / (3 * a2);
}

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

json solve_report_json(const SolveReport& r) {
  return {{"residual", r.residual}, {"sweeps", r.sweeps}, {"monotone", r.monotone}, {"method", to_string(r.method)}};
}

json grid_json(const Grid& g) {
  return {{"h", g.spacing()}, {"stencil_width", g.width()}, {"nodes", g.size()}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
  const json& cfg;
  fs::path dir;
  std::uint64_t seed;
  int threads;
  std::vector<std::string> files;
  json result = json::object();
  json extra = json::object();  // merged into report.json next to "result"
  json timing = json::object();

  void write(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_file_atomic(p.string(), text);
    files.push_back(p.string());
  }
};

StartSpec start_from(const std::string& u0, const GridPtr& grid) {
  if (u0 == "quadratic") return QuadraticStart{};
  if (u0.rfind("distpow:", 0) == 0) {
    const double e = as_number(json(u0.substr(8)), "u0 exponent");
    return DistPowerStart{e};
  }
  return ValuesStart{solution_from_table(grid, read_csv(u0)), std::nullopt};
}

GridFunction load_u(const json& cfg, const GridPtr& grid) { return solution_from_table(grid, read_csv(str(cfg, "u"))); }

PowerOptions power_options(const json& cfg, double h, int threads) {
  PowerOptions po;
  po.h = h;
  po.tolerance = num_or(cfg, "tol", po.tolerance);
  po.max_iterations = int_or(cfg, "max_iterations", po.max_iterations);
  if (cfg.contains("omega")) po.omega = num(cfg, "omega");
  po.solve = solve_options(cfg, threads);
  return po;
}

void task_solve(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const GridPtr grid = grid_for(run.cfg, dom, num(run.cfg, "h"));
  const GridFunction f = rhs_from_string(grid, str(run.cfg, "rhs"));
  const auto t0 = std::chrono::steady_clock::now();
  const Solution s = solve_dirichlet(f, solve_options(run.cfg, run.threads));
  run.timing["solve"] = seconds_since(t0);
  run.write("u.csv", solution_table(s.u).to_string());
  run.extra["grid"] = grid_json(*grid);
  run.result = solve_report_json(s.report);
  run.result["u_min"] = s.u.values.size() ? s.u.values.minCoeff() : 0.0;
  run.result["u_center"] = interpolate(s.u, centroid(dom));
}

void task_power(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const GridPtr grid = grid_for(run.cfg, dom, num(run.cfg, "h"));
  const double p = num(run.cfg, "p"), M = num_or(run.cfg, "M", 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  const PowerSolution s = solve_power(grid, p, M, power_options(run.cfg, grid->spacing(), run.threads));
  run.timing["power"] = seconds_since(t0);
  run.write("u.csv", solution_table(s.u).to_string());
  run.extra["grid"] = grid_json(*grid);
  const LipschitzStat lip = check_lipschitz(s.u);
  run.result = {{"p", p},
                {"M", M},
                {"iterations", s.iterations},
                {"change", s.change},
                {"sup_norm", s.u.sup_norm()},
                {"realized_constant", s.realized_constant},
                {"lipschitz", {{"constant", lip.constant}, {"location", point_json(lip.location)}}},
                {"last_solve", solve_report_json(s.report)}};
}

void task_eigen(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const GridPtr grid = grid_for(run.cfg, dom, num(run.cfg, "h"));
  EigenOptions eo;
  eo.h = grid->spacing();
  eo.tolerance = num_or(run.cfg, "tol", eo.tolerance);
  eo.max_iterations = int_or(run.cfg, "max_iterations", eo.max_iterations);
  eo.ceiling_factor = num_or(run.cfg, "ceiling_factor", eo.ceiling_factor);
  eo.keep_iterates = true;
  eo.solve = solve_options(run.cfg, run.threads);
  const auto t0 = std::chrono::steady_clock::now();
  const EigenReport rep = inverse_iteration(grid, start_from(str_or(run.cfg, "u0", "quadratic"), grid), eo);
  run.timing["eigen"] = seconds_since(t0);

  CsvTable hist;
  hist.header = {"k", "R", "change", "lipschitz"};
  Series rs{"R_k", {}, {}, true};
  for (std::size_t k = 0; k < rep.history.size(); ++k) {
    const double change = k == 0 ? std::numeric_limits<double>::quiet_NaN() : rep.change[k - 1];
    hist.rows.push_back({double(k), rep.history[k], change, check_lipschitz(rep.iterates[k].u).constant});
    rs.x.push_back(double(k));
    rs.y.push_back(rep.history[k]);
  }
  run.write("u.csv", solution_table(rep.eigenfunction).to_string());
  run.write("history.csv", hist.to_string());
  run.write("history.svg", line_plot({rs}, {"Rayleigh quotients", "iteration k", "R(u_k)"}));
  run.extra["grid"] = grid_json(*grid);
  run.result = {{"lambda", rep.lambda},
                {"converged", rep.converged},
                {"iterations", rep.iterations},
                {"ceiling", rep.ceiling},
                {"max_R", *std::max_element(rep.history.begin(), rep.history.end())},
                {"R0", rep.history.front()}};
}

SubsolutionTarget::Form parse_form(const std::string& s) {
  if (s == "abs_power") return SubsolutionTarget::Form::abs_power;
  if (s == "dist_power") return SubsolutionTarget::Form::dist_power;
  schema("unknown target form '" + s + "'");
}

Region region_from_json(const json& j, const BarrierSpec& spec) {
  Region r = natural_region(spec);
  if (!j.is_object()) schema("'region' must be an object");
  r.half_width = num_or(j, "half_width", r.half_width);
  r.xn_lo = num_or(j, "xn_lo", r.xn_lo);
  r.xn_hi = num_or(j, "xn_hi", r.xn_hi);
  const std::string shape = str_or(j, "shape", r.shape == Region::Shape::ball ? "ball" : "box");
  if (shape == "ball") {
    r.shape = Region::Shape::ball;
  } else if (shape == "box") {
    r.shape = Region::Shape::box;
  } else {
    schema("region shape must be 'ball' or 'box'");
  }
  return r;
}

void task_barrier(Run& run) {
  const BarrierSpec spec = barrier_from_json(str(run.cfg, "variant"), run.cfg.value("params", json::object()));
  const Region region = run.cfg.contains("region") ? region_from_json(run.cfg["region"], spec) : natural_region(spec);
  const int samples = int_or(run.cfg, "samples", 10000);
  if (samples < 0) schema("'samples' must be nonnegative");
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions vo;
  vo.threads = run.threads;
  BarrierReport rep;
  if (is_supersolution(spec)) {
    if (run.cfg.contains("p") || run.cfg.contains("c")) schema("supersolution checks take no 'p' or 'c'");
    rep = supersolution_det_bound(spec, region, samples, run.seed, vo);
  } else {
    const auto default_form = std::holds_alternative<PowerSub>(spec) ? "dist_power" : "abs_power";
    SubsolutionTarget target = proven_target(spec, parse_form(str_or(run.cfg, "form", default_form)));
    target.p = num_or(run.cfg, "p", target.p);
    target.c = num_or(run.cfg, "c", target.c);
    rep = verify_subsolution(spec, region, target, samples, run.seed, vo);
    run.result["target"] = {{"p", target.p}, {"c", target.c}};
  }
  run.timing["verify"] = seconds_since(t0);

  CsvTable t;
  t.header = {"sample_index"};
  for (int i = 0; i < region.n; ++i) t.header.push_back("x" + std::to_string(i + 1));
  for (const char* c : {"value", "det_closed", "det_fd", "margin_sub", "min_minor"}) t.header.push_back(c);
  for (const auto& s : rep.samples) {
    std::vector<double> row{double(s.index)};
    for (int i = 0; i < region.n; ++i) row.push_back(s.x[i]);
    row.insert(row.end(), {s.value, s.det_closed, s.det_fd, s.margin_sub, s.min_minor});
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) {
    // Degenerate region: header only.
    run.write("report.csv", [&] {
      std::string h;
      for (std::size_t i = 0; i < t.header.size(); ++i) h += (i ? "," : "") + t.header[i];
      return h + "\n";
    }());
  } else {
    run.write("report.csv", t.to_string());
  }
  run.extra["barrier"] = {{"variant", variant_name(spec)},
                          {"n", dimension(spec)},
                          {"region",
                           {{"half_width", region.half_width},
                            {"xn_lo", region.xn_lo},
                            {"xn_hi", region.xn_hi},
                            {"shape", region.shape == Region::Shape::ball ? "ball" : "box"}}}};
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  run.result.update({{"samples", rep.sample_count},
                     {"verdict", to_string(rep.verdict)},
                     {"det_inequality", to_string(rep.det_inequality)},
                     {"convexity", to_string(rep.convexity)},
                     {"sign", to_string(rep.sign)},
                     {"fd_agreement", to_string(rep.fd_agreement)},
                     {"min_margin", finite_or_null(rep.min_margin)},
                     {"min_rel_margin", finite_or_null(rep.min_rel_margin)},
                     {"min_minor_margin", finite_or_null(rep.min_minor_margin)},
                     {"max_fd_rel_error", rep.max_fd_rel_error},
                     {"fd_checked", rep.fd_checked}});
}

BoundaryPoint profile_point(const json& cfg, const ConvexDomain& dom) {
  if (dom.is_disc()) {
    if (cfg.contains("edge")) schema("discs have no edges; use 'angle'");
    const double t = num_or(cfg, "angle", 0.0);
    BoundaryPoint bp;
    bp.outward_normal = Point(std::cos(t), std::sin(t));
    bp.point = dom.center() + dom.radius() * bp.outward_normal;
    bp.parameter = t;
    return bp;
  }
  if (cfg.contains("angle")) schema("polygons take 'edge', not 'angle'");
  const int e = int_or(cfg, "edge", 0);
  if (e < 0 || e >= static_cast<int>(dom.edge_count())) schema("'edge' out of range");
  return edge_midpoint(dom, e);
}

void task_profile(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const GridPtr grid = grid_for(run.cfg, dom, num(run.cfg, "h"));
  const GridFunction u = load_u(run.cfg, grid);
  ProfileOptions po;
  po.samples = int_or(run.cfg, "samples", po.samples);
  po.s = num_or(run.cfg, "s", po.s);
  const GrowthProfile pr = profile_normal(u, profile_point(run.cfg, dom), po);

  CsvTable t;
  t.header = {"d", "abs_u", "model_fit"};
  Series measured{"|u|", {}, {}, true}, model{"fit", {}, {}, false};
  for (std::size_t i = 0; i < pr.d.size(); ++i) {
    const double m = pr.fit_model(pr.d[i]);
    t.rows.push_back({pr.d[i], pr.abs_u[i], m});
    measured.x.push_back(pr.d[i]);
    measured.y.push_back(pr.abs_u[i]);
    model.x.push_back(pr.d[i]);
    model.y.push_back(m);
  }
  run.write("profile.csv", t.to_string());
  char title[96];
  std::snprintf(title, sizeof title, "normal profile, beta = %.3f", pr.fit.beta);
  run.write("profile.svg", line_plot({measured, model}, {title, "dist", "|u|", true, true}));
  run.extra["grid"] = grid_json(*grid);
  run.result = {{"boundary_point", point_json(pr.boundary_point)},
                {"inward_normal", point_json(pr.inward_normal)},
                {"samples", pr.d.size()},
                {"fit",
                 {{"C", pr.fit.C},
                  {"beta", pr.fit.beta},
                  {"beta_raw", pr.fit.beta_raw},
                  {"gamma", pr.fit.gamma},
                  {"residual", pr.fit.residual}}}};
}

void task_check(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const GridPtr grid = grid_for(run.cfg, dom, num(run.cfg, "h"));
  const GridFunction u = load_u(run.cfg, grid);
  const BoundKind kind = parse_bound_kind(str(run.cfg, "bound"));
  RhsClass rhs;
  const std::string rk = str_or(run.cfg, "rhs_kind", kind == BoundKind::lipschitz_ii ? "dist_power" : "abs_power");
  if (rk == "dist_power") {
    rhs.kind = RhsClass::Kind::dist_power;
  } else if (rk == "abs_power") {
    rhs.kind = RhsClass::Kind::abs_power;
  } else {
    schema("'rhs_kind' must be dist_power or abs_power");
  }
  rhs.p = num(run.cfg, "p");
  rhs.M = num_or(run.cfg, "M", 1.0);
  const BoundCheck bc = pointwise_bound_check(u, kind, rhs, num_or(run.cfg, "bound_tolerance", 1e-8));
  run.extra["grid"] = grid_json(*grid);
  run.result = {{"bound", to_string(kind)},
                {"rhs_kind", rk},
                {"p", rhs.p},
                {"M", rhs.M},
                {"violations", bc.violations},
                {"worst_ratio", bc.worst_ratio},
                {"constant", bc.constant},
                {"nodes", bc.nodes}};
}

void task_convergence(Run& run) {
  const ConvexDomain dom = domain_from_json(field(run.cfg, "domain"));
  const json& hs = field(run.cfg, "h");
  if (!hs.is_array() || hs.size() < 2) schema("convergence needs an 'h' list with at least two entries");
  std::vector<double> h;
  for (const auto& v : hs) h.push_back(as_number(v, "h entry"));
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (!(h[i] < h[i - 1])) schema("'h' list must be strictly decreasing");
  }
  const bool power = run.cfg.contains("p");
  if (power == run.cfg.contains("rhs")) schema("convergence needs exactly one of 'rhs' and 'p'");

  const Point c = centroid(dom);
  std::vector<double> uc;
  json rows = json::array();
  CsvTable t;
  t.header = {"h", "u_center", "cauchy_ratio"};
  const auto t0 = std::chrono::steady_clock::now();
  for (double hk : h) {
    const GridPtr grid = grid_for(run.cfg, dom, hk);
    GridFunction u;
    if (power) {
      u = solve_power(grid, num(run.cfg, "p"), num_or(run.cfg, "M", 1.0), power_options(run.cfg, hk, run.threads)).u;
    } else {
      u = solve_dirichlet(rhs_from_string(grid, str(run.cfg, "rhs")), solve_options(run.cfg, run.threads)).u;
    }
    uc.push_back(interpolate(u, c));
    const std::size_t k = uc.size() - 1;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (k >= 2) ratio = std::abs(uc[k - 1] - uc[k - 2]) / std::abs(uc[k] - uc[k - 1]);
    t.rows.push_back({hk, uc[k], ratio});
    rows.push_back({{"h", hk}, {"nodes", grid->size()}, {"u_center", uc[k]},
                    {"cauchy_ratio", std::isfinite(ratio) ? json(ratio) : json(nullptr)}});
  }
  run.timing["convergence"] = seconds_since(t0);
  run.write("convergence.csv", t.to_string());
  Series s{"u(center)", h, uc, false};
  run.write("convergence.svg", line_plot({s}, {"self-convergence", "h", "u(center)", true, false}));
  run.result = {{"center", point_json(c)}, {"rows", rows}};
}

std::pair<int, std::string> classify(const std::exception& e) {
  if (dynamic_cast<const BusyError*>(&e)) return {kExitBusy, "BusyError"};
  if (dynamic_cast<const SchemaError*>(&e)) return {kExitInvalid, "SchemaError"};
  if (dynamic_cast<const ParseError*>(&e)) return {kExitInvalid, "ParseError"};
  if (dynamic_cast<const ArgumentError*>(&e)) return {kExitInvalid, "ArgumentError"};
  if (dynamic_cast<const DomainError*>(&e)) return {kExitInvalid, "DomainError"};
  if (dynamic_cast<const IterationLimitError*>(&e)) return {kExitNumerical, "IterationLimitError"};
  if (dynamic_cast<const InstabilityError*>(&e)) return {kExitNumerical, "InstabilityError"};
  if (dynamic_cast<const GeometryError*>(&e)) return {kExitNumerical, "GeometryError"};
  return {kExitFailure, "Error"};
}

json provenance(const json& cfg, std::uint64_t seed) {
  json modules = json::object();
  for (const char* m : {"geometry", "barriers", "ma_solver", "eigensolver", "analysis", "cli"}) modules[m] = kVersion;
  return {{"config_hash", config_hash(cfg)}, {"version", kVersion}, {"modules", modules}, {"seed", seed}};
}

}  // namespace

std::string config_hash(const json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BarrierSpec barrier_from_json(const std::string& variant, const json& params) {
  if (!params.is_object()) schema("barrier 'params' must be an object");
  const int n = int_or(params, "n", 2);
  try {
    if (variant == "LipschitzSub") return make_lipschitz_sub(n, num(params, "a"), num_or(params, "D", 1.0));
    if (variant == "PowerSub") return make_power_sub(n, num(params, "alpha"), num_or(params, "D", 1.0));
    if (variant == "LogSub") return make_log_sub(n, num_or(params, "D", 1.0));
    if (variant == "LogSuper") return make_log_super(n);
    if (variant == "FlatLogSuper") return make_flat_log_super(n, num(params, "s"));
  } catch (const ArgumentError& e) {
    schema(std::string("invalid barrier parameters: ") + e.what());
  }
  schema("unknown barrier variant '" + variant + "'");
}

GridFunction rhs_from_string(const GridPtr& grid, const std::string& rhs) {
  const auto value = [&](std::size_t prefix) { return as_number(json(rhs.substr(prefix)), "rhs parameter"); };
  GridFunction f(grid);
  if (rhs.rfind("const:", 0) == 0) {
    const double c = value(6);
    if (!(c >= 0) || !std::isfinite(c)) schema("constant rhs must be finite and nonnegative");
    f.values.setConstant(c);
    return f;
  }
  if (rhs.rfind("distpow:", 0) == 0) {
    const double p = value(8);
    if (!(p >= 0) || !std::isfinite(p)) schema("distpow exponent must be finite and nonnegative");
    for (int i = 0; i < grid->size(); ++i) f.values[i] = std::pow(grid->distance(i), p);
    return f;
  }
  return solution_from_table(grid, read_csv(rhs));
}

RunOutcome run_experiment(const json& config, const RunOptions& opts) {
  RunOutcome out;
  out.out_dir = opts.out_dir.value_or("out");
  std::string task = "?";
  std::uint64_t seed = opts.seed.value_or(1);
  std::unique_ptr<DirLock> lock;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (!opts.out_dir && config.is_object() && config.contains("out") && config["out"].is_string()) {
      out.out_dir = config["out"].get<std::string>();
    }
    lock = std::make_unique<DirLock>(out.out_dir);
    if (!config.is_object()) schema("config must be a JSON object");
    task = str(config, "task");
    const auto& keys = allowed_keys(task);
    for (const auto& [k, v] : config.items()) {
      if (!keys.count(k)) schema("unexpected field '" + k + "' for task '" + task + "'");
    }
    if (config.contains("out") && !config["out"].is_string()) schema("'out' must be a string");
    if (!opts.seed && config.contains("seed")) {
      if (!config["seed"].is_number_unsigned()) schema("'seed' must be a nonnegative integer");
      seed = config["seed"].get<std::uint64_t>();
    }

    Run run{config, fs::path(out.out_dir), seed, std::max(1, opts.threads), {}};
    if (task == "solve") task_solve(run);
    if (task == "power") task_power(run);
    if (task == "eigen") task_eigen(run);
    if (task == "barrier-check") task_barrier(run);
    if (task == "profile") task_profile(run);
    if (task == "check") task_check(run);
    if (task == "convergence") task_convergence(run);

    json report = {{"task", task}, {"status", "ok"}, {"provenance", provenance(config, seed)}};
    if (config.contains("domain")) report["domain"] = domain_to_json(domain_from_json(config["domain"]));
    report.update(run.extra);
    report["result"] = run.result;
    json names = json::array();
    for (const auto& f : run.files) names.push_back(fs::path(f).filename().string());
    report["outputs"] = names;
    if (task == "check") run.write("check.json", report.dump(2) + "\n");
    run.write("report.json", report.dump(2) + "\n");
    run.timing["total"] = seconds_since(start);
    run.timing["threads"] = run.threads;
    run.write("timing.json", run.timing.dump(2) + "\n");
    out.files = run.files;
    out.report = std::move(report);
    out.exit_code = kExitOk;
  } catch (const std::exception& e) {
    const auto [code, type] = classify(e);
    out.exit_code = code;
    out.report = {{"task", task},
                  {"status", "error"},
                  {"error", {{"type", type}, {"message", e.what()}, {"exit_code", code}}}};
    if (const auto* it = dynamic_cast<const IterationLimitError*>(&e)) {
      out.report["error"]["last_residual"] = it->last_residual();
    }
    if (config.is_object()) out.report["provenance"] = provenance(config, seed);
    if (lock) {
      try {
        const std::string path = (fs::path(out.out_dir) / "error.json").string();
        write_file_atomic(path, out.report.dump(2) + "\n");
        out.files.push_back(path);
      } catch (const std::exception&) {
        // The error document is still returned to the caller.
      }
    }
  }
  return out;
}

}  // namespace malab
