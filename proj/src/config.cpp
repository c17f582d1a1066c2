#include "biot/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>

namespace biot {

std::string to_string(Study study) {
  switch (study) {
  case Study::Convergence: return "convergence";
  case Study::Benchmark: return "benchmark";
  case Study::Single: return "run";
  }
  return "unknown";
}

std::string to_string(CaseKind kind) {
  return kind == CaseKind::Manufactured ? "manufactured" : "benchmark";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void invalid(const std::string& key, const std::string& value,
                          const std::string& accepted) {
  throw ConfigError(ConfigError::Kind::InvalidValue, key,
                    "invalid value '" + value + "' for key '" + key + "': expected " + accepted);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &pos);
  } catch (const std::exception&) {
    invalid(key, value, "a number");
  }
  if (pos != value.size() || !std::isfinite(x)) invalid(key, value, "a finite number");
  return x;
}

double parse_positive(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  if (!(x > 0.0)) invalid(key, value, "a positive number");
  return x;
}

double parse_nonnegative(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  if (x < 0.0) invalid(key, value, "a non-negative number");
  return x;
}

int parse_int(const std::string& key, const std::string& value, int lo, int hi) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || x < lo || x > hi) {
    invalid(key, value, "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  invalid(key, value, "true or false");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

Study parse_study(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "convergence") return Study::Convergence;
  if (v == "benchmark") return Study::Benchmark;
  if (v == "run" || v == "single") return Study::Single;
  invalid(key, value, "convergence, benchmark or run");
}

CaseKind parse_case(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "manufactured") return CaseKind::Manufactured;
  if (v == "benchmark") return CaseKind::Benchmark;
  invalid(key, value, "manufactured or benchmark");
}

const std::map<LSegment, std::string>& segment_names() {
  static const std::map<LSegment, std::string> names{
      {LSegment::Bottom, "bottom"},        {LSegment::Left, "left"},
      {LSegment::TopLoaded, "top_loaded"}, {LSegment::TopRight, "top_right"},
      {LSegment::RightOuter, "right"},     {LSegment::NotchTop, "notch_top"},
      {LSegment::NotchSide, "notch_side"}};
  return names;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string sci(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9e", x);
  return buf;
}

/// Working state while entries are applied.
struct Draft {
  RunConfig config;
  double E = 0.0;
  double nu = 0.0;
  std::optional<double> gamma_a;
  std::optional<double> gamma_b;

  MaterialParams& params() {
    return config.effective_case() == CaseKind::Manufactured ? config.manufactured.params
                                                             : config.benchmark.params;
  }
};

using Setter = std::function<void(Draft&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table{
      {"study", [](Draft&, const std::string&, const std::string&) {}},
      {"case", [](Draft&, const std::string&, const std::string&) {}},
      {"scheme",
       [](Draft& d, const std::string& key, const std::string& value) {
         const std::string v = lower(value);
         if (v == "dg") d.config.scheme = TimeScheme::dG;
         else if (v == "cg") d.config.scheme = TimeScheme::cG;
         else invalid(key, value, "dG or cG");
       }},
      {"k", [](Draft& d, const std::string& key,
               const std::string& value) { d.config.k = parse_int(key, value, 0, 8); }},
      {"r", [](Draft& d, const std::string& key,
               const std::string& value) { d.config.r = parse_int(key, value, 2, 8); }},
      {"levels",
       [](Draft& d, const std::string& key, const std::string& value) {
         std::vector<int> levels;
         for (const auto& item : split_list(value)) levels.push_back(parse_int(key, item, 0, 8));
         if (levels.empty()) invalid(key, value, "a non-empty comma-separated list of levels");
         d.config.levels = levels;
       }},
      {"solver",
       [](Draft& d, const std::string& key, const std::string& value) {
         try {
           d.config.solver.kind = solver_kind_from_string(lower(value));
         } catch (const InvalidArgument&) {
           invalid(key, value, "gmres, direct or diagonalized");
         }
       }},
      {"gmres_tol",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.config.solver.gmres.rel_tol = parse_positive(key, value);
       }},
      {"gmres_max_iter",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.config.solver.gmres.max_iter = parse_int(key, value, 1, 1000000);
       }},
      {"gmres_restart",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.config.solver.gmres.restart = parse_int(key, value, 1, 10000);
       }},
      {"direct_fallback",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.config.solver.direct_fallback = parse_bool(key, value);
       }},
      {"out",
       [](Draft& d, const std::string& key, const std::string& value) {
         if (value.empty()) invalid(key, value, "a directory path");
         d.config.out = value;
       }},
      {"E", [](Draft& d, const std::string& key,
               const std::string& value) { d.E = parse_positive(key, value); }},
      {"nu",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.nu = parse_double(key, value);
         if (d.nu < 0.0 || d.nu >= 0.5) invalid(key, value, "a number in [0, 0.5)");
       }},
      {"rho", [](Draft& d, const std::string& key,
                 const std::string& value) { d.params().rho = parse_positive(key, value); }},
      {"alpha", [](Draft& d, const std::string& key,
                   const std::string& value) { d.params().alpha = parse_double(key, value); }},
      {"c0", [](Draft& d, const std::string& key,
                const std::string& value) { d.params().c0 = parse_nonnegative(key, value); }},
      {"K11", [](Draft& d, const std::string& key,
                 const std::string& value) { d.params().K(0, 0) = parse_positive(key, value); }},
      {"K12",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.params().K(0, 1) = d.params().K(1, 0) = parse_double(key, value);
       }},
      {"K22", [](Draft& d, const std::string& key,
                 const std::string& value) { d.params().K(1, 1) = parse_positive(key, value); }},
      {"gamma_a", [](Draft& d, const std::string& key,
                     const std::string& value) { d.gamma_a = parse_positive(key, value); }},
      {"gamma_b", [](Draft& d, const std::string& key,
                     const std::string& value) { d.gamma_b = parse_positive(key, value); }},
      {"penalty_length",
       [](Draft& d, const std::string& key, const std::string& value) {
         const std::string v = lower(value);
         PenaltyLength length = PenaltyLength::Harmonic;
         if (v == "harmonic") length = PenaltyLength::Harmonic;
         else if (v == "area") length = PenaltyLength::AveragedArea;
         else invalid(key, value, "harmonic or area");
         d.config.manufactured.assembly.penalty_length = length;
         d.config.benchmark.assembly.penalty_length = length;
       }},
      {"quadrature_points",
       [](Draft& d, const std::string& key, const std::string& value) {
         const int n = parse_int(key, value, 0, 20);
         d.config.manufactured.assembly.quadrature_points = n;
         d.config.benchmark.assembly.quadrature_points = n;
       }},
      {"T",
       [](Draft& d, const std::string& key, const std::string& value) {
         const double T = parse_positive(key, value);
         d.config.manufactured.T = T;
         d.config.benchmark.T = T;
       }},
      {"tau0",
       [](Draft& d, const std::string& key, const std::string& value) {
         const double tau0 = parse_positive(key, value);
         d.config.manufactured.tau0 = tau0;
         d.config.benchmark.tau0 = tau0;
       }},
      {"tau", [](Draft& d, const std::string& key,
                 const std::string& value) { d.config.tau = parse_nonnegative(key, value); }},
      {"base_cells",
       [](Draft& d, const std::string& key, const std::string& value) {
         d.config.manufactured.base_cells = parse_int(key, value, 1, 1024);
       }},
      {"omega1", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.manufactured.omega1 = parse_double(key, value);
       }},
      {"omega2", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.manufactured.omega2 = parse_double(key, value);
       }},
      {"notch_x", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.benchmark.geometry.notch_x = parse_positive(key, value);
       }},
      {"notch_y", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.benchmark.geometry.notch_y = parse_positive(key, value);
       }},
      {"load_end", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.benchmark.geometry.load_end = parse_positive(key, value);
       }},
      {"coarse_size", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.benchmark.geometry.coarse_size = parse_positive(key, value);
       }},
      {"rollers",
       [](Draft& d, const std::string& key, const std::string& value) {
         std::vector<LSegment> rollers;
         for (const auto& item : split_list(value)) {
           const std::string v = lower(item);
           if (v == "none") continue;
           bool found = false;
           for (const auto& [segment, name] : segment_names()) {
             if (name == v) {
               rollers.push_back(segment);
               found = true;
             }
           }
           if (!found) {
             invalid(key, item,
                     "a list of bottom, left, top_loaded, top_right, right, notch_top, "
                     "notch_side or none");
           }
         }
         d.config.benchmark.geometry.rollers = rollers;
       }},
      {"traction_direction",
       [](Draft& d, const std::string& key, const std::string& value) {
         const std::string v = lower(value);
         if (v == "vertical") d.config.benchmark.direction = TractionDirection::Vertical;
         else if (v == "normal") d.config.benchmark.direction = TractionDirection::Normal;
         else invalid(key, value, "vertical or normal");
       }},
      {"window_start", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.window_start = parse_nonnegative(key, value);
       }},
      {"window_end", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.window_end = parse_nonnegative(key, value);
       }},
      {"period_start", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.period_start = parse_nonnegative(key, value);
       }},
      {"dump_mesh", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.dump_mesh = parse_bool(key, value);
       }},
      {"dump_matrices", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.dump_matrices = parse_bool(key, value);
       }},
      {"checkpoint_every", [](Draft& d, const std::string& key, const std::string& value) {
         d.config.checkpoint_every = parse_int(key, value, 0, std::numeric_limits<int>::max());
       }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [name, setter] : setters()) {
    if (name == key) return &setter;
  }
  return nullptr;
}

} // namespace

std::vector<ConfigEntry> read_config_entries(std::istream& in) {
  std::vector<ConfigEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(ConfigError::Kind::Syntax, "",
                        "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(ConfigError::Kind::Syntax, "",
                        "line " + std::to_string(line_no) + ": missing key");
    }
    entries.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return entries;
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Kind::InvalidValue, "config",
                      "cannot read config file '" + path.string() + "'");
  }
  return read_config_entries(in);
}

CaseKind RunConfig::effective_case() const {
  switch (study) {
  case Study::Convergence: return CaseKind::Manufactured;
  case Study::Benchmark: return CaseKind::Benchmark;
  case Study::Single: return case_kind;
  }
  return case_kind;
}

double RunConfig::final_time() const {
  return effective_case() == CaseKind::Manufactured ? manufactured.T : benchmark.T;
}

std::pair<double, double> RunConfig::window() const {
  const double T = final_time();
  const double end = window_end >= 0.0 ? window_end : T;
  const double start = window_start >= 0.0 ? window_start : std::max(0.0, end - 1.0);
  return {start, end};
}

double RunConfig::period_from() const {
  return period_start >= 0.0 ? period_start : 0.25 * final_time();
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& key, const std::string& message) {
    throw ConfigError(ConfigError::Kind::InvalidValue, key, message);
  };
  if (scheme == TimeScheme::cG && k < 1) fail("k", "cG requires k >= 1");
  if (k < 0) fail("k", "k must be non-negative");
  if (r < 2) fail("r", "r must be at least 2");
  if (levels.empty()) fail("levels", "at least one level is required");
  if (study == Study::Single && levels.size() != 1) {
    fail("levels", "a single run takes exactly one level");
  }
  const CaseKind kind = effective_case();
  const MaterialParams& prm = kind == CaseKind::Manufactured ? manufactured.params : benchmark.params;
  try {
    prm.validate();
  } catch (const InvalidArgument& e) {
    fail("params", e.what());
  }
  const double T = final_time();
  for (int level : levels) {
    double step = 0.0;
    if (kind == CaseKind::Manufactured) {
      step = manufactured.tau(level);
    } else {
      step = tau > 0.0 ? tau : benchmark.tau(level);
    }
    const double n = T / step;
    if (std::abs(n - std::round(n)) > 1e-9 * n || std::round(n) < 1.0) {
      fail(tau > 0.0 ? "tau" : "tau0", "T = " + fmt(T) + " is not a multiple of the slab length " +
                                           fmt(step) + " at level " + std::to_string(level));
    }
  }
  if (kind == CaseKind::Benchmark) {
    const auto [a, b] = window();
    if (!(a < b) || a < 0.0 || b > T + 1e-12) {
      fail("window_start", "the window [" + fmt(a) + ", " + fmt(b) + "] must lie in [0, T]");
    }
    if (period_from() >= T) fail("period_start", "period_start must be less than T");
    const LShapeGeometry& g = benchmark.geometry;
    if (g.notch_x >= 1.0 || g.notch_y >= 1.0 || g.load_end > 1.0) {
      fail("notch_x", "notch and loaded segment must lie inside the unit square");
    }
  }
  if (kind == CaseKind::Manufactured && manufactured.base_cells < 1) {
    fail("base_cells", "base_cells must be positive");
  }
}

RunConfig default_config(Study study) {
  RunConfig c;
  c.study = study;
  if (study == Study::Benchmark) {
    c.case_kind = CaseKind::Benchmark;
    c.r = 3;
    c.levels = {0, 1};
  } else if (study == Study::Single) {
    c.levels = {0};
  }
  c.manufactured = ManufacturedCase::defaults(c.r);
  c.benchmark = BenchmarkCase::defaults(c.r);
  return c;
}

RunConfig make_config(const std::vector<ConfigEntry>& entries, std::optional<Study> study) {
  Study chosen = study.value_or(Study::Convergence);
  std::optional<CaseKind> kind;
  for (const auto& [key, value] : entries) {
    if (key == "study") chosen = parse_study(key, value);
    if (key == "case") kind = parse_case(key, value);
  }
  Draft d;
  d.config = default_config(chosen);
  if (chosen == Study::Single && kind) {
    d.config.case_kind = *kind;
    if (*kind == CaseKind::Benchmark) d.config.r = 3;
  }
  const bool manufactured = d.config.effective_case() == CaseKind::Manufactured;
  d.E = manufactured ? d.config.manufactured.E : d.config.benchmark.E;
  d.nu = manufactured ? d.config.manufactured.nu : d.config.benchmark.nu;

  for (const auto& [key, value] : entries) {
    const Setter* setter = find_setter(key);
    if (!setter) {
      throw ConfigError(ConfigError::Kind::UnknownKey, key, "unknown config key '" + key + "'");
    }
    (*setter)(d, key, value);
  }

  RunConfig& c = d.config;
  const Lame lame = lame_from_E_nu(d.E, d.nu);
  for (auto* prm : {&c.manufactured.params, &c.benchmark.params}) {
    prm->lambda = lame.lambda;
    prm->mu = lame.mu;
    prm->with_default_penalties(c.r);
    if (d.gamma_a) prm->gamma_a = *d.gamma_a;
    if (d.gamma_b) prm->gamma_b = *d.gamma_b;
  }
  if (manufactured) {
    c.manufactured.E = d.E;
    c.manufactured.nu = d.nu;
  } else {
    c.benchmark.E = d.E;
    c.benchmark.nu = d.nu;
  }
  c.validate();
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : setters()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

std::string describe(const RunConfig& c) {
  const bool manufactured = c.effective_case() == CaseKind::Manufactured;
  const MaterialParams& prm = manufactured ? c.manufactured.params : c.benchmark.params;
  const AssemblyOptions& asm_opts = manufactured ? c.manufactured.assembly : c.benchmark.assembly;
  std::ostringstream os;
  os << "study=" << to_string(c.study) << " case=" << to_string(c.effective_case())
     << " scheme=" << to_string(c.scheme) << " k=" << c.k << " r=" << c.r << " levels=";
  for (std::size_t i = 0; i < c.levels.size(); ++i) os << (i ? "," : "") << c.levels[i];
  os << " solver=" << to_string(c.solver.kind) << " gmres_tol=" << fmt(c.solver.gmres.rel_tol)
     << " gmres_max_iter=" << c.solver.gmres.max_iter
     << " gmres_restart=" << c.solver.gmres.restart
     << " direct_fallback=" << (c.solver.direct_fallback ? "true" : "false")
     << " out=" << c.out.string();
  os << " E=" << fmt(manufactured ? c.manufactured.E : c.benchmark.E)
     << " nu=" << fmt(manufactured ? c.manufactured.nu : c.benchmark.nu)
     << " lambda=" << fmt(prm.lambda) << " mu=" << fmt(prm.mu) << " rho=" << fmt(prm.rho)
     << " alpha=" << fmt(prm.alpha) << " c0=" << fmt(prm.c0) << " K11=" << fmt(prm.K(0, 0))
     << " K12=" << fmt(prm.K(0, 1)) << " K22=" << fmt(prm.K(1, 1))
     << " gamma_a=" << fmt(prm.gamma_a) << " gamma_b=" << fmt(prm.gamma_b) << " penalty_length="
     << (asm_opts.penalty_length == PenaltyLength::Harmonic ? "harmonic" : "area")
     << " quadrature_points=" << asm_opts.quadrature_points;
  os << " T=" << fmt(c.final_time())
     << " tau0=" << fmt(manufactured ? c.manufactured.tau0 : c.benchmark.tau0);
  if (manufactured) {
    os << " base_cells=" << c.manufactured.base_cells << " omega1=" << fmt(c.manufactured.omega1)
       << " omega2=" << fmt(c.manufactured.omega2);
  } else {
    const LShapeGeometry& g = c.benchmark.geometry;
    os << " tau=" << fmt(c.tau) << " notch_x=" << fmt(g.notch_x) << " notch_y=" << fmt(g.notch_y)
       << " load_end=" << fmt(g.load_end) << " coarse_size=" << fmt(g.coarse_size) << " rollers=";
    if (g.rollers.empty()) os << "none";
    for (std::size_t i = 0; i < g.rollers.size(); ++i) {
      os << (i ? "," : "") << segment_names().at(g.rollers[i]);
    }
    const auto [a, b] = c.window();
    os << " traction_direction="
       << (c.benchmark.direction == TractionDirection::Vertical ? "vertical" : "normal")
       << " window_start=" << fmt(a) << " window_end=" << fmt(b)
       << " period_start=" << fmt(c.period_from());
  }
  os << " dump_mesh=" << (c.dump_mesh ? "true" : "false")
     << " dump_matrices=" << (c.dump_matrices ? "true" : "false")
     << " checkpoint_every=" << c.checkpoint_every;
  return os.str();
}

namespace {

/// Collects file contents and writes them only when the whole run succeeded.
class Artifacts {
public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::ostringstream& file(const std::string& name) { return files_[name]; }

  void commit() const {
    for (const auto& [name, content] : files_) {
      const auto target = dir_ / name;
      const auto tmp = dir_ / (name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary);
        out << content.str();
        if (!out) throw Error("cannot write " + tmp.string());
      }
      std::filesystem::rename(tmp, target);
    }
  }

private:
  std::filesystem::path dir_;
  std::map<std::string, std::ostringstream> files_;
};

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
}

StudyHooks make_hooks(const RunConfig& c, std::ostream& log) {
  StudyHooks hooks;
  hooks.log = [&log](const std::string& line) { log << line << '\n' << std::flush; };
  if (c.dump_mesh || c.dump_matrices) {
    hooks.on_setup = [&c](int level, const Mesh& mesh, const SpatialProblem& problem) {
      const std::string tag = "L" + std::to_string(level);
      if (c.dump_mesh) {
        write_text(c.out / ("mesh_" + tag + ".txt"), [&](std::ostream& o) { mesh.write(o); });
      }
      if (c.dump_matrices) {
        const SystemMatrices& m = problem.matrices;
        const std::pair<const char*, const SparseMatrix*> blocks[] = {
            {"mass_u", &m.mass_u}, {"mass_v", &m.mass_v}, {"mass_p", &m.mass_p},
            {"A", &m.A},           {"C", &m.C},           {"B", &m.B}};
        for (const auto& [name, matrix] : blocks) {
          write_text(c.out / ("matrix_" + tag + "_" + name + ".txt"),
                     [&](std::ostream& o) { write_coordinate(o, *matrix); });
        }
      }
    };
  }
  if (c.checkpoint_every > 0) {
    hooks.on_slab = [&c](int level, int slab, const SlabSolution& s) {
      if (slab % c.checkpoint_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_L%d_%06d.txt", level, slab);
      write_text(c.out / name, [&](std::ostream& o) { write_checkpoint(o, s, slab, c.r); });
    };
  }
  return hooks;
}

void convergence_csv(std::ostream& out, const std::string& echo,
                     const std::vector<ConvergenceRow>& rows) {
  out << "# " << echo << '\n';
  out << "level,h,tau,err_grad_u,err_v,err_p,eoc_grad_u,eoc_v,eoc_p\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out << row.level << ',' << sci(row.h) << ',' << sci(row.tau) << ',' << sci(row.errors.grad_u)
        << ',' << sci(row.errors.v) << ',' << sci(row.errors.p);
    if (i == 0) {
      out << ",,,\n";
      continue;
    }
    const auto& prev = rows[i - 1].errors;
    const auto rate = [](double coarse, double fine) {
      return coarse > 0.0 && fine > 0.0 ? std::log2(coarse / fine)
                                        : std::numeric_limits<double>::quiet_NaN();
    };
    out << ',' << sci(rate(prev.grad_u, row.errors.grad_u)) << ','
        << sci(rate(prev.v, row.errors.v)) << ',' << sci(rate(prev.p, row.errors.p)) << '\n';
  }
}

double safe_period(const GoalSeries& s, const std::vector<double>& values, double from) {
  try {
    return dominant_period(s.t, values, from);
  } catch (const InvalidArgument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

int execute(const RunConfig& c, std::ostream& log, Artifacts& artifacts) {
  const std::string echo = describe(c);
  const StudyHooks hooks = make_hooks(c, log);
  if (c.effective_case() == CaseKind::Manufactured) {
    const auto rows = run_convergence(c.manufactured, c.scheme, c.k, c.r, c.levels, c.solver, hooks);
    for (const auto& row : rows) {
      log << "level " << row.level << " errors grad_u " << sci(row.errors.grad_u) << " v "
          << sci(row.errors.v) << " p " << sci(row.errors.p) << '\n';
    }
    convergence_csv(artifacts.file("convergence.csv"), echo, rows);
    return kExitSuccess;
  }
  auto& goals = artifacts.file("goals.csv");
  auto& chars = artifacts.file("characteristics.csv");
  goals << "# " << echo << '\n' << "level,t,G_u,G_p\n";
  chars << "# " << echo << '\n'
        << "level,h,tau,window_start,window_end,min_G_p,max_G_p,min_G_u,max_G_u,period_G_u,"
           "period_G_p\n";
  const auto [w0, w1] = c.window();
  for (int level : c.levels) {
    const double step = c.tau > 0.0 ? c.tau : c.benchmark.tau(level);
    const BenchmarkRun run =
        run_benchmark(c.benchmark, c.scheme, c.k, c.r, level, step, c.benchmark.T, c.solver, hooks);
    for (std::size_t i = 0; i < run.series.t.size(); ++i) {
      goals << level << ',' << sci(run.series.t[i]) << ',' << sci(run.series.G_u[i]) << ','
            << sci(run.series.G_p[i]) << '\n';
    }
    const GoalCharacteristics ch = goal_characteristics(run.series, w0, w1, step / 4.0);
    chars << level << ',' << sci(run.h) << ',' << sci(run.tau) << ',' << sci(w0) << ',' << sci(w1)
          << ',' << sci(ch.min_p) << ',' << sci(ch.max_p) << ',' << sci(ch.min_u) << ','
          << sci(ch.max_u) << ',' << sci(safe_period(run.series, run.series.G_u, c.period_from()))
          << ',' << sci(safe_period(run.series, run.series.G_p, c.period_from())) << '\n';
    log << "level " << level << " characteristics min_G_p " << sci(ch.min_p) << " max_G_p "
        << sci(ch.max_p) << " min_G_u " << sci(ch.min_u) << " max_G_u " << sci(ch.max_u) << '\n';
  }
  return kExitSuccess;
}

} // namespace

int run(const RunConfig& config, std::ostream& err) {
  try {
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec || !std::filesystem::is_directory(config.out)) {
    err << "config error: cannot use output directory '" << config.out.string() << "'"
        << (ec ? ": " + ec.message() : std::string()) << '\n';
    return kExitConfigError;
  }
  std::ofstream log(config.out / "run.log");
  if (!log) {
    err << "config error: cannot write to output directory '" << config.out.string() << "'\n";
    return kExitConfigError;
  }
  log << "# " << describe(config) << '\n';
  const auto start = std::chrono::steady_clock::now();
  try {
    Artifacts artifacts(config.out);
    const int status = execute(config, log, artifacts);
    artifacts.commit();
    log << "total seconds "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << '\n';
    return status;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    err << "solver failure: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

} // namespace biot
