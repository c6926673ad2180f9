#include "nullwave/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nullwave {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawItem {
  std::string section, key, value;
  int line = 0;
};

struct RawConfig {
  std::vector<RawItem> items;
  std::vector<std::string> errors;
};

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (const char c : {'#', ';'}) {
      const auto pos = line.find(c);
      if (pos != std::string::npos) line.erase(pos);
    }
    const auto notblank = line.find_first_not_of(" \t\r");
    if (notblank == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(notblank, last - notblank + 1);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        raw.errors.push_back(origin + ":" + std::to_string(lineno) +
                             ": malformed section header");
        continue;
      }
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      raw.errors.push_back(origin + ":" + std::to_string(lineno) +
                           ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    raw.items.push_back(
        {section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }
  return raw;
}

class Extractor {
 public:
  Extractor(RawConfig& raw, std::vector<std::string>& errors)
      : raw_(raw), errors_(errors) {}

  std::optional<std::string> take(const std::string& section,
                                  const std::string& key) {
    for (std::size_t i = 0; i < raw_.items.size(); ++i) {
      if (used_.count(i)) continue;
      if (raw_.items[i].section == section && raw_.items[i].key == key) {
        used_.insert(i);
        return raw_.items[i].value;
      }
    }
    return std::nullopt;
  }

  void get_double(const std::string& sec, const std::string& key, double& out) {
    if (auto v = take(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
      } catch (...) {
        fail(sec, key, "not a number: '" + *v + "'");
      }
    }
  }

  void get_int(const std::string& sec, const std::string& key, int& out) {
    if (auto v = take(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stoi(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
      } catch (...) {
        fail(sec, key, "not an integer: '" + *v + "'");
      }
    }
  }

  void get_u64(const std::string& sec, const std::string& key,
               std::uint64_t& out) {
    if (auto v = take(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
      } catch (...) {
        fail(sec, key, "not an unsigned integer: '" + *v + "'");
      }
    }
  }

  void get_bool(const std::string& sec, const std::string& key, bool& out) {
    if (auto v = take(sec, key)) {
      if (*v == "true" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "0") {
        out = false;
      } else {
        fail(sec, key, "expected true/false: '" + *v + "'");
      }
    }
  }

  void get_string(const std::string& sec, const std::string& key,
                  std::string& out) {
    if (auto v = take(sec, key)) out = *v;
  }

  void get_double_list(const std::string& sec, const std::string& key,
                       std::vector<double>& out) {
    if (auto v = take(sec, key)) {
      std::istringstream is(*v);
      std::vector<double> vals;
      std::string tok;
      bool bad = false;
      while (is >> tok) {
        try {
          std::size_t pos = 0;
          vals.push_back(std::stod(tok, &pos));
          if (pos != tok.size()) throw std::invalid_argument("");
        } catch (...) {
          bad = true;
        }
      }
      if (bad || vals.empty()) {
        fail(sec, key, "expected a list of numbers: '" + *v + "'");
      } else {
        out = std::move(vals);
      }
    }
  }

  bool get_vec3(const std::string& sec, const std::string& key,
                std::array<double, 3>& out) {
    std::vector<double> vals;
    get_double_list(sec, key, vals);
    if (vals.empty()) return false;
    if (vals.size() != 3) {
      fail(sec, key, "expected three numbers");
      return false;
    }
    out = {vals[0], vals[1], vals[2]};
    return true;
  }

  void fail(const std::string& sec, const std::string& key,
            const std::string& msg) {
    errors_.push_back((sec.empty() ? key : sec + "." + key) + ": " + msg);
  }

  void report_unknown() {
    for (std::size_t i = 0; i < raw_.items.size(); ++i) {
      if (used_.count(i)) continue;
      const auto& it = raw_.items[i];
      errors_.push_back((it.section.empty() ? it.key : it.section + "." + it.key) +
                        ": unknown key (line " + std::to_string(it.line) + ")");
    }
  }

 private:
  RawConfig& raw_;
  std::vector<std::string>& errors_;
  std::set<std::size_t> used_;
};

}  // namespace

GridSpec RunConfig::grid_spec() const {
  GridSpec spec;
  spec.n = n;
  spec.dx = dx;
  spec.periodic = periodic;
  if (origin) {
    spec.origin = *origin;
  } else if (periodic) {
    spec.origin = {0.0, 0.0, 0.0};
  } else {
    const double o = -0.5 * (n - 1) * dx;
    spec.origin = {o, o, o};
  }
  return spec;
}

double max_cfl() { return 1.0; }

ConfigLoadResult parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ConfigLoadResult result;
  RawConfig raw = tokenize(text, origin);
  result.errors = raw.errors;
  Extractor ex(raw, result.errors);
  RunConfig cfg;

  ex.get_string("system", "tensor", cfg.tensor_path);
  if (auto v = ex.take("system", "speeds")) {
    std::istringstream is(*v);
    std::vector<Rational> speeds;
    std::string tok;
    bool bad = false;
    while (is >> tok) {
      auto r = parse_rational(tok);
      if (!r) {
        bad = true;
      } else {
        speeds.push_back(*r);
      }
    }
    if (bad || speeds.empty()) {
      ex.fail("system", "speeds", "expected a list of rationals");
    } else {
      cfg.speeds_override = std::move(speeds);
    }
  }

  ex.get_int("grid", "n", cfg.n);
  ex.get_double("grid", "dx", cfg.dx);
  {
    std::array<double, 3> o{};
    if (ex.get_vec3("grid", "origin", o)) cfg.origin = o;
  }
  ex.get_bool("grid", "periodic", cfg.periodic);

  ex.get_double("solver", "cfl", cfg.solver.cfl);
  ex.get_double("solver", "t_end", cfg.solver.t_end);
  ex.get_double("solver", "amplitude", cfg.solver.amplitude);
  ex.get_bool("solver", "linearize", cfg.solver.linearize);
  ex.get_double("solver", "blowup_factor", cfg.solver.blowup_factor);

  {
    std::string fam = family_name(cfg.data.family);
    ex.get_string("data", "family", fam);
    if (auto f = family_from_name(fam)) {
      cfg.data.family = *f;
    } else {
      ex.fail("data", "family", "unknown family '" + fam + "'");
    }
  }
  ex.get_double_list("data", "amplitude", cfg.data.amplitude);
  ex.get_double_list("data", "width", cfg.data.width);
  {
    std::array<double, 3> c{};
    if (ex.get_vec3("data", "center", c)) cfg.data.center = {c};
    std::vector<std::array<double, 3>> percomp;
    for (int k = 1; k <= 16; ++k) {
      std::array<double, 3> ck{};
      if (ex.get_vec3("data", "center" + std::to_string(k), ck)) {
        percomp.resize(static_cast<std::size_t>(k), cfg.data.center[0]);
        percomp[static_cast<std::size_t>(k - 1)] = ck;
      }
    }
    if (!percomp.empty()) cfg.data.center = std::move(percomp);
  }
  ex.get_vec3("data", "direction", cfg.data.direction);
  ex.get_double("data", "wavenumber", cfg.data.wavenumber);
  ex.get_int("data", "count", cfg.data.count);
  ex.get_double("data", "spread", cfg.data.spread);

  ex.get_int("probes", "stride", cfg.stride);
  {
    std::vector<double> times;
    ex.get_double_list("probes", "times", times);
    if (!times.empty()) cfg.times = std::move(times);
  }
  ex.get_double("probes", "fit_t_min", cfg.fit_t_min);
  ex.get_bool("probes", "light", cfg.light_monitors);

  ex.get_string("outputs", "directory", cfg.directory);
  ex.get_bool("outputs", "snapshot_final", cfg.snapshot_final);
  ex.get_string("outputs", "series_basename", cfg.series_basename);

  ex.get_u64("", "seed", cfg.seed);
  cfg.data.seed = cfg.seed;

  ex.report_unknown();

  // Semantic validation; every failure is collected.
  if (cfg.tensor_path.empty()) {
    result.errors.push_back("system.tensor: required");
  }
  std::optional<TensorFile> tensor;
  if (!cfg.tensor_path.empty()) {
    try {
      tensor = load_tensor_file(cfg.tensor_path);
    } catch (const std::exception& e) {
      result.errors.push_back(std::string("system.tensor: ") + e.what());
    }
  }
  int m = tensor ? tensor->tensor.families() : 1;
  if (tensor && cfg.speeds_override) {
    if (static_cast<int>(cfg.speeds_override->size()) != m) {
      result.errors.push_back("system.speeds: expected " + std::to_string(m) +
                              " entries");
    } else {
      try {
        SpeedVector check(*cfg.speeds_override);
      } catch (const std::exception& e) {
        result.errors.push_back(std::string("system.speeds: ") + e.what());
      }
    }
  }
  if (tensor) {
    const auto sym = check_symmetry(tensor->tensor);
    if (!sym.symmetric) {
      result.errors.push_back(
          "system.tensor: fails the symmetry condition at " +
          format_index_tuple(*sym.witness));
    }
  }

  if (cfg.dx <= 0.0) {
    result.errors.push_back("grid.dx: must be positive");
  }
  if (cfg.n < 7) {
    result.errors.push_back("grid.n: must be at least 7 (2*halo + 3)");
  } else if (cfg.n > 1024) {
    result.errors.push_back("grid.n: larger than 1024 is not supported");
  }

  if (!(cfg.solver.cfl > 0.0) || cfg.solver.cfl > max_cfl()) {
    result.errors.push_back("solver.cfl: must be in (0, " +
                            std::to_string(max_cfl()) + "]");
  }
  if (cfg.solver.t_end < 0.0) {
    result.errors.push_back("solver.t_end: must be nonnegative");
  }
  if (!(cfg.solver.amplitude > 0.0)) {
    result.errors.push_back("solver.amplitude: must be positive");
  }
  if (!(cfg.solver.blowup_factor > 1.0)) {
    result.errors.push_back("solver.blowup_factor: must exceed 1");
  }

  const std::size_t msize = static_cast<std::size_t>(m);
  if (cfg.data.amplitude.size() != 1 && cfg.data.amplitude.size() != msize) {
    result.errors.push_back("data.amplitude: expected 1 or m entries");
  }
  if (cfg.data.width.size() != 1 && cfg.data.width.size() != msize) {
    result.errors.push_back("data.width: expected 1 or m entries");
  }
  for (double w : cfg.data.width) {
    if (!(w > 0.0)) {
      result.errors.push_back("data.width: entries must be positive");
      break;
    }
  }
  if (cfg.data.center.size() != 1 && cfg.data.center.size() != msize) {
    result.errors.push_back("data.center: expected 1 or m centers");
  }
  if (cfg.data.count < 1) {
    result.errors.push_back("data.count: must be at least 1");
  }
  if (cfg.data.spread < 0.0) {
    result.errors.push_back("data.spread: must be nonnegative");
  }

  if (cfg.stride < 0) {
    result.errors.push_back("probes.stride: must be nonnegative");
  }
  for (double t : cfg.times) {
    if (t < 0.0 || t > cfg.solver.t_end + 1e-12) {
      result.errors.push_back("probes.times: " + fmt17(t) +
                              " outside [0, t_end]");
      break;
    }
  }
  if (cfg.fit_t_min < 0.0) {
    result.errors.push_back("probes.fit_t_min: must be nonnegative");
  }

  // Domain policy: no signal may reach the boundary before t_end.
  if (!cfg.periodic && tensor && cfg.dx > 0.0 && cfg.n >= 7) {
    const GridSpec spec = cfg.grid_spec();
    const double r0 = cfg.data.support_radius(m);
    const double c1 = tensor->speeds.max_speed();
    const double required = r0 + c1 * cfg.solver.t_end + 3.0 * spec.dx;
    if (spec.inner_radius() + 1e-9 < required) {
      result.errors.push_back(
          "grid: domain policy violated: inner radius " +
          fmt17(spec.inner_radius()) + " < support + c1*t_end + 3dx = " +
          fmt17(required));
    }
  }

  if (!result.errors.empty()) return result;
  result.config = std::move(cfg);
  return result;
}

ConfigLoadResult load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigLoadResult r;
    r.errors.push_back(path + ": cannot open");
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string write_config(const RunConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << "\n\n";
  out << "[system]\n";
  out << "tensor = " << c.tensor_path << "\n";
  if (c.speeds_override) {
    out << "speeds =";
    for (const auto& s : *c.speeds_override) out << " " << format_rational(s);
    out << "\n";
  }
  out << "\n[grid]\n";
  out << "n = " << c.n << "\n";
  out << "dx = " << fmt17(c.dx) << "\n";
  if (c.origin) {
    out << "origin = " << fmt17((*c.origin)[0]) << " " << fmt17((*c.origin)[1])
        << " " << fmt17((*c.origin)[2]) << "\n";
  }
  out << "periodic = " << (c.periodic ? "true" : "false") << "\n";
  out << "\n[solver]\n";
  out << "cfl = " << fmt17(c.solver.cfl) << "\n";
  out << "t_end = " << fmt17(c.solver.t_end) << "\n";
  out << "amplitude = " << fmt17(c.solver.amplitude) << "\n";
  out << "linearize = " << (c.solver.linearize ? "true" : "false") << "\n";
  out << "blowup_factor = " << fmt17(c.solver.blowup_factor) << "\n";
  out << "\n[data]\n";
  out << "family = " << family_name(c.data.family) << "\n";
  out << "amplitude =";
  for (double a : c.data.amplitude) out << " " << fmt17(a);
  out << "\nwidth =";
  for (double w : c.data.width) out << " " << fmt17(w);
  out << "\n";
  if (c.data.center.size() == 1) {
    out << "center = " << fmt17(c.data.center[0][0]) << " "
        << fmt17(c.data.center[0][1]) << " " << fmt17(c.data.center[0][2])
        << "\n";
  } else {
    for (std::size_t k = 0; k < c.data.center.size(); ++k) {
      out << "center" << k + 1 << " = " << fmt17(c.data.center[k][0]) << " "
          << fmt17(c.data.center[k][1]) << " " << fmt17(c.data.center[k][2])
          << "\n";
    }
  }
  out << "direction = " << fmt17(c.data.direction[0]) << " "
      << fmt17(c.data.direction[1]) << " " << fmt17(c.data.direction[2]) << "\n";
  out << "wavenumber = " << fmt17(c.data.wavenumber) << "\n";
  out << "count = " << c.data.count << "\n";
  out << "spread = " << fmt17(c.data.spread) << "\n";
  out << "\n[probes]\n";
  out << "stride = " << c.stride << "\n";
  if (!c.times.empty()) {
    out << "times =";
    for (double t : c.times) out << " " << fmt17(t);
    out << "\n";
  }
  out << "fit_t_min = " << fmt17(c.fit_t_min) << "\n";
  out << "light = " << (c.light_monitors ? "true" : "false") << "\n";
  out << "\n[outputs]\n";
  out << "directory = " << c.directory << "\n";
  out << "snapshot_final = " << (c.snapshot_final ? "true" : "false") << "\n";
  out << "series_basename = " << c.series_basename << "\n";
  return out.str();
}

void write_config_file(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << write_config(config);
  if (!out) throw std::runtime_error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Presets

namespace {

CoeffTensor null_self_tensor_m1() {
  // q(X) = (1/2) X0 (X0^2 - |X'|^2): null for c = 1, Frobenius norm 1.
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1, 2));
  for (int l = 1; l <= 3; ++l) c.set(0, 0, 0, 0, l, l, Rational(-1, 2));
  return c;
}

CoeffTensor nonnull_tensor_m1() {
  CoeffTensor c(1);
  c.set(0, 0, 0, 0, 0, 0, Rational(1));
  return c;
}

CoeffTensor multispeed_tensor() {
  // Pure cross-family coupling: both self-interaction cubics vanish, so the
  // (extended) null condition holds trivially; the symmetry condition fixes
  // the (j,k) pair.
  CoeffTensor c(2);
  c.set(0, 0, 1, 0, 1, 1, Rational(1));
  c.set(0, 1, 0, 0, 1, 1, Rational(1));
  return c;
}

RunConfig desk_config() {
  RunConfig cfg;
  cfg.n = 64;
  cfg.dx = 24.0 / 63.0;  // centered cube of half-width 12
  cfg.solver.cfl = 0.12;
  cfg.solver.t_end = 4.0;
  cfg.data.family = InitialData::Family::GaussianBump;
  cfg.data.width = {1.1};
  cfg.stride = 6;
  cfg.fit_t_min = 0.5;
  cfg.seed = 20240801;
  return cfg;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "linear_baseline", "null_global", "nonnull_blowup",
      "multispeed_nonresonant"};
  return names;
}

Preset make_preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "linear_baseline") {
    p.tensor = CoeffTensor(1);
    p.speeds = SpeedVector({Rational(1)});
    p.config = desk_config();
    p.config.solver.amplitude = 0.1;
    p.description = "free-wave control run: conservation and bounded monitors";
    return p;
  }
  if (name == "null_global") {
    p.tensor = null_self_tensor_m1();
    p.speeds = SpeedVector({Rational(1)});
    p.config = desk_config();
    p.config.solver.amplitude = 0.01;
    p.description = "small-data run with the null self-interaction";
    return p;
  }
  if (name == "nonnull_blowup") {
    p.tensor = nonnull_tensor_m1();
    p.speeds = SpeedVector({Rational(1)});
    p.config = desk_config();
    p.config.solver.amplitude = 0.5;
    p.config.solver.cfl = 0.2;
    p.config.stride = 4;
    p.config.light_monitors = true;
    p.description = "large-amplitude non-null run expected to break down";
    return p;
  }
  if (name == "multispeed_nonresonant") {
    p.tensor = multispeed_tensor();
    p.speeds = SpeedVector({Rational(2), Rational(1)});
    p.config = desk_config();
    p.config.solver.amplitude = 0.05;
    p.config.solver.t_end = 1.9;
    p.config.stride = 4;
    p.description = "two speeds coupled off-diagonal only";
    return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

RunConfig materialize_preset(const Preset& preset,
                             const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  RunConfig cfg = preset.config;
  cfg.directory = directory;
  cfg.tensor_path = (fs::path(directory) / (preset.name + ".tensor")).string();
  save_tensor_file(cfg.tensor_path, preset.tensor, preset.speeds,
                   "preset " + preset.name + ": " + preset.description);
  write_config_file((fs::path(directory) / (preset.name + ".ini")).string(),
                    cfg);
  return cfg;
}

}  // namespace nullwave
