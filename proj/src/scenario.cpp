#include "tiered/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tiered/errors.hpp"

namespace tiered {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& what) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
    os << ": " << field << ": " << what;
    throw ValidationError(os.str());
  }

  void keys(const YAML::Node& node, const std::string& field, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, field, "expected a mapping");
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      if (!allowed.count(k)) {
        std::string list;
        for (const std::string& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(kv.first, field.empty() ? k : field + "." + k, "unknown key (allowed: " + list + ")");
      }
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, field, "must be finite");
      return v;
    } catch (const YAML::Exception&) {
      fail(node, field, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  double number(const YAML::Node& parent, const std::string& key, const std::string& field, double fallback) const {
    const YAML::Node n = parent[key];
    return n ? number(n, field + "." + key) : fallback;
  }

  double positive(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (!(v > 0.0)) fail(node, field, "must be positive");
    return v;
  }

  double required(const YAML::Node& parent, const std::string& key, const std::string& field) const {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, field + "." + key, "missing");
    return number(n, field + "." + key);
  }

  long integer(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (v != std::floor(v)) fail(node, field, "expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected true or false, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  RVector vector(const YAML::Node& node, const std::string& field, std::size_t size) const {
    const std::vector<double> v = numbers(node, field);
    if (v.size() != size) {
      fail(node, field, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    }
    return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

 private:
  std::string source_;
};

// a method entry may be `true`, `false`, or a mapping of settings
bool method_enabled(const Reader& r, const YAML::Node& node, const std::string& field) {
  if (node.IsNull()) return true;
  if (node.IsScalar()) return r.boolean(node, field);
  if (!node.IsMap()) r.fail(node, field, "expected true, false or a mapping");
  return true;
}

GammaProfile read_gamma(const Reader& r, const YAML::Node& node, const std::string& field) {
  GammaProfile g;
  if (node.IsScalar()) {
    g.constant = r.number(node, field);
    return g;
  }
  r.keys(node, field, {"omega", "gamma"});
  if (!node["omega"] || !node["gamma"]) r.fail(node, field, "a damping table needs omega and gamma lists");
  g.omega = r.numbers(node["omega"], field + ".omega");
  g.gamma = r.numbers(node["gamma"], field + ".gamma");
  if (g.omega.size() != g.gamma.size() || g.omega.empty()) r.fail(node, field, "omega and gamma lengths differ");
  return g;
}

SpectralDensity read_continuous(const Reader& r, const YAML::Node& node, const std::string& field) {
  if (!node.IsMap() || !node["type"]) r.fail(node, field, "needs a type (ohmic or tabulated)");
  const std::string type = r.text(node["type"], field + ".type");
  QuadratureSettings q;
  if (type == "ohmic") {
    r.keys(node, field, {"type", "alpha", "s", "omega_c", "cutoff", "gamma", "nodes", "omega_max"});
    OhmicFamily o;
    o.alpha = r.required(node, "alpha", field);
    o.s = r.number(node, "s", field, 1.0);
    o.omega_c = r.required(node, "omega_c", field);
    if (!(o.omega_c > 0.0)) r.fail(node["omega_c"], field + ".omega_c", "must be positive");
    if (node["cutoff"]) {
      const std::string c = r.text(node["cutoff"], field + ".cutoff");
      if (c == "gaussian") {
        o.cutoff = CutoffForm::Gaussian;
      } else if (c == "exponential") {
        o.cutoff = CutoffForm::Exponential;
      } else {
        r.fail(node["cutoff"], field + ".cutoff", "expected gaussian or exponential");
      }
    }
    if (node["gamma"]) o.gamma = read_gamma(r, node["gamma"], field + ".gamma");
    if (node["nodes"]) q.nodes = static_cast<int>(r.integer(node["nodes"], field + ".nodes"));
    q.omega_max = r.number(node, "omega_max", field, 0.0);
    SpectralDensity s{o, q};
    return s;
  }
  if (type == "tabulated") {
    r.keys(node, field, {"type", "omega", "J", "gamma", "nodes", "omega_max"});
    Tabulated t;
    if (!node["omega"] || !node["J"]) r.fail(node, field, "a table needs omega and J lists");
    t.omega = r.numbers(node["omega"], field + ".omega");
    t.J = r.numbers(node["J"], field + ".J");
    if (t.omega.size() != t.J.size() || t.omega.size() < 2) r.fail(node, field, "omega and J need equal lengths >= 2");
    if (node["gamma"]) {
      t.gamma = r.numbers(node["gamma"], field + ".gamma");
      if (t.gamma.size() != t.omega.size()) r.fail(node["gamma"], field + ".gamma", "length differs from omega");
    }
    if (node["nodes"]) q.nodes = static_cast<int>(r.integer(node["nodes"], field + ".nodes"));
    q.omega_max = r.number(node, "omega_max", field, 0.0);
    return SpectralDensity{t, q};
  }
  r.fail(node["type"], field + ".type", "expected ohmic or tabulated, got '" + type + "'");
}

PVector named_state(const Reader& r, const YAML::Node& node, const std::string& name, int n, const SystemModel& m) {
  const SuBasis& basis = *m.basis;
  if (name == "mixed") return vectorize(CMatrix::Identity(n, n) / static_cast<double>(n), basis);
  if (name == "ground" || name == "excited") {
    CMatrix h = CMatrix::Zero(n, n);
    const RVector& c = m.schedule.front().coeffs;
    for (int i = 0; i < basis.size(); ++i) h += c(i) * basis.nu(i);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CVector v = es.eigenvectors().col(name == "ground" ? 0 : n - 1);
    return vectorize(v * v.adjoint(), basis);
  }
  if (n == 2) {
    if (name == "up") return two_level_state(0, 0, 1);
    if (name == "down") return two_level_state(0, 0, -1);
    if (name == "plus") return two_level_state(1, 0, 0);
    if (name == "minus") return two_level_state(-1, 0, 0);
  }
  r.fail(node, "system.rho0", "unknown state '" + name + "' (use up, down, plus, minus, mixed, ground, excited)");
}

}  // namespace

SystemModel Scenario::model() const { return SystemModel::make(n, schedule, coupling); }

std::vector<SpectralDensity> Scenario::bath_parts() const {
  std::vector<SpectralDensity> parts;
  if (!modes.empty()) parts.push_back(discrete(modes));
  parts.insert(parts.end(), continuous.begin(), continuous.end());
  return parts;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  r.keys(root, "", {"system", "bath", "grid", "methods", "output"});
  Scenario s;
  s.source = source;

  // system
  const YAML::Node sys = root["system"];
  if (!sys) r.fail(root, "system", "missing");
  r.keys(sys, "system", {"n", "two_level", "hamiltonian", "coupling", "rho0"});
  if (sys["two_level"] && sys["hamiltonian"]) r.fail(sys, "system", "give either two_level or hamiltonian, not both");
  if (sys["two_level"]) {
    const YAML::Node tl = sys["two_level"];
    r.keys(tl, "system.two_level", {"epsilon", "delta"});
    s.n = 2;
    if (sys["n"] && r.integer(sys["n"], "system.n") != 2) r.fail(sys["n"], "system.n", "two_level needs n = 2");
    s.epsilon = r.number(tl, "epsilon", "system.two_level", 0.0);
    s.delta = r.required(tl, "delta", "system.two_level");
    RVector h(3);
    h << 0.5 * *s.delta, 0.0, 0.5 * *s.epsilon;
    s.schedule.push_back({0.0, h});
  } else if (sys["hamiltonian"]) {
    if (!sys["n"]) r.fail(sys, "system.n", "missing (needed with hamiltonian)");
    const long n = r.integer(sys["n"], "system.n");
    if (n < 2 || n > 16) r.fail(sys["n"], "system.n", "must lie between 2 and 16");
    s.n = static_cast<int>(n);
    const YAML::Node hs = sys["hamiltonian"];
    if (!hs.IsSequence() || hs.size() == 0) r.fail(hs, "system.hamiltonian", "expected a non-empty list of segments");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string f = "system.hamiltonian[" + std::to_string(i) + "]";
      r.keys(hs[i], f, {"start", "coeffs"});
      const double start = r.number(hs[i], "start", f, 0.0);
      if (!hs[i]["coeffs"]) r.fail(hs[i], f + ".coeffs", "missing");
      s.schedule.push_back({start, r.vector(hs[i]["coeffs"], f + ".coeffs", static_cast<std::size_t>(s.n * s.n - 1))});
    }
  } else {
    r.fail(sys, "system", "needs two_level or hamiltonian");
  }
  if (sys["coupling"]) {
    s.coupling = r.vector(sys["coupling"], "system.coupling", static_cast<std::size_t>(s.n * s.n));
  } else if (s.is_two_level()) {
    s.coupling = RVector::Zero(4);
    s.coupling(2) = 1.0;
  } else {
    r.fail(sys, "system.coupling", "missing (needed with hamiltonian)");
  }
  SystemModel model;
  try {
    model = s.model();
  } catch (const Error& e) {
    r.fail(sys, "system", e.what());
  }

  const YAML::Node rho = sys["rho0"];
  if (!rho) r.fail(sys, "system.rho0", "missing");
  try {
    if (rho.IsScalar()) {
      s.rho0_name = rho.Scalar();
      s.rho0 = named_state(r, rho, s.rho0_name, s.n, model);
    } else {
      r.keys(rho, "system.rho0", {"coeffs", "basis"});
      if (rho["coeffs"] && rho["basis"]) r.fail(rho, "system.rho0", "give coeffs or basis, not both");
      if (rho["coeffs"]) {
        s.rho0 = PVector(r.vector(rho["coeffs"], "system.rho0.coeffs", static_cast<std::size_t>(s.n * s.n)));
        // round trip through a matrix checks hermiticity and trace
        s.rho0 = vectorize(devectorize(s.rho0, *model.basis), *model.basis);
      } else if (rho["basis"]) {
        const long k = r.integer(rho["basis"], "system.rho0.basis");
        if (k < 0 || k >= s.n) r.fail(rho["basis"], "system.rho0.basis", "index out of range");
        CMatrix p = CMatrix::Zero(s.n, s.n);
        p(k, k) = 1.0;
        s.rho0 = vectorize(p, *model.basis);
      } else {
        r.fail(rho, "system.rho0", "needs coeffs or basis");
      }
    }
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(source, 0) == 0) throw;
    r.fail(rho, "system.rho0", what);
  }

  // bath
  const YAML::Node bath = root["bath"];
  if (!bath) r.fail(root, "bath", "missing");
  r.keys(bath, "bath", {"kT", "beta", "modes", "continuous"});
  if (static_cast<bool>(bath["kT"]) == static_cast<bool>(bath["beta"])) {
    r.fail(bath, "bath", "give exactly one of kT and beta");
  }
  if (bath["kT"]) {
    s.thermal = ThermalParams::from_kT(r.positive(bath["kT"], "bath.kT"));
  } else {
    s.thermal = ThermalParams::from_beta(r.positive(bath["beta"], "bath.beta"));
    s.thermal_from_beta = true;
  }
  if (const YAML::Node modes = bath["modes"]) {
    if (!modes.IsSequence()) r.fail(modes, "bath.modes", "expected a list");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::string f = "bath.modes[" + std::to_string(i) + "]";
      r.keys(modes[i], f, {"omega", "g", "gamma"});
      DampedMode m{r.required(modes[i], "omega", f), r.required(modes[i], "g", f), r.number(modes[i], "gamma", f, 0.0)};
      if (!(m.omega > 0.0)) r.fail(modes[i]["omega"], f + ".omega", "must be positive");
      if (m.gamma < 0.0) r.fail(modes[i]["gamma"], f + ".gamma", "must not be negative");
      s.modes.push_back(m);
    }
  }
  if (const YAML::Node cont = bath["continuous"]) {
    if (!cont.IsSequence()) r.fail(cont, "bath.continuous", "expected a list");
    for (std::size_t i = 0; i < cont.size(); ++i) {
      const std::string f = "bath.continuous[" + std::to_string(i) + "]";
      SpectralDensity sd = read_continuous(r, cont[i], f);
      try {
        validate(sd);
      } catch (const ValidationError& e) {
        r.fail(cont[i], f, e.what());
      }
      s.continuous.push_back(std::move(sd));
    }
  }
  if (s.modes.empty() && s.continuous.empty()) r.fail(bath, "bath", "needs modes or continuous densities");

  // grid
  const YAML::Node grid = root["grid"];
  if (!grid) r.fail(root, "grid", "missing");
  r.keys(grid, "grid", {"t_max", "dt", "output_every"});
  s.t_max = r.required(grid, "t_max", "grid");
  s.dt = r.required(grid, "dt", "grid");
  if (!(s.t_max > 0.0)) r.fail(grid["t_max"], "grid.t_max", "must be positive");
  if (!(s.dt > 0.0) || s.dt > s.t_max) r.fail(grid["dt"], "grid.dt", "must be positive and at most t_max");
  if (grid["output_every"]) {
    const long e = r.integer(grid["output_every"], "grid.output_every");
    if (e < 1) r.fail(grid["output_every"], "grid.output_every", "must be at least 1");
    s.output_every = static_cast<std::size_t>(e);
  }

  // methods
  const YAML::Node methods = root["methods"];
  if (!methods) r.fail(root, "methods", "missing");
  r.keys(methods, "methods", {"influence", "wcme", "tcl2", "oracle", "higher_order"});
  if (const YAML::Node m = methods["influence"]) {
    s.influence.enabled = method_enabled(r, m, "methods.influence");
    if (m.IsMap()) {
      r.keys(m, "methods.influence", {"closed_form", "components", "memory_tolerance", "memory_time", "truncate"});
      if (m["closed_form"]) s.influence.closed_form = r.boolean(m["closed_form"], "methods.influence.closed_form");
      if (m["components"]) s.influence.components = r.boolean(m["components"], "methods.influence.components");
      if (m["truncate"]) s.influence.truncate = r.boolean(m["truncate"], "methods.influence.truncate");
      if (m["memory_tolerance"]) {
        s.influence.memory_tolerance = r.positive(m["memory_tolerance"], "methods.influence.memory_tolerance");
      }
      if (m["memory_time"]) s.influence.memory_time = r.positive(m["memory_time"], "methods.influence.memory_time");
    }
  }
  if (const YAML::Node m = methods["wcme"]) {
    s.wcme = method_enabled(r, m, "methods.wcme");
    if (m.IsMap()) r.keys(m, "methods.wcme", {});
  }
  if (const YAML::Node m = methods["tcl2"]) {
    s.tcl2 = method_enabled(r, m, "methods.tcl2");
    if (m.IsMap()) r.keys(m, "methods.tcl2", {});
  }
  if (const YAML::Node m = methods["oracle"]) {
    s.oracle.enabled = method_enabled(r, m, "methods.oracle");
    if (m.IsMap()) {
      r.keys(m, "methods.oracle", {"n_fock", "tail", "integrator", "rtol", "atol", "step"});
      if (const YAML::Node nf = m["n_fock"]) {
        if (nf.IsScalar()) {
          s.oracle.n_fock.assign(std::max<std::size_t>(s.modes.size(), 1),
                                 static_cast<int>(r.integer(nf, "methods.oracle.n_fock")));
        } else {
          for (double v : r.numbers(nf, "methods.oracle.n_fock")) s.oracle.n_fock.push_back(static_cast<int>(v));
        }
        for (int v : s.oracle.n_fock) {
          if (v < 2) r.fail(nf, "methods.oracle.n_fock", "needs at least 2 levels");
        }
      }
      if (m["tail"]) s.oracle.tail = r.positive(m["tail"], "methods.oracle.tail");
      if (m["rtol"]) s.oracle.rtol = r.positive(m["rtol"], "methods.oracle.rtol");
      if (m["atol"]) s.oracle.atol = r.positive(m["atol"], "methods.oracle.atol");
      if (m["step"]) s.oracle.step = r.positive(m["step"], "methods.oracle.step");
      if (m["integrator"]) {
        const std::string it = r.text(m["integrator"], "methods.oracle.integrator");
        if (it == "adaptive") {
          s.oracle.integrator = OracleIntegrator::Adaptive;
        } else if (it == "rational") {
          s.oracle.integrator = OracleIntegrator::Rational;
        } else {
          r.fail(m["integrator"], "methods.oracle.integrator", "expected adaptive or rational");
        }
      }
    }
  }
  if (const YAML::Node m = methods["higher_order"]) {
    s.higher_order.enabled = method_enabled(r, m, "methods.higher_order");
    if (m.IsMap()) {
      r.keys(m, "methods.higher_order", {"order"});
      if (m["order"]) {
        const long o = r.integer(m["order"], "methods.higher_order.order");
        if (o != 2 && o != 4) r.fail(m["order"], "methods.higher_order.order", "expected 2 or 4");
        s.higher_order.order = static_cast<int>(o);
      }
    }
  }

  // output
  if (const YAML::Node out = root["output"]) {
    r.keys(out, "output", {"path", "format"});
    if (out["path"]) s.output_path = r.text(out["path"], "output.path");
    if (out["format"]) {
      s.output_format = r.text(out["format"], "output.format");
      if (s.output_format != "csv") r.fail(out["format"], "output.format", "only csv is supported");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scenario(os.str(), path.string());
}

nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  auto vec = [](const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json sys;
  if (s.is_two_level()) {
    sys["two_level"] = {{"epsilon", *s.epsilon}, {"delta", *s.delta}};
  } else {
    sys["n"] = s.n;
    json segs = json::array();
    for (const HamiltonianSegment& seg : s.schedule) segs.push_back({{"start", seg.start}, {"coeffs", vec(seg.coeffs)}});
    sys["hamiltonian"] = segs;
  }
  sys["coupling"] = vec(s.coupling);
  if (!s.rho0_name.empty()) {
    sys["rho0"] = s.rho0_name;
  } else {
    sys["rho0"] = {{"coeffs", vec(s.rho0.coeffs)}};
  }

  json bath;
  if (s.thermal_from_beta) {
    bath["beta"] = s.thermal.beta;
  } else {
    bath["kT"] = s.thermal.kT();
  }
  if (!s.modes.empty()) {
    json modes = json::array();
    for (const DampedMode& m : s.modes) modes.push_back({{"omega", m.omega}, {"g", m.g}, {"gamma", m.gamma}});
    bath["modes"] = modes;
  }
  if (!s.continuous.empty()) {
    json cont = json::array();
    for (const SpectralDensity& sd : s.continuous) {
      json c;
      auto gamma_json = [](const GammaProfile& g) -> json {
        if (g.omega.empty()) return g.constant;
        return {{"omega", g.omega}, {"gamma", g.gamma}};
      };
      if (const auto* o = std::get_if<OhmicFamily>(&sd.kind)) {
        c = {{"type", "ohmic"},
             {"alpha", o->alpha},
             {"s", o->s},
             {"omega_c", o->omega_c},
             {"cutoff", o->cutoff == CutoffForm::Gaussian ? "gaussian" : "exponential"},
             {"gamma", gamma_json(o->gamma)}};
      } else {
        const auto& t = std::get<Tabulated>(sd.kind);
        c = {{"type", "tabulated"}, {"omega", t.omega}, {"J", t.J}};
        if (!t.gamma.empty()) c["gamma"] = t.gamma;
      }
      c["nodes"] = sd.quadrature.nodes;
      c["omega_max"] = sd.quadrature.omega_max;
      cont.push_back(c);
    }
    bath["continuous"] = cont;
  }

  json methods = json::object();
  if (s.influence.enabled) {
    json inf = {{"closed_form", s.influence.closed_form},
                {"components", s.influence.components},
                {"memory_tolerance", s.influence.memory_tolerance},
                {"truncate", s.influence.truncate}};
    if (s.influence.memory_time) inf["memory_time"] = *s.influence.memory_time;
    methods["influence"] = inf;
  }
  if (s.wcme) methods["wcme"] = true;
  if (s.tcl2) methods["tcl2"] = true;
  if (s.oracle.enabled) {
    json o = {{"tail", s.oracle.tail},
              {"integrator", s.oracle.integrator == OracleIntegrator::Adaptive ? "adaptive" : "rational"},
              {"rtol", s.oracle.rtol},
              {"atol", s.oracle.atol}};
    if (!s.oracle.n_fock.empty()) o["n_fock"] = s.oracle.n_fock;
    if (s.oracle.step > 0.0) o["step"] = s.oracle.step;
    methods["oracle"] = o;
  }
  if (s.higher_order.enabled) methods["higher_order"] = {{"order", s.higher_order.order}};

  return {{"system", sys},
          {"bath", bath},
          {"grid", {{"t_max", s.t_max}, {"dt", s.dt}, {"output_every", s.output_every}}},
          {"methods", methods},
          {"output", {{"path", s.output_path}, {"format", s.output_format}}}};
}

}  // namespace tiered
