#include "phia/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace phia {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError("scenario field '" + path + "': " + msg);
}

const json& at(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + key, "missing");
  return *it;
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(path + key, "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) fail(path, "must be positive");
  return v;
}

Vector vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(path, "rows must be non-empty arrays");
  Matrix a(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector(j[r], path + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) fail(path, "rows have different lengths");
    a.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return a;
}

std::vector<std::string> strings(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) fail(path, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void expect_shape(const Matrix& a, Eigen::Index r, Eigen::Index c, const std::string& path) {
  if (a.rows() != r || a.cols() != c)
    fail(path, "expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                   std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

void expect_size(const Vector& v, Eigen::Index n, const std::string& path) {
  if (v.size() != n) fail(path, "expected length " + std::to_string(n) + ", got " + std::to_string(v.size()));
}

ojson to_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson to_json(const Matrix& m) {
  ojson a = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

// Base dimensions (m, p) of the un-extended plant.
std::pair<int, int> base_dims(const SystemParams& params) {
  return std::visit(
      [](const auto& s) -> std::pair<int, int> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MechanicalParams>)
          return {static_cast<int>(s.M.rows()), static_cast<int>(s.K.rows())};
        else if constexpr (std::is_same_v<T, LinearParams>)
          return {static_cast<int>(s.J12.rows()), static_cast<int>(s.J12.cols())};
        else
          return {1, 1};
      },
      params);
}

SystemSpec parse_system(const json& j) {
  const std::string P = "system.";
  const std::string type = [&] {
    const auto& t = at(j, "type", P);
    if (!t.is_string()) fail(P + "type", "expected a string");
    return t.get<std::string>();
  }();
  SystemSpec spec;
  if (type == "rlc") {
    only_keys(j, {"type", "L", "C", "R", "x2_star", "dynamic_extension", "box"}, P);
    spec.params = RlcParams{positive(at(j, "L", P), P + "L"), positive(at(j, "C", P), P + "C"),
                            positive(at(j, "R", P), P + "R"), number(at(j, "x2_star", P), P + "x2_star")};
  } else if (type == "lossless_lc") {
    only_keys(j, {"type", "L", "C", "x2_star", "dynamic_extension", "box"}, P);
    spec.params = LosslessLcParams{positive(at(j, "L", P), P + "L"), positive(at(j, "C", P), P + "C"),
                                   number(at(j, "x2_star", P), P + "x2_star")};
  } else if (type == "mechanical") {
    only_keys(j, {"type", "M", "D", "K", "k", "q_star", "dynamic_extension", "box"}, P);
    MechanicalParams mp{matrix(at(j, "M", P), P + "M"), matrix(at(j, "D", P), P + "D"),
                        matrix(at(j, "K", P), P + "K"), positive(at(j, "k", P), P + "k"),
                        vector(at(j, "q_star", P), P + "q_star")};
    const auto m = mp.M.rows();
    expect_shape(mp.M, m, m, P + "M");
    expect_shape(mp.D, m, m, P + "D");
    if (mp.K.cols() != m || mp.K.rows() > m) fail(P + "K", "expected p x m with p <= m");
    expect_size(mp.q_star, mp.K.rows(), P + "q_star");
    spec.params = std::move(mp);
  } else if (type == "linear_custom") {
    only_keys(j, {"type", "J1", "J12", "J2", "R1", "R2", "Q", "x_star", "dynamic_extension", "box"}, P);
    LinearParams lp{matrix(at(j, "J1", P), P + "J1"),   matrix(at(j, "J12", P), P + "J12"),
                    matrix(at(j, "J2", P), P + "J2"),   matrix(at(j, "R1", P), P + "R1"),
                    matrix(at(j, "R2", P), P + "R2"),   matrix(at(j, "Q", P), P + "Q"),
                    vector(at(j, "x_star", P), P + "x_star")};
    const auto m = lp.J12.rows();
    const auto p = lp.J12.cols();
    if (p > m) fail(P + "J12", "expected m x p with p <= m");
    expect_shape(lp.J1, m, m, P + "J1");
    expect_shape(lp.R1, m, m, P + "R1");
    expect_shape(lp.J2, p, p, P + "J2");
    expect_shape(lp.R2, p, p, P + "R2");
    expect_shape(lp.Q, m + p, m + p, P + "Q");
    expect_size(lp.x_star, m + p, P + "x_star");
    spec.params = std::move(lp);
  } else {
    fail(P + "type", "unknown system type '" + type + "'");
  }

  if (auto it = j.find("dynamic_extension"); it != j.end()) {
    if (!it->is_boolean()) fail(P + "dynamic_extension", "expected a boolean");
    spec.dynamic_extension = it->get<bool>();
  }
  if (auto it = j.find("box"); it != j.end()) {
    only_keys(*it, {"lower", "upper"}, P + "box.");
    StateBox box{vector(at(*it, "lower", P + "box."), P + "box.lower"),
                 vector(at(*it, "upper", P + "box."), P + "box.upper")};
    const auto [m, p] = base_dims(spec.params);
    expect_size(box.lower, m + p, P + "box.lower");
    expect_size(box.upper, m + p, P + "box.upper");
    if (((box.upper - box.lower).array() <= 0.0).any()) fail(P + "box", "upper must exceed lower");
    spec.box = std::move(box);
  }
  return spec;
}

ControllerSpec parse_controller(const json& j, int m, int p) {
  const std::string P = "controller.";
  only_keys(j, {"variant", "E", "Kc", "Rd", "KI"}, P);
  ControllerSpec c;
  const auto& v = at(j, "variant", P);
  if (!v.is_string()) fail(P + "variant", "expected a string");
  try {
    c.variant = controller_variant_from_string(v.get<std::string>());
  } catch (const ContractViolation& e) {
    fail(P + "variant", e.what());
  }
  const int zdim = c.variant == ControllerVariant::PassiveBaseline ? m : p;
  if (auto it = j.find("E"); it != j.end() && !(it->is_string() && it->get<std::string>() == "auto")) {
    if (it->is_string()) fail(P + "E", "expected \"auto\" or a matrix");
    c.E = matrix(*it, P + "E");
    expect_shape(*c.E, m, p, P + "E");
  }
  if (auto it = j.find("Kc"); it != j.end()) {
    c.Kc = matrix(*it, P + "Kc");
    expect_shape(*c.Kc, zdim, zdim, P + "Kc");
  }
  if (auto it = j.find("Rd"); it != j.end()) {
    if (c.variant != ControllerVariant::CbiTilde) fail(P + "Rd", "only used by the cbi_tilde variant");
    c.Rd = matrix(*it, P + "Rd");
    expect_shape(*c.Rd, m, m, P + "Rd");
  } else if (c.variant == ControllerVariant::CbiTilde) {
    fail(P + "Rd", "missing (required by cbi_tilde)");
  }
  if (auto it = j.find("KI"); it != j.end()) {
    if (c.variant != ControllerVariant::PassiveBaseline)
      fail(P + "KI", "only used by the passive_baseline variant");
    c.KI = matrix(*it, P + "KI");
    expect_shape(*c.KI, m, m, P + "KI");
  } else if (c.variant == ControllerVariant::PassiveBaseline) {
    fail(P + "KI", "missing (required by passive_baseline)");
  }
  if (c.E && (c.variant == ControllerVariant::CbiTilde || c.variant == ControllerVariant::PassiveBaseline))
    fail(P + "E", "must be \"auto\" for this variant");
  return c;
}

IntegratorConfig parse_sim(const json& j) {
  const std::string P = "sim.";
  only_keys(j, {"method", "dt", "rtol", "atol", "dt_min", "dt_max", "t0", "t_final", "record_every"}, P);
  IntegratorConfig cfg;
  if (auto it = j.find("method"); it != j.end()) {
    if (!it->is_string()) fail(P + "method", "expected \"rk4\" or \"rk45\"");
    try {
      cfg.method = integration_method_from_string(it->get<std::string>());
    } catch (const ContractViolation& e) {
      fail(P + "method", e.what());
    }
  }
  auto opt = [&](const char* key, double& field) {
    if (auto it = j.find(key); it != j.end()) field = number(*it, P + key);
  };
  opt("dt", cfg.dt);
  opt("rtol", cfg.rtol);
  opt("atol", cfg.atol);
  opt("dt_min", cfg.dt_min);
  opt("dt_max", cfg.dt_max);
  opt("t0", cfg.t0);
  cfg.t_final = number(at(j, "t_final", P), P + "t_final");
  if (auto it = j.find("record_every"); it != j.end()) {
    if (!it->is_number_integer()) fail(P + "record_every", "expected an integer");
    cfg.record_every = it->get<int>();
  }
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    fail("sim", e.what());
  }
  return cfg;
}

// Compact arrays, indented objects.
void emit(std::ostringstream& os, const ojson& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t i = 0;
    for (const auto& [key, value] : j.items()) {
      os << pad << "  " << ojson(key).dump() << ": ";
      emit(os, value, depth + 1);
      os << (++i < j.size() ? ",\n" : "\n");
    }
    os << pad << "}";
  } else if (j.is_array()) {
    os << "[";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ", ";
      emit(os, j[i], depth);
    }
    os << "]";
  } else {
    os << j.dump();
  }
}

}  // namespace

std::string to_string(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::Direct: return "direct";
    case ControllerVariant::Cbi: return "cbi";
    case ControllerVariant::CbiTilde: return "cbi_tilde";
    case ControllerVariant::PassiveBaseline: return "passive_baseline";
  }
  return "direct";
}

ControllerVariant controller_variant_from_string(const std::string& s) {
  for (auto v : {ControllerVariant::Direct, ControllerVariant::Cbi, ControllerVariant::CbiTilde,
                 ControllerVariant::PassiveBaseline})
    if (to_string(v) == s) return v;
  throw ContractViolation("unknown controller variant '" + s + "'");
}

int Scenario::m() const { return base_dims(system.params).first; }

int Scenario::p() const {
  const auto [m, p] = base_dims(system.params);
  return system.dynamic_extension ? m : p;
}

int Scenario::zeta_dim() const { return controller.variant == ControllerVariant::PassiveBaseline ? m() : p(); }

const std::vector<std::string>& known_check_groups() {
  static const std::vector<std::string> groups{"assembly",    "assumptions", "cbi_equivalence",
                                               "convergence", "equilibrium", "gradient",
                                               "lyapunov",    "structure"};
  return groups;
}

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The library message carries the line and column.
    throw ScenarioError(std::string("scenario syntax error: ") + e.what());
  }
  only_keys(root, {"schema", "name", "description", "system", "controller", "disturbance", "sim", "initial",
                   "checks", "expected_fail", "expected"},
            "");
  const auto& schema = at(root, "schema", "");
  if (!schema.is_number_integer() || schema.get<int>() != 1) fail("schema", "unsupported schema (expected 1)");

  Scenario s;
  const auto& name = at(root, "name", "");
  if (!name.is_string() || name.get<std::string>().empty()) fail("name", "expected a non-empty string");
  s.name = name.get<std::string>();
  if (s.name.find_first_of("/\\") != std::string::npos) fail("name", "must not contain path separators");
  if (auto it = root.find("description"); it != root.end()) {
    if (!it->is_string()) fail("description", "expected a string");
    s.description = it->get<std::string>();
  }

  s.system = parse_system(at(root, "system", ""));
  const auto [m0, p0] = base_dims(s.system.params);
  if (s.system.dynamic_extension && p0 >= m0) fail("system.dynamic_extension", "requires dim x2 < dim x1");
  const int m = s.m();
  const int p = s.p();
  s.controller = parse_controller(at(root, "controller", ""), m, p);
  if (s.controller.variant == ControllerVariant::CbiTilde &&
      !std::holds_alternative<LosslessLcParams>(s.system.params) &&
      !std::holds_alternative<LinearParams>(s.system.params))
    fail("controller.variant", "cbi_tilde needs a lossless plant (lossless_lc or linear_custom with R1 = 0)");

  {
    const std::string P = "disturbance.";
    const json empty = json::object();
    const json& d = root.contains("disturbance") ? root["disturbance"] : empty;
    only_keys(d, {"d1", "d2", "step_time"}, P);
    s.disturbance.d1 = d.contains("d1") ? vector(d["d1"], P + "d1") : Vector::Zero(m);
    s.disturbance.d2 = d.contains("d2") ? vector(d["d2"], P + "d2") : Vector::Zero(p0);
    s.disturbance.step_time = d.contains("step_time") ? number(d["step_time"], P + "step_time") : 0.0;
    expect_size(s.disturbance.d1, m, P + "d1");
    expect_size(s.disturbance.d2, p0, P + "d2");
    // The output-feedback controller never sees d1; a matched disturbance
    // would leave dH/dx2 = J12^{-1} d1 at steady state.
    if (s.controller.variant == ControllerVariant::CbiTilde && s.disturbance.has_matched())
      fail(P + "d1", "cbi_tilde rejects unmatched disturbances only; d1 must be zero");
  }

  s.sim = parse_sim(at(root, "sim", ""));

  const int wdim = m + p + s.zeta_dim();
  if (auto it = root.find("initial"); it != root.end()) {
    only_keys(*it, {"w0", "equilibrium_offset"}, "initial.");
    if (it->contains("w0") && it->contains("equilibrium_offset"))
      fail("initial", "give either w0 or equilibrium_offset, not both");
    if (it->contains("w0")) {
      s.initial.w0 = vector((*it)["w0"], "initial.w0");
      expect_size(*s.initial.w0, wdim, "initial.w0");
    } else if (it->contains("equilibrium_offset")) {
      s.initial.equilibrium_offset = vector((*it)["equilibrium_offset"], "initial.equilibrium_offset");
      expect_size(s.initial.equilibrium_offset, wdim, "initial.equilibrium_offset");
    }
  }
  if (!s.initial.w0 && s.initial.equilibrium_offset.size() == 0) s.initial.equilibrium_offset = Vector::Zero(wdim);

  if (auto it = root.find("checks"); it != root.end()) {
    s.checks = strings(*it, "checks");
    for (const auto& c : s.checks) {
      const auto& known = known_check_groups();
      if (std::find(known.begin(), known.end(), c) == known.end()) fail("checks", "unknown check group '" + c + "'");
    }
  }
  if (auto it = root.find("expected_fail"); it != root.end()) s.expected_fail = strings(*it, "expected_fail");

  if (auto it = root.find("expected"); it != root.end()) {
    const std::string P = "expected.";
    only_keys(*it, {"x1_bar", "x2_star", "zeta_bar"}, P);
    ExpectedEquilibrium e{vector(at(*it, "x1_bar", P), P + "x1_bar"), vector(at(*it, "x2_star", P), P + "x2_star"),
                          vector(at(*it, "zeta_bar", P), P + "zeta_bar")};
    expect_size(e.x1_bar, m, P + "x1_bar");
    expect_size(e.x2_star, p, P + "x2_star");
    expect_size(e.zeta_bar, s.zeta_dim(), P + "zeta_bar");
    s.expected = std::move(e);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  ojson root;
  root["schema"] = 1;
  root["name"] = s.name;
  root["description"] = s.description;

  ojson sys;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RlcParams>) {
          sys["type"] = "rlc";
          sys["L"] = p.L;
          sys["C"] = p.C;
          sys["R"] = p.R;
          sys["x2_star"] = p.x2_star;
        } else if constexpr (std::is_same_v<T, LosslessLcParams>) {
          sys["type"] = "lossless_lc";
          sys["L"] = p.L;
          sys["C"] = p.C;
          sys["x2_star"] = p.x2_star;
        } else if constexpr (std::is_same_v<T, MechanicalParams>) {
          sys["type"] = "mechanical";
          sys["M"] = to_json(p.M);
          sys["D"] = to_json(p.D);
          sys["K"] = to_json(p.K);
          sys["k"] = p.k;
          sys["q_star"] = to_json(p.q_star);
        } else {
          sys["type"] = "linear_custom";
          sys["J1"] = to_json(p.J1);
          sys["J12"] = to_json(p.J12);
          sys["J2"] = to_json(p.J2);
          sys["R1"] = to_json(p.R1);
          sys["R2"] = to_json(p.R2);
          sys["Q"] = to_json(p.Q);
          sys["x_star"] = to_json(p.x_star);
        }
      },
      s.system.params);
  sys["dynamic_extension"] = s.system.dynamic_extension;
  if (s.system.box) sys["box"] = ojson{{"lower", to_json(s.system.box->lower)}, {"upper", to_json(s.system.box->upper)}};
  root["system"] = sys;

  ojson ctl;
  ctl["variant"] = to_string(s.controller.variant);
  ctl["E"] = s.controller.E ? to_json(*s.controller.E) : ojson("auto");
  if (s.controller.Kc) ctl["Kc"] = to_json(*s.controller.Kc);
  if (s.controller.Rd) ctl["Rd"] = to_json(*s.controller.Rd);
  if (s.controller.KI) ctl["KI"] = to_json(*s.controller.KI);
  root["controller"] = ctl;

  root["disturbance"] = ojson{{"d1", to_json(s.disturbance.d1)},
                              {"d2", to_json(s.disturbance.d2)},
                              {"step_time", s.disturbance.step_time}};

  const auto& c = s.sim;
  root["sim"] = ojson{{"method", to_string(c.method)}, {"dt", c.dt},         {"rtol", c.rtol},
                      {"atol", c.atol},                {"dt_min", c.dt_min}, {"dt_max", c.dt_max},
                      {"t0", c.t0},                    {"t_final", c.t_final}, {"record_every", c.record_every}};

  root["initial"] = s.initial.w0 ? ojson{{"w0", to_json(*s.initial.w0)}}
                                 : ojson{{"equilibrium_offset", to_json(s.initial.equilibrium_offset)}};
  root["checks"] = s.checks;
  root["expected_fail"] = s.expected_fail;
  if (s.expected)
    root["expected"] = ojson{{"x1_bar", to_json(s.expected->x1_bar)},
                             {"x2_star", to_json(s.expected->x2_star)},
                             {"zeta_bar", to_json(s.expected->zeta_bar)}};

  std::ostringstream os;
  emit(os, root, 0);
  os << "\n";
  return os.str();
}

PartitionedPHSystem build_rlc(const RlcParams& params) {
  require(params.L > 0.0 && params.C > 0.0 && params.R > 0.0, "build_rlc: L, C and R must be positive");
  const Matrix Q = (Matrix(2, 2) << 1.0 / params.L, 0.0, 0.0, 1.0 / params.C).finished();
  const Vector x_star = (Vector(2) << 0.0, params.x2_star).finished();
  return PartitionedPHSystem({
      .m = 1,
      .p = 1,
      .J1 = constant_field(Matrix::Zero(1, 1)),
      .J12 = constant_field(Matrix::Constant(1, 1, -1.0)),
      .J2 = constant_field(Matrix::Zero(1, 1)),
      .R1 = constant_field(Matrix::Constant(1, 1, params.R)),
      .R2 = constant_field(Matrix::Zero(1, 1)),
      .H = HamiltonianFn::quadratic(Q, x_star),
      .x_star = x_star,
      .domain = {},
      .constant = {true, true, true},
      .name = "rlc",
  });
}

PartitionedPHSystem build_lossless_lc(const LosslessLcParams& params) {
  require(params.L > 0.0 && params.C > 0.0, "build_lossless_lc: L and C must be positive");
  const Matrix Q = (Matrix(2, 2) << 1.0 / params.L, 0.0, 0.0, 1.0 / params.C).finished();
  const Vector x_star = (Vector(2) << 0.0, params.x2_star).finished();
  return PartitionedPHSystem({
      .m = 1,
      .p = 1,
      .J1 = constant_field(Matrix::Zero(1, 1)),
      .J12 = constant_field(Matrix::Constant(1, 1, -1.0)),
      .J2 = constant_field(Matrix::Zero(1, 1)),
      .R1 = constant_field(Matrix::Zero(1, 1)),
      .R2 = constant_field(Matrix::Zero(1, 1)),
      .H = HamiltonianFn::quadratic(Q, x_star),
      .x_star = x_star,
      .domain = {},
      .constant = {true, true, true},
      .name = "lossless_lc",
  });
}

PartitionedPHSystem build_mechanical(const MechanicalParams& params) {
  const auto m = params.M.rows();
  const auto p = params.K.rows();
  require(params.M.cols() == m && params.D.rows() == m && params.D.cols() == m && params.K.cols() == m,
          "build_mechanical: M, D must be m x m and K p x m");
  require(p <= m && params.q_star.size() == p, "build_mechanical: need p <= m and q_star of length p");
  require(linalg::symmetry_defect(params.M) <= tol::kStructure && linalg::min_symmetric_eigenvalue(params.M) > 0.0,
          "build_mechanical: M must be symmetric positive definite");
  require(linalg::symmetry_defect(params.D) <= tol::kStructure && linalg::min_symmetric_eigenvalue(params.D) > 0.0,
          "build_mechanical: D must be symmetric positive definite");
  require(linalg::rank_ratio(params.K) > tol::kRank, "build_mechanical: K must have full rank");
  require(params.k > 0.0, "build_mechanical: spring stiffness k must be positive");

  const Matrix Q = linalg::block_diag(linalg::inverse_checked(params.M, "M"),
                                      params.k * Matrix::Identity(p, p));
  Vector x_star(m + p);
  x_star << Vector::Zero(m), params.q_star;
  return PartitionedPHSystem({
      .m = static_cast<int>(m),
      .p = static_cast<int>(p),
      .J1 = constant_field(Matrix::Zero(m, m)),
      .J12 = constant_field(-params.K.transpose()),
      .J2 = constant_field(Matrix::Zero(p, p)),
      .R1 = constant_field(params.D),
      .R2 = constant_field(Matrix::Zero(p, p)),
      .H = HamiltonianFn::quadratic(0.5 * (Q + Q.transpose()), x_star),
      .x_star = x_star,
      .domain = {},
      .constant = {true, true, true},
      .name = "mechanical",
  });
}

PartitionedPHSystem build_linear(const LinearParams& params) {
  const auto m = params.J12.rows();
  const auto p = params.J12.cols();
  require(params.J1.rows() == m && params.J1.cols() == m && params.R1.rows() == m && params.R1.cols() == m &&
              params.J2.rows() == p && params.J2.cols() == p && params.R2.rows() == p && params.R2.cols() == p &&
              params.Q.rows() == m + p && params.Q.cols() == m + p && params.x_star.size() == m + p,
          "build_linear: inconsistent dimensions");
  return PartitionedPHSystem({
      .m = static_cast<int>(m),
      .p = static_cast<int>(p),
      .J1 = constant_field(params.J1),
      .J12 = constant_field(params.J12),
      .J2 = constant_field(params.J2),
      .R1 = constant_field(params.R1),
      .R2 = constant_field(params.R2),
      .H = HamiltonianFn::quadratic(params.Q, params.x_star),
      .x_star = params.x_star,
      .domain = {},
      .constant = {true, true, true},
      .name = "linear_custom",
  });
}

BuiltSystem build_system(const Scenario& s, std::uint64_t seed) {
  PartitionedPHSystem plant = std::visit(
      [](const auto& p) -> PartitionedPHSystem {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RlcParams>) return build_rlc(p);
        else if constexpr (std::is_same_v<T, LosslessLcParams>) return build_lossless_lc(p);
        else if constexpr (std::is_same_v<T, MechanicalParams>) return build_mechanical(p);
        else return build_linear(p);
      },
      s.system.params);
  if (s.system.box) {
    auto f = plant.fields();
    f.domain = *s.system.box;
    plant = PartitionedPHSystem(std::move(f));
  }
  if (!s.system.dynamic_extension) return BuiltSystem{plant, s.disturbance, std::nullopt};
  auto ext = dynamic_extension(plant, seed);
  const int extra = ext.system.p() - plant.p();
  return BuiltSystem{ext.system, extend_disturbance(s.disturbance, extra), ext};
}

IntegralController build_controller(const Scenario& s, const PartitionedPHSystem& plant) {
  const Matrix E = s.controller.E ? *s.controller.E : default_E(plant);
  const Matrix Kc = s.controller.Kc ? *s.controller.Kc : Matrix::Identity(plant.p(), plant.p());
  return IntegralController::quadratic(E, Kc);
}

}  // namespace phia
