#include "lapue/config.hpp"

#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lapue {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

Eigen::VectorXd to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) fail(what + " must be an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(what + " must contain numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

CapacityModel parse_capacity(const json& j) {
  if (!j.is_object() || !j.contains("kind")) fail("capacity model needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "normal") {
    NormalModel m;
    m.mu = j.at("mu").get<double>();
    m.sigma = j.at("sigma").get<double>();
    if (j.contains("floor_fraction"))
      m.floor_fraction = j.at("floor_fraction").get<double>();
    return m;
  }
  if (kind == "perturbed_tail") {
    PerturbedTailModel m;
    m.mu = j.at("mu").get<double>();
    m.sigma = j.at("sigma").get<double>();
    if (j.contains("q")) m.q = j.at("q").get<double>();
    if (j.contains("beta")) m.beta = j.at("beta").get<double>();
    return m;
  }
  if (kind == "point_mass") {
    PointMassModel m;
    m.value = j.at("value").get<double>();
    return m;
  }
  if (kind == "mixture") {
    MixtureModel m;
    m.base = std::make_shared<CapacityModel>(parse_capacity(j.at("base")));
    m.contaminant =
        std::make_shared<CapacityModel>(parse_capacity(j.at("contaminant")));
    m.eps = j.at("eps").get<double>();
    return m;
  }
  fail("unknown capacity kind '" + kind + "'");
}

}  // namespace

LoadedConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }

  LoadedConfig out;
  Network& net = out.model.network;
  if (j.contains("name")) net.name = j.at("name").get<std::string>();

  if (!j.contains("nodes") || !j.at("nodes").is_array()) fail("nodes array required");
  for (const json& n : j.at("nodes")) net.nodes.push_back(n.get<int>());

  if (!j.contains("arcs") || !j.at("arcs").is_array()) fail("arcs array required");
  const size_t A = j.at("arcs").size();
  out.model.gbpr.t0.resize(A);
  out.model.gbpr.b.resize(A);
  out.model.gbpr.n.resize(A);
  size_t idx = 0;
  for (const json& ja : j.at("arcs")) {
    Arc a;
    a.id = ja.at("id").get<int>();
    a.tail = ja.at("tail").get<int>();
    a.head = ja.at("head").get<int>();
    net.arcs.push_back(a);
    out.model.gbpr.t0[idx] = ja.at("t0").get<double>();
    out.model.gbpr.b[idx] = ja.contains("b") ? ja.at("b").get<double>() : 0.15;
    out.model.gbpr.n[idx] = ja.contains("n") ? ja.at("n").get<double>() : 4.0;
    if (!ja.contains("capacity")) fail("arc " + std::to_string(a.id) + " needs a capacity model");
    out.capacity_models.push_back(parse_capacity(ja.at("capacity")));
    ++idx;
  }

  if (!j.contains("od_pairs") || !j.at("od_pairs").is_array())
    fail("od_pairs array required");
  const int max_paths =
      j.contains("max_paths") ? j.at("max_paths").get<int>() : 1000;
  int k = 0;
  std::vector<bool> needs_enumeration;
  for (const json& jod : j.at("od_pairs")) {
    OdPair od;
    od.origin = jod.at("origin").get<int>();
    od.destination = jod.at("destination").get<int>();
    od.demand = jod.at("demand").get<double>();
    net.od_pairs.push_back(od);
    if (jod.contains("paths")) {
      for (const json& jp : jod.at("paths")) {
        Path p;
        p.od_index = k;
        for (const json& aid : jp) p.arc_ids.push_back(aid.get<int>());
        net.paths.push_back(p);
      }
      needs_enumeration.push_back(false);
    } else {
      needs_enumeration.push_back(true);
    }
    ++k;
  }
  for (int kk = 0; kk < net.num_od_pairs(); ++kk) {
    if (!needs_enumeration[kk]) continue;
    std::vector<Path> found;
    try {
      found = enumerate_simple_paths(net, kk, max_paths);
    } catch (const std::runtime_error& e) {
      fail(e.what());  // path explosion is a configuration problem
    }
    if (found.empty())
      fail("OD pair " + std::to_string(kk) + " has no simple path");
    for (const Path& p : found) net.paths.push_back(p);
  }

  net.validate();
  out.model.gbpr.validate(net.num_arcs());
  for (const CapacityModel& cm : out.capacity_models) validate_model(cm);
  out.model.inc = build_incidence(net);

  PenaltyConfig& pc = out.penalty;
  if (j.contains("penalty")) {
    const json& jp = j.at("penalty");
    if (jp.contains("theta0")) pc.theta0 = jp.at("theta0").get<double>();
    if (jp.contains("theta1")) pc.theta1 = jp.at("theta1").get<double>();
    if (jp.contains("theta2")) pc.theta2 = jp.at("theta2").get<double>();
    if (jp.contains("t")) pc.t = jp.at("t").get<double>();
    if (jp.contains("d")) pc.d = to_vector(jp.at("d"), "penalty.d");
    if (jp.contains("tau")) pc.tau = to_vector(jp.at("tau"), "penalty.tau");
    if (jp.contains("mode")) {
      const std::string mode = jp.at("mode").get<std::string>();
      if (mode == "smooth") pc.mode = PenaltyMode::kSmooth;
      else if (mode == "max") pc.mode = PenaltyMode::kMax;
      else fail("penalty.mode must be 'smooth' or 'max'");
    }
  }
  if (pc.tau.size() == 0)
    pc.tau = Eigen::VectorXd::Constant(net.num_od_pairs(),
                                       std::numeric_limits<double>::infinity());
  pc.validate(net);

  if (j.contains("reference")) {
    const json& jr = j.at("reference");
    ReferenceValues rv;
    if (jr.contains("ue_flows")) rv.ue_flows = to_vector(jr.at("ue_flows"), "reference.ue_flows");
    if (jr.contains("ue_disutilities"))
      rv.ue_disutilities = to_vector(jr.at("ue_disutilities"), "reference.ue_disutilities");
    if (jr.contains("mlapue_flows"))
      rv.mlapue_flows = to_vector(jr.at("mlapue_flows"), "reference.mlapue_flows");
    if (jr.contains("mlapue_disutilities"))
      rv.mlapue_disutilities =
          to_vector(jr.at("mlapue_disutilities"), "reference.mlapue_disutilities");
    if (jr.contains("mlapue_t")) rv.mlapue_t = jr.at("mlapue_t").get<double>();
    out.reference = rv;
  }
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(e.what()) + " [" + path + "]");
  }
}

}  // namespace lapue
