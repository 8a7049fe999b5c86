#include "lapue/network.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace lapue {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("network: " + msg);
}

}  // namespace

int Network::arc_index(int arc_id) const {
  for (int a = 0; a < num_arcs(); ++a) {
    if (arcs[a].id == arc_id) return a;
  }
  fail("unknown arc id " + std::to_string(arc_id));
}

std::vector<int> Network::od_path_indices(int k) const {
  std::vector<int> out;
  for (int r = 0; r < num_paths(); ++r) {
    if (paths[r].od_index == k) out.push_back(r);
  }
  return out;
}

Eigen::VectorXd Network::demands() const {
  Eigen::VectorXd q(num_od_pairs());
  for (int k = 0; k < num_od_pairs(); ++k) q[k] = od_pairs[k].demand;
  return q;
}

void Network::validate() const {
  if (nodes.empty()) fail("no nodes");
  std::unordered_set<int> node_set(nodes.begin(), nodes.end());
  if (node_set.size() != nodes.size()) fail("duplicate node ids");

  if (arcs.empty()) fail("no arcs");
  std::unordered_set<int> arc_ids;
  for (const Arc& a : arcs) {
    if (!arc_ids.insert(a.id).second)
      fail("duplicate arc id " + std::to_string(a.id));
    if (!node_set.count(a.tail) || !node_set.count(a.head))
      fail("arc " + std::to_string(a.id) + " references unknown node");
    if (a.tail == a.head) fail("arc " + std::to_string(a.id) + " is a self-loop");
  }

  if (od_pairs.empty()) fail("no OD pairs");
  for (const OdPair& od : od_pairs) {
    if (!node_set.count(od.origin) || !node_set.count(od.destination))
      fail("OD pair references unknown node");
    if (!(od.demand >= 0.0)) fail("negative or NaN demand");
  }

  if (paths.empty()) fail("no paths");
  std::unordered_map<int, const Arc*> arc_by_id;
  for (const Arc& a : arcs) arc_by_id[a.id] = &a;
  std::vector<int> per_od(od_pairs.size(), 0);
  for (size_t r = 0; r < paths.size(); ++r) {
    const Path& p = paths[r];
    if (p.od_index < 0 || p.od_index >= num_od_pairs())
      fail("path " + std::to_string(r) + " has invalid OD index");
    if (p.arc_ids.empty()) fail("path " + std::to_string(r) + " is empty");
    std::unordered_set<int> seen;
    int at = od_pairs[p.od_index].origin;
    for (int id : p.arc_ids) {
      auto it = arc_by_id.find(id);
      if (it == arc_by_id.end())
        fail("path " + std::to_string(r) + " uses unknown arc " + std::to_string(id));
      if (!seen.insert(id).second)
        fail("path " + std::to_string(r) + " repeats arc " + std::to_string(id));
      if (it->second->tail != at)
        fail("path " + std::to_string(r) + " is not arc-connected");
      at = it->second->head;
    }
    if (at != od_pairs[p.od_index].destination)
      fail("path " + std::to_string(r) + " does not reach its destination");
    ++per_od[p.od_index];
  }
  for (size_t k = 0; k < per_od.size(); ++k) {
    if (per_od[k] == 0)
      fail("OD pair " + std::to_string(k) + " has no path");
  }
}

IncidenceMatrices build_incidence(const Network& net) {
  const int A = net.num_arcs();
  const int N = net.num_paths();
  const int W = net.num_od_pairs();
  IncidenceMatrices inc;
  inc.delta = Eigen::MatrixXd::Zero(A, N);
  inc.pi = Eigen::MatrixXd::Zero(W, N);
  for (int r = 0; r < N; ++r) {
    for (int id : net.paths[r].arc_ids) inc.delta(net.arc_index(id), r) = 1.0;
    inc.pi(net.paths[r].od_index, r) = 1.0;
  }
  return inc;
}

Eigen::VectorXd path_to_arc_flows(const IncidenceMatrices& inc,
                                  const Eigen::VectorXd& path_flows) {
  if (path_flows.size() != inc.delta.cols())
    throw std::invalid_argument("path_to_arc_flows: size mismatch");
  return inc.delta * path_flows;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& x, double q) {
  if (!(q >= 0.0)) throw std::invalid_argument("project_simplex: q must be >= 0");
  const int n = static_cast<int>(x.size());
  if (n == 0) throw std::invalid_argument("project_simplex: empty block");

  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double lambda = 0.0;
  int rho = 0;
  for (int j = 0; j < n; ++j) {
    cumsum += u[j];
    const double cand = (q - cumsum) / (j + 1);
    if (u[j] + cand > 0.0) {
      rho = j + 1;
      lambda = cand;
    }
  }
  if (rho == 0) {
    // Degenerate q = 0 with all coordinates clipped.
    return Eigen::VectorXd::Zero(n);
  }
  Eigen::VectorXd y = (x.array() + lambda).cwiseMax(0.0);

  // Let the largest coordinate absorb the rounding residual so the block
  // sums to q at machine precision.
  int imax = 0;
  y.maxCoeff(&imax);
  double others = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i != imax) others += y[i];
  }
  const double fixed = q - others;
  if (fixed >= 0.0) y[imax] = fixed;
  return y;
}

Eigen::VectorXd project_feasible(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.num_paths())
    throw std::invalid_argument("project_feasible: size mismatch");
  Eigen::VectorXd out(x.size());
  for (int k = 0; k < net.num_od_pairs(); ++k) {
    const std::vector<int> idx = net.od_path_indices(k);
    Eigen::VectorXd block(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) block[j] = x[idx[j]];
    const Eigen::VectorXd proj = project_simplex(block, net.od_pairs[k].demand);
    for (size_t j = 0; j < idx.size(); ++j) out[idx[j]] = proj[j];
  }
  return out;
}

namespace {

void dfs_paths(const Network& net,
               const std::unordered_map<int, std::vector<int>>& out_arcs,
               int node, int destination, std::vector<int>& arc_stack,
               std::set<int>& visited, int od_index, int max_paths,
               std::vector<Path>& found) {
  if (node == destination) {
    if (static_cast<int>(found.size()) >= max_paths)
      throw std::runtime_error("enumerate_simple_paths: more than " +
                               std::to_string(max_paths) + " paths");
    found.push_back(Path{arc_stack, od_index});
    return;
  }
  auto it = out_arcs.find(node);
  if (it == out_arcs.end()) return;
  for (int a : it->second) {
    const Arc& arc = net.arcs[a];
    if (visited.count(arc.head)) continue;
    visited.insert(arc.head);
    arc_stack.push_back(arc.id);
    dfs_paths(net, out_arcs, arc.head, destination, arc_stack, visited,
              od_index, max_paths, found);
    arc_stack.pop_back();
    visited.erase(arc.head);
  }
}

}  // namespace

std::vector<Path> enumerate_simple_paths(const Network& net, int od_index,
                                         int max_paths) {
  if (od_index < 0 || od_index >= net.num_od_pairs())
    throw std::invalid_argument("enumerate_simple_paths: bad OD index");
  if (max_paths <= 0)
    throw std::invalid_argument("enumerate_simple_paths: max_paths must be > 0");
  const OdPair& od = net.od_pairs[od_index];
  if (od.origin == od.destination) return {};

  // Outgoing arc positions per node, ordered by arc id so DFS emits paths in
  // lexicographic arc-id order.
  std::unordered_map<int, std::vector<int>> out_arcs;
  for (int a = 0; a < net.num_arcs(); ++a)
    out_arcs[net.arcs[a].tail].push_back(a);
  for (auto& [node, list] : out_arcs) {
    std::sort(list.begin(), list.end(), [&](int lhs, int rhs) {
      return net.arcs[lhs].id < net.arcs[rhs].id;
    });
  }

  std::vector<Path> found;
  std::vector<int> stack;
  std::set<int> visited{od.origin};
  dfs_paths(net, out_arcs, od.origin, od.destination, stack, visited, od_index,
            max_paths, found);
  return found;
}

}  // namespace lapue
