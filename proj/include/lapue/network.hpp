#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lapue {

struct Arc {
  int id = 0;
  int tail = 0;
  int head = 0;
};

struct OdPair {
  int origin = 0;
  int destination = 0;
  double demand = 0.0;
};

// A route expressed as an ordered list of arc ids, belonging to one OD pair.
struct Path {
  std::vector<int> arc_ids;
  int od_index = 0;
};

struct Network {
  std::string name;
  std::vector<int> nodes;
  std::vector<Arc> arcs;
  std::vector<OdPair> od_pairs;
  std::vector<Path> paths;

  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int num_paths() const { return static_cast<int>(paths.size()); }
  int num_od_pairs() const { return static_cast<int>(od_pairs.size()); }

  // Position of an arc id in `arcs`; throws std::invalid_argument if absent.
  int arc_index(int arc_id) const;

  // Path indices belonging to OD pair k, in declaration order.
  std::vector<int> od_path_indices(int k) const;

  Eigen::VectorXd demands() const;

  // Checks structural invariants: unique positive ids, arcs reference known
  // nodes, paths are arc-connected origin->destination routes without
  // repeated arcs, demands nonnegative, every OD pair has at least one path.
  // Throws std::invalid_argument with a description on violation.
  void validate() const;
};

struct IncidenceMatrices {
  Eigen::MatrixXd delta;  // arcs x paths, delta(a,r) = 1 if arc a on path r
  Eigen::MatrixXd pi;     // od_pairs x paths, pi(k,r) = 1 if path r serves k
};

IncidenceMatrices build_incidence(const Network& net);

// v = delta * f
Eigen::VectorXd path_to_arc_flows(const IncidenceMatrices& inc,
                                  const Eigen::VectorXd& path_flows);

// Euclidean projection of x onto the scaled simplex {y >= 0, sum y = q}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& x, double q);

// Euclidean projection onto D = {f >= 0 : pi f = q}, blockwise per OD pair.
Eigen::VectorXd project_feasible(const Network& net, const Eigen::VectorXd& x);

// All simple directed paths (no repeated node) from the OD pair's origin to
// its destination, ordered lexicographically by arc-id sequence.  Returns an
// empty set when origin == destination.  Throws std::runtime_error if more
// than max_paths paths exist.
std::vector<Path> enumerate_simple_paths(const Network& net, int od_index,
                                         int max_paths);

}  // namespace lapue
