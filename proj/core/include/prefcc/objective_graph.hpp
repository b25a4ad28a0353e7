#pragma once

// Lattice of candidate weight vectors and the neighborhood-ordered training
// sequence built from it.

#include <limits>
#include <optional>
#include <vector>

#include "prefcc/env.hpp"

namespace prefcc {

// Candidate objectives at step 1/denominator. Vertices are kept in
// lexicographic order of their weight vectors; that order also breaks ties
// in the sorting algorithm.
struct ObjectiveGraph {
  int denominator = 0;
  std::vector<WeightVector> vertices;
  std::vector<std::vector<int>> adjacency;  // unit-weight undirected edges

  double step() const { return 1.0 / denominator; }
  std::size_t size() const { return vertices.size(); }
  std::optional<int> find(const WeightVector& w, double tol = 1e-9) const;
  bool adjacent(int a, int b) const;
};

// Neighbor predicate at step s: the vectors are distinct and every
// component differs by at most s. On the lattice this is exactly "two
// coordinates differ, each by s".
bool are_neighbors(const WeightVector& a, const WeightVector& b, double step);

// All positive lattice points i/n + j/n + k/n = 1. Vertex count is
// C(n-1, 2). Throws InvalidArgument for n < 3.
ObjectiveGraph build_objective_graph(int denominator);

// Parses a step given as "1/n" or a decimal whose reciprocal is an integer.
int step_denominator(const std::string& step);

// Adds every bootstrap that is not already a vertex, connecting it by the
// same neighbor predicate. Used when the chosen bootstraps are off-lattice.
ObjectiveGraph with_bootstraps(ObjectiveGraph graph, const std::vector<WeightVector>& bootstraps);

std::vector<WeightVector> default_bootstraps();

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct SortedObjective {
  int vertex = 0;
  int bootstrap = 0;  // index into the bootstrap list that claimed it
  int distance = 0;   // label at extraction; kUnreachable if none
};

// Runs one Dijkstra sweep per bootstrap, each claiming up to
// ceil(|V| / |O|) unvisited vertices nearest to it. The result is a
// permutation of the vertices. Throws InvalidArgument if `bootstraps` is
// empty or contains a non-vertex.
std::vector<SortedObjective> sort_objectives(const ObjectiveGraph& graph,
                                             const std::vector<WeightVector>& bootstraps);

std::vector<WeightVector> sorted_weights(const ObjectiveGraph& graph,
                                         const std::vector<SortedObjective>& order);

}  // namespace prefcc
