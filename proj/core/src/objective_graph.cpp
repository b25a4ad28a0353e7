#include "prefcc/objective_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prefcc/error.hpp"

namespace prefcc {

namespace {
constexpr double kLatticeTol = 1e-9;
}

std::optional<int> ObjectiveGraph::find(const WeightVector& w, double tol) const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].approx_equal(w, tol)) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool ObjectiveGraph::adjacent(int a, int b) const {
  const auto& nbrs = adjacency.at(static_cast<std::size_t>(a));
  return std::find(nbrs.begin(), nbrs.end(), b) != nbrs.end();
}

bool are_neighbors(const WeightVector& a, const WeightVector& b, double step) {
  if (a.approx_equal(b, kLatticeTol)) return false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(a.values()[i] - b.values()[i]) > step + kLatticeTol) return false;
  }
  return true;
}

namespace {

void connect(ObjectiveGraph& g) {
  const std::size_t n = g.vertices.size();
  g.adjacency.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (are_neighbors(g.vertices[i], g.vertices[j], g.step())) {
        g.adjacency[i].push_back(static_cast<int>(j));
        g.adjacency[j].push_back(static_cast<int>(i));
      }
    }
  }
}

}  // namespace

ObjectiveGraph build_objective_graph(int denominator) {
  if (denominator < 3) {
    throw InvalidArgument("objective step must be 1/n with integer n >= 3, got n = " +
                          std::to_string(denominator));
  }
  ObjectiveGraph g;
  g.denominator = denominator;
  const double n = denominator;
  for (int i = 1; i < denominator; ++i) {
    for (int j = 1; i + j < denominator; ++j) {
      const int k = denominator - i - j;
      g.vertices.push_back(WeightVector::create(i / n, j / n, k / n));
    }
  }
  std::sort(g.vertices.begin(), g.vertices.end());
  connect(g);
  return g;
}

int step_denominator(const std::string& step) {
  double value = 0.0;
  try {
    const auto slash = step.find('/');
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double num = std::stod(step.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(step);
      const std::string den_text = step.substr(slash + 1);
      const double den = std::stod(den_text, &used);
      if (used != den_text.size()) throw std::invalid_argument(step);
      value = num / den;
    } else {
      value = std::stod(step, &used);
      if (used != step.size()) throw std::invalid_argument(step);
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse objective step '" + step + "'");
  }
  if (!(value > 0.0)) throw InvalidArgument("objective step must be > 0");
  const double inv = 1.0 / value;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-6 || rounded < 3) {
    throw InvalidArgument("objective step '" + step + "' is not 1/n for an integer n >= 3");
  }
  return static_cast<int>(rounded);
}

ObjectiveGraph with_bootstraps(ObjectiveGraph graph, const std::vector<WeightVector>& bootstraps) {
  bool added = false;
  for (const WeightVector& b : bootstraps) {
    if (!graph.find(b)) {
      graph.vertices.push_back(b);
      added = true;
    }
  }
  if (added) {
    std::sort(graph.vertices.begin(), graph.vertices.end());
    connect(graph);
  }
  return graph;
}

std::vector<WeightVector> default_bootstraps() {
  return {WeightVector::create(0.6, 0.3, 0.1), WeightVector::create(0.1, 0.6, 0.3),
          WeightVector::create(0.3, 0.1, 0.6)};
}

std::vector<SortedObjective> sort_objectives(const ObjectiveGraph& graph,
                                             const std::vector<WeightVector>& bootstraps) {
  if (bootstraps.empty()) throw InvalidArgument("at least one bootstrap objective is required");
  std::vector<int> sources;
  for (const WeightVector& b : bootstraps) {
    auto idx = graph.find(b);
    if (!idx) throw InvalidArgument("bootstrap objective " + b.to_string() + " is not a vertex");
    sources.push_back(*idx);
  }

  const std::size_t n = graph.size();
  const std::size_t k = sources.size();
  // dist[v][i]: label of v in the sweep from bootstrap i.
  std::vector<std::vector<int>> dist(n, std::vector<int>(k, kUnreachable));
  for (std::size_t i = 0; i < k; ++i) {
    for (int v : graph.adjacency[static_cast<std::size_t>(sources[i])]) {
      dist[static_cast<std::size_t>(v)][i] = 1;
    }
  }
  std::vector<bool> visited(n, false);
  std::vector<SortedObjective> order;
  order.reserve(n);

  const std::size_t quota = (n + k - 1) / k;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t visits = quota;
    const auto src = static_cast<std::size_t>(sources[i]);
    if (!visited[src]) {
      order.push_back({sources[i], static_cast<int>(i), 0});
      visited[src] = true;
      --visits;
    }
    while (visits > 0 && order.size() < n) {
      // Lowest index wins ties: vertices are in lexicographic order.
      std::size_t best = n;
      for (std::size_t u = 0; u < n; ++u) {
        if (visited[u]) continue;
        if (best == n || dist[u][i] < dist[best][i]) best = u;
      }
      const int label = dist[best][i];
      order.push_back({static_cast<int>(best), static_cast<int>(i), label});
      visited[best] = true;
      --visits;
      if (label == kUnreachable) continue;
      for (int w : graph.adjacency[best]) {
        const auto wi = static_cast<std::size_t>(w);
        if (!visited[wi] && label + 1 < dist[wi][i]) dist[wi][i] = label + 1;
      }
    }
  }
  return order;
}

std::vector<WeightVector> sorted_weights(const ObjectiveGraph& graph,
                                         const std::vector<SortedObjective>& order) {
  std::vector<WeightVector> out;
  out.reserve(order.size());
  for (const SortedObjective& o : order) out.push_back(graph.vertices[static_cast<std::size_t>(o.vertex)]);
  return out;
}

}  // namespace prefcc
