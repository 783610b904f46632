#include "riskstrat/merge.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "riskstrat/errors.hpp"

namespace riskstrat {

void MergeConfig::validate() const {
  method.validate();
  if (!(alpha_prime > 0.0 && alpha_prime < 1.0))
    throw UsageError("merge config requires alpha_prime in (0,1)");
  if (n_leaf < 1) throw UsageError("n_leaf must be >= 1");
}

bool SimilarityGraph::has_edge() const {
  for (const auto& adj : edges)
    if (!adj.empty()) return true;
  return false;
}

SimilarityGraph build_similarity_graph(const Dataset& data,
                                       std::span<const LeafGroup> leaves,
                                       const MergeConfig& config) {
  config.validate();
  if (leaves.empty()) throw UsageError("build_similarity_graph: no leaves");

  SimilarityGraph g;
  g.alpha_prime = config.alpha_prime;
  g.edges.assign(leaves.size(), {});
  if (leaves.size() < 2) {
    g.pvalues = PValueMatrix(leaves.size());
    return g;
  }

  std::vector<std::vector<Obs>> groups;
  groups.reserve(leaves.size());
  for (const auto& leaf : leaves)
    groups.push_back(gather_obs(data, leaf.records));
  g.pvalues = pairwise_pvalues(groups, config.method);

  for (std::size_t i = 0; i < leaves.size(); ++i)
    for (std::size_t j = i + 1; j < leaves.size(); ++j)
      if (g.pvalues(i, j) > config.alpha_prime) {
        g.edges[i].push_back(static_cast<int>(j));
        g.edges[j].push_back(static_cast<int>(i));
      }
  return g;
}

std::vector<std::vector<int>> connected_components(const SimilarityGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<std::vector<int>> components;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<int> comp;
    std::queue<int> frontier;
    frontier.push(static_cast<int>(start));
    seen[start] = true;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      comp.push_back(v);
      for (int w : g.edges[v])
        if (!seen[w]) {
          seen[w] = true;
          frontier.push(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

namespace {

// Highest-p neighbour of v; ties broken by lowest vertex id (adjacency is
// built in ascending order, so the first strict maximum wins).
int best_neighbour(const SimilarityGraph& g, int v) {
  int best = -1;
  double best_p = -1.0;
  for (int w : g.edges[v])
    if (g.pvalues(v, w) > best_p) {
      best_p = g.pvalues(v, w);
      best = w;
    }
  return best;
}

struct PassState {
  std::vector<int> group_of;               // -1 = not merged yet
  std::vector<std::vector<int>> groups;    // creation order
};

// Processes the given vertices (already ordered) under the Step-4 rule.
// Each executed event costs one unit of budget; stops when budget runs out.
void run_pass(const SimilarityGraph& g, std::span<const int> ordered,
              PassState& state, long long& budget) {
  for (int v : ordered) {
    if (budget <= 0) return;
    if (state.group_of[v] >= 0) continue;  // already merged with another vertex
    const int w = best_neighbour(g, v);
    if (w < 0) continue;
    if (state.group_of[w] < 0) {
      const int gid = static_cast<int>(state.groups.size());
      state.groups.push_back({v, w});
      state.group_of[v] = gid;
      state.group_of[w] = gid;
    } else {
      state.groups[state.group_of[w]].push_back(v);
      state.group_of[v] = state.group_of[w];
    }
    --budget;
  }
}

// Vertices ordered by descending best-edge p-value, ties by lowest id.
std::vector<int> pass_order(const SimilarityGraph& g,
                            std::span<const int> vertices) {
  std::vector<int> order;
  for (int v : vertices)
    if (!g.edges[v].empty()) order.push_back(v);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = g.pvalues(a, best_neighbour(g, a));
    const double pb = g.pvalues(b, best_neighbour(g, b));
    if (pa != pb) return pa > pb;
    return a < b;
  });
  return order;
}

LeafGroup fuse(std::span<const LeafGroup> leaves, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  LeafGroup out = leaves[members.front()];
  for (std::size_t k = 1; k < members.size(); ++k) {
    const auto& next = leaves[members[k]];
    out.region = merge_regions(out.region, next.region);
    out.records.insert(out.records.end(), next.records.begin(),
                       next.records.end());
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> merge_pass(std::span<const int> component,
                                         const SimilarityGraph& graph) {
  PassState state;
  state.group_of.assign(graph.size(), -1);
  long long budget = static_cast<long long>(component.size());
  run_pass(graph, pass_order(graph, component), state, budget);
  return state.groups;
}

std::vector<LeafGroup> merge_leaves(const Dataset& data,
                                    std::vector<LeafGroup> leaves,
                                    const MergeConfig& config) {
  config.validate();
  if (leaves.empty()) throw UsageError("merge_leaves: no leaves");

  // Subgraphs evolve independently; vertices in different components are
  // never compared again.
  std::vector<std::vector<LeafGroup>> subgraphs;
  subgraphs.push_back(std::move(leaves));

  while (true) {
    std::size_t total = 0;
    for (const auto& sg : subgraphs) total += sg.size();
    if (total <= config.n_leaf) break;

    struct Built {
      SimilarityGraph graph;
      bool active = false;
    };
    std::vector<Built> built(subgraphs.size());
    bool any_edge = false;
    for (std::size_t s = 0; s < subgraphs.size(); ++s) {
      if (subgraphs[s].size() < 2) continue;
      built[s].graph = build_similarity_graph(data, subgraphs[s], config);
      built[s].active = built[s].graph.has_edge();
      any_edge = any_edge || built[s].active;
    }
    if (!any_edge) break;

    // Global processing queue (descending best-edge p, ties by subgraph
    // then vertex id) so the budgeted final pass stops exactly at n_leaf.
    struct Entry {
      double p;
      std::size_t s;
      int v;
    };
    std::vector<Entry> queue;
    for (std::size_t s = 0; s < subgraphs.size(); ++s) {
      if (!built[s].active) continue;
      for (std::size_t v = 0; v < subgraphs[s].size(); ++v)
        if (!built[s].graph.edges[v].empty()) {
          const int b = best_neighbour(built[s].graph, static_cast<int>(v));
          queue.push_back({built[s].graph.pvalues(v, b), s, static_cast<int>(v)});
        }
    }
    std::stable_sort(queue.begin(), queue.end(),
                     [](const Entry& a, const Entry& b) {
                       if (a.p != b.p) return a.p > b.p;
                       if (a.s != b.s) return a.s < b.s;
                       return a.v < b.v;
                     });

    std::vector<PassState> states(subgraphs.size());
    for (std::size_t s = 0; s < subgraphs.size(); ++s)
      states[s].group_of.assign(subgraphs[s].size(), -1);

    long long budget = static_cast<long long>(total - config.n_leaf);
    for (const auto& entry : queue) {
      if (budget <= 0) break;
      std::vector<int> single{entry.v};
      run_pass(built[entry.s].graph, single, states[entry.s], budget);
    }

    // Next level: each component becomes its own subgraph holding its
    // merged vertices (creation order) then untouched vertices (ascending).
    std::vector<std::vector<LeafGroup>> next;
    for (std::size_t s = 0; s < subgraphs.size(); ++s) {
      if (!built[s].active) {
        next.push_back(std::move(subgraphs[s]));
        continue;
      }
      const auto components = connected_components(built[s].graph);
      for (const auto& comp : components) {
        std::vector<LeafGroup> vertices;
        for (std::size_t gid = 0; gid < states[s].groups.size(); ++gid) {
          const int head = states[s].groups[gid].front();
          if (std::binary_search(comp.begin(), comp.end(), head))
            vertices.push_back(fuse(subgraphs[s], states[s].groups[gid]));
        }
        for (int v : comp)
          if (states[s].group_of[v] < 0)
            vertices.push_back(std::move(subgraphs[s][v]));
        next.push_back(std::move(vertices));
      }
    }
    subgraphs = std::move(next);
  }

  std::vector<LeafGroup> out;
  for (auto& sg : subgraphs)
    for (auto& leaf : sg) out.push_back(std::move(leaf));
  return out;
}

Partition to_partition(const Dataset& data, std::vector<LeafGroup> leaves,
                       double t_star) {
  Partition partition;
  partition.schema = data.schema;
  std::vector<std::vector<int>> groups;
  groups.reserve(leaves.size());
  for (auto& leaf : leaves) {
    partition.regions.push_back(std::move(leaf.region));
    groups.push_back(std::move(leaf.records));
  }
  fit_partition(partition, data, groups, t_star);
  return partition;
}

}  // namespace riskstrat
