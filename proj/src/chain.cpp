#include "filtstab/chain.hpp"

#include <algorithm>

#include "filtstab/numlin.hpp"

namespace filtstab {

namespace {

// Tarjan's strongly-connected components, iterative to keep the stack flat.
// Returns a component id per vertex; ids are assigned in reverse
// topological order.
std::vector<int> scc_ids(const std::vector<std::vector<int>>& adj, int& n_comp) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(static_cast<size_t>(n), -1);
  std::vector<int> lowlink(static_cast<size_t>(n), 0);
  std::vector<int> comp(static_cast<size_t>(n), -1);
  std::vector<bool> on_stack(static_cast<size_t>(n), false);
  std::vector<int> stack;
  int next_index = 0;
  n_comp = 0;

  struct Frame {
    int v;
    size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<size_t>(root)] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[static_cast<size_t>(root)] = lowlink[static_cast<size_t>(root)] =
        next_index++;
    stack.push_back(root);
    on_stack[static_cast<size_t>(root)] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& edges = adj[static_cast<size_t>(f.v)];
      if (f.edge < edges.size()) {
        const int w = edges[f.edge++];
        if (index[static_cast<size_t>(w)] == -1) {
          index[static_cast<size_t>(w)] = lowlink[static_cast<size_t>(w)] =
              next_index++;
          stack.push_back(w);
          on_stack[static_cast<size_t>(w)] = true;
          call.push_back({w, 0});
        } else if (on_stack[static_cast<size_t>(w)]) {
          lowlink[static_cast<size_t>(f.v)] = std::min(
              lowlink[static_cast<size_t>(f.v)], index[static_cast<size_t>(w)]);
        }
      } else {
        if (lowlink[static_cast<size_t>(f.v)] ==
            index[static_cast<size_t>(f.v)]) {
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[static_cast<size_t>(w)] = false;
            comp[static_cast<size_t>(w)] = n_comp;
          } while (w != f.v);
          ++n_comp;
        }
        const int v = f.v;
        call.pop_back();
        if (!call.empty())
          lowlink[static_cast<size_t>(call.back().v)] =
              std::min(lowlink[static_cast<size_t>(call.back().v)],
                       lowlink[static_cast<size_t>(v)]);
      }
    }
  }
  return comp;
}

Eigen::VectorXd stationary_on_class(const FiniteHmm& m,
                                    const std::vector<int>& members) {
  const int k = static_cast<int>(members.size());
  Eigen::MatrixXd L(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      L(a, b) = m.generator(members[static_cast<size_t>(a)],
                            members[static_cast<size_t>(b)]);
  // bordered least squares: [L^T; 1^T] pi = [0; 1]
  Eigen::MatrixXd A(k + 1, k);
  A.topRows(k) = L.transpose();
  A.row(k).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  const Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(m.d);
  for (int a = 0; a < k; ++a) full[members[static_cast<size_t>(a)]] = pi[a];
  return full;
}

}  // namespace

ChainDecomposition decompose(const FiniteHmm& m) {
  const int d = m.d;
  std::vector<std::vector<int>> adj(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && m.generator(i, j) > kEdgeThreshold)
        adj[static_cast<size_t>(i)].push_back(j);

  int n_comp = 0;
  const std::vector<int> comp = scc_ids(adj, n_comp);

  std::vector<std::vector<int>> members(static_cast<size_t>(n_comp));
  for (int i = 0; i < d; ++i)
    members[static_cast<size_t>(comp[static_cast<size_t>(i)])].push_back(i);

  ChainDecomposition dec;
  for (int c = 0; c < n_comp; ++c) {
    auto& ms = members[static_cast<size_t>(c)];
    std::sort(ms.begin(), ms.end());
    bool closed = true;
    for (int i : ms)
      for (int j : adj[static_cast<size_t>(i)])
        if (comp[static_cast<size_t>(j)] != c) closed = false;
    if (closed)
      dec.ergodic_classes.push_back(ms);
    else
      dec.transient.insert(dec.transient.end(), ms.begin(), ms.end());
  }
  // deterministic presentation: classes by smallest member
  std::sort(dec.ergodic_classes.begin(), dec.ergodic_classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::sort(dec.transient.begin(), dec.transient.end());

  for (const auto& cls : dec.ergodic_classes)
    dec.stationary.push_back(stationary_on_class(m, cls));
  return dec;
}

Eigen::VectorXd forward_flow(const FiniteHmm& m, const Eigen::VectorXd& p0,
                             double t) {
  return expm(m.generator.transpose(), t) * p0;
}

std::vector<bool> indicator_in_O_check(const FiniteHmm& m,
                                       const ChainDecomposition& dec,
                                       const ObservabilityResult& obs) {
  std::vector<bool> out;
  out.reserve(dec.ergodic_classes.size());
  for (const auto& cls : dec.ergodic_classes) {
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(m.d);
    for (int i : cls) ind[i] = 1.0;
    out.push_back(obs.O.residual(ind) < 1e-8);
  }
  return out;
}

}  // namespace filtstab
