#include "netmon/network_spectral.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "netmon/error.hpp"
#include "netmon/rng.hpp"

namespace netmon::spectral {

Graph Graph::from_weights(Eigen::MatrixXd weights, std::vector<std::string> labels) {
  if (weights.rows() != weights.cols()) throw DomainError("adjacency matrix must be square");
  if (weights.rows() < 1) throw DomainError("graph must have at least one node");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != weights.rows()) {
    throw DomainError("label count does not match node count");
  }
  const Eigen::Index n = weights.rows();
  bool normalized = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights(i, i) != 0.0) throw DomainError("adjacency matrix must have a zero diagonal");
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights(i, j);
      if (!std::isfinite(w) || w < 0.0) throw DomainError("adjacency weights must be finite and >= 0");
      row += w;
    }
    if (row > 0.0 && std::abs(row - 1.0) > 1e-12) normalized = false;
  }
  Graph g;
  g.weights_ = std::move(weights);
  g.labels_ = std::move(labels);
  g.normalized_ = normalized;
  return g;
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::complete: return "complete";
    case GraphKind::mean_field: return "mean_field";
    case GraphKind::ring: return "ring";
    case GraphKind::erdos_renyi: return "erdos_renyi";
    case GraphKind::two_block: return "two_block";
  }
  return "unknown";
}

GraphKind graph_kind_from_string(const std::string& name) {
  if (name == "complete") return GraphKind::complete;
  if (name == "mean_field") return GraphKind::mean_field;
  if (name == "ring") return GraphKind::ring;
  if (name == "erdos_renyi") return GraphKind::erdos_renyi;
  if (name == "two_block") return GraphKind::two_block;
  throw DomainError("unknown graph kind '" + name + "'");
}

void to_json(nlohmann::json& j, const GraphSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)}, {"n", s.n}};
  switch (s.kind) {
    case GraphKind::complete: j["weight"] = s.weight; break;
    case GraphKind::ring: j["k"] = s.k; break;
    case GraphKind::erdos_renyi:
      j["p"] = s.p;
      j["seed"] = s.seed;
      break;
    case GraphKind::two_block:
      j["block_a"] = s.block_a;
      j["w_in"] = s.w_in;
      j["w_out"] = s.w_out;
      break;
    case GraphKind::mean_field: break;
  }
}

void from_json(const nlohmann::json& j, GraphSpec& s) {
  if (!j.is_object() || !j.contains("kind")) throw DomainError("graph descriptor needs a 'kind'");
  s = GraphSpec{};
  s.kind = graph_kind_from_string(j.at("kind").get<std::string>());
  s.n = j.value("n", s.n);
  s.weight = j.value("weight", s.weight);
  s.k = j.value("k", s.k);
  s.p = j.value("p", s.p);
  s.block_a = j.value("block_a", s.block_a);
  s.w_in = j.value("w_in", s.w_in);
  s.w_out = j.value("w_out", s.w_out);
  s.seed = j.value("seed", s.seed);
}

namespace {

void require_size(int n) {
  if (n < 2) throw DomainError("graph needs n >= 2 nodes");
}

std::vector<bool> reachable(const Eigen::MatrixXd& w, bool transpose) {
  const Eigen::Index n = w.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> todo;
  seen[0] = true;
  todo.push(0);
  while (!todo.empty()) {
    const Eigen::Index i = todo.front();
    todo.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double edge = transpose ? w(j, i) : w(i, j);
      if (edge > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        todo.push(j);
      }
    }
  }
  return seen;
}

}  // namespace

Graph complete_graph(int n, double weight) {
  require_size(n);
  if (!(weight >= 0.0)) throw DomainError("edge weight must be >= 0");
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n, n, weight);
  w.diagonal().setZero();
  return Graph::from_weights(std::move(w));
}

Graph mean_field_graph(int n) {
  require_size(n);
  return complete_graph(n, 1.0 / (n - 1));
}

Graph ring_graph(int n, int k) {
  require_size(n);
  if (k < 1) throw DomainError("ring needs k >= 1");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int d = 1; d <= k; ++d) {
      const int fwd = (i + d) % n;
      const int back = ((i - d) % n + n) % n;
      if (fwd != i) w(i, fwd) = 1.0;
      if (back != i) w(i, back) = 1.0;
    }
  }
  return Graph::from_weights(std::move(w));
}

Graph erdos_renyi_graph(int n, double p, std::uint64_t seed) {
  require_size(n);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("edge probability must lie in [0, 1]");
  for (int attempt = 0; attempt < kRandomGraphRetries; ++attempt) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(attempt));
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() < p) {
          w(i, j) = 1.0;
          w(j, i) = 1.0;
        }
      }
    }
    Graph g = Graph::from_weights(std::move(w));
    if (is_irreducible(g)) return g;
  }
  throw NumericalError("erdos_renyi: no irreducible draw within " + std::to_string(kRandomGraphRetries) +
                       " attempts");
}

Graph two_block_graph(int block_a, int block_b, double w_in, double w_out) {
  if (block_a < 1 || block_b < 1) throw DomainError("two_block needs two nonempty blocks");
  if (!(w_in >= 0.0 && w_out >= 0.0)) throw DomainError("block weights must be >= 0");
  const int n = block_a + block_b;
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w(i, j) = i == j ? 0.0 : ((i < block_a) == (j < block_a) ? w_in : w_out);
    }
  }
  return Graph::from_weights(std::move(w));
}

Graph make_graph(const GraphSpec& s) {
  switch (s.kind) {
    case GraphKind::complete: return complete_graph(s.n, s.weight);
    case GraphKind::mean_field: return mean_field_graph(s.n);
    case GraphKind::ring: return ring_graph(s.n, s.k);
    case GraphKind::erdos_renyi: return erdos_renyi_graph(s.n, s.p, s.seed);
    case GraphKind::two_block: return two_block_graph(s.block_a, s.n - s.block_a, s.w_in, s.w_out);
  }
  throw DomainError("unknown graph kind");
}

bool is_irreducible(const Graph& g) {
  if (g.n() == 1) return true;
  for (bool transpose : {false, true}) {
    for (bool seen : reachable(g.weights(), transpose)) {
      if (!seen) return false;
    }
  }
  return true;
}

Graph row_normalize(const Graph& g) {
  Eigen::MatrixXd w = g.weights();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double row = w.row(i).sum();
    if (row > 0.0) w.row(i) /= row;
  }
  return Graph::from_weights(std::move(w), g.labels());
}

Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("edge list '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "from_node,to_node,weight") {
    throw DomainError("edge list header must be 'from_node,to_node,weight', got '" + line + "'");
  }
  std::map<std::string, int> index;
  std::vector<std::string> labels;
  struct Edge {
    int from, to;
    double w;
  };
  std::vector<Edge> edges;
  auto node = [&](const std::string& label) {
    auto [it, inserted] = index.emplace(label, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string from, to, weight;
    if (!std::getline(ss, from, ',') || !std::getline(ss, to, ',') || !std::getline(ss, weight)) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": expected 3 fields");
    }
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(weight, &used);
      if (used != weight.size()) throw std::invalid_argument(weight);
    } catch (const std::exception&) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": bad weight '" + weight + "'");
    }
    edges.push_back({node(from), node(to), w});
  }
  const int n = static_cast<int>(labels.size());
  if (n < 1) throw DomainError("edge list has no edges");
  Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges) wmat(e.from, e.to) += e.w;
  return Graph::from_weights(std::move(wmat), std::move(labels));
}

void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list '" + path + "'");
  out << "from_node,to_node,weight\n";
  out.precision(17);
  auto label = [&](int i) { return g.labels().empty() ? std::to_string(i) : g.labels()[i]; };
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) {
      if (g.weights()(i, j) > 0.0) out << label(i) << ',' << label(j) << ',' << g.weights()(i, j) << '\n';
    }
  }
  if (!out) throw IoError("failed writing edge list '" + path + "'");
}

double spectral_radius(const Graph& g, double tol, int max_iter) {
  const Eigen::MatrixXd& w = g.weights();
  const Eigen::Index n = w.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = w * x + x;
    const double growth = y.sum();  // x sums to 1
    x = y / growth;
    if (std::abs(growth - prev) <= tol * std::max(1.0, growth)) return growth - 1.0;
    prev = growth;
  }
  throw NumericalError("spectral_radius: power iteration did not converge in " + std::to_string(max_iter) +
                       " iterations");
}

double resolvent_sum(const Graph& g, double lambda) {
  return resolvent_sum(g, lambda, spectral_radius(g));
}

double resolvent_sum(const Graph& g, double lambda, double psi) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (lambda * psi > 1.0 - kSpectralGuard) {
    throw NumericalError("spectral bound violated: lambda * psi(G) = " + std::to_string(lambda * psi) +
                         " >= 1 - 1e-9");
  }
  const Eigen::Index n = g.n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - lambda * g.weights();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("resolvent solve is numerically singular");
  const Eigen::VectorXd x = lu.solve(Eigen::VectorXd::Ones(n));
  const double s = x.sum();
  if (!std::isfinite(s)) throw NumericalError("resolvent solve produced a non-finite value");
  return s;
}

double neumann_sum(const Graph& g, double lambda, int terms) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g.n());
  double total = 0.0;
  for (int k = 0; k < terms; ++k) {
    total += v.sum();
    v = lambda * (g.weights() * v);
  }
  return total;
}

SpectralSummary spectral_welfare(const Graph& g, double lambda, double k, double phi) {
  if (!(k > 0.0)) throw DomainError("cost K must be > 0");
  if (!(phi > 0.0)) throw DomainError("phi must be > 0");
  SpectralSummary out;
  out.psi = spectral_radius(g);
  out.s_value = resolvent_sum(g, lambda, out.psi);
  out.mu_star = phi / k * out.s_value;
  out.welfare = out.s_value + phi * phi * out.s_value * out.s_value / (2.0 * k);
  return out;
}

double s_gap(double s_c, double s_d, double phi, double k_c, double k_d) {
  return s_c - s_d + 0.5 * phi * phi * (s_c * s_c / k_c - s_d * s_d / k_d);
}

namespace {

void check_s_bar_inputs(double s_d, double phi, double k_c, double k_d) {
  if (!(s_d > 0.0)) throw DomainError("S_D must be > 0");
  if (!(phi > 0.0)) throw DomainError("phi must be > 0");
  if (!(k_d > 0.0 && k_c >= k_d)) throw DomainError("need 0 < K_D <= K_C");
}

}  // namespace

double s_bar(double s_d, double phi, double k_c, double k_d) {
  check_s_bar_inputs(s_d, phi, k_c, k_d);
  // a S^2 + S - c = 0 with a = phi^2/(2K_C), c = S_D + phi^2 S_D^2/(2K_D);
  // the positive root in cancellation-free form.
  const double a = 0.5 * phi * phi / k_c;
  const double c = s_d + 0.5 * phi * phi * s_d * s_d / k_d;
  return 2.0 * c / (1.0 + std::sqrt(1.0 + 4.0 * a * c));
}

double s_bar_bisection(double s_d, double phi, double k_c, double k_d, double tol) {
  check_s_bar_inputs(s_d, phi, k_c, k_d);
  double lo = s_d;
  double hi = 2.0 * s_d;
  while (s_gap(hi, s_d, phi, k_c, k_d) <= 0.0) hi *= 2.0;
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (s_gap(mid, s_d, phi, k_c, k_d) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

KappaResult kappa_star(const GraphFamily& family, const SpectralParams& p, double kappa_lo, double kappa_hi,
                       int grid_points) {
  if (!(kappa_hi > kappa_lo)) throw DomainError("kappa range must be increasing");
  if (grid_points < 2) throw DomainError("need at least 2 grid points");
  if (!(p.lambda_c > p.lambda_d && p.lambda_d >= 0.0)) throw DomainError("need lambda_c > lambda_d >= 0");

  auto gap = [&](double kappa) {
    const Graph g = family(kappa);
    const double psi = spectral_radius(g);
    const double s_c = resolvent_sum(g, p.lambda_c, psi);
    const double s_d = resolvent_sum(g, p.lambda_d, psi);
    return std::pair{s_gap(s_c, s_d, p.phi, p.k_c, p.k_d), s_c};
  };

  double prev_s = -1.0;
  for (int i = 0; i < grid_points; ++i) {
    const double kappa = kappa_lo + (kappa_hi - kappa_lo) * i / (grid_points - 1);
    const double s_c = gap(kappa).second;
    if (i > 0 && !(s_c > prev_s)) {
      throw DomainError("S_C(G(kappa)) is not strictly increasing on the kappa range");
    }
    prev_s = s_c;
  }

  double lo = kappa_lo;
  double hi = kappa_hi;
  const double g_lo = gap(lo).first;
  const double g_hi = gap(hi).first;
  if (!(g_lo < 0.0 && g_hi > 0.0)) {
    throw NumericalError("no crossing: welfare gap does not change sign from - to + over the kappa range");
  }
  double best = lo;
  double best_abs = std::abs(g_lo);
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double g = gap(mid).first;
    if (std::abs(g) < best_abs) {
      best = mid;
      best_abs = std::abs(g);
    }
    if (g == 0.0) break;
    if (g > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  KappaResult out;
  out.kappa_star = best;
  out.psi_star = spectral_radius(family(best));
  out.welfare_gap = gap(best).first;
  return out;
}

}  // namespace netmon::spectral
