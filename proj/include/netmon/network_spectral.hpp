#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace netmon::spectral {

/// Dense weighted adjacency matrix. Immutable once built; construct through
/// make_graph(), from_edge_list() or Graph::from_weights().
class Graph {
 public:
  Graph() = default;

  // Validates: square, nonnegative, zero diagonal; `normalized` is set when
  // every row with positive degree sums to 1 within 1e-12.
  static Graph from_weights(Eigen::MatrixXd weights, std::vector<std::string> labels = {});

  int n() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool normalized() const { return normalized_; }

 private:
  Eigen::MatrixXd weights_;
  std::vector<std::string> labels_;
  bool normalized_ = false;
};

enum class GraphKind { complete, mean_field, ring, erdos_renyi, two_block };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

/// JSON-serializable family descriptor (kind + parameters + seed).
struct GraphSpec {
  GraphKind kind = GraphKind::mean_field;
  int n = 2;                 // total nodes (two_block: block_a + block_b)
  double weight = 1.0;       // complete: uniform edge weight
  int k = 1;                 // ring: neighbours on each side
  double p = 0.5;            // erdos_renyi: edge probability
  int block_a = 1;           // two_block: size of the first block
  double w_in = 1.0;         // two_block: within-block weight
  double w_out = 0.1;        // two_block: between-block weight
  std::uint64_t seed = 0;    // erdos_renyi
};

void to_json(nlohmann::json& j, const GraphSpec& s);
void from_json(const nlohmann::json& j, GraphSpec& s);

inline constexpr int kRandomGraphRetries = 100;

Graph make_graph(const GraphSpec& spec);
Graph complete_graph(int n, double weight = 1.0);
Graph mean_field_graph(int n);
Graph ring_graph(int n, int k = 1);
Graph erdos_renyi_graph(int n, double p, std::uint64_t seed);
Graph two_block_graph(int block_a, int block_b, double w_in, double w_out);

/// Strong connectivity of the support pattern (BFS on G and G').
bool is_irreducible(const Graph& g);

/// Rows scaled to sum to 1; zero rows stay zero.
Graph row_normalize(const Graph& g);

/// CSV edge list: header "from_node,to_node,weight", one directed edge per
/// line. Node labels are taken in order of first appearance unless a node
/// count is implied by integer labels 0..n-1.
Graph read_edge_list(const std::string& path);
void write_edge_list(const Graph& g, const std::string& path);

inline constexpr double kPowerTolerance = 1e-12;
inline constexpr int kPowerMaxIter = 200000;

/// Perron root via power iteration on G + I (the shift handles periodic
/// graphs); the estimate is the 1-norm growth ratio of a positive iterate.
double spectral_radius(const Graph& g, double tol = kPowerTolerance, int max_iter = kPowerMaxIter);

inline constexpr double kSpectralGuard = 1e-9;

/// S(lambda, G) = 1'(I - lambda G)^{-1} 1 by LU with partial pivoting.
/// Rejects lambda * psi(G) > 1 - 1e-9.
double resolvent_sum(const Graph& g, double lambda);
double resolvent_sum(const Graph& g, double lambda, double psi);

/// Truncated Neumann series sum_{k<terms} lambda^k 1'G^k 1 (reference path).
double neumann_sum(const Graph& g, double lambda, int terms);

struct SpectralSummary {
  double psi = 0.0;
  double s_value = 0.0;
  double mu_star = 0.0;
  double welfare = 0.0;
};

/// mu* = (phi / K) S,  W* = S + phi^2 S^2 / (2K).
SpectralSummary spectral_welfare(const Graph& g, double lambda, double k, double phi);

/// Unique root S > s_d of S - s_d + (phi^2/2)(S^2/k_c - s_d^2/k_d).
double s_bar(double s_d, double phi, double k_c, double k_d);
/// Same root by bisection (independent route used for cross-checks).
double s_bar_bisection(double s_d, double phi, double k_c, double k_d, double tol = 1e-13);
double s_gap(double s_c, double s_d, double phi, double k_c, double k_d);

struct SpectralParams {
  double phi = 1.0;
  double k_d = 1.0;
  double k_c = 2.0;
  double lambda_d = 0.0;
  double lambda_c = 0.4;
};

using GraphFamily = std::function<Graph(double)>;

struct KappaResult {
  double kappa_star = 0.0;
  double psi_star = 0.0;
  double welfare_gap = 0.0;  // residual at kappa_star
};

/// Bisection on kappa for W_C*(G(kappa)) = W_D*(G(kappa)). Verifies S_C is
/// strictly increasing on a `grid_points` grid over the range and that the
/// gap changes sign from negative to positive.
KappaResult kappa_star(const GraphFamily& family, const SpectralParams& params, double kappa_lo,
                       double kappa_hi, int grid_points = 64);

}  // namespace netmon::spectral
