#include "rducb/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rducb/error.hpp"

namespace rducb {

DimensionDomain DimensionDomain::continuous(double lo, double hi,
                                            std::size_t grid_size) {
  if (!(lo < hi)) {
    throw Error(ErrorCode::kInvalidParameter, "domain interval needs lo < hi");
  }
  if (grid_size < 2) {
    throw Error(ErrorCode::kInvalidParameter, "grid size must be >= 2");
  }
  DimensionDomain dd;
  dd.continuous_ = true;
  dd.lo_ = lo;
  dd.hi_ = hi;
  dd.grid_size_ = grid_size;
  return dd;
}

DimensionDomain DimensionDomain::finite(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "finite value set is empty");
  }
  DimensionDomain dd;
  dd.continuous_ = false;
  dd.lo_ = *std::min_element(values.begin(), values.end());
  dd.hi_ = *std::max_element(values.begin(), values.end());
  dd.grid_size_ = values.size();
  dd.values_ = std::move(values);
  return dd;
}

std::size_t DimensionDomain::size() const { return grid_size_; }

double DimensionDomain::value(std::size_t index) const {
  if (!continuous_) return values_.at(index);
  if (index + 1 == grid_size_) return hi_;
  return lo_ + (hi_ - lo_) * (static_cast<double>(index) /
                              static_cast<double>(grid_size_ - 1));
}

std::vector<double> DimensionDomain::grid() const {
  std::vector<double> g(size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = value(i);
  return g;
}

DomainSpec DomainSpec::unit_cube(std::size_t d, std::size_t grid_size) {
  DomainSpec spec;
  for (std::size_t i = 0; i < d; ++i) {
    spec.dims.push_back(DimensionDomain::continuous(0.0, 1.0, grid_size));
  }
  return spec;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double tie_threshold(double best) {
  return best - kTieTolerance * std::max(1.0, std::abs(best));
}

void check_domain(const Decomposition& g, const DomainSpec& domain) {
  if (domain.dim() != g.dim()) {
    throw Error(ErrorCode::kInvalidParameter,
                "domain has " + std::to_string(domain.dim()) +
                    " dimensions, decomposition has " + std::to_string(g.dim()));
  }
}

// t x G matrix of one-dimensional kernel values between training inputs and
// the grid values of dimension `dim` (1-based).
Eigen::MatrixXd dim_kernel(const GpModel& model, int dim,
                           const DimensionDomain& dd) {
  const auto& X = model.dataset().X();
  const Eigen::Index t = X.rows();
  const double theta = model.params().lengthscales[dim - 1];
  const double s = -0.5 / (theta * theta);
  const auto grid = dd.grid();
  Eigen::MatrixXd A(t, static_cast<Eigen::Index>(grid.size()));
  const auto col = X.col(dim - 1);
  for (Eigen::Index v = 0; v < A.cols(); ++v) {
    A.col(v) = ((col.array() - grid[static_cast<std::size_t>(v)]).square() * s).exp();
  }
  return A;
}

// Acquisition values for a batch of component cross-covariance columns.
Eigen::VectorXd batch_terms(const GpModel& model, const Eigen::MatrixXd& Kc,
                            const AcquisitionSpec& spec, double beta_t,
                            double mu_plus) {
  const Eigen::Index n = Kc.cols();
  Eigen::VectorXd mean = Kc.transpose() * model.weights();
  const Eigen::MatrixXd V =
      model.cholesky_lower().triangularView<Eigen::Lower>().solve(Kc);
  const Eigen::VectorXd quad = V.colwise().squaredNorm().transpose();
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double var = std::max(0.0, 1.0 - quad[j]);
    out[j] = spec.family == AcquisitionFamily::kAddUcb
                 ? ucb_term(mean[j], var, beta_t)
                 : ei_term(mean[j], var, mu_plus);
  }
  return out;
}

double prior_term(const AcquisitionSpec& spec, double beta_t, double mu_plus) {
  return spec.family == AcquisitionFamily::kAddUcb
             ? ucb_term(0.0, 1.0, beta_t)
             : ei_term(0.0, 1.0, mu_plus);
}

std::size_t lowest_at_least(const Eigen::VectorXd& v, double thr) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] >= thr) return static_cast<std::size_t>(i);
  }
  throw Error(ErrorCode::kNumericalError, "no grid value reaches the maximum");
}

// Max-sum dynamic programming over one tree of the forest.
class TreeSolver {
 public:
  TreeSolver(const TreeGroup& tree, const GridTable& tables,
             const DomainSpec& domain)
      : tree_(tree), tables_(tables), domain_(domain),
        adj_(domain.dim() + 1) {
    for (const auto& [a, b] : tree.edges) {
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (auto& n : adj_) std::sort(n.begin(), n.end());
  }

  // Returns the maximum and writes the lexicographically lowest maximizer
  // into index (by dimension, 1-based).
  double solve(std::vector<std::size_t>& index) {
    const int root = tree_.nodes.front();
    std::vector<long> clamp(domain_.dim() + 1, -1);
    Pass pass = run(root, clamp, true);
    const Eigen::VectorXd& m = pass.belief[root];
    const double best = m.maxCoeff();
    const double thr = tie_threshold(best);

    // Backtrack through the stored pointers, noting any near-tie.
    std::vector<std::size_t> choice(domain_.dim() + 1, 0);
    bool ambiguous = false;
    choice[root] = lowest_at_least(m, thr);
    ambiguous |= count_at_least(m, thr) > 1;
    for (int node : pass.order) {
      if (node == root) continue;
      const int p = pass.parent[node];
      const std::size_t xp = choice[p];
      choice[node] = pass.pointer[node][xp];
      const Eigen::VectorXd vals = child_values(p, node, xp, pass.belief[node]);
      ambiguous |= count_at_least(vals, tie_threshold(vals.maxCoeff())) > 1;
    }

    if (ambiguous) {
      // Fix dimensions in increasing order, each to the lowest value whose
      // max-marginal (given the earlier fixes) still reaches the maximum.
      for (int node : tree_.nodes) {
        Pass p = run(node, clamp, false);
        clamp[node] = static_cast<long>(lowest_at_least(p.belief[node], thr));
      }
      for (int node : tree_.nodes) {
        choice[node] = static_cast<std::size_t>(clamp[node]);
      }
    }
    for (int node : tree_.nodes) index[node - 1] = choice[node];
    return best;
  }

 private:
  struct Pass {
    std::vector<int> order;  // breadth-first from the root
    std::vector<int> parent;
    // Sum of incoming child messages per node (the root's is its
    // max-marginal).
    std::vector<Eigen::VectorXd> belief;
    std::vector<std::vector<std::size_t>> pointer;
  };

  double edge_value(int p, int c, std::size_t xp, std::size_t xc) const {
    if (p < c) {
      return tables_.pairwise.at(make_edge(p, c))(static_cast<Eigen::Index>(xp),
                                                  static_cast<Eigen::Index>(xc));
    }
    return tables_.pairwise.at(make_edge(p, c))(static_cast<Eigen::Index>(xc),
                                                static_cast<Eigen::Index>(xp));
  }

  Eigen::VectorXd child_values(int p, int c, std::size_t xp,
                               const Eigen::VectorXd& belief_c) const {
    Eigen::VectorXd vals(belief_c.size());
    for (Eigen::Index xc = 0; xc < vals.size(); ++xc) {
      vals[xc] = edge_value(p, c, xp, static_cast<std::size_t>(xc)) + belief_c[xc];
    }
    return vals;
  }

  static std::size_t count_at_least(const Eigen::VectorXd& v, double thr) {
    return static_cast<std::size_t>((v.array() >= thr).count());
  }

  Pass run(int root, const std::vector<long>& clamp, bool keep_pointers) const {
    const std::size_t d = domain_.dim();
    Pass pass;
    pass.parent.assign(d + 1, 0);
    pass.belief.assign(d + 1, Eigen::VectorXd());
    if (keep_pointers) pass.pointer.assign(d + 1, {});
    pass.order.push_back(root);
    pass.parent[root] = 0;
    for (std::size_t k = 0; k < pass.order.size(); ++k) {
      const int u = pass.order[k];
      for (int v : adj_[u]) {
        if (v == pass.parent[u]) continue;
        pass.parent[v] = u;
        pass.order.push_back(v);
      }
    }
    for (int u : pass.order) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(domain_.dims[u - 1].size()));
      if (clamp[u] >= 0) {
        for (Eigen::Index i = 0; i < b.size(); ++i) {
          if (i != clamp[u]) b[i] = kNegInf;
        }
      }
      pass.belief[u] = std::move(b);
    }
    for (std::size_t k = pass.order.size(); k-- > 1;) {
      const int c = pass.order[k];
      const int p = pass.parent[c];
      const Eigen::VectorXd& bc = pass.belief[c];
      const auto gp = domain_.dims[p - 1].size();
      const auto gc = static_cast<std::size_t>(bc.size());
      std::vector<std::size_t> ptr(keep_pointers ? gp : 0);
      for (std::size_t xp = 0; xp < gp; ++xp) {
        double best = kNegInf;
        std::size_t arg = 0;
        for (std::size_t xc = 0; xc < gc; ++xc) {
          const double v = edge_value(p, c, xp, xc) + bc[static_cast<Eigen::Index>(xc)];
          if (v > best) {
            best = v;
            arg = xc;
          }
        }
        pass.belief[p][static_cast<Eigen::Index>(xp)] += best;
        if (keep_pointers) ptr[xp] = arg;
      }
      if (keep_pointers) pass.pointer[c] = std::move(ptr);
    }
    return pass;
  }

  const TreeGroup& tree_;
  const GridTable& tables_;
  const DomainSpec& domain_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace

GridTable build_tables(const GpModel& model, const AcquisitionSpec& spec,
                       std::size_t t, const DomainSpec& domain,
                       const OptimizerOptions& options) {
  const auto& g = model.decomposition();
  check_domain(g, domain);
  const double beta_t =
      spec.family == AcquisitionFamily::kAddUcb ? spec.beta_at(t) : 0.0;
  const auto n_data = static_cast<double>(model.dataset().size());

  double bytes = 0.0;
  for (const auto& c : g.components()) {
    double cells = 1.0;
    for (int dim : c.dims()) cells *= static_cast<double>(domain.dims[dim - 1].size());
    bytes += 8.0 * cells;
  }
  for (const auto& dd : domain.dims) bytes += 8.0 * n_data * static_cast<double>(dd.size());
  constexpr double kChunkBytes = 8.0 * (1 << 20);
  bytes += kChunkBytes;
  if (bytes > options.memory_cap_mb * 1024.0 * 1024.0) {
    throw Error(ErrorCode::kResourceError,
                "acquisition grid needs " +
                    std::to_string(static_cast<long long>(bytes / (1024.0 * 1024.0))) +
                    " MB, above memory_cap_mb=" +
                    std::to_string(options.memory_cap_mb) +
                    "; lower grid_size");
  }

  GridTable tables;
  const bool empty = model.dataset().empty();
  std::vector<Eigen::MatrixXd> A(g.dim() + 1);
  if (!empty) {
    for (const auto& c : g.components()) {
      for (int dim : c.dims()) {
        if (A[dim].size() == 0) A[dim] = dim_kernel(model, dim, domain.dims[dim - 1]);
      }
    }
  }
  const Eigen::Index t_rows = static_cast<Eigen::Index>(model.dataset().size());

  for (const auto& c : g.components()) {
    const double mu_plus = spec.family == AcquisitionFamily::kAddEi
                               ? incumbent_mean(model, c, spec)
                               : 0.0;
    if (c.size() == 1) {
      const int i = c.dims()[0];
      const auto gi = static_cast<Eigen::Index>(domain.dims[i - 1].size());
      tables.unary[i] = empty ? Eigen::VectorXd::Constant(gi, prior_term(spec, beta_t, mu_plus))
                              : batch_terms(model, A[i], spec, beta_t, mu_plus);
      continue;
    }
    if (c.size() != 2) {
      throw Error(ErrorCode::kComponentTooLarge,
                  "message passing supports components of size <= 2");
    }
    const int a = c.dims()[0];
    const int b = c.dims()[1];
    const auto ga = static_cast<Eigen::Index>(domain.dims[a - 1].size());
    const auto gb = static_cast<Eigen::Index>(domain.dims[b - 1].size());
    Eigen::MatrixXd T(ga, gb);
    if (empty) {
      T.setConstant(prior_term(spec, beta_t, mu_plus));
    } else {
      const Eigen::Index rows_per_chunk = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(kChunkBytes / 8.0) /
                 std::max<Eigen::Index>(1, t_rows * gb));
      for (Eigen::Index r0 = 0; r0 < ga; r0 += rows_per_chunk) {
        const Eigen::Index rows = std::min(rows_per_chunk, ga - r0);
        Eigen::MatrixXd Kc(t_rows, rows * gb);
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (Eigen::Index jb = 0; jb < gb; ++jb) {
            Kc.col(r * gb + jb) = A[a].col(r0 + r).cwiseProduct(A[b].col(jb));
          }
        }
        const Eigen::VectorXd vals = batch_terms(model, Kc, spec, beta_t, mu_plus);
        for (Eigen::Index r = 0; r < rows; ++r) {
          T.row(r0 + r) = vals.segment(r * gb, gb).transpose();
        }
      }
    }
    tables.pairwise[make_edge(a, b)] = std::move(T);
  }
  return tables;
}

AcquisitionMax maximize_tables(const Decomposition& g, const GridTable& tables,
                               const DomainSpec& domain) {
  check_domain(g, domain);
  const ForestGroups groups = connected_groups(g);
  AcquisitionMax out;
  out.index.assign(g.dim(), 0);
  double total = 0.0;
  for (int i : groups.singletons) {
    const Eigen::VectorXd& u = tables.unary.at(i);
    const double best = u.maxCoeff();
    out.index[i - 1] = lowest_at_least(u, tie_threshold(best));
    total += best;
  }
  for (const auto& tree : groups.trees) {
    TreeSolver solver(tree, tables, domain);
    total += solver.solve(out.index);
  }
  out.value = total;
  out.x.resize(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) {
    out.x[i] = domain.dims[i].value(out.index[i]);
  }
  return out;
}

namespace {

void refine_continuous(const GpModel& model, const AcquisitionSpec& spec,
                       std::size_t t, const DomainSpec& domain,
                       AcquisitionMax& best) {
  constexpr double kInvPhi = 0.6180339887498949;
  double current = total_acquisition(model, best.x, spec, t);
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    const auto& dd = domain.dims[i];
    if (!dd.is_continuous()) continue;
    const double h = (dd.hi() - dd.lo()) / static_cast<double>(dd.size() - 1);
    double a = std::max(dd.lo(), best.x[i] - h);
    double b = std::min(dd.hi(), best.x[i] + h);
    std::vector<double> x = best.x;
    auto f = [&](double v) {
      x[i] = v;
      return total_acquisition(model, x, spec, t);
    };
    double c = b - kInvPhi * (b - a);
    double e = a + kInvPhi * (b - a);
    double fc = f(c);
    double fe = f(e);
    for (int it = 0; it < 40; ++it) {
      if (fc >= fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - kInvPhi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + kInvPhi * (b - a);
        fe = f(e);
      }
    }
    const double v = fc >= fe ? c : e;
    const double fv = std::max(fc, fe);
    if (fv > current) {
      best.x[i] = v;
      current = fv;
    }
  }
  best.value = current;
}

}  // namespace

AcquisitionMax maximize_additive(const GpModel& model,
                                 const AcquisitionSpec& spec, std::size_t t,
                                 const DomainSpec& domain,
                                 const OptimizerOptions& options) {
  const GridTable tables = build_tables(model, spec, t, domain, options);
  AcquisitionMax best = maximize_tables(model.decomposition(), tables, domain);
  if (options.refine) refine_continuous(model, spec, t, domain, best);
  return best;
}

AcquisitionMax brute_force_max(const GpModel& model,
                               const AcquisitionSpec& spec, std::size_t t,
                               const DomainSpec& domain) {
  const auto& g = model.decomposition();
  check_domain(g, domain);
  const std::size_t d = domain.dim();
  double cells = 1.0;
  for (const auto& dd : domain.dims) cells *= static_cast<double>(dd.size());
  if (cells > kBruteForceLimit) {
    throw Error(ErrorCode::kResourceError,
                "brute force over " + std::to_string(static_cast<long long>(cells)) +
                    " grid points exceeds the limit");
  }
  std::vector<std::vector<double>> grids;
  for (const auto& dd : domain.dims) grids.push_back(dd.grid());

  // Enumerate in lexicographic index order (first dimension slowest).
  const auto total = static_cast<std::size_t>(cells);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  std::vector<double> values(total);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rest = n;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rest % grids[k].size();
      rest /= grids[k].size();
    }
    for (std::size_t i = 0; i < d; ++i) x[i] = grids[i][idx[i]];
    values[n] = total_acquisition(model, x, spec, t);
  }
  const double best = *std::max_element(values.begin(), values.end());
  const double thr = tie_threshold(best);
  std::size_t pick = 0;
  while (values[pick] < thr) ++pick;
  AcquisitionMax out;
  out.index.assign(d, 0);
  for (std::size_t k = d, rest = pick; k-- > 0;) {
    out.index[k] = rest % grids[k].size();
    rest /= grids[k].size();
  }
  out.value = best;
  out.x.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.x[i] = grids[i][out.index[i]];
  return out;
}

}  // namespace rducb
