#ifndef ROTS_TRANSPORT_HPP
#define ROTS_TRANSPORT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rots/matrix.hpp"

namespace rots {

struct TransportPlan {
    Matrix gamma;
    std::vector<double> row_marginals;
    std::vector<double> col_marginals;
};

inline double max_marginal_violation(const TransportPlan& plan) {
    const auto rs = plan.gamma.row_sums();
    const auto cs = plan.gamma.col_sums();
    double worst = 0.0;
    for (int i = 0; i < plan.gamma.rows; ++i) worst = std::max(worst, std::abs(rs[i] - plan.row_marginals[i]));
    for (int j = 0; j < plan.gamma.cols; ++j) worst = std::max(worst, std::abs(cs[j] - plan.col_marginals[j]));
    return worst;
}

// D_ij = 1 - cos(v1_i, v2_j), in [0, 2].
inline Matrix cosine_cost(const std::vector<std::vector<double>>& v1,
                          const std::vector<std::vector<double>>& v2) {
    Matrix d(static_cast<int>(v1.size()), static_cast<int>(v2.size()));
    for (int i = 0; i < d.rows; ++i)
        for (int j = 0; j < d.cols; ++j) d(i, j) = 1.0 - cosine_similarity(v1[i], v2[j]);
    return d;
}

// Frobenius inner product <plan, matrix>.
inline double transport_objective(const Matrix& plan, const Matrix& matrix) {
    if (!plan.same_shape(matrix)) throw std::invalid_argument("transport_objective: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < plan.data.size(); ++k) s += plan.data[k] * matrix.data[k];
    return s;
}

inline double transport_objective(const TransportPlan& plan, const Matrix& matrix) {
    return transport_objective(plan.gamma, matrix);
}

namespace detail {

inline void check_balanced(std::span<const double> r, std::span<const double> c,
                           double& sum_r, double& sum_c) {
    sum_r = 0.0;
    sum_c = 0.0;
    for (double x : r) {
        if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("marginals must be nonnegative");
        sum_r += x;
    }
    for (double x : c) {
        if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("marginals must be nonnegative");
        sum_c += x;
    }
    if (std::abs(sum_r - sum_c) > 1e-6)
        throw std::invalid_argument("marginal sums differ by more than 1e-6");
    if (sum_r <= 0.0) throw std::invalid_argument("marginals must carry positive mass");
}

// Transportation simplex state. The basis is a spanning tree over row and
// column nodes; column node j is node m + j. Basis adjacency is maintained
// incrementally so a pivot costs O(m + n) plus one reduced-cost scan.
struct SimplexSolver {
    int m, n;
    const Matrix& cost;
    std::vector<double> a, b;  // working marginals (b rescaled to balance)

    struct Cell {
        int i, j;
        double flow;
    };
    std::vector<Cell> basis;
    std::vector<int> cell_to_basis; // m*n -> basis index or -1
    std::vector<std::vector<int>> row_cells, col_cells;

    // scratch buffers reused across pivots
    std::vector<int> parent_edge, parent_node, stack;
    std::vector<char> visited;

    SimplexSolver(const Matrix& cost_, std::span<const double> r, std::span<const double> c)
        : m(cost_.rows), n(cost_.cols), cost(cost_), a(r.begin(), r.end()), b(c.begin(), c.end()) {
        double sr, sc;
        check_balanced(r, c, sr, sc);
        for (double& x : b) x *= sr / sc;
        cell_to_basis.assign(static_cast<std::size_t>(m) * n, -1);
        row_cells.resize(m);
        col_cells.resize(n);
        parent_edge.resize(m + n);
        parent_node.resize(m + n);
        visited.resize(m + n);
    }

    int cell_index(int i, int j) const { return i * n + j; }

    void add_basic(int i, int j, double flow) {
        const int id = static_cast<int>(basis.size());
        cell_to_basis[cell_index(i, j)] = id;
        basis.push_back({i, j, flow});
        row_cells[i].push_back(id);
        col_cells[j].push_back(id);
    }

    // Northwest-corner start: exactly m + n - 1 basic cells, zeros included.
    void northwest_corner() {
        std::vector<double> ra = a, cb = b;
        int i = 0, j = 0;
        for (int step = 0; step < m + n - 1; ++step) {
            const double x = std::min(ra[i], cb[j]);
            add_basic(i, j, x);
            ra[i] -= x;
            cb[j] -= x;
            if (i == m - 1)
                ++j;
            else if (j == n - 1)
                ++i;
            else if (ra[i] <= cb[j])
                ++i;
            else
                ++j;
        }
    }

    // Duals from u[0] = 0 by propagation over the basis tree.
    void compute_duals(std::vector<double>& u, std::vector<double>& v) {
        u.assign(m, std::numeric_limits<double>::quiet_NaN());
        v.assign(n, std::numeric_limits<double>::quiet_NaN());
        u[0] = 0.0;
        stack.assign(1, 0); // node ids: rows 0..m-1, cols m..m+n-1
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < m) {
                for (int k : row_cells[node]) {
                    const int j = basis[k].j;
                    if (std::isnan(v[j])) {
                        v[j] = cost(node, j) - u[node];
                        stack.push_back(m + j);
                    }
                }
            } else {
                const int j = node - m;
                for (int k : col_cells[j]) {
                    const int i = basis[k].i;
                    if (std::isnan(u[i])) {
                        u[i] = cost(i, j) - v[j];
                        stack.push_back(i);
                    }
                }
            }
        }
    }

    // Unique basis-tree path from row node i0 to column node j0, returned as
    // basis-cell indices ordered from i0 to j0.
    std::vector<int> tree_path(int i0, int j0) {
        std::fill(parent_edge.begin(), parent_edge.end(), -1);
        std::fill(parent_node.begin(), parent_node.end(), -1);
        std::fill(visited.begin(), visited.end(), 0);
        stack.assign(1, i0);
        visited[i0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node == m + j0) break;
            const auto& cells = node < m ? row_cells[node] : col_cells[node - m];
            for (int k : cells) {
                const int other = node < m ? m + basis[k].j : basis[k].i;
                if (!visited[other]) {
                    visited[other] = 1;
                    parent_edge[other] = k;
                    parent_node[other] = node;
                    stack.push_back(other);
                }
            }
        }
        std::vector<int> path;
        for (int node = m + j0; node != i0; node = parent_node[node]) {
            if (node < 0 || parent_edge[node] < 0)
                throw std::logic_error("solve_exact_ot: basis is not a spanning tree");
            path.push_back(parent_edge[node]);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    void detach(int basis_id) {
        auto remove_from = [basis_id](std::vector<int>& cells) {
            cells.erase(std::find(cells.begin(), cells.end(), basis_id));
        };
        remove_from(row_cells[basis[basis_id].i]);
        remove_from(col_cells[basis[basis_id].j]);
    }

    void pivot(int enter_i, int enter_j, const std::vector<int>& path) {
        // Along the path from the entering row to the entering column, flows
        // alternate -theta, +theta, ... starting and ending with minus.
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t p = 0; p < path.size(); p += 2) {
            const Cell& cell = basis[path[p]];
            if (cell.flow < theta ||
                (cell.flow == theta && leaving >= 0 &&
                 cell_index(cell.i, cell.j) < cell_index(basis[leaving].i, basis[leaving].j))) {
                theta = cell.flow;
                leaving = path[p];
            }
        }
        for (std::size_t p = 0; p < path.size(); ++p)
            basis[path[p]].flow += (p % 2 == 0) ? -theta : theta;

        detach(leaving);
        cell_to_basis[cell_index(basis[leaving].i, basis[leaving].j)] = -1;
        basis[leaving] = {enter_i, enter_j, theta};
        cell_to_basis[cell_index(enter_i, enter_j)] = leaving;
        row_cells[enter_i].push_back(leaving);
        col_cells[enter_j].push_back(leaving);
    }

    double solve(Matrix& plan) {
        northwest_corner();
        std::vector<double> u, v;
        // Bland's rule only guards against cycling on degenerate instances;
        // switching too early slows the common case badly.
        const long bland_after = 500L * (m + n);
        const long hard_cap = 5000L * (m + n) + 100000L;
        for (long iter = 0;; ++iter) {
            if (iter > hard_cap) throw std::runtime_error("solve_exact_ot: pivot limit exceeded");
            compute_duals(u, v);

            int enter_i = -1, enter_j = -1;
            double best = -1e-11; // ignore float noise in reduced costs
            const bool bland = iter > bland_after;
            for (int i = 0; i < m && enter_i < 0; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (cell_to_basis[cell_index(i, j)] >= 0) continue;
                    const double rc = cost(i, j) - u[i] - v[j];
                    if (rc < best) {
                        best = rc;
                        enter_i = i;
                        enter_j = j;
                        if (bland) break; // first eligible cell keeps pivots finite
                    }
                }
                if (bland && enter_i >= 0) break;
            }
            if (enter_i < 0) break;
            pivot(enter_i, enter_j, tree_path(enter_i, enter_j));
        }

        plan = Matrix(m, n, 0.0);
        double objective = 0.0;
        for (const auto& cell : basis) {
            const double flow = std::max(cell.flow, 0.0);
            plan(cell.i, cell.j) = flow;
            objective += flow * cost(cell.i, cell.j);
        }
        return objective;
    }
};

} // namespace detail

// Exact optimal transport by the transportation simplex (northwest-corner
// start, cycle improvement). Intended for the small per-level problems; the
// cap guards against accidental quadratic-size calls.
inline TransportPlan solve_exact_ot(const Matrix& cost, std::span<const double> r,
                                    std::span<const double> c, int size_limit = 64) {
    if (cost.rows != static_cast<int>(r.size()) || cost.cols != static_cast<int>(c.size()))
        throw std::invalid_argument("solve_exact_ot: marginal sizes do not match cost");
    if (cost.rows < 1 || cost.cols < 1) throw std::invalid_argument("solve_exact_ot: empty problem");
    if (size_limit > 0 && (cost.rows > size_limit || cost.cols > size_limit))
        throw std::invalid_argument("solve_exact_ot: problem exceeds size limit");

    TransportPlan plan;
    plan.row_marginals.assign(r.begin(), r.end());
    plan.col_marginals.assign(c.begin(), c.end());

    // one-row / one-column problems have a unique feasible plan
    if (cost.rows == 1) {
        plan.gamma = Matrix(1, cost.cols);
        for (int j = 0; j < cost.cols; ++j) plan.gamma(0, j) = c[j];
        return plan;
    }
    if (cost.cols == 1) {
        plan.gamma = Matrix(cost.rows, 1);
        for (int i = 0; i < cost.rows; ++i) plan.gamma(i, 0) = r[i];
        return plan;
    }

    detail::SimplexSolver solver(cost, r, c);
    solver.solve(plan.gamma);
    return plan;
}

struct SinkhornOptions {
    double tol = 1e-9;
    int max_iter = 10000;
    double prior_floor_lambda = 1e-6;  // blend toward r c^T so the kernel has no zero rows
    double log_domain_factor = 0.05;   // log-domain scaling below this fraction of mean cost
    // Near-block-diagonal priors couple their blocks only through the floor,
    // so the violation plateaus around lambda-scale flux long before tol.
    // Such iterates are accepted once past the burn-in: rounding restores
    // exact marginals and the objective error stays below |D|_inf * stall_tol.
    double stall_tol = 1e-7;
    int stall_check_after = 2000;
};

namespace detail {

inline double log_sum_exp(std::span<const double> xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

// Scale rows then columns toward the targets and absorb any residual in a
// rank-one correction; the result meets both marginals to machine precision.
inline void round_to_marginals(Matrix& gamma, std::span<const double> r, std::span<const double> c) {
    const int m = gamma.rows, n = gamma.cols;
    auto rs = gamma.row_sums();
    for (int i = 0; i < m; ++i) {
        const double s = rs[i] > 0.0 ? std::min(1.0, r[i] / rs[i]) : 1.0;
        if (s != 1.0)
            for (int j = 0; j < n; ++j) gamma(i, j) *= s;
    }
    auto cs = gamma.col_sums();
    for (int j = 0; j < n; ++j) {
        const double s = cs[j] > 0.0 ? std::min(1.0, c[j] / cs[j]) : 1.0;
        if (s != 1.0)
            for (int i = 0; i < m; ++i) gamma(i, j) *= s;
    }
    rs = gamma.row_sums();
    cs = gamma.col_sums();
    std::vector<double> err_r(m), err_c(n);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        err_r[i] = std::max(0.0, r[i] - rs[i]);
        total += err_r[i];
    }
    for (int j = 0; j < n; ++j) err_c[j] = std::max(0.0, c[j] - cs[j]);
    if (total > 0.0)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) gamma(i, j) += err_r[i] * err_c[j] / total;
}

} // namespace detail

// KL-regularized optimal transport: minimize <Gamma, cost> + gamma * KL(Gamma || prior)
// under the marginal constraints, solved by Sinkhorn scaling of the kernel
// prior .* exp(-cost / gamma). Small gamma switches to log-domain updates.
inline TransportPlan solve_kot(const Matrix& cost, std::span<const double> r,
                               std::span<const double> c, const Matrix& prior, double gamma,
                               const SinkhornOptions& options = {}) {
    if (gamma <= 0.0 || !std::isfinite(gamma))
        throw std::invalid_argument("solve_kot: gamma must be positive");
    if (!cost.same_shape(prior)) throw std::invalid_argument("solve_kot: prior shape mismatch");
    if (cost.rows != static_cast<int>(r.size()) || cost.cols != static_cast<int>(c.size()))
        throw std::invalid_argument("solve_kot: marginal sizes do not match cost");
    for (double p : prior.data)
        if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("solve_kot: prior entries must be nonnegative");

    const int m = cost.rows, n = cost.cols;
    double sum_r, sum_c;
    detail::check_balanced(r, c, sum_r, sum_c);

    TransportPlan plan;
    plan.row_marginals.assign(r.begin(), r.end());
    plan.col_marginals.assign(c.begin(), c.end());

    if (m == 1 || n == 1) { // unique feasible plan
        plan.gamma = Matrix(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) plan.gamma(i, j) = r[i] * (c[j] / sum_c);
        return plan;
    }

    // floor the prior so sparse level-1 plans cannot zero out kernel rows
    const double lambda = options.prior_floor_lambda;
    Matrix floored(m, n);
    double mean_cost = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            floored(i, j) = (1.0 - lambda) * prior(i, j) + lambda * r[i] * c[j];
            mean_cost += cost(i, j);
        }
    mean_cost /= static_cast<double>(m) * n;

    const bool log_domain = gamma < options.log_domain_factor * mean_cost;
    double violation = std::numeric_limits<double>::infinity();
    Matrix gamma_mat(m, n);

    auto check = [&](const Matrix& g) {
        const auto rs = g.row_sums();
        const auto cs = g.col_sums();
        double worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::max(worst, std::abs(rs[i] - r[i]));
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(cs[j] - c[j]));
        return worst;
    };

    bool converged = false;
    auto accept = [&](int iter) {
        if (violation < options.tol) return true;
        return iter >= options.stall_check_after && violation < options.stall_tol;
    };
    if (!log_domain) {
        Matrix kernel(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) kernel(i, j) = floored(i, j) * std::exp(-cost(i, j) / gamma);
        std::vector<double> u(m, 1.0), v(n, 1.0);
        for (int iter = 0; iter < options.max_iter; ++iter) {
            for (int i = 0; i < m; ++i) {
                double kv = 0.0;
                for (int j = 0; j < n; ++j) kv += kernel(i, j) * v[j];
                u[i] = kv > 0.0 ? r[i] / kv : 0.0;
            }
            for (int j = 0; j < n; ++j) {
                double ku = 0.0;
                for (int i = 0; i < m; ++i) ku += kernel(i, j) * u[i];
                v[j] = ku > 0.0 ? c[j] / ku : 0.0;
            }
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gamma_mat(i, j) = u[i] * kernel(i, j) * v[j];
            violation = check(gamma_mat);
            if (accept(iter)) {
                converged = true;
                break;
            }
        }
    } else {
        Matrix log_kernel(m, n);
        constexpr double neg_inf = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                log_kernel(i, j) = (floored(i, j) > 0.0 ? std::log(floored(i, j)) : neg_inf) -
                                   cost(i, j) / gamma;
        std::vector<double> alpha(m, 0.0), beta(n, 0.0), buf(std::max(m, n));
        std::vector<double> log_r(m), log_c(n);
        for (int i = 0; i < m; ++i) log_r[i] = r[i] > 0.0 ? std::log(r[i]) : neg_inf;
        for (int j = 0; j < n; ++j) log_c[j] = c[j] > 0.0 ? std::log(c[j]) : neg_inf;
        for (int iter = 0; iter < options.max_iter; ++iter) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) buf[j] = log_kernel(i, j) + beta[j];
                alpha[i] = log_r[i] - detail::log_sum_exp(std::span(buf.data(), n));
            }
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < m; ++i) buf[i] = log_kernel(i, j) + alpha[i];
                beta[j] = log_c[j] - detail::log_sum_exp(std::span(buf.data(), m));
            }
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double lg = log_kernel(i, j) + alpha[i] + beta[j];
                    gamma_mat(i, j) = std::isfinite(lg) ? std::exp(lg) : 0.0;
                }
            violation = check(gamma_mat);
            if (accept(iter)) {
                converged = true;
                break;
            }
        }
    }

    if (!converged) {
        std::ostringstream msg;
        msg << "solve_kot: no convergence after " << options.max_iter
            << " iterations (marginal violation " << violation << ")";
        throw std::runtime_error(msg.str());
    }

    detail::round_to_marginals(gamma_mat, r, c);
    plan.gamma = std::move(gamma_mat);
    return plan;
}

// Refine a plan over parent groups into a prior over child groups: block
// (i, j) keeps the parent mass and spreads it proportionally to the product
// of child weights (uniformly if a block's weights vanish).
inline Matrix split_prior(const TransportPlan& parent_plan,
                          const std::vector<std::vector<int>>& parent_groups1,
                          const std::vector<std::vector<int>>& parent_groups2,
                          const std::vector<std::vector<int>>& child_groups1,
                          const std::vector<std::vector<int>>& child_groups2,
                          std::span<const double> child_weights1,
                          std::span<const double> child_weights2) {
    if (parent_plan.gamma.rows != static_cast<int>(parent_groups1.size()) ||
        parent_plan.gamma.cols != static_cast<int>(parent_groups2.size()))
        throw std::invalid_argument("split_prior: plan shape does not match parent groups");
    if (child_groups1.size() != child_weights1.size() || child_groups2.size() != child_weights2.size())
        throw std::invalid_argument("split_prior: child weight count mismatch");

    auto parent_of = [](const std::vector<std::vector<int>>& parents,
                        const std::vector<int>& child) {
        for (std::size_t p = 0; p < parents.size(); ++p)
            if (std::includes(parents[p].begin(), parents[p].end(), child.begin(), child.end()))
                return static_cast<int>(p);
        throw std::invalid_argument("split_prior: child group not covered by any parent");
    };

    const int m = static_cast<int>(child_groups1.size());
    const int n = static_cast<int>(child_groups2.size());
    std::vector<int> p1(m), p2(n);
    std::vector<double> wsum1(parent_groups1.size(), 0.0), wsum2(parent_groups2.size(), 0.0);
    std::vector<int> count1(parent_groups1.size(), 0), count2(parent_groups2.size(), 0);
    for (int i = 0; i < m; ++i) {
        p1[i] = parent_of(parent_groups1, child_groups1[i]);
        wsum1[p1[i]] += child_weights1[i];
        ++count1[p1[i]];
    }
    for (int j = 0; j < n; ++j) {
        p2[j] = parent_of(parent_groups2, child_groups2[j]);
        wsum2[p2[j]] += child_weights2[j];
        ++count2[p2[j]];
    }

    Matrix prior(m, n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            const double mass = parent_plan.gamma(p1[i], p2[j]);
            const double denom = wsum1[p1[i]] * wsum2[p2[j]];
            double fraction;
            if (denom > 0.0)
                fraction = (child_weights1[i] * child_weights2[j]) / denom;
            else
                fraction = 1.0 / (static_cast<double>(count1[p1[i]]) * count2[p2[j]]);
            prior(i, j) = mass * fraction;
        }
    }
    return prior;
}

} // namespace rots

#endif // ROTS_TRANSPORT_HPP
