#include "readerbench/stats/lmm.hpp"

#include "readerbench/error.hpp"
#include "readerbench/stats/wilcoxon.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace rbench::stats {

RemlProfile::RemlProfile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const int> group) {
    if (X.rows() != y.size() || static_cast<std::size_t>(X.rows()) != group.size()) {
        fail(ErrorKind::Argument, "design, response and group vectors differ in length");
    }
    n_obs_ = static_cast<int>(X.rows());
    n_params_ = static_cast<int>(X.cols());
    if (n_obs_ <= n_params_) fail(ErrorKind::Argument, "need more observations than fixed effects");

    int n_groups = 0;
    for (int g : group) {
        if (g < 0) fail(ErrorKind::Argument, "negative group index");
        n_groups = std::max(n_groups, g + 1);
    }
    xtx_ = X.transpose() * X;
    xty_ = X.transpose() * y;
    yty_ = y.squaredNorm();
    group_size_.assign(static_cast<std::size_t>(n_groups), 0.0);
    group_x_sum_.assign(static_cast<std::size_t>(n_groups), Eigen::VectorXd::Zero(n_params_));
    group_y_sum_.assign(static_cast<std::size_t>(n_groups), 0.0);
    for (int i = 0; i < n_obs_; ++i) {
        const auto g = static_cast<std::size_t>(group[static_cast<std::size_t>(i)]);
        group_size_[g] += 1.0;
        group_x_sum_[g] += X.row(i).transpose();
        group_y_sum_[g] += y(i);
    }
}

// With V_i = sigma_e^2 (I + ratio J), H_i^-1 = I - w_i J where
// w_i = ratio / (1 + n_i ratio), so every quadratic form reduces to group sums.
RemlProfile::Moments RemlProfile::moments(double ratio) const {
    Moments m{xtx_, xty_, yty_, 0.0};
    for (std::size_t g = 0; g < group_size_.size(); ++g) {
        const double n = group_size_[g];
        if (n == 0.0) continue;
        const double w = ratio / (1.0 + n * ratio);
        m.a.noalias() -= w * group_x_sum_[g] * group_x_sum_[g].transpose();
        m.b -= w * group_y_sum_[g] * group_x_sum_[g];
        m.c -= w * group_y_sum_[g] * group_y_sum_[g];
        m.log_det_h += std::log1p(n * ratio);
    }
    return m;
}

RemlProfile::Solution RemlProfile::solve(double ratio) const {
    const Moments m = moments(ratio);
    Eigen::LLT<Eigen::MatrixXd> llt(m.a);
    if (llt.info() != Eigen::Success) fail(ErrorKind::Argument, "fixed-effects design is rank deficient");
    Solution s;
    s.beta = llt.solve(m.b);
    s.a_inverse = llt.solve(Eigen::MatrixXd::Identity(n_params_, n_params_));
    const double df = n_obs_ - n_params_;
    const double q = m.c - m.b.dot(s.beta);
    s.sigma_e2 = q / df;
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det_a = 2.0 * l.diagonal().array().log().sum();
    s.loglik = -0.5 * (df * std::log(s.sigma_e2) + m.log_det_h + log_det_a + df * (1.0 + std::log(2.0 * std::numbers::pi)));
    return s;
}

double RemlProfile::loglik(double ratio) const { return solve(ratio).loglik; }

double RemlProfile::derivative(double ratio) const {
    const Moments m = moments(ratio);
    Eigen::LLT<Eigen::MatrixXd> llt(m.a);
    if (llt.info() != Eigen::Success) fail(ErrorKind::Argument, "fixed-effects design is rank deficient");
    const Eigen::VectorXd beta = llt.solve(m.b);
    const double df = n_obs_ - n_params_;
    const double q = m.c - m.b.dot(beta);

    double dq = 0.0;
    double dlog_det_h = 0.0;
    double dlog_det_a = 0.0;
    for (std::size_t g = 0; g < group_size_.size(); ++g) {
        const double n = group_size_[g];
        if (n == 0.0) continue;
        const double denom = 1.0 + n * ratio;
        const double dw = 1.0 / (denom * denom);
        const auto& s = group_x_sum_[g];
        const double t = group_y_sum_[g];
        // dQ = dc - 2 beta' db + beta' dA beta, with dA = -dw s s', db = -dw s t, dc = -dw t^2.
        const double sb = s.dot(beta);
        dq += -dw * t * t + 2.0 * dw * t * sb - dw * sb * sb;
        dlog_det_h += n / denom;
        dlog_det_a += -dw * s.dot(llt.solve(s));
    }
    return -0.5 * (df * dq / q + dlog_det_h + dlog_det_a);
}

RandomInterceptFit fit_random_intercept(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        std::span<const int> group, RandomInterceptOptions options) {
    const RemlProfile profile(X, y, group);
    RandomInterceptFit fit;

    auto finish = [&](double ratio) {
        const auto s = profile.solve(ratio);
        fit.ratio = ratio;
        fit.beta = s.beta;
        fit.sigma_e2 = s.sigma_e2;
        fit.sigma_u2 = ratio * s.sigma_e2;
        fit.covariance = s.sigma_e2 * s.a_inverse;
        fit.reml_loglik = s.loglik;
        return fit;
    };

    if (options.force_zero_group_variance) {
        fit.converged = true;
        fit.at_boundary = true;
        fit.diagnostics = "group variance fixed at zero";
        return finish(0.0);
    }

    // Coarse scan over the log ratio, then refine on the analytic derivative.
    const double step = 0.5;
    std::vector<double> grid;
    for (double t = options.min_log_ratio; t <= options.max_log_ratio + 1e-12; t += step) grid.push_back(t);
    std::size_t best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double ll = profile.loglik(std::exp(grid[k]));
        if (ll > best_ll) {
            best_ll = ll;
            best = k;
        }
    }
    const double ll_zero = profile.loglik(0.0);
    if (best == 0 || ll_zero >= best_ll) {
        if (profile.derivative(0.0) <= 0.0 || ll_zero >= best_ll) {
            fit.converged = true;
            fit.at_boundary = true;
            fit.diagnostics = "group variance on the zero boundary";
            return finish(0.0);
        }
    }
    if (best + 1 == grid.size()) {
        fit.converged = false;
        fit.diagnostics = "variance ratio diverges past exp(" + std::to_string(options.max_log_ratio) + ")";
        return finish(std::exp(grid.back()));
    }

    const double lo = best == 0 ? 0.0 : std::exp(grid[best - 1]);
    const double hi = std::exp(grid[best + 1]);
    const double d_lo = profile.derivative(lo);
    const double d_hi = profile.derivative(hi);
    if (d_lo > 0.0 && d_hi < 0.0) {
        std::uintmax_t iterations = 200;
        const auto root = boost::math::tools::toms748_solve([&](double r) { return profile.derivative(r); }, lo, hi,
                                                            d_lo, d_hi, boost::math::tools::eps_tolerance<double>(50),
                                                            iterations);
        fit.converged = iterations < 200;
        fit.diagnostics = "derivative root after " + std::to_string(iterations) + " iterations";
        return finish(0.5 * (root.first + root.second));
    }

    // Derivative did not change sign across the bracket: fall back to a
    // derivative-free search on the log ratio.
    std::uintmax_t iterations = 200;
    const auto result = boost::math::tools::brent_find_minima(
        [&](double t) { return -profile.loglik(std::exp(t)); }, grid[best == 0 ? 0 : best - 1], grid[best + 1], 50,
        iterations);
    fit.converged = iterations < 200;
    fit.diagnostics = "brent search after " + std::to_string(iterations) + " iterations";
    return finish(std::exp(result.first));
}

// ---------------------------------------------------------------------------

std::string round_term(int round) { return "round[" + std::to_string(round) + "]"; }
std::string method_term() { return "method[ManualPlusAI]"; }
std::string interaction_term(int round) { return round_term(round) + ":" + method_term(); }

const Coefficient* LmmFit::find(std::string_view name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::size_t LmmFit::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        if (coefficients[i].name == name) return i;
    }
    fail(ErrorKind::Argument, "model has no term " + std::string(name));
}

LmmFit fit_lmm(std::span<const TimingRow> rows, RandomInterceptOptions options) {
    std::map<std::string, int> group_index;
    std::map<std::string, int> per_group;
    std::array<bool, 5> round_seen{};
    std::array<bool, 2> method_seen{};
    for (const auto& r : rows) {
        if (r.round < 1 || r.round > 4) fail(ErrorKind::Argument, "round must be 1-4, got " + std::to_string(r.round));
        if (!std::isfinite(r.seconds)) fail(ErrorKind::Argument, "non-finite timing for " + r.clinician_id);
        group_index.emplace(r.clinician_id, 0);
        ++per_group[r.clinician_id];
        round_seen[static_cast<std::size_t>(r.round)] = true;
        method_seen[r.method == Arm::Manual ? 0 : 1] = true;
    }
    if (group_index.size() < 2) fail(ErrorKind::Argument, "need at least 2 clinicians");
    for (const auto& [c, n] : per_group) {
        if (n < 2) fail(ErrorKind::Argument, "clinician " + c + " has fewer than 2 observations");
    }
    for (int r = 1; r <= 4; ++r) {
        if (!round_seen[static_cast<std::size_t>(r)]) fail(ErrorKind::Argument, "round " + std::to_string(r) + " absent");
    }
    if (!method_seen[0] || !method_seen[1]) fail(ErrorKind::Argument, "both methods must be represented");
    int next = 0;
    for (auto& [c, idx] : group_index) idx = next++;

    std::vector<std::string> names = {"Intercept", round_term(2), round_term(3), round_term(4), method_term(),
                                      interaction_term(2), interaction_term(3), interaction_term(4)};
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
    Eigen::VectorXd y(n);
    std::vector<int> group(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        const bool ai = r.method == Arm::ManualPlusAI;
        X(i, 0) = 1.0;
        if (r.round > 1) X(i, r.round - 1) = 1.0;
        if (ai) X(i, 4) = 1.0;
        if (ai && r.round > 1) X(i, 4 + r.round - 1) = 1.0;
        y(i) = r.seconds;
        group[static_cast<std::size_t>(i)] = group_index.at(r.clinician_id);
    }

    const auto ri = fit_random_intercept(X, y, group, options);
    LmmFit fit;
    fit.covariance = ri.covariance;
    fit.sigma_u2 = ri.sigma_u2;
    fit.sigma_e2 = ri.sigma_e2;
    fit.reml_loglik = ri.reml_loglik;
    fit.converged = ri.converged;
    fit.at_boundary = ri.at_boundary;
    fit.diagnostics = ri.diagnostics;
    fit.n_obs = rows.size();
    fit.n_groups = group_index.size();
    for (std::size_t k = 0; k < names.size(); ++k) {
        Coefficient c;
        c.name = names[k];
        c.estimate = ri.beta(static_cast<Eigen::Index>(k));
        c.std_error = std::sqrt(ri.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
        c.z = c.estimate / c.std_error;
        c.p = std::min(1.0, 2.0 * normal_sf(std::abs(c.z)));
        c.ci_low = c.estimate - kWaldCritical * c.std_error;
        c.ci_high = c.estimate + kWaldCritical * c.std_error;
        fit.coefficients.push_back(std::move(c));
    }
    return fit;
}

std::vector<RoundEffect> lmm_round_effects(const LmmFit& fit) {
    const std::size_t m = fit.index_of(method_term());
    std::vector<RoundEffect> out;
    for (int round = 1; round <= 4; ++round) {
        RoundEffect e;
        e.round = round;
        double var = fit.covariance(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        e.estimate = fit.coefficients[m].estimate;
        if (round > 1) {
            const std::size_t k = fit.index_of(interaction_term(round));
            e.estimate += fit.coefficients[k].estimate;
            var += fit.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +
                   2.0 * fit.covariance(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        }
        e.std_error = std::sqrt(var);
        e.z = e.estimate / e.std_error;
        e.p = std::min(1.0, 2.0 * normal_sf(std::abs(e.z)));
        out.push_back(e);
    }
    return out;
}

}  // namespace rbench::stats
