#pragma once

// Linear mixed-effects model with a single random intercept per group, fit by
// REML. The variance ratio sigma_u^2 / sigma_e^2 is the only free parameter
// once beta and sigma_e^2 are profiled out.

#include "readerbench/design.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace rbench::stats {

class RemlProfile {
public:
    // `group` holds a group index per observation, in [0, n_groups).
    RemlProfile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const int> group);

    struct Solution {
        Eigen::VectorXd beta;
        Eigen::MatrixXd a_inverse;  // (X' H^-1 X)^-1 with V = sigma_e^2 H
        double sigma_e2 = 0.0;
        double loglik = 0.0;
    };

    // Profiled REML log-likelihood and its derivative in the variance ratio.
    double loglik(double ratio) const;
    double derivative(double ratio) const;
    Solution solve(double ratio) const;

    int observations() const { return n_obs_; }
    int parameters() const { return n_params_; }
    int groups() const { return static_cast<int>(group_size_.size()); }

private:
    struct Moments {
        Eigen::MatrixXd a;
        Eigen::VectorXd b;
        double c = 0.0;
        double log_det_h = 0.0;
    };
    Moments moments(double ratio) const;

    int n_obs_ = 0;
    int n_params_ = 0;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    double yty_ = 0.0;
    std::vector<double> group_size_;
    std::vector<Eigen::VectorXd> group_x_sum_;  // X_i' 1
    std::vector<double> group_y_sum_;           // 1' y_i
};

struct RandomInterceptOptions {
    bool force_zero_group_variance = false;
    double min_log_ratio = -25.0;
    double max_log_ratio = 15.0;
};

struct RandomInterceptFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;
    double sigma_u2 = 0.0;
    double sigma_e2 = 0.0;
    double ratio = 0.0;
    double reml_loglik = 0.0;
    bool converged = false;
    bool at_boundary = false;
    std::string diagnostics;
};

RandomInterceptFit fit_random_intercept(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        std::span<const int> group, RandomInterceptOptions options = {});

// ---------------------------------------------------------------------------
// Diagnostic-time model: seconds ~ round * method + (1 | clinician), with
// treatment coding against round 1 and Manual.

struct TimingRow {
    std::string clinician_id;
    int round = 1;
    Arm method = Arm::Manual;
    double seconds = 0.0;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;  // seconds
    double std_error = 0.0;
    double z = 0.0;
    double p = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct LmmFit {
    std::vector<Coefficient> coefficients;
    Eigen::MatrixXd covariance;
    double sigma_u2 = 0.0;  // seconds^2
    double sigma_e2 = 0.0;  // seconds^2
    double reml_loglik = 0.0;
    bool converged = false;
    bool at_boundary = false;
    std::string diagnostics;
    std::string coding = "treatment: round=1, method=Manual";
    std::size_t n_obs = 0;
    std::size_t n_groups = 0;

    const Coefficient* find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;  // throws Argument
};

inline constexpr double kWaldCritical = 1.96;

// Coefficient names: Intercept, round[2..4], method[ManualPlusAI],
// round[r]:method[ManualPlusAI].
std::string round_term(int round);
std::string method_term();
std::string interaction_term(int round);

LmmFit fit_lmm(std::span<const TimingRow> rows, RandomInterceptOptions options = {});

struct RoundEffect {
    int round = 1;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p = 1.0;
};

// AI effect in each round: method coefficient plus that round's interaction.
std::vector<RoundEffect> lmm_round_effects(const LmmFit& fit);

}  // namespace rbench::stats
