#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "stopout/model.hpp"

namespace stopout {

struct LogRegModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct FitOptions {
    double tol = 1e-7;      // subgradient optimality tolerance
    int max_iter = 20000;
    bool fit_intercept = true;
};

namespace logreg {

inline double log1pexp(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Smooth part of the objective: (1/N) sum log(1 + exp(-ysign_i (x_i.w + b))).
// ysign entries are -1/+1. Gradients are optional.
inline double smooth_logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& ysign,
                                   const Eigen::VectorXd& w, double b,
                                   Eigen::VectorXd* grad_w = nullptr, double* grad_b = nullptr) {
    const double n = static_cast<double>(X.rows());
    Eigen::VectorXd margin = ysign.array() * ((X * w).array() + b);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < margin.size(); ++i) loss += log1pexp(-margin[i]);
    loss /= n;
    if (grad_w || grad_b) {
        // d/dz log(1+exp(-yz)) = -y * sigmoid(-yz)
        Eigen::VectorXd r(margin.size());
        for (Eigen::Index i = 0; i < margin.size(); ++i)
            r[i] = -ysign[i] / (1.0 + std::exp(margin[i]));
        if (grad_w) *grad_w = X.transpose() * r / n;
        if (grad_b) *grad_b = r.sum() / n;
    }
    return loss;
}

inline double l1_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& ysign,
                           const Eigen::VectorXd& w, double b,
                           const Eigen::VectorXd& penalties) {
    return smooth_logistic_loss(X, ysign, w, b) + penalties.dot(w.cwiseAbs());
}

// Largest violation of the subgradient optimality conditions at (w, b).
inline double kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& ysign,
                            const Eigen::VectorXd& w, double b, const Eigen::VectorXd& penalties,
                            bool fit_intercept = true) {
    Eigen::VectorXd g;
    double gb = 0.0;
    smooth_logistic_loss(X, ysign, w, b, &g, &gb);
    double viol = fit_intercept ? std::abs(gb) : 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        double v = w[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - penalties[j])
                               : std::abs(g[j] + penalties[j] * (w[j] > 0 ? 1.0 : -1.0));
        viol = std::max(viol, v);
    }
    return viol;
}

inline Eigen::VectorXd to_sign_labels(const Eigen::VectorXd& y01) {
    Eigen::VectorXd s(y01.size());
    for (Eigen::Index i = 0; i < y01.size(); ++i) s[i] = y01[i] > 0.5 ? 1.0 : -1.0;
    return s;
}

// Smallest uniform penalty for which the all-zero weight vector is optimal:
// max_j |(1/N) sum_i ysign_i x_ij|.
inline double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01) {
    Eigen::VectorXd ysign = to_sign_labels(y01);
    double pos = (ysign.array() > 0).count();
    double neg = static_cast<double>(ysign.size()) - pos;
    if (pos == 0 || neg == 0) throw DataError("lambda_max: degenerate labels");
    // gradient of the smooth loss at w=0, b at its null-model optimum
    double b = std::log(pos / neg);
    Eigen::VectorXd g;
    smooth_logistic_loss(X, ysign, Eigen::VectorXd::Zero(X.cols()), b, &g);
    return g.cwiseAbs().maxCoeff();
}

}  // namespace logreg

// Minimizes (1/N) sum log(1+exp(-ysign_i (w.x_i + b))) + sum_j beta_j |w_j|
// by FISTA with backtracking line search and soft-thresholding. The intercept
// is unpenalized. Convergence is certified by the subgradient conditions.
inline LogRegModel fit_weighted_l1_logreg(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                                          const Eigen::VectorXd& penalties,
                                          const FitOptions& opts = {}) {
    if (X.rows() < 1 || X.rows() != y01.size() || X.cols() != penalties.size())
        throw DataError("fit_weighted_l1_logreg: shape mismatch");
    if (!X.allFinite() || !y01.allFinite() || !penalties.allFinite())
        throw DataError("fit_weighted_l1_logreg: non-finite input");
    Eigen::VectorXd ysign = logreg::to_sign_labels(y01);
    if (std::abs(ysign.sum()) == static_cast<double>(ysign.size()))
        throw DataError("fit_weighted_l1_logreg: degenerate labels (single class)");

    const Eigen::Index p = X.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double b = 0.0;
    Eigen::VectorXd yw = w;
    double yb = b;
    double theta = 1.0;
    double step = 4.0;  // Lipschitz constant of logistic loss is <= ||X||^2 / (4N)
    double prev_obj = logreg::l1_objective(X, ysign, w, b, penalties);

    LogRegModel model;
    auto soft = [](double v, double t) {
        if (v > t) return v - t;
        if (v < -t) return v + t;
        return 0.0;
    };

    for (int k = 0; k < opts.max_iter; ++k) {
        Eigen::VectorXd g;
        double gb = 0.0;
        double fy = logreg::smooth_logistic_loss(X, ysign, yw, yb, &g, &gb);
        if (!opts.fit_intercept) gb = 0.0;

        Eigen::VectorXd w_new(p);
        double b_new = yb;
        double f_new = 0.0;
        for (;;) {
            for (Eigen::Index j = 0; j < p; ++j)
                w_new[j] = soft(yw[j] - step * g[j], step * penalties[j]);
            b_new = yb - step * gb;
            f_new = logreg::smooth_logistic_loss(X, ysign, w_new, b_new);
            Eigen::VectorXd dw = w_new - yw;
            double db = b_new - yb;
            double quad = fy + g.dot(dw) + gb * db +
                          (dw.squaredNorm() + db * db) / (2.0 * step);
            if (f_new <= quad + 1e-15) break;
            step *= 0.5;
            if (step < 1e-14) break;
        }

        double theta_new = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
        double mom = (theta - 1.0) / theta_new;
        Eigen::VectorXd w_prev = std::move(w);
        w = w_new;
        double b_prev = b;
        b = b_new;
        yw = w + mom * (w - w_prev);
        yb = b + mom * (b - b_prev);
        theta = theta_new;

        double obj = f_new + penalties.dot(w.cwiseAbs());
        if (obj > prev_obj) {  // adaptive restart
            yw = w;
            yb = b;
            theta = 1.0;
        }
        prev_obj = obj;
        step *= 1.1;  // let the step recover after backtracking

        model.iterations = k + 1;
        if ((k + 1) % 5 == 0 || k + 1 == opts.max_iter) {
            if (logreg::kkt_violation(X, ysign, w, b, penalties, opts.fit_intercept) <= opts.tol) {
                model.converged = true;
                break;
            }
        }
    }
    model.weights = std::move(w);
    model.intercept = opts.fit_intercept ? b : 0.0;
    return model;
}

}  // namespace stopout
