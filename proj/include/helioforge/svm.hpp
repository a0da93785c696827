#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <list>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace helioforge {

/// Soft-margin Gaussian-kernel SVM. `dual_coeffs[i]` is y_i * alpha_i for
/// the i-th support vector, so decision(x) = sum_i dual_coeffs[i] *
/// K(sv_i, x) + bias.
struct SvmModel {
    double gamma = 1.0;
    double C = 1.0;
    double bias = 0.0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coeffs;
    std::size_t iterations = 0;
    bool converged = false;

    double decision(const std::vector<double>& x) const {
        double f = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) {
            const std::vector<double>& s = support_vectors[i];
            double sq = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) {
                const double d = s[k] - x[k];
                sq += d * d;
            }
            f += dual_coeffs[i] * std::exp(-gamma * sq);
        }
        return f;
    }

    /// +1 when the decision value is strictly positive, otherwise -1.
    int classify(const std::vector<double>& x) const { return decision(x) > 0.0 ? 1 : -1; }
};

struct SvmTrainOptions {
    double C = 1.0;
    double gamma = 1.0;
    double tol = 1e-3;
    std::size_t max_iter = 0;  // 0: max(100000, 50 * n)
};

namespace detail {

/// On-demand kernel rows with LRU eviction, bounded to ~64 MB.
class KernelRowCache {
  public:
    KernelRowCache(const std::vector<double>& flat, std::size_t n, std::size_t dim, double gamma)
        : flat_(flat), n_(n), dim_(dim), gamma_(gamma), sqnorm_(n) {
        for (std::size_t i = 0; i < n_; ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) sq += at(i, k) * at(i, k);
            sqnorm_[i] = sq;
        }
        const std::size_t budget_rows = (64u << 20) / (sizeof(double) * std::max<std::size_t>(n_, 1));
        capacity_ = std::max<std::size_t>(2, std::min(n_, budget_rows));
    }

    const std::vector<double>& row(std::size_t i) {
        auto it = index_.find(i);
        if (it != index_.end()) {
            rows_.splice(rows_.begin(), rows_, it->second);
            return it->second->second;
        }
        if (rows_.size() >= capacity_) {
            index_.erase(rows_.back().first);
            rows_.pop_back();
        }
        rows_.emplace_front(i, compute_row(i));
        index_[i] = rows_.begin();
        return rows_.begin()->second;
    }

  private:
    double at(std::size_t i, std::size_t k) const { return flat_[i * dim_ + k]; }

    std::vector<double> compute_row(std::size_t i) const {
        std::vector<double> r(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) dot += at(i, k) * at(j, k);
            r[j] = std::exp(-gamma_ * (sqnorm_[i] + sqnorm_[j] - 2.0 * dot));
        }
        return r;
    }

    const std::vector<double>& flat_;
    std::size_t n_, dim_;
    double gamma_;
    std::vector<double> sqnorm_;
    std::size_t capacity_;
    std::list<std::pair<std::size_t, std::vector<double>>> rows_;
    std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator>
        index_;
};

}  // namespace detail

/// Sequential minimal optimization with second-order working-set selection
/// and incremental gradient maintenance. Gradient G_i = (Q alpha)_i - 1 with
/// Q_ij = y_i y_j K_ij; the stopping rule is the maximal KKT violation
/// m(alpha) - M(alpha) <= tol.
inline SvmModel train_svm(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                          const SvmTrainOptions& opt = {}) {
    if (X.empty()) throw std::invalid_argument("empty input");
    if (X.size() != y.size()) throw std::invalid_argument("svm: feature/label count mismatch");
    if (!(opt.C > 0.0) || !(opt.gamma > 0.0) || !(opt.tol > 0.0))
        throw std::invalid_argument("svm: C, gamma and tol must be positive");
    const std::size_t n = X.size();
    const std::size_t dim = X[0].size();
    if (dim == 0) throw std::invalid_argument("empty input");

    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1)
            has_pos = true;
        else if (v == -1)
            has_neg = true;
        else
            throw std::invalid_argument("svm: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("degenerate labels");

    std::vector<double> flat(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (X[i].size() != dim) throw std::invalid_argument("svm: ragged feature matrix");
        std::copy(X[i].begin(), X[i].end(), flat.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }

    detail::KernelRowCache cache(flat, n, dim, opt.gamma);
    const double C = opt.C;
    constexpr double kTau = 1e-12;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);
    const std::size_t max_iter = opt.max_iter ? opt.max_iter : std::max<std::size_t>(100000, 50 * n);

    auto in_up = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
    };
    auto in_low = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
    };

    SvmModel model;
    model.gamma = opt.gamma;
    model.C = C;

    std::size_t iter = 0;
    double m_val = 0.0, M_val = 0.0;
    for (; iter < max_iter; ++iter) {
        m_val = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_up(t)) continue;
            const double v = -y[t] * G[t];
            if (v > m_val) {
                m_val = v;
                i = t;
            }
        }
        if (i == n) break;
        const std::vector<double>& Ki = cache.row(i);

        M_val = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        double best_obj = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * G[t];
            M_val = std::min(M_val, v);
            const double b = m_val - v;
            if (b <= 0.0) continue;
            // Gaussian kernel: K_tt = 1 on the diagonal
            const double quad = Ki[i] + 1.0 - 2.0 * y[i] * y[t] * Ki[t];
            const double denom = quad > kTau ? quad : kTau;
            const double obj = -(b * b) / denom;
            if (obj < best_obj) {
                best_obj = obj;
                j = t;
            }
        }
        if (m_val - M_val <= opt.tol || j == n) {
            model.converged = true;
            break;
        }

        const std::vector<double>& Kj = cache.row(j);
        const double quad0 = Ki[i] + Kj[j] - 2.0 * y[i] * y[j] * Ki[j];
        const double quad = quad0 > kTau ? quad0 : kTau;
        const double old_ai = alpha[i], old_aj = alpha[j];

        if (y[i] != y[j]) {
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            }
        } else {
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            G[t] += y[t] * (y[i] * Ki[t] * dai + y[j] * Kj[t] * daj);
    }
    model.iterations = iter;

    // bias from free support vectors; midpoint of the violation interval
    // when none are free
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < C) {
            free_sum += -y[t] * G[t];
            ++free_count;
        }
    }
    model.bias = free_count ? free_sum / static_cast<double>(free_count) : 0.5 * (m_val + M_val);
    if (!std::isfinite(model.bias)) model.bias = 0.0;

    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            model.support_vectors.push_back(X[t]);
            model.dual_coeffs.push_back(y[t] * alpha[t]);
        }
    }
    return model;
}

}  // namespace helioforge
