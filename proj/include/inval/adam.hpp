#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace inval {

/// Adaptive-moment optimizer over one flat parameter vector.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(std::size_t n, Options opts) : opts_(opts), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * grad[i];
            v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
            params[i] -= opts_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + opts_.eps);
        }
    }

    long steps() const { return t_; }

private:
    Options opts_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

/// log(1 + e^z), stable for large |z|.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// Binary cross-entropy of a logit against label y, i.e. -[y log σ(z) + (1-y) log(1-σ(z))].
inline double bce_with_logit(double z, double y) { return softplus(z) - y * z; }

}  // namespace inval
