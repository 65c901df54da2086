#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rvisc {

// Deterministic stream. Sub-streams are derived from (seed, index) so that
// sample k does not depend on how many samples were drawn before it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }
    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v = normal_vector(n);
        while (v.norm() < 1e-12) v = normal_vector(n);
        return v.normalized();
    }
    // Symmetric matrix with N(0, scale^2) entries (GOE-like).
    Eigen::MatrixXd symmetric(Eigen::Index n, double scale = 1.0) {
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = scale * normal();
        return 0.5 * (a + a.transpose());
    }
    Eigen::MatrixXd psd(Eigen::Index n, double scale = 1.0) {
        Eigen::MatrixXd g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal();
        return scale * g * g.transpose() / static_cast<double>(n);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::mt19937_64 engine_;
};

}  // namespace rvisc
