#ifndef TQ_TYPES_HPP
#define TQ_TYPES_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tq {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative tolerance layers shared by all numerical routines.
/// dedup_tol (identification) sits well above residual_tol (verification);
/// margin_tol (genericity margins) sits above both.
struct ToleranceProfile {
    double residual_tol = 1e-10;
    double dedup_tol = 1e-7;
    double rank_tol = 1e-8;
    double margin_tol = 1e-6;

    void validate() const {
        if (residual_tol <= 0 || dedup_tol <= 0 || rank_tol <= 0 || margin_tol <= 0)
            throw std::invalid_argument("tolerances must be strictly positive");
        if (dedup_tol <= residual_tol)
            throw std::invalid_argument("dedup_tol must exceed residual_tol");
    }
};

/// xoshiro256** with a splitmix64 seeder.  Self-contained so that streams
/// are reproducible across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix(x);
    }

    /// Independent child stream; used to give each worker task its own seed.
    Rng child(std::uint64_t stream) const {
        std::uint64_t x = s_[0] ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        return Rng(x);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    Complex unit_phase() {
        const double th = uniform(0.0, 6.283185307179586476925286766559);
        return Complex(std::cos(th), std::sin(th));
    }

    /// Uniform modulus in [rmin, rmax], uniform phase.
    Complex annulus(double rmin, double rmax) { return uniform(rmin, rmax) * unit_phase(); }

private:
    static std::uint64_t splitmix(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t s_[4];
};

}  // namespace tq

#endif
