#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hjm/dynamics/volatility.hpp"

namespace hjm::dynamics {

/// Random positive curves x0 * exp(eps), eps a smooth random combination of
/// low cosine modes with amplitude about `scale`.
std::vector<std::vector<double>> sample_states(const curvespace::MaturityGrid& grid, std::span<const double> x0,
                                               std::size_t count, std::uint64_t seed, double scale = 0.05);

/// Hilbert-Schmidt norm of a nodes x factors operator into F1v:
/// sqrt(sum_k |column k|^2_F1v).
double hs_norm_f1v(const curvespace::MaturityGrid& grid, const Matrix& a);
/// Same into F2w.
double hs_norm_f2w(const curvespace::MaturityGrid& grid, const Matrix& a);

/// max over pairs of |sigma(t,x) - sigma(t,y)|_HS / |x - y|_F1v.
double lipschitz_estimate(const VolatilityModel& model, double t, const std::vector<std::vector<double>>& states);

struct LocalityReport {
    bool pass = true;
    double max_change = 0.0;  // largest change of a row sigma* delta_s
};

/// For each live node s, perturbs x off [t, s] and measures the change of the
/// row sigma(t, x)* delta_s. Passes when every change is below tol.
LocalityReport locality_check(const VolatilityModel& model, double t, const std::vector<std::vector<double>>& states,
                              std::uint64_t seed, double tol = 1e-12);

struct Spectrum {
    double min_singular = 0.0;
    double max_singular = 0.0;
    std::size_t rank = 0;
    double condition = 0.0;
};

/// Singular values of a dense matrix; rank counts values above
/// rel_tol * largest.
Spectrum spectrum(const Matrix& a, double rel_tol = 1e-10);

/// Rows sigma(t, x)* delta_{T_i} for the given maturities (d x factors).
Matrix rows_at(const VolatilityModel& model, double t, std::span<const double> x, std::span<const double> maturities);

/// Spectrum of sigma(t, x) restricted to nodes s_i > t.
Spectrum restricted_spectrum(const VolatilityModel& model, double t, std::span<const double> x);

struct Diagnostics {
    double lipschitz_est = 0.0;
    bool locality_pass = true;
    double locality_max_change = 0.0;
    std::vector<double> times;
    std::vector<double> min_singular_value;  // min over sampled states, per time
    std::vector<std::size_t> rank;           // min over sampled states, per time
};

/// Structural report on `pairs` random states around x0 at each of the times.
Diagnostics diagnostics(const VolatilityModel& model, std::span<const double> x0, std::span<const double> times,
                        std::size_t pairs, std::uint64_t seed);

/// Pathwise integrand of the integrability condition on the discounted curve:
/// |x'(t)| |x|_F2w / x(t)^2 + (1 + 1 / x(t)^2) |sigma|_HS(F2w)^2.
double integrability_integrand(const VolatilityModel& model, double t, std::span<const double> x);

}  // namespace hjm::dynamics
