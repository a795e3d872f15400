#include "hjm/cli/properties.hpp"

#include <algorithm>
#include <cmath>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/sobolev.hpp"
#include "hjm/dynamics/diagnostics.hpp"
#include "hjm/dynamics/parallel.hpp"
#include "hjm/dynamics/simulate.hpp"
#include "hjm/malliavin/first_variation.hpp"
#include "hjm/malliavin/wiener.hpp"

namespace hjm::cli {

using nlohmann::json;
using dynamics::Matrix;
using dynamics::Vector;

namespace {

dynamics::SimulationConfig stored(const dynamics::TimeGrid& time, std::size_t paths, std::uint64_t seed) {
    dynamics::SimulationConfig c;
    c.time = time;
    c.paths = paths;
    c.seed = seed;
    c.store_states = true;
    c.store_increments = true;
    c.threads = 1;
    return c;
}

double f1v(const curvespace::MaturityGrid& g, const Vector& v) {
    return curvespace::f1v_norm(g, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double sigma_constant(const dynamics::VolatilityModel& model, std::span<const double> x0) {
    return dynamics::lipschitz_estimate(model, 0.0, dynamics::sample_states(*model.grid(), x0, 20, 4, 0.05));
}

}  // namespace

json to_json(const Check& c) { return json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}}; }

Check sobolev_constants(double v_power, double w_power, double tol) {
    Check out = named("sobolev_constants");
    const auto k = curvespace::weight_constants(curvespace::power_weight(v_power), curvespace::power_weight(w_power));
    const double a = v_power, q = w_power;
    out.detail["computed"] = {{"c_v", k.c_v}, {"c_w", k.c_w}, {"c_vw", k.c_vw}};
    if (a > 1.0 && q > 3.0 && q > a + 2.0) {
        const double c_v = 1.0 / (a - 1.0);
        const double c_w = 1.0 / (q - 1.0) + 2.0 / ((q - 1.0) * (q - 2.0) * (q - 3.0));
        const double c_vw = (1.0 / (q - a - 2.0) - 1.0 / (q - 1.0)) / (a + 1.0);
        const double err = std::max({std::abs(k.c_v - c_v), std::abs(k.c_w - c_w), std::abs(k.c_vw - c_vw)});
        out.detail["closed_form"] = {{"c_v", c_v}, {"c_w", c_w}, {"c_vw", c_vw}};
        out.detail["max_abs_error"] = err;
        out.detail["tolerance"] = tol;
        out.pass = err <= tol;
    } else {
        out.detail["closed_form"] = nullptr;
        out.pass = std::isfinite(k.c_v) && std::isfinite(k.c_w) && std::isfinite(k.c_vw);
    }
    return out;
}

Check martingale_and_freeze(const dynamics::VolatilityModel& model, std::span<const double> x0,
                            const dynamics::SimulationConfig& sim, std::size_t freeze_paths) {
    Check out = named("martingale_and_freeze");
    out.detail["model"] = model.kind();
    dynamics::SimulationConfig c = sim;
    c.store_states = false;
    c.store_increments = false;
    const auto& time = c.time;
    const std::size_t paths = c.paths;
    const auto b = dynamics::simulate(model, x0, c);
    const std::size_t n = b.nodes;
    double worst_z = 0.0;
    std::size_t worst_node = 0;
    bool martingale = true;
    json nodes = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = dynamics::strided(b.terminal, n, i, b.paths);
        const auto ms = dynamics::mean_se(col, c.antithetic);
        const double diff = std::abs(ms.mean - x0[i]);
        const bool ok = diff <= 3.0 * ms.se + 1e-15;
        martingale = martingale && ok;
        const double z = ms.se > 0.0 ? diff / ms.se : 0.0;
        if (z > worst_z) {
            worst_z = z;
            worst_node = i;
        }
        nodes.push_back({{"maturity", model.grid()->node(i)}, {"mean", ms.mean}, {"se", ms.se}, {"x0", x0[i]}});
    }

    const std::size_t fp = std::min(freeze_paths, paths);
    dynamics::SimulationConfig sc = c;
    sc.paths = fp + fp % 2;
    sc.store_states = true;
    const auto s = dynamics::simulate(model, x0, sc);
    bool frozen = true, consistent = true;
    std::size_t checked = 0;
    for (std::size_t p = 0; p < std::min(fp, sc.paths); ++p) {
        const auto term = b.terminal_state(p);
        consistent = consistent && std::equal(term.begin(), term.end(), s.terminal_state(p).begin());
        for (std::size_t i = 0; i < n; ++i) {
            const double mat = model.grid()->node(i);
            if (mat > time.horizon()) break;
            std::size_t li = 0;
            while (time.time(li) < mat - 1e-12) ++li;
            for (std::size_t l = li; l <= time.steps(); ++l) frozen = frozen && s.state(p, l)[i] == s.state(p, li)[i];
            ++checked;
        }
    }
    out.detail["paths"] = paths;
    out.detail["flagged"] = b.flagged_count;
    out.detail["worst_z"] = worst_z;
    out.detail["worst_maturity"] = model.grid()->node(worst_node);
    out.detail["martingale_pass"] = martingale;
    out.detail["freeze_pass"] = frozen;
    out.detail["freeze_checks"] = checked;
    out.detail["rerun_identical"] = consistent;
    out.detail["nodes"] = std::move(nodes);
    out.pass = martingale && frozen && consistent;
    return out;
}

Check reconstruction_refinement(std::size_t steps, std::size_t paths, std::uint64_t seed, double max_relative) {
    Check out = named("clark_ocone_reconstruction");
    malliavin::ExponentialMartingale x({1.0});
    const auto coarse = malliavin::reconstruct(x, dynamics::TimeGrid::uniform(1.0, steps), paths, seed,
                                               malliavin::IntegrandSource::exact);
    const auto fine = malliavin::reconstruct(x, dynamics::TimeGrid::uniform(1.0, 2 * steps), paths, seed,
                                             malliavin::IntegrandSource::exact);
    const double gain = coarse.relative_rms / fine.relative_rms;
    out.detail = {{"steps", steps},
                  {"paths", paths},
                  {"relative_rms", coarse.relative_rms},
                  {"relative_rms_halved", fine.relative_rms},
                  {"gain", gain},
                  {"max_relative", max_relative}};
    out.pass = coarse.relative_rms <= max_relative && gain >= 1.25 && gain <= 1.6;
    return out;
}

Check integration_by_parts(std::size_t paths) {
    Check out = named("integration_by_parts");
    const auto time = dynamics::TimeGrid::uniform(2.0, 40);
    auto unit = [](std::size_t, std::span<const double>, std::span<double> o) { o[0] = 1.0; };
    malliavin::AdaptedProcess wavy = [](std::size_t, std::span<const double> past, std::span<double> o) {
        double w0 = 0.0;
        for (std::size_t m = 0; m < past.size(); m += 2) w0 += past[m];
        o[0] = std::cos(w0);
        o[1] = 1.0;
    };
    malliavin::BrownianPower w(1, 0, 1), w2(1, 0, 2);
    malliavin::ExponentialMartingale em({0.5, 0.4});
    struct Case {
        const char* label;
        const malliavin::WienerFunctional* x;
        malliavin::AdaptedProcess beta;
        std::uint64_t seed;
    };
    const Case cases[] = {{"W_T, unit direction", &w, unit, 7},
                          {"W_T^2, unit direction", &w2, unit, 3},
                          {"exponential martingale, path-dependent direction", &em, wavy, 4}};
    out.pass = true;
    json rows = json::array();
    for (const auto& c : cases) {
        const auto r = malliavin::integration_by_parts_check(*c.x, c.beta, time, paths, c.seed);
        rows.push_back({{"pair", c.label},
                        {"lhs", r.lhs.mean},
                        {"rhs", r.rhs.mean},
                        {"diff", r.diff.mean},
                        {"diff_se", r.diff.se},
                        {"pass", r.pass}});
        out.pass = out.pass && r.pass;
    }
    out.detail = {{"paths", paths}, {"pairs", std::move(rows)}};
    return out;
}

Check picard_decay(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                   std::size_t steps, std::size_t paths, std::size_t iterations, std::uint64_t seed) {
    Check out = named("picard_decay");
    const auto& g = *model.grid();
    const auto time = dynamics::TimeGrid::uniform(horizon, steps);
    const auto b = dynamics::simulate(model, x0, stored(time, paths, seed));
    const auto n = static_cast<Eigen::Index>(g.size());
    Matrix dir(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) dir(i, 0) = std::cos(0.5 * static_cast<double>(i)) * x0[i];
    dir /= f1v(g, dir.col(0));
    std::vector<double> msd(iterations, 0.0);
    for (std::size_t p = 0; p < paths; ++p) {
        const auto pic = malliavin::picard_first_variation(model, malliavin::view(b, p), 0, steps, dir, iterations);
        for (std::size_t it = 0; it < iterations; ++it) {
            const double d = f1v(g, Vector(pic[it + 1].col(0) - pic[it].col(0)));
            msd[it] += d * d / static_cast<double>(paths);
        }
    }
    const double c = sigma_constant(model, x0);
    const double ct = c * c * horizon;
    out.pass = true;
    json ratios = json::array();
    for (std::size_t it = 1; it < iterations; ++it) {
        const double ratio = msd[it - 1] > 0.0 ? msd[it] / msd[it - 1] : 0.0;
        const double cap = static_cast<double>(it) > ct ? std::min(0.5, 1.5 * ct / static_cast<double>(it))
                                                        : 1.5 * ct / static_cast<double>(it);
        ratios.push_back({{"n", it}, {"ratio", ratio}, {"cap", cap}});
        out.pass = out.pass && ratio <= cap;
    }
    out.detail = {{"model", model.kind()},
                  {"c2_horizon", ct},
                  {"mean_square_differences", msd},
                  {"ratios", std::move(ratios)}};
    return out;
}

Check growth_bound(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                   std::size_t steps, std::size_t paths, std::uint64_t seed) {
    Check out = named("growth_bound");
    const auto& g = *model.grid();
    const std::size_t n = g.size();
    const auto b = dynamics::simulate(model, x0, stored(dynamics::TimeGrid::uniform(horizon, steps), paths, seed));
    std::vector<double> sq(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        Matrix dir(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i)
            dir(static_cast<Eigen::Index>(i), 0) =
                std::cos(0.37 * static_cast<double>((p + 1) * i) + static_cast<double>(p));
        dir /= f1v(g, dir.col(0));
        const Vector yx = malliavin::propagate_tangent(model, b.scheme, malliavin::view(b, p), 0, steps, dir).col(0);
        sq[p] = std::pow(f1v(g, yx), 2);
    }
    const auto ms = dynamics::mean_se(sq);
    const double c = sigma_constant(model, x0);
    const double rel = ms.mean > 0.0 ? ms.se / ms.mean : 0.0;
    const double bound = std::exp(c * c * horizon) * (1.0 + 3.0 * rel);
    out.detail = {{"model", model.kind()}, {"mean_square", ms.mean}, {"se", ms.se}, {"bound", bound}, {"c", c}};
    out.pass = ms.mean <= bound;
    return out;
}

Check tangent_vs_difference(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                            std::size_t steps, std::size_t paths, std::uint64_t seed, double tol) {
    Check out = named("first_variation_vs_difference");
    const auto& g = *model.grid();
    const std::size_t n = g.size();
    std::vector<double> h(n), up(x0.begin(), x0.end()), dn(x0.begin(), x0.end());
    const double eps = 1e-4;
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = x0[i] * std::cos(0.3 * static_cast<double>(i));
        up[i] += eps * h[i];
        dn[i] -= eps * h[i];
    }
    const auto time = dynamics::TimeGrid::uniform(horizon, steps);
    const auto base = dynamics::simulate(model, x0, stored(time, paths, seed));
    const auto bu = dynamics::simulate(model, up, stored(time, paths, seed));
    const auto bd = dynamics::simulate(model, dn, stored(time, paths, seed));
    const Matrix col = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(n));
    double worst = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        const Vector yh = malliavin::propagate_tangent(model, base.scheme, malliavin::view(base, p), 0, steps, col).col(0);
        Vector fd(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            fd[static_cast<Eigen::Index>(i)] = (bu.terminal_state(p)[i] - bd.terminal_state(p)[i]) / (2.0 * eps);
        const double scale = f1v(g, yh);
        worst = std::max(worst, scale > 0.0 ? f1v(g, Vector(yh - fd)) / scale : f1v(g, fd));
    }
    out.detail = {{"model", model.kind()}, {"worst_relative", worst}, {"tolerance", tol}, {"paths", paths}};
    out.pass = worst <= tol;
    return out;
}

Check derivative_divergence(double s_max, std::size_t intervals, std::size_t halvings, double t) {
    Check out = named("derivative_dual_norm_divergence");
    std::vector<double> norms;
    for (std::size_t k = 0; k <= halvings; ++k) {
        const auto g = curvespace::MaturityGrid::uniform(s_max, intervals << k);
        norms.push_back(curvespace::derivative_dual_norm(g, t));
    }
    out.pass = true;
    for (std::size_t k = 1; k < norms.size(); ++k) out.pass = out.pass && norms[k] > norms[k - 1];
    out.detail = {{"t", t}, {"intervals", intervals}, {"halvings", halvings}, {"dual_norms", norms}};
    return out;
}

Check model_diagnostics(const dynamics::VolatilityModel& model, std::span<const double> x0, std::uint64_t seed) {
    Check out = named("model_diagnostics");
    const std::vector<double> times{0.0, 1.0, 2.5, 5.0};
    const auto d = dynamics::diagnostics(model, x0, times, 10, seed);
    out.detail = {{"model", model.kind()},
                  {"lipschitz_estimate", d.lipschitz_est},
                  {"locality_pass", d.locality_pass},
                  {"locality_max_change", d.locality_max_change},
                  {"times", d.times},
                  {"min_singular_value", d.min_singular_value},
                  {"rank", d.rank}};
    out.pass = d.locality_pass && std::isfinite(d.lipschitz_est);
    return out;
}

}  // namespace hjm::cli
