#include "attnflow/verify.hpp"

#include "attnflow/atlas.hpp"
#include "attnflow/experiment.hpp"
#include "attnflow/matrix_spec.hpp"
#include "attnflow/metrics.hpp"
#include "attnflow/parallel.hpp"
#include "attnflow/potential.hpp"
#include "attnflow/renyi.hpp"
#include "attnflow/spectral.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace attnflow
{
    namespace
    {
        template <typename... Args>
        std::string cat(const Args&... args)
        {
            std::ostringstream out;
            out.precision(6);
            (out << ... << args);
            return out.str();
        }

        class SuiteBuilder
        {
          public:
            SuiteBuilder(std::string name, int criterion, double budget)
                : start_(std::chrono::steady_clock::now())
            {
                report_.suite = std::move(name);
                report_.criterion = criterion;
                report_.budget_seconds = budget;
            }

            void check(std::string name, bool passed, std::string detail, bool informational = false)
            {
                report_.checks.push_back({std::move(name), passed, std::move(detail), informational});
            }

            SuiteReport finish()
            {
                report_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
                check("runtime", report_.seconds < report_.budget_seconds,
                      cat(report_.seconds, " s (budget ", report_.budget_seconds, " s)"));
                return report_;
            }

          private:
            std::chrono::steady_clock::time_point start_;
            SuiteReport report_;
        };

        double slope(const std::vector<double>& x, const std::vector<double>& y)
        {
            const double n = static_cast<double>(x.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                sx += x[i];
                sy += y[i];
                sxx += x[i] * x[i];
                sxy += x[i] * y[i];
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }

        // ---------------------------------------------------------------- 1

        SuiteReport oracle_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("oracle", 1, 60.0);
            constexpr int kCases = 50;
            constexpr std::array<int, 3> kDims{2, 3, 5};
            constexpr std::array<double, 3> kSteps{4e-3, 2e-3, 1e-3};

            std::mt19937_64 rng(20240611);
            std::uniform_real_distribution<double> entry(-1.0, 1.0);
            std::vector<MatrixXd> Vs;
            std::vector<VectorXd> x0s;
            for (int i = 0; i < kCases; ++i)
            {
                const int d = kDims[static_cast<std::size_t>(i) % kDims.size()];
                MatrixXd V(d, d);
                for (int r = 0; r < d; ++r)
                {
                    for (int c = 0; c < d; ++c)
                    {
                        V(r, c) = entry(rng);
                    }
                }
                Vs.push_back(V);
                x0s.push_back(sample_uniform_points(1000 + static_cast<std::uint64_t>(i), d, 1).col(0));
            }

            // err[i][k]: largest geodesic error over t in [0, 10] (every 0.1)
            std::vector<std::array<double, 3>> err(kCases);
            parallel_for(kCases, opt.jobs, [&](std::size_t i) {
                SystemParams p = SystemParams::identity(static_cast<int>(Vs[i].rows()), 1.0);
                p.V = Vs[i];
                const LinearFlow exact(Vs[i]);
                for (std::size_t k = 0; k < kSteps.size(); ++k)
                {
                    IntegratorConfig cfg;
                    cfg.dt = kSteps[k];
                    cfg.t_end = 10.0;
                    cfg.record_every = static_cast<int>(std::lround(0.1 / kSteps[k]));
                    const Trajectory tr = integrate(p, ParticleState::from_points(x0s[i]), cfg);
                    double worst = 0.0;
                    for (const auto& snap : tr.snapshots)
                    {
                        worst = std::max(worst, geodesic_distance(snap.points.col(0), exact(x0s[i], snap.time)));
                    }
                    err[i][k] = worst;
                }
            });

            std::array<double, 3> worst{};
            std::size_t worst_case = 0;
            for (std::size_t i = 0; i < err.size(); ++i)
            {
                for (std::size_t k = 0; k < 3; ++k)
                {
                    worst[k] = std::max(worst[k], err[i][k]);
                }
                if (err[i][2] >= err[worst_case][2])
                {
                    worst_case = i;
                }
            }
            s.check("rk4 dt=1e-3 vs closed form, 50 random V, d in {2,3,5}, t in [0,10]", worst[2] < 1e-6,
                    cat("max geodesic error ", worst[2], " (case ", worst_case, ", d = ", Vs[worst_case].rows(),
                        "), tolerance 1e-6"));

            std::vector<double> lx;
            std::vector<double> ly;
            for (std::size_t k = 0; k < 3; ++k)
            {
                lx.push_back(std::log(kSteps[k]));
                ly.push_back(std::log(worst[k]));
            }
            const double order = slope(lx, ly);
            s.check("rk4 observed order over dt in {4e-3, 2e-3, 1e-3}", order >= 3.8,
                    cat("order ", order, " from worst-case errors ", worst[0], ", ", worst[1], ", ", worst[2],
                        "; required >= 3.8"));
            return s.finish();
        }

        // ---------------------------------------------------------------- 2

        SuiteReport rates_suite(const VerifyOptions&)
        {
            SuiteBuilder s("rates", 2, 60.0);
            const VectorXd x0 = VectorXd::Ones(3).normalized();
            const MatrixXd e1 = VectorXd::Unit(3, 0);

            {
                SystemParams p = SystemParams::identity(3, 1.0);
                p.V = parse_matrix_spec("diag(2,1,0)", 3);
                IntegratorConfig cfg;
                cfg.dt = 1e-3;
                cfg.t_end = 8.0;
                cfg.record_every = 10;
                const Trajectory tr = integrate(p, ParticleState::from_points(x0), cfg);
                const RateFit fit = fit_convergence_rate(tr, e1, 2.0, 8.0);
                const bool ok = fit.type == RateType::Exponential && std::abs(fit.exponential_rate + 1.0) <= 0.1
                                && fit.exponential_r_squared > 0.999;
                s.check("V = diag(2,1,0): exponential convergence to span(e1), rate -1 +- 10%, r^2 > 0.999", ok,
                        cat("type ", to_string(fit.type), ", rate ", fit.exponential_rate, ", r^2 ",
                            fit.exponential_r_squared, " on t in [2, 8]"));
            }
            {
                SystemParams p = SystemParams::identity(3, 1.0);
                p.V = parse_matrix_spec("blockdiag(jordan(1,2), diag(0))", 3);
                const SpectralClassification cls = dominant_subspaces(p.V);
                const bool l_is_e1 = cls.L_basis.cols() == 1 && std::abs(cls.L_basis(0, 0)) > 1.0 - 1e-12;
                s.check("jordan(1,2)+diag(0): L = span(e1), jordan block 2", l_is_e1 && cls.max_jordan_block == 2,
                        cat("dim L = ", cls.L_basis.cols(), ", dim L' = ", cls.Lprime_basis.cols(),
                            ", max jordan block ", cls.max_jordan_block));

                IntegratorConfig cfg;
                cfg.dt = 1e-2;
                cfg.t_end = 500.0;
                cfg.record_every = 100;
                const Trajectory tr = integrate(p, ParticleState::from_points(x0), cfg);
                double reference = 0.0;
                std::vector<std::pair<double, double>> scaled;
                for (const auto& snap : tr.snapshots)
                {
                    if (snap.time >= 50.0 - 1e-9)
                    {
                        scaled.emplace_back(snap.time, distance_to_subspace(snap.points.col(0), e1) * snap.time);
                    }
                }
                reference = scaled.back().second;
                double worst = 0.0;
                for (const auto& [t, v] : scaled)
                {
                    worst = std::max(worst, std::abs(v / reference - 1.0));
                }
                s.check("jordan(1,2)+diag(0): dist(x(t), span(e1)) * t constant within 20% on [50, 500]",
                        worst <= 0.2,
                        cat("limit ", reference, ", largest relative deviation ", worst, " (tolerance 0.2)"));

                const RateFit fit = fit_convergence_rate(tr, e1, 50.0, 500.0);
                s.check("jordan(1,2)+diag(0): fit selects linear (1/t) convergence", fit.type == RateType::Linear,
                        cat("linear r^2 ", fit.linear_r_squared, ", exponential r^2 ", fit.exponential_r_squared,
                            ", coefficient ", fit.linear_coefficient));
            }
            return s.finish();
        }

        // ---------------------------------------------------------------- 3

        // collapse diagnostic vs x1(0) at t = 200 per seed; Q, K have
        // N(0, scale^2) entries
        std::vector<double> collapse_runs(double scale, int jobs)
        {
            constexpr int kSeeds = 20;
            std::vector<double> diag(kSeeds);
            parallel_for(kSeeds, jobs, [&](std::size_t i) {
                const std::uint64_t seed = i + 1;
                SystemParams p = SystemParams::identity(3, 2.0);
                p.Q = scale * random_gaussian_matrix(100 + seed, 3);
                p.K = scale * random_gaussian_matrix(200 + seed, 3);
                IntegratorConfig cfg;
                cfg.dt = 1e-2;
                cfg.t_end = 200.0;
                cfg.record_every = 1000;
                const Trajectory tr = integrate(p, ParticleState::from_points(sample_uniform_points(seed, 3, 8)), cfg,
                                                seed);
                diag[i] = collapse_diagnostic(tr.final(), tr.initial().points.col(0));
            });
            return diag;
        }

        std::pair<int, std::string> count_collapsed(const std::vector<double>& diag)
        {
            int collapsed = 0;
            std::string rest;
            for (std::size_t i = 0; i < diag.size(); ++i)
            {
                if (diag[i] < 1e-2)
                {
                    ++collapsed;
                }
                else
                {
                    rest += cat(" seed ", i + 1, ": ", diag[i], ";");
                }
            }
            return {collapsed, rest};
        }

        SuiteReport collapse_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("collapse", 3, 120.0);
            const auto [collapsed, rest] = count_collapsed(collapse_runs(1.0, opt.jobs));
            s.check("V = I, d = 3, n = 8, beta = 2, Gaussian Q, K: max dist to x1(0) < 1e-2 at t = 200 in >= 19/20 seeds",
                    collapsed >= 19, cat(collapsed, "/20 seeds collapsed", rest.empty() ? "" : ";", rest));
            const auto [scaled, scaled_rest] = count_collapsed(collapse_runs(1.0 / std::sqrt(3.0), opt.jobs));
            s.check("same with Q, K scaled by d^-1/2", scaled >= 19,
                    cat(scaled, "/20 seeds collapsed", scaled_rest.empty() ? "" : ";", scaled_rest), true);
            return s.finish();
        }

        // ---------------------------------------------------------------- 4

        SuiteReport potential_suite(const VerifyOptions&)
        {
            SuiteBuilder s("potential", 4, 30.0);
            using L = long double;
            constexpr int kGrid = 10000;
            const std::array<double, 4> betas{1.0, 4.0, 16.0, 64.0};

            int mono_fail = 0;
            int bound_fail = 0;
            int fd_fail = 0;
            std::string mono_detail;
            std::string bound_detail;
            for (const double beta_d : betas)
            {
                const L beta = beta_d;
                const L tau = critical_angle<L>(beta);
                const L pi = std::numbers::pi_v<L>;
                for (int i = 0; i + 1 < kGrid; ++i)
                {
                    const L a = tau * L(i) / L(kGrid - 1);
                    const L b = tau * L(i + 1) / L(kGrid - 1);
                    if (!(interaction(b, beta) > interaction(a, beta)))
                    {
                        if (mono_fail++ == 0)
                        {
                            mono_detail = cat(" first: beta ", beta_d, " increasing part at x = ", double(a));
                        }
                    }
                    const L c = tau + (pi - tau) * L(i) / L(kGrid - 1);
                    const L d = tau + (pi - tau) * L(i + 1) / L(kGrid - 1);
                    if (!(interaction(d, beta) < interaction(c, beta)))
                    {
                        if (mono_fail++ == 0)
                        {
                            mono_detail = cat(" first: beta ", beta_d, " decreasing part at x = ", double(c));
                        }
                    }
                }
                const L near_limit = 1.0L / std::sqrt(beta + 0.5L);
                for (int i = 1; i <= kGrid; ++i)
                {
                    const L x = pi * L(i) / L(kGrid + 1);
                    const L h = interaction(x, beta);
                    const L g = interaction_derivative(x, beta);
                    const L lower = std::exp(-beta * x * x / 2) * (x - x * x * x / 6);
                    const L upper = std::exp(-beta * x * x / 2 + beta * x * x * x * x / 24) * x;
                    const L g_lower = -std::exp(-beta * x * x / 2 + beta * x * x * x * x / 24) * beta * x * x;
                    const L y = near_limit * L(i) / L(kGrid + 1);
                    const L g_near = interaction_derivative(y, beta);
                    const L g_near_lower = std::exp(-beta * y * y / 2) * (1 - y * y / 2 - beta * y * y);
                    const bool ok = lower < h && h < upper && g > g_lower && g_near > g_near_lower;
                    if (!ok && bound_fail++ == 0)
                    {
                        bound_detail = cat(" first: beta ", beta_d, " at x = ", double(x));
                    }

                    const double xd = static_cast<double>(x);
                    const double fd = (interaction(xd + 1e-6, beta_d) - interaction(xd - 1e-6, beta_d)) / 2e-6;
                    if (std::abs(fd - interaction_derivative(xd, beta_d)) > 1e-6)
                    {
                        ++fd_fail;
                    }
                }
            }
            s.check("interaction strictly increasing on [0, tau*] and decreasing on [tau*, pi], 1e4-point grids, "
                    "beta in {1,4,16,64}",
                    mono_fail == 0, cat(mono_fail, " violations", mono_detail));
            s.check("interaction bounds: exp(-bx^2/2)(x - x^3/6) < h < exp(-bx^2/2 + bx^4/24) x, "
                    "g > -exp(-bx^2/2 + bx^4/24) b x^2 on (0, pi), g > exp(-bx^2/2)(1 - x^2/2 - bx^2) below "
                    "(b + 1/2)^-1/2",
                    bound_fail == 0, cat(bound_fail, " violations", bound_detail));
            s.check("derivative matches central difference of interaction (step 1e-6) to 1e-6", fd_fail == 0,
                    cat(fd_fail, " grid points off"));

            double worst_cos = 0.0;
            for (const double beta : {1.0, 10.0, 64.0})
            {
                const double expected = (-1.0 + std::sqrt(4.0 * beta * beta + 1.0)) / (2.0 * beta);
                worst_cos = std::max(worst_cos, std::abs(std::cos(critical_angle(beta)) - expected));
            }
            s.check("cos(tau*) closed form, beta in {1, 10, 64}", worst_cos <= 1e-12,
                    cat("max deviation ", worst_cos));

            int bracket_fail = 0;
            for (int i = 0; i <= 40; ++i)
            {
                const double beta = std::pow(1024.0, i / 40.0);
                const double tau = critical_angle(beta);
                if (!(1.0 / std::sqrt(beta + 0.5) < tau && tau < 1.0 / std::sqrt(beta)))
                {
                    ++bracket_fail;
                }
            }
            s.check("(beta + 1/2)^-1/2 < tau* < beta^-1/2 on a log grid of [1, 1024]", bracket_fail == 0,
                    cat(bracket_fail, " of 41 grid points violate"));

            double worst_root = 0.0;
            for (const double beta : {1.0, 4.0, 10.0, 16.0, 64.0})
            {
                double a = 0.0;
                double b = std::numbers::pi / 2.0;
                for (int it = 0; it < 200 && b - a > 1e-15; ++it)
                {
                    const double m = 0.5 * (a + b);
                    (interaction_derivative(m, beta) > 0.0 ? a : b) = m;
                }
                worst_root = std::max(worst_root, std::abs(0.5 * (a + b) - critical_angle(beta)));
            }
            s.check("tau* closed form vs bisection on the derivative", worst_root < 1e-10,
                    cat("max difference ", worst_root));

            int suff_fail = 0;
            int suff_total = 0;
            std::string suff_detail;
            for (const double eps : {0.01, 0.05, 0.1})
            {
                for (const double c : {5.7, 6.5, 8.0})
                {
                    if (c < 5.5 + 2.0 * eps)
                    {
                        continue;
                    }
                    const double a = c - 1.0 - 2.0 * eps;
                    const double beta_min = a * a / 2.0;
                    const double n_max = std::exp(3.0 * a * a / 8.0) * eps / (c - 1.0);
                    for (const double beta : {beta_min, 2.0 * beta_min, 10.0 * beta_min})
                    {
                        for (const double N : {0.5 * n_max, n_max * (1.0 - 1e-9)})
                        {
                            ++suff_total;
                            const RegimeCheck r = check_regime({N, c, eps, beta});
                            if (!r.ok && suff_fail++ == 0)
                            {
                                suff_detail = " first: " + r.diagnostic;
                            }
                        }
                    }
                }
            }
            s.check("regime sufficiency: c >= 5.5 + 2eps, beta >= (c-1-2eps)^2/2, N < e^{3(c-1-2eps)^2/8} eps/(c-1) "
                    "implies check_regime",
                    suff_fail == 0, cat(suff_total - suff_fail, "/", suff_total, " grid points pass", suff_detail));

            const RegimeCheck remark = check_regime({700.0, 6.5, 0.1, 14.0});
            s.check("eps = 0.1, c = 6.5, beta = 14, N = 700 satisfies both separation inequalities", remark.ok,
                    remark.diagnostic);

            long lo = 1;
            long hi = 2;
            while (check_regime({static_cast<double>(hi), 6.5, 0.1, 14.0}).ok && hi < (1L << 40))
            {
                lo = hi;
                hi *= 2;
            }
            while (hi - lo > 1)
            {
                const long mid = lo + (hi - lo) / 2;
                (check_regime({static_cast<double>(mid), 6.5, 0.1, 14.0}).ok ? lo : hi) = mid;
            }
            s.check("largest N passing at eps = 0.1, c = 6.5, beta = 14 is >= 700", lo >= 700,
                    cat("largest N = ", lo));

            const RegimeCheck narrow = check_regime({10.0, 2.0, 0.1, 14.0});
            s.check("c = 2 (c <= 2 + 2eps) is rejected with a diagnostic", !narrow.ok && !narrow.separation_ok,
                    narrow.diagnostic);
            return s.finish();
        }

        // ---------------------------------------------------------------- 5

        SuiteReport meta_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("meta", 5, 600.0);
            constexpr int kSeeds = 10;
            constexpr int n = 200;
            constexpr double beta = 64.0;
            constexpr double c = 4.0;
            constexpr double eps = 0.5;
            const double delta = 4.0 / std::sqrt(beta);
            const SystemParams p = SystemParams::identity(2, beta, DynamicsKind::Causal2d);

            std::vector<MetastabilityResult> results(kSeeds);
            std::vector<std::size_t> strong(kSeeds);
            parallel_for(kSeeds, opt.jobs, [&](std::size_t i) {
                const std::uint64_t seed = i + 1;
                const ParticleState init = ParticleState::from_angles(angles_of(sample_uniform_points(seed, 2, n)));
                RenyiReport report = renyi_report(init.points, delta, Metric::Geodesic);
                strong[i] = report.strong_indices.size();

                // horizons of the centers that meet the separation hypothesis
                Trajectory probe;
                probe.params = p;
                probe.snapshots = {init};
                double horizon = 0.0;
                for (const auto& cd : verify_metastability(probe, report, c, eps, beta).centers)
                {
                    if (cd.checked)
                    {
                        horizon = std::max(horizon, cd.horizon);
                    }
                }
                IntegratorConfig cfg;
                cfg.dt = 0.1;
                cfg.t_end = std::max(horizon, 1.0);
                cfg.record_every = 2;
                const Trajectory tr = integrate(p, init, cfg, seed);
                results[i] = verify_metastability(tr, report, c, eps, beta);
            });

            int checked = 0;
            int violations = 0;
            int partial = 0;
            std::size_t total_strong = 0;
            double largest = 0.0;
            std::string detail;
            for (int i = 0; i < kSeeds; ++i)
            {
                const auto& r = results[static_cast<std::size_t>(i)];
                total_strong += strong[static_cast<std::size_t>(i)];
                for (const auto& cd : r.centers)
                {
                    if (!cd.checked)
                    {
                        continue;
                    }
                    ++checked;
                    partial += cd.partial ? 1 : 0;
                    largest = std::max(largest, cd.max_displacement);
                    if (!cd.passed)
                    {
                        ++violations;
                        detail += cat(" seed ", i + 1, " token ", cd.index, ": ", cd.diagnostic, ";");
                    }
                }
            }
            s.check("strong Renyi centers meeting the separation hypothesis move <= eps c beta^-1/2 = 0.25 over "
                    "[0, T_j] (n = 200, beta = 64, 10 seeds)",
                    violations == 0 && partial == 0 && checked > 0,
                    cat(checked, " centers checked of ", total_strong, " strong centers, ", violations,
                        " violations, ", partial, " partial, largest displacement ", largest, detail));
            return s.finish();
        }

        // ---------------------------------------------------------------- 6

        SuiteReport frozen_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("frozen", 6, 300.0);
            constexpr int kSeeds = 20;
            constexpr int n = 20;
            constexpr double beta = 14.0;
            constexpr double c = 6.5;
            constexpr double eps = 0.1;
            const double b = 1.0 / std::sqrt(beta);
            SystemParams p = SystemParams::identity(2, beta, DynamicsKind::FrozenCenters);
            for (int j = 0; j < 3; ++j)
            {
                p.frozen.push_back({2.0 * std::numbers::pi * j / 3.0, 1.0});
            }

            double min_sep = std::numbers::pi;
            for (std::size_t i = 0; i < p.frozen.size(); ++i)
            {
                for (std::size_t j = i + 1; j < p.frozen.size(); ++j)
                {
                    min_sep = std::min(min_sep,
                                       std::abs(std::remainder(p.frozen[i].angle - p.frozen[j].angle, 2.0 * std::numbers::pi)));
                }
            }
            s.check("frozen centers pairwise farther apart than c beta^-1/2", min_sep > c * b,
                    cat("min separation ", min_sep, " vs ", c * b));
            const RegimeCheck regime = check_regime({n + 3.0, c, eps, beta});
            s.check("regime check for N = 23", regime.ok, regime.diagnostic);

            struct Outcome
            {
                bool stopped = false;
                double t = 0.0;
                double worst = 0.0;
            };
            std::vector<Outcome> outcomes(kSeeds);
            parallel_for(kSeeds, opt.jobs, [&](std::size_t i) {
                const std::uint64_t seed = i + 1;
                IntegratorConfig cfg;
                cfg.dt = 0.05;
                cfg.t_end = 1e5;
                cfg.record_every = 20;
                const ParticleState init = ParticleState::from_angles(angles_of(sample_uniform_points(seed, 2, n)));
                const Trajectory tr = integrate_until(p, init, cfg, velocity_below(p, 1e-10), seed);
                Outcome o;
                o.stopped = tr.termination == Termination::StopPredicate;
                o.t = tr.final().time;
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    double best = std::numbers::pi;
                    for (const auto& f : p.frozen)
                    {
                        best = std::min(best, std::abs(std::remainder(tr.final().angles(k) - f.angle,
                                                                      2.0 * std::numbers::pi)));
                    }
                    o.worst = std::max(o.worst, best);
                }
                outcomes[i] = o;
            });
            int stopped = 0;
            int captured = 0;
            double worst = 0.0;
            double latest = 0.0;
            for (const auto& o : outcomes)
            {
                stopped += o.stopped ? 1 : 0;
                captured += (o.stopped && o.worst <= eps * b) ? 1 : 0;
                worst = std::max(worst, o.worst);
                latest = std::max(latest, o.t);
            }
            s.check("velocity sup-norm drops below 1e-10 before t = 1e5", stopped == kSeeds,
                    cat(stopped, "/20 seeds stopped, latest stop t = ", latest));
            s.check("every terminal angle within eps beta^-1/2 of a frozen center in 20/20 seeds", captured == kSeeds,
                    cat(captured, "/20 seeds, largest distance ", worst, " vs ", eps * b));
            return s.finish();
        }

        // ---------------------------------------------------------------- 7

        double mean_count(int trials, std::uint64_t seed0, int d, int n, double delta, bool strong, int jobs)
        {
            std::vector<double> counts(static_cast<std::size_t>(trials));
            parallel_for(counts.size(), jobs, [&](std::size_t i) {
                const MatrixXd pts = sample_uniform_points(seed0 + i, d, n);
                counts[i] = static_cast<double>(strong ? strong_renyi_centers(pts, delta).size()
                                                       : renyi_centers(pts, delta).size());
            });
            double sum = 0.0;
            for (const double v : counts)
            {
                sum += v;
            }
            return sum / static_cast<double>(trials);
        }

        SuiteReport renyi_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("renyi", 7, 300.0);
            constexpr int kTrials = 100;

            const double delta2 = std::numbers::pi / 32.0;
            const double mean2 = mean_count(kTrials, 1, 2, 100000, delta2, true, opt.jobs);
            const double target2 = std::numbers::pi / delta2;
            s.check("d = 2, delta = pi/32, n = 1e5: mean strong count within 5% of pi/delta = 32",
                    std::abs(mean2 / target2 - 1.0) <= 0.05, cat("mean ", mean2, " over 100 trials"));

            const double mean3 = mean_count(kTrials, 1001, 3, 100000, 0.2, true, opt.jobs);
            const double stated3 = 1.0 / (3.0 * std::pow(std::sin(0.1), 2));
            const double cap3 = expected_strong_count(3, 0.2);
            s.check("d = 3, delta = 0.2, n = 1e5: mean strong count within 5% of 1/(3 sin^2(0.1))",
                    std::abs(mean3 / stated3 - 1.0) <= 0.05,
                    cat("mean ", mean3, " over 100 trials vs ", stated3));
            s.check("d = 3, delta = 0.2: mean strong count within 5% of the inverse cap measure 1/sin^2(0.1)",
                    std::abs(mean3 / cap3 - 1.0) <= 0.05, cat("mean ", mean3, " vs ", cap3), true);

            const double delta_r = 2.0 * std::numbers::pi / 256.0;
            const double mean_r = mean_count(kTrials, 2001, 2, 1000000, delta_r, false, opt.jobs);
            const double target_r = 0.75 * 2.0 * std::numbers::pi / delta_r;
            s.check("d = 2, delta = 2pi/256, n = 1e6: mean Renyi count within 10% of 0.75 * 2pi/delta = 192",
                    std::abs(mean_r / target_r - 1.0) <= 0.10, cat("mean ", mean_r, " over 100 trials"));
            return s.finish();
        }

        // ---------------------------------------------------------------- 8

        SuiteReport atlas_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("atlas", 8, 900.0);
            constexpr int kSeeds = 5;
            std::vector<Trajectory> runs(kAtlasCases.size() * kSeeds);
            parallel_for(runs.size(), opt.jobs, [&](std::size_t i) {
                const std::uint64_t seed = i % kSeeds + 1;
                runs[i] = run_atlas_case(kAtlasCases[i / kSeeds], seed, 20000);
            });
            for (std::size_t c = 0; c < kAtlasCases.size(); ++c)
            {
                const AtlasCase& ac = kAtlasCases[c];
                const SpectralClassification cls = classify_value_matrix(parse_matrix_spec(ac.V, 3));
                int passing = 0;
                std::string detail;
                for (int k = 0; k < kSeeds; ++k)
                {
                    const Trajectory& tr = runs[c * kSeeds + static_cast<std::size_t>(k)];
                    const AtlasObservation obs = observe_final_configuration(cls, tr.initial(), tr.final());
                    passing += obs.matches ? 1 : 0;
                    detail += cat(" seed ", k + 1, (obs.matches ? " ok: " : " FAIL: "), obs.summary, ";");
                }
                const bool row_ok = cls.predicted_row == ac.caption_row;
                s.check(cat("V = ", ac.V, ": final state matches predicted ", to_string(cls.predicted_row), " (",
                            status_of(cls.predicted_row), ") in all 5 seeds at T = 5000"),
                        row_ok && passing == kSeeds,
                        cat("caption row ", to_string(ac.caption_row), (row_ok ? " matches" : " DIFFERS"), "; ",
                            passing, "/5 seeds match;", detail));
            }
            return s.finish();
        }

        // ---------------------------------------------------------------- 9

        SuiteReport consumption_suite(const VerifyOptions& opt)
        {
            SuiteBuilder s("consumption", 9, 900.0);
            ExperimentConfig cfg;
            cfg.name = "consumption";
            cfg.n = 200;
            cfg.d = 2;
            cfg.beta = 64.0;
            cfg.kind = DynamicsKind::Causal2d;
            for (std::uint64_t seed = 1; seed <= 200; ++seed)
            {
                cfg.seeds.push_back(seed);
            }
            cfg.analyses = {Analysis::Renyi};
            cfg.delta = 4.0 / std::sqrt(cfg.beta);
            cfg.integrator.dt = 0.1;
            cfg.integrator.t_end = 100.0;
            cfg.integrator.record_every = 10;
            RunOptions run;
            run.jobs = opt.jobs;
            run.write_files = false;
            const ExperimentResult result = run_experiment(cfg, run);

            long per_trial_violations = 0;
            for (const auto& o : result.seeds)
            {
                const Series& r = o.series.at("consumed_renyi");
                const Series& st = o.series.at("consumed_strong");
                for (std::size_t i = 0; i < r.size(); ++i)
                {
                    per_trial_violations += r[i].second < st[i].second ? 1 : 0;
                }
            }
            s.check("every trial: Renyi-center fraction >= strong-center fraction at every snapshot",
                    per_trial_violations == 0, cat(per_trial_violations, " violations over 200 trials"));

            const json& agg = result.aggregate.at("series");
            const auto t = agg.at("consumed_renyi").at("t").get<std::vector<double>>();
            const auto renyi = agg.at("consumed_renyi").at("mean").get<std::vector<double>>();
            const auto strong = agg.at("consumed_strong").at("mean").get<std::vector<double>>();
            int below = 0;
            for (std::size_t i = 0; i < t.size(); ++i)
            {
                below += renyi[i] < strong[i] ? 1 : 0;
            }
            s.check("mean Renyi curve >= mean strong curve at every snapshot", below == 0,
                    cat(below, " snapshots violate; final means ", renyi.back(), " vs ", strong.back()));

            for (const char* name : {"consumed_renyi", "consumed_strong"})
            {
                const auto mean = agg.at(name).at("mean").get<std::vector<double>>();
                const auto q10 = agg.at(name).at("q10").get<std::vector<double>>();
                const auto q90 = agg.at(name).at("q90").get<std::vector<double>>();
                double running = -1.0;
                double worst_excess = -std::numeric_limits<double>::infinity();
                double at = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i)
                {
                    if (t[i] < 10.0 - 1e-9)
                    {
                        continue;
                    }
                    running = std::max(running, mean[i]);
                    const double excess = (running - mean[i]) - (q90[i] - q10[i]);
                    if (excess > worst_excess)
                    {
                        worst_excess = excess;
                        at = t[i];
                    }
                }
                s.check(cat(name, ": mean non-decreasing after t = 10 within the 0.1-0.9 quantile band"),
                        worst_excess <= 0.0,
                        cat("largest drop minus band width ", worst_excess, " at t = ", at, "; curve ",
                            mean.front(), " -> ", mean.back()));
            }
            return s.finish();
        }

        using SuiteFn = SuiteReport (*)(const VerifyOptions&);

        const std::vector<std::pair<std::string, SuiteFn>>& registry()
        {
            static const std::vector<std::pair<std::string, SuiteFn>> suites{
                {"oracle", oracle_suite},     {"rates", rates_suite},   {"collapse", collapse_suite},
                {"potential", potential_suite}, {"meta", meta_suite},   {"frozen", frozen_suite},
                {"renyi", renyi_suite},       {"atlas", atlas_suite},   {"consumption", consumption_suite}};
            return suites;
        }
    }

    bool SuiteReport::passed() const
    {
        return first_failure() == nullptr;
    }

    const Check* SuiteReport::first_failure() const
    {
        for (const auto& c : checks)
        {
            if (!c.passed && !c.informational)
            {
                return &c;
            }
        }
        return nullptr;
    }

    json SuiteReport::to_json() const
    {
        json list = json::array();
        for (const auto& c : checks)
        {
            list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail},
                            {"informational", c.informational}});
        }
        return {{"suite", suite},
                {"criterion", criterion},
                {"passed", passed()},
                {"seconds", seconds},
                {"budget_seconds", budget_seconds},
                {"checks", list}};
    }

    const std::vector<std::string>& suite_names()
    {
        static const std::vector<std::string> names = [] {
            std::vector<std::string> out;
            for (const auto& [name, _] : registry())
            {
                out.push_back(name);
            }
            return out;
        }();
        return names;
    }

    bool is_suite(const std::string& name)
    {
        const auto& names = suite_names();
        return std::find(names.begin(), names.end(), name) != names.end();
    }

    SuiteReport run_suite(const std::string& name, const VerifyOptions& options)
    {
        for (const auto& [suite, fn] : registry())
        {
            if (suite == name)
            {
                return fn(options);
            }
        }
        throw std::invalid_argument("unknown verification suite '" + name + "'");
    }
}
