#include "medsurv/gcomp.hpp"
#include "medsurv/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace medsurv {

void GCompConfig::validate() const {
    if (c_star < 1) throw ConfigError("gcomp: c_star must be >= 1");
    if (grid.ages.empty()) throw ConfigError("gcomp: empty age grid");
    for (std::size_t k = 1; k < grid.ages.size(); ++k)
        if (grid.ages[k] <= grid.ages[k - 1])
            throw ConfigError("gcomp: grid ages must be strictly increasing");
    if (target_age < grid.ages.back())
        throw ConfigError("gcomp: target age precedes the last grid age");
    if (z.values.size() != grid.ages.size() || z_star.values.size() != grid.ages.size())
        throw ConfigError("gcomp: regime length must equal the grid length");
    for (int v : z.values)
        if (v != 0 && v != 1) throw ConfigError("gcomp: regimes must be binary");
    for (int v : z_star.values)
        if (v != 0 && v != 1) throw ConfigError("gcomp: regimes must be binary");
}

double survival_under_regimes(const PosteriorState &state, const ModelContext &ctx,
                              const GCompConfig &config, const Regime &z1, const Regime &z2,
                              std::uint64_t seed, std::uint64_t draw_index,
                              std::uint64_t pair_key, std::size_t *survivors_out) {
    const auto &ages = config.grid.ages;
    const std::size_t K = ages.size();
    const bool same_regime = z1 == z2;
    const auto &re = state.random_effects;

    // Basis rows at the grid ages are path-independent.
    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(K);
    for (double a : ages) rows.push_back(ctx.basis.row(a));

    double sum_pa = 0.0;
    double weight_total = 0.0;
    std::size_t survivors = 0;

    for (std::size_t c = 0; c < config.c_star; ++c) {
        // Baseline covariates and random effects are shared across the three
        // regime pairs of one draw (Algorithm-1 steps 2a-2b), so they key on
        // the sample index only.
        auto rng_shared = substream(seed, draw_index, c, 0);
        std::vector<double> ell0 = draw_baseline(state, ctx, rng_shared);
        double b_m = draw_normal(rng_shared, 0.0, std::sqrt(re.var_m));
        double b_l = draw_normal(rng_shared, 0.0, std::sqrt(re.var_l));
        double b_z = draw_normal(rng_shared, 0.0, std::sqrt(re.var_z));

        auto rng_path = substream(seed, draw_index, c, pair_key);

        WeightAccumulator acc1(state, ctx, ell0, b_m, b_l, b_z);
        WeightAccumulator acc2 = acc1; // z2-regime weights for mediator draws

        bool alive = true;
        double path_weight = 1.0;
        for (std::size_t k = 0; k < K && alive; ++k) {
            double p_k = acc1.mixture_survival(ages[k]);
            if (config.multiply_through_survival) {
                path_weight *= p_k;
            } else {
                if (!draw_bernoulli(rng_path, p_k)) {
                    alive = false;
                    break;
                }
            }
            acc1.add_exposure(rows[k], z1.values[k]);
            if (!same_regime) acc2.add_exposure(rows[k], z2.values[k]);

            double l_k = acc1.draw_confounder(rows[k], rng_path);
            acc1.add_confounder(rows[k], l_k);
            if (!same_regime) acc2.add_confounder(rows[k], l_k);

            double m_k = (same_regime ? acc1 : acc2).draw_mediator(rows[k], rng_path);
            acc1.add_mediator(rows[k], m_k);
            if (!same_regime) acc2.add_mediator(rows[k], m_k);
        }
        if (!alive) continue;

        double p_a = acc1.mixture_survival(config.target_age);
        if (config.multiply_through_survival) {
            sum_pa += path_weight * p_a;
            weight_total += path_weight;
        } else {
            sum_pa += p_a;
            ++survivors;
        }
    }

    if (config.multiply_through_survival) {
        if (survivors_out) *survivors_out = config.c_star;
        if (weight_total <= 0.0)
            throw NumericalError("no survivors at grid end (all path weights vanished)");
        return sum_pa / weight_total;
    }
    if (survivors_out) *survivors_out = survivors;
    if (survivors == 0) throw NumericalError("no survivors at grid end");
    return sum_pa / static_cast<double>(survivors);
}

EffectSummary summarize_draws(std::vector<double> draws) {
    EffectSummary s;
    if (draws.empty()) return s;
    double sum = 0.0;
    for (double v : draws) sum += v;
    s.mean = sum / static_cast<double>(draws.size());
    std::sort(draws.begin(), draws.end());
    auto quantile = [&](double p) {
        double h = (static_cast<double>(draws.size()) - 1.0) * p;
        auto lo = static_cast<std::size_t>(std::floor(h));
        auto hi = std::min(lo + 1, draws.size() - 1);
        double frac = h - std::floor(h);
        return draws[lo] * (1.0 - frac) + draws[hi] * frac;
    };
    s.ci_low = quantile(0.025);
    s.ci_high = quantile(0.975);
    return s;
}

EffectEstimate estimate_effects(const DrawStore &draws, const GCompConfig &config,
                                std::uint64_t seed, std::size_t threads) {
    config.validate();
    if (draws.draws.empty()) throw DataError("estimate_effects: empty draw store");
    const std::size_t Q = draws.draws.size();

    EffectEstimate est;
    est.target_age = config.target_age;
    est.c_star = config.c_star;
    est.s_zz.resize(Q);
    est.s_zzstar.resize(Q);
    est.s_zstarzstar.resize(Q);
    est.ide.resize(Q);
    est.iie.resize(Q);
    est.te.resize(Q);

    // Regime pairs of Algorithm-1 step 2, deduplicated by content so that
    // identical pairs share one computation (z = z* then yields exact zeros).
    struct Pair {
        const Regime *z1;
        const Regime *z2;
        std::uint64_t key;
    };
    const Pair roles[3] = {{&config.z, &config.z_star, 1},   // S_{z, z*}
                           {&config.z_star, &config.z_star, 2}, // S_{z*, z*}
                           {&config.z, &config.z, 3}};          // S_{z, z}
    std::array<std::size_t, 3> canonical{0, 1, 2};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < a; ++b)
            if (*roles[a].z1 == *roles[b].z1 && *roles[a].z2 == *roles[b].z2) {
                canonical[a] = b;
                break;
            }

    std::vector<std::size_t> survivor_min(Q, config.c_star);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(Q);

    auto worker = [&]() {
        for (;;) {
            std::size_t q = next.fetch_add(1);
            if (q >= Q) return;
            try {
                double values[3];
                for (std::size_t role = 0; role < 3; ++role) {
                    if (canonical[role] != role) {
                        values[role] = values[canonical[role]];
                        continue;
                    }
                    std::size_t surv = 0;
                    values[role] = survival_under_regimes(
                        draws.draws[q], draws.context, config, *roles[role].z1, *roles[role].z2,
                        seed, q, roles[role].key, &surv);
                    survivor_min[q] = std::min(survivor_min[q], surv);
                }
                est.s_zzstar[q] = values[0];
                est.s_zstarzstar[q] = values[1];
                est.s_zz[q] = values[2];
                est.ide[q] = values[0] - values[1];
                est.iie[q] = values[2] - values[0];
                est.te[q] = est.ide[q] + est.iie[q];
            } catch (const std::exception &e) {
                std::ostringstream msg;
                msg << "draw " << q << ": " << e.what();
                errors[q] = msg.str();
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }

    for (const auto &msg : errors)
        if (!msg.empty()) throw NumericalError("estimate_effects: " + msg);

    est.c_star_star_min = *std::min_element(survivor_min.begin(), survivor_min.end());
    est.ide_summary = summarize_draws(est.ide);
    est.iie_summary = summarize_draws(est.iie);
    est.te_summary = summarize_draws(est.te);
    return est;
}

// ---------------------------------------------------------------------------
// Step-approximation error (Lemma-1 numerical property)
// ---------------------------------------------------------------------------

namespace {

double adaptive_simpson(const std::function<double(double)> &f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)> &f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace

double step_approx_error(const std::function<double(double)> &path, double upper, std::size_t W) {
    if (W < 1) throw ConfigError("step_approx_error: W must be >= 1");
    if (upper <= 0.0) throw ConfigError("step_approx_error: upper bound must be positive");
    double err = 0.0;
    for (std::size_t w = 1; w <= W; ++w) {
        double lo = upper * static_cast<double>(w - 1) / static_cast<double>(W);
        double hi = upper * static_cast<double>(w) / static_cast<double>(W);
        double level = path(lo);
        auto sq = [&](double t) {
            double d = path(t) - level;
            return d * d;
        };
        err += integrate(sq, lo, hi, 1e-14);
    }
    return err;
}

} // namespace medsurv
