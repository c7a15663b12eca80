#pragma once

#include "medsurv/rng.hpp"
#include "medsurv/state.hpp"

#include <map>
#include <string>
#include <vector>

namespace medsurv {

struct AcceptanceRecord {
    std::size_t iteration = 0;
    std::string block;
    double rate = 0.0;  // over the preceding window
    double scale = 1.0; // proposal scale factor in force
};

struct ChainConfig {
    std::size_t burn_in = 500;
    std::size_t keep = 500;
    Truncation trunc;
    std::uint64_t seed = 1;
    bool adapt = true;
    PriorConfig priors;
};

/// Kept post-burn-in states plus everything needed to evaluate them.
struct DrawStore {
    ModelContext context;
    Truncation trunc;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
    std::vector<PosteriorState> draws;
    std::vector<AcceptanceRecord> acceptance;
};

/// Draws every parameter from its prior / base measure; assignments uniform.
PosteriorState draw_initial_state(const Cohort &cohort, const ModelContext &context,
                                  const PriorConfig &priors, Truncation trunc,
                                  std::mt19937_64 &rng);

/// Blocked Gibbs sampler for the truncated EDPM with Metropolis-Hastings
/// sub-steps. One iterate() runs the update steps in order: cluster
/// memberships, survival parameters, covariate-model parameters, outer and
/// inner stick weights, concentration parameters, random effects.
class GibbsSampler {
  public:
    GibbsSampler(const Cohort &cohort, const ModelContext &context, const PriorConfig &priors,
                 Truncation trunc, std::uint64_t seed);

    void init_state();
    void iterate();

    void step_assignments();
    void step_beta_params();
    void step_theta_params();
    void step_sticks();
    void step_concentration();
    void step_random_effects();

    PosteriorState &state() { return state_; }
    const PosteriorState &state() const { return state_; }
    const ModelContext &context() const { return ctx_; }
    const PriorConfig &priors() const { return priors_; }
    std::mt19937_64 &rng() { return rng_; }

    void set_adaptation(bool on) { adapt_ = on; }
    /// Cumulative acceptance rate per MH block.
    std::map<std::string, double> acceptance_rates() const;
    const std::vector<AcceptanceRecord> &acceptance_log() const { return log_; }

    /// Frozen proposal scales, for transplanting a pilot run's tuning into an
    /// adaptation-free chain.
    std::map<std::string, double> proposal_scales() const;
    void set_proposal_scales(const std::map<std::string, double> &scales);

    void set_state(PosteriorState state) { state_ = std::move(state); }

    /// Swaps in regenerated data of the same shape (subject count and schema);
    /// parameters are untouched. Used by the joint-distribution validation.
    void set_data(const Cohort &cohort);

    /// Raises the data likelihood inside the assignment step to this power.
    /// Only the deliberately-broken sampler variant in the validation harness
    /// sets it away from 1.
    void set_assignment_likelihood_power(double p) { assign_lik_power_ = p; }

  private:
    struct Block {
        double log_scale = 0.0;
        std::size_t window_accepts = 0, window_proposals = 0;
        std::size_t total_accepts = 0, total_proposals = 0;
        std::size_t batch_accepts = 0, batch_proposals = 0;
        std::size_t batches = 0;
    };

    double block_scale(const std::string &name);
    void record_proposal(const std::string &name, bool accepted);
    void adapt_blocks();
    void flush_acceptance_log();

    bool mh_accept(std::mt19937_64 &rng, double log_ratio);
    void rebuild_caches();

    double subject_theta_log_lik(std::size_t i, const ThetaParams &tp) const;
    double assignment_cell_log_prob(std::size_t i, std::size_t r, std::size_t s) const;

    void update_theta_cell(std::size_t r, std::size_t s, const std::vector<std::size_t> &members);
    void probit_coef_sweep(const std::string &block, Eigen::VectorXd &theta, Eigen::VectorXd &eta,
                           const Eigen::VectorXd &prior_mean, const Eigen::VectorXd &prior_var,
                           const std::vector<std::size_t> &members, char process);

    Cohort cohort_;
    ModelContext ctx_;
    PriorConfig priors_;
    Truncation trunc_;
    std::mt19937_64 rng_;
    PosteriorState state_;

    std::vector<Eigen::MatrixXd> basis_rows_; // per subject: n_i x D
    std::vector<double> lambda_prior_shape_, lambda_prior_rate_;

    bool adapt_ = true;
    double target_rate_ = 0.35;
    std::size_t adapt_interval_ = 50;
    std::size_t log_interval_ = 100;
    std::size_t iter_ = 0;
    double assign_lik_power_ = 1.0;
    std::map<std::string, Block> blocks_;
    std::vector<AcceptanceRecord> log_;
};

/// Algorithm-1 step 1: burn in, then persist the next `keep` states.
/// Any step error is rethrown with the failing iteration index.
DrawStore run_chain(const Cohort &cohort, const ModelContext &context, const ChainConfig &config);

} // namespace medsurv
