#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fairrec/dataset.hpp"

namespace fairrec {

/// Latent factors: ratings are approximated by P * Q^t.
/// P is users x F and Q is items x F, both row-major.
class FactorModel {
public:
    FactorModel() = default;
    FactorModel(std::size_t num_users, std::size_t num_items, std::size_t factors);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }
    std::size_t factors() const { return factors_; }

    std::span<double> user(UserId u) { return {p_.data() + std::size_t{u} * factors_, factors_}; }
    std::span<const double> user(UserId u) const { return {p_.data() + std::size_t{u} * factors_, factors_}; }
    std::span<double> item(ItemId i) { return {q_.data() + std::size_t{i} * factors_, factors_}; }
    std::span<const double> item(ItemId i) const { return {q_.data() + std::size_t{i} * factors_, factors_}; }

    std::span<double> p() { return p_; }
    std::span<const double> p() const { return p_; }
    std::span<double> q() { return q_; }
    std::span<const double> q() const { return q_; }

    /// Dot product of the user and item rows, unclipped.
    /// Throws std::out_of_range for invalid ids.
    double predict(UserId u, ItemId i) const;

    bool all_finite() const;

    friend bool operator==(const FactorModel&, const FactorModel&) = default;

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::size_t factors_ = 0;
    std::vector<double> p_;
    std::vector<double> q_;
};

double dot(std::span<const double> a, std::span<const double> b);

struct TrainConfig {
    double learning_rate = 0.005;
    double regularization = 0.05;
    std::size_t epochs = 50;
    std::size_t factors = 30;
    double init_scale = 0.1;
    std::uint64_t seed = 7;

    void validate() const;  // throws ConfigError
};

/// Entries i.i.d. uniform in [-scale, +scale]. Throws ConfigError on a zero dimension.
FactorModel init_factors(std::size_t num_users, std::size_t num_items, std::size_t factors, double init_scale,
                         std::uint64_t seed);

/// Per-rating regularized loss: (r - p.q)^2 + lambda/2 (|p|^2 + |q|^2).
double rating_loss(double rating, std::span<const double> p, std::span<const double> q, double lambda);

/// Analytic gradient of rating_loss with respect to p and q.
void rating_loss_gradient(double rating, std::span<const double> p, std::span<const double> q, double lambda,
                          std::span<double> grad_p, std::span<double> grad_q);

/// One SGD update for a single vote. The q update uses the pre-update p.
void sgd_step(std::span<double> p, std::span<double> q, double rating, double learning_rate, double lambda);

/// Mean of rating_loss over all votes in `ratings`.
double mean_regularized_loss(const FactorModel& model, const RatingMatrix& ratings, double lambda);

/// One pass over the training votes in a seed-shuffled order (stream = epoch).
/// Returns the mean regularized loss after the pass.
/// Throws DivergenceError on a non-finite loss.
double sgd_epoch(FactorModel& model, const RatingMatrix& train, const TrainConfig& cfg, std::size_t epoch);

struct ErrorStats {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
};

ErrorStats prediction_error(const FactorModel& model, const RatingMatrix& ratings);

struct PmfEpoch {
    std::size_t epoch;
    double train_loss;
    std::optional<ErrorStats> heldout;
};

struct PmfResult {
    FactorModel model;
    std::vector<PmfEpoch> history;
};

/// Initializes factors over the id space of `train` and runs cfg.epochs epochs.
PmfResult train_pmf(const RatingMatrix& train, const TrainConfig& cfg, const RatingMatrix* heldout = nullptr);

/// Versioned binary format: magic, version, dimensions, row-major P then Q.
void save_factors(std::ostream& out, const FactorModel& model);
FactorModel load_factors(std::istream& in);

}  // namespace fairrec
