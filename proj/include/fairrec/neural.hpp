#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/minority_index.hpp"
#include "fairrec/pmf.hpp"

namespace fairrec {

/// Fully connected layer: out = W * in + b, W stored row-major (out x in).
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multilayer regression network predicting the combined accuracy/fairness
/// loss of a (user factors, item factors, beta) input.
///
/// Hidden layers use the rectifier, the output layer is linear. Dropout is
/// applied after the first hidden layer in training mode only, with inverted
/// scaling so inference needs no correction. The RMSprop mean-square state
/// lives next to the parameters it belongs to.
struct MlnModel {
    std::vector<DenseLayer> layers;
    double dropout_rate = 0.2;
    std::vector<DenseLayer> mean_square;  // optimizer state, same shapes as layers

    std::size_t input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
    std::size_t parameter_count() const;
    bool all_finite() const;

    friend bool operator==(const MlnModel&, const MlnModel&) = default;
};

/// Builds input -> hidden... -> 1 with He-uniform weights and zero biases.
MlnModel make_mln(std::size_t input_width, std::span<const std::size_t> hidden, double dropout_rate,
                  std::uint64_t seed);

/// The 2F+1 -> 80 -> 10 -> 1 network with 0.2 dropout.
MlnModel make_default_mln(std::size_t factors, std::uint64_t seed);

enum class ForwardMode : std::uint8_t { train, infer };

/// Network output for one input. In train mode, `dropout_key` selects the
/// dropout mask deterministically. Throws ConfigError on a width mismatch.
double mln_forward(const MlnModel& model, std::span<const double> x, ForwardMode mode,
                   std::uint64_t dropout_key = 0);

/// Post-activation outputs of every layer (index 0 is the input itself).
std::vector<std::vector<double>> mln_activations(const MlnModel& model, std::span<const double> x,
                                                 ForwardMode mode, std::uint64_t dropout_key = 0);

/// Gradient accumulator with the model's layer shapes.
struct MlnGradient {
    std::vector<DenseLayer> layers;

    explicit MlnGradient(const MlnModel& model);
    void clear();
    void add(const MlnGradient& other);
    void scale(double s);
    std::vector<double> flatten() const;
};

/// Adds d|h(x) - y| / d(params) * weight into `grad`; returns |h(x) - y|.
double mln_backprop(const MlnModel& model, std::span<const double> x, double y, ForwardMode mode,
                    std::uint64_t dropout_key, double weight, MlnGradient& grad);

/// All weights and biases, layer by layer (weights before bias).
std::vector<double> flatten_parameters(const MlnModel& model);
void assign_parameters(MlnModel& model, std::span<const double> flat);

// ---------------------------------------------------------------------------
// Training corpus

enum class AccuracyScale : std::uint8_t {
    /// Squared rating error divided by (max_rating - 1)^2 so it lies in [0, 1].
    normalized,
    /// Squared rating error as is.
    raw,
};

struct LabelOptions {
    AccuracyScale scale = AccuracyScale::normalized;
    int max_rating = 5;
};

/// beta * e_acc + (1 - beta) * e_fair, with e_acc = (rating - predicted)^2
/// (optionally rescaled) and e_fair = (im' - um')^2.
double combined_loss_label(double rating, double predicted, double im_norm, double um_norm, double beta,
                           const LabelOptions& opts = {});

/// Same, with the prediction taken as the factor dot product.
double label(double rating, std::span<const double> p, std::span<const double> q, double im_norm, double um_norm,
             double beta, const LabelOptions& opts = {});

/// {0.0, 0.1, ..., 1.0}
std::vector<double> default_beta_grid();

struct TrainingExample {
    std::vector<double> x;  // (p_u, q_i, beta)
    double y = 0.0;
};

/// Read-only supervised examples for the network.
class ExampleSource {
public:
    virtual ~ExampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual std::size_t width() const = 0;
    virtual void features(std::size_t k, std::span<double> out) const = 0;
    virtual double target(std::size_t k) const = 0;

    TrainingExample example(std::size_t k) const;
};

/// Examples with explicit feature rows.
class DenseExamples final : public ExampleSource {
public:
    explicit DenseExamples(std::size_t width) : width_(width) {}
    void add(std::span<const double> x, double y);

    std::size_t size() const override { return targets_.size(); }
    std::size_t width() const override { return width_; }
    void features(std::size_t k, std::span<double> out) const override;
    double target(std::size_t k) const override { return targets_[k]; }

private:
    std::size_t width_;
    std::vector<double> features_;
    std::vector<double> targets_;
};

/// Examples stored as (user, item, beta, label) that gather their features
/// from a factor model on demand. |ratings| x |beta grid| examples, rating-major.
class FactorExamples final : public ExampleSource {
public:
    struct Entry {
        UserId user;
        ItemId item;
        double beta;
        double target;
    };

    FactorExamples(std::shared_ptr<const FactorModel> factors, std::vector<Entry> entries);

    std::size_t size() const override { return entries_.size(); }
    std::size_t width() const override { return 2 * factors_->factors() + 1; }
    void features(std::size_t k, std::span<double> out) const override;
    double target(std::size_t k) const override { return entries_[k].target; }

    const Entry& entry(std::size_t k) const { return entries_[k]; }

private:
    std::shared_ptr<const FactorModel> factors_;
    std::vector<Entry> entries_;
};

/// One example per (vote, beta) pair, labeled with combined_loss_label using
/// the factor prediction. Throws ConfigError when a rated user or item has no
/// normalized index value.
FactorExamples build_training_set(std::shared_ptr<const FactorModel> factors, const RatingMatrix& ratings,
                                  const NormalizedIndex& im_norm, const NormalizedIndex& um_norm,
                                  std::span<const double> beta_grid, const LabelOptions& opts = {});

// ---------------------------------------------------------------------------
// Training

struct MlnTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    double decay = 0.9;  // squared-gradient moving-average decay
    double epsilon = 1e-8;
    std::uint64_t seed = 11;

    void validate() const;  // throws ConfigError
};

struct MlnEpoch {
    std::size_t epoch;
    double train_mae;
    std::optional<double> validation_mae;
};

/// Minimizes mean |h(x) - y| by mini-batch backprop with RMSprop:
///   ms <- decay * ms + (1 - decay) * g^2;  w <- w - rate * g / sqrt(ms + eps)
/// Deterministic for a fixed seed regardless of thread count.
std::vector<MlnEpoch> mln_train(MlnModel& model, const ExampleSource& train, const ExampleSource* validation,
                                const MlnTrainConfig& cfg);

/// Infer-mode mean absolute error.
double mln_mae(const MlnModel& model, const ExampleSource& data);

/// Infer-mode forward pass on (p_u, q_i, beta).
double predict_loss(const MlnModel& model, std::span<const double> p, std::span<const double> q, double beta);

/// Versioned binary format with layer sizes, dropout rate, parameters and optimizer state.
void save_mln(std::ostream& out, const MlnModel& model);
MlnModel load_mln(std::istream& in);

/// CSV: epoch,train_mae,validation_mae
void write_mln_log(std::ostream& out, std::span<const MlnEpoch> history);

}  // namespace fairrec
