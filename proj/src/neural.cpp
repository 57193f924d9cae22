#include "fairrec/neural.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/parallel.hpp"
#include "fairrec/random.hpp"

namespace fairrec {

namespace {

// Hidden layer 0 is followed by dropout.
constexpr std::size_t kDropoutLayer = 0;

// Counter-based dropout decision for one unit: cheap and independent of
// evaluation order.
bool drop_unit(std::uint64_t key, std::size_t unit, double rate) {
    const std::uint64_t h = mix_seed(key ^ ((unit + 1) * 0x9e3779b97f4a7c15ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53 < rate;
}

/// Per-call buffers for forward and backward passes.
struct Workspace {
    std::vector<std::vector<double>> pre;    // z per layer
    std::vector<std::vector<double>> post;   // activation per layer (after dropout)
    std::vector<double> dropout_scale;       // multiplier per unit of the dropout layer
    std::vector<double> delta;
    std::vector<double> delta_prev;

    explicit Workspace(const MlnModel& m) {
        for (const DenseLayer& l : m.layers) {
            pre.emplace_back(l.outputs);
            post.emplace_back(l.outputs);
        }
        if (!m.layers.empty()) dropout_scale.assign(m.layers.front().outputs, 1.0);
    }
};

void check_width(const MlnModel& model, std::size_t width) {
    if (model.layers.empty()) throw ConfigError("network has no layers");
    if (width != model.input_width()) {
        throw ConfigError("network input width mismatch: expected " + std::to_string(model.input_width()) +
                          ", got " + std::to_string(width));
    }
}

double forward(const MlnModel& model, std::span<const double> x, ForwardMode mode, std::uint64_t key,
               Workspace& ws) {
    std::span<const double> in = x;
    const std::size_t last = model.layers.size() - 1;
    const double keep_scale = 1.0 / (1.0 - model.dropout_rate);
    for (std::size_t l = 0; l <= last; ++l) {
        const DenseLayer& layer = model.layers[l];
        auto& z = ws.pre[l];
        auto& a = ws.post[l];
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double* w = layer.weights.data() + o * layer.inputs;
            double s = layer.bias[o];
            for (std::size_t k = 0; k < layer.inputs; ++k) s += w[k] * in[k];
            z[o] = s;
            a[o] = l == last ? s : std::max(0.0, s);
        }
        if (l == kDropoutLayer && l != last) {
            const bool active = mode == ForwardMode::train && model.dropout_rate > 0.0;
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                const double scale = !active ? 1.0 : drop_unit(key, o, model.dropout_rate) ? 0.0 : keep_scale;
                ws.dropout_scale[o] = scale;
                a[o] *= scale;
            }
        }
        in = a;
    }
    return ws.post[last][0];
}

// Accumulates weight * d|h - y| into grad. Requires a prior forward() into ws.
void backward(const MlnModel& model, std::span<const double> x, double h, double y, double weight, Workspace& ws,
              MlnGradient& grad) {
    const double d_out = h > y ? 1.0 : h < y ? -1.0 : 0.0;
    if (d_out == 0.0 || weight == 0.0) return;
    const std::size_t last = model.layers.size() - 1;
    ws.delta.assign(1, d_out * weight);
    for (std::size_t l = last + 1; l-- > 0;) {
        const DenseLayer& layer = model.layers[l];
        DenseLayer& g = grad.layers[l];
        std::span<const double> in = l == 0 ? x : std::span<const double>(ws.post[l - 1]);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            double* gw = g.weights.data() + o * layer.inputs;
            for (std::size_t k = 0; k < layer.inputs; ++k) gw[k] += d * in[k];
            g.bias[o] += d;
        }
        if (l == 0) break;
        // Propagate to the previous layer's pre-activation.
        const std::size_t prev = l - 1;
        ws.delta_prev.assign(layer.inputs, 0.0);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            const double* w = layer.weights.data() + o * layer.inputs;
            for (std::size_t k = 0; k < layer.inputs; ++k) ws.delta_prev[k] += w[k] * d;
        }
        for (std::size_t k = 0; k < layer.inputs; ++k) {
            double d = ws.pre[prev][k] > 0.0 ? ws.delta_prev[k] : 0.0;
            if (prev == kDropoutLayer) d *= ws.dropout_scale[k];
            ws.delta_prev[k] = d;
        }
        std::swap(ws.delta, ws.delta_prev);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

std::size_t MlnModel::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

bool MlnModel::all_finite() const {
    for (const DenseLayer& l : layers) {
        for (double v : l.weights) {
            if (!std::isfinite(v)) return false;
        }
        for (double v : l.bias) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

MlnModel make_mln(std::size_t input_width, std::span<const std::size_t> hidden, double dropout_rate,
                  std::uint64_t seed) {
    if (input_width == 0) throw ConfigError("network input width must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
    MlnModel m;
    m.dropout_rate = dropout_rate;
    Rng rng(seed);
    std::size_t in = input_width;
    std::vector<std::size_t> sizes(hidden.begin(), hidden.end());
    sizes.push_back(1);
    for (std::size_t out : sizes) {
        if (out == 0) throw ConfigError("layer width must be positive");
        DenseLayer layer(in, out);
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        m.layers.push_back(std::move(layer));
        m.mean_square.emplace_back(in, out);
        in = out;
    }
    return m;
}

MlnModel make_default_mln(std::size_t factors, std::uint64_t seed) {
    constexpr std::array<std::size_t, 2> hidden{80, 10};
    return make_mln(2 * factors + 1, hidden, 0.2, seed);
}

double mln_forward(const MlnModel& model, std::span<const double> x, ForwardMode mode, std::uint64_t dropout_key) {
    check_width(model, x.size());
    Workspace ws(model);
    return forward(model, x, mode, dropout_key, ws);
}

std::vector<std::vector<double>> mln_activations(const MlnModel& model, std::span<const double> x, ForwardMode mode,
                                                 std::uint64_t dropout_key) {
    check_width(model, x.size());
    Workspace ws(model);
    forward(model, x, mode, dropout_key, ws);
    std::vector<std::vector<double>> out;
    out.emplace_back(x.begin(), x.end());
    for (auto& a : ws.post) out.push_back(std::move(a));
    return out;
}

MlnGradient::MlnGradient(const MlnModel& model) {
    for (const DenseLayer& l : model.layers) layers.emplace_back(l.inputs, l.outputs);
}

void MlnGradient::clear() {
    for (DenseLayer& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

void MlnGradient::add(const MlnGradient& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& a = layers[l];
        const auto& b = other.layers[l];
        for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += b.weights[k];
        for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += b.bias[k];
    }
}

void MlnGradient::scale(double s) {
    for (DenseLayer& l : layers) {
        for (double& v : l.weights) v *= s;
        for (double& v : l.bias) v *= s;
    }
}

std::vector<double> MlnGradient::flatten() const {
    std::vector<double> out;
    for (const DenseLayer& l : layers) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

double mln_backprop(const MlnModel& model, std::span<const double> x, double y, ForwardMode mode,
                    std::uint64_t dropout_key, double weight, MlnGradient& grad) {
    check_width(model, x.size());
    Workspace ws(model);
    const double h = forward(model, x, mode, dropout_key, ws);
    backward(model, x, h, y, weight, ws, grad);
    return std::abs(h - y);
}

std::vector<double> flatten_parameters(const MlnModel& model) {
    std::vector<double> out;
    out.reserve(model.parameter_count());
    for (const DenseLayer& l : model.layers) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void assign_parameters(MlnModel& model, std::span<const double> flat) {
    if (flat.size() != model.parameter_count()) throw ConfigError("parameter vector size mismatch");
    std::size_t k = 0;
    for (DenseLayer& l : model.layers) {
        for (double& v : l.weights) v = flat[k++];
        for (double& v : l.bias) v = flat[k++];
    }
}

// ---------------------------------------------------------------------------
// Labels and corpus

double combined_loss_label(double rating, double predicted, double im_norm, double um_norm, double beta,
                           const LabelOptions& opts) {
    double e_acc = (rating - predicted) * (rating - predicted);
    if (opts.scale == AccuracyScale::normalized) {
        const double span = static_cast<double>(opts.max_rating - 1);
        e_acc /= span * span;
    }
    const double e_fair = (im_norm - um_norm) * (im_norm - um_norm);
    return beta * e_acc + (1.0 - beta) * e_fair;
}

double label(double rating, std::span<const double> p, std::span<const double> q, double im_norm, double um_norm,
             double beta, const LabelOptions& opts) {
    return combined_loss_label(rating, dot(p, q), im_norm, um_norm, beta, opts);
}

std::vector<double> default_beta_grid() {
    std::vector<double> grid(11);
    for (int k = 0; k <= 10; ++k) grid[static_cast<std::size_t>(k)] = k / 10.0;
    return grid;
}

TrainingExample ExampleSource::example(std::size_t k) const {
    TrainingExample e;
    e.x.resize(width());
    features(k, e.x);
    e.y = target(k);
    return e;
}

void DenseExamples::add(std::span<const double> x, double y) {
    if (x.size() != width_) throw ConfigError("example width mismatch");
    features_.insert(features_.end(), x.begin(), x.end());
    targets_.push_back(y);
}

void DenseExamples::features(std::size_t k, std::span<double> out) const {
    std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(k * width_), width_, out.begin());
}

FactorExamples::FactorExamples(std::shared_ptr<const FactorModel> factors, std::vector<Entry> entries)
    : factors_(std::move(factors)), entries_(std::move(entries)) {}

void FactorExamples::features(std::size_t k, std::span<double> out) const {
    const Entry& e = entries_[k];
    const std::size_t f = factors_->factors();
    const auto p = factors_->user(e.user);
    const auto q = factors_->item(e.item);
    std::copy(p.begin(), p.end(), out.begin());
    std::copy(q.begin(), q.end(), out.begin() + static_cast<std::ptrdiff_t>(f));
    out[2 * f] = e.beta;
}

FactorExamples build_training_set(std::shared_ptr<const FactorModel> factors, const RatingMatrix& ratings,
                                  const NormalizedIndex& im_norm, const NormalizedIndex& um_norm,
                                  std::span<const double> beta_grid, const LabelOptions& opts) {
    if (factors->num_users() != ratings.num_users() || factors->num_items() != ratings.num_items()) {
        throw ConfigError("factor model does not match the rating matrix");
    }
    std::vector<FactorExamples::Entry> entries;
    entries.reserve(ratings.size() * beta_grid.size());
    for (const Rating& r : ratings.entries()) {
        if (!um_norm.has(r.user)) {
            throw ConfigError("no normalized UM value for user " + std::to_string(ratings.ids().raw_user(r.user)));
        }
        if (!im_norm.has(r.item)) {
            throw ConfigError("no normalized IM value for item " + std::to_string(ratings.ids().raw_item(r.item)));
        }
        const double predicted = factors->predict(r.user, r.item);
        const double im = im_norm.at(r.item);
        const double um = um_norm.at(r.user);
        for (double beta : beta_grid) {
            entries.push_back({r.user, r.item, beta, combined_loss_label(r.value, predicted, im, um, beta, opts)});
        }
    }
    return FactorExamples(std::move(factors), std::move(entries));
}

// ---------------------------------------------------------------------------
// Training

void MlnTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("network epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("network batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("network learning rate must be > 0");
    if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("squared-gradient decay must be in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
}

namespace {
// Fixed chunking of each batch; the summation order depends only on this.
constexpr std::size_t kBatchChunks = 8;
}  // namespace

double mln_mae(const MlnModel& model, const ExampleSource& data) {
    check_width(model, data.width());
    const std::size_t n = data.size();
    if (n == 0) return 0.0;
    const std::size_t chunks = std::min<std::size_t>(64, n);
    std::vector<double> partial(chunks, 0.0);
    parallel_chunks(n, chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
        Workspace ws(model);
        std::vector<double> x(data.width());
        double s = 0.0;
        for (std::size_t k = b; k < e; ++k) {
            data.features(k, x);
            s += std::abs(forward(model, x, ForwardMode::infer, 0, ws) - data.target(k));
        }
        partial[c] = s;
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(n);
}

std::vector<MlnEpoch> mln_train(MlnModel& model, const ExampleSource& train, const ExampleSource* validation,
                                const MlnTrainConfig& cfg) {
    cfg.validate();
    check_width(model, train.width());
    if (train.size() == 0) throw ConfigError("network training set is empty");
    if (model.mean_square.size() != model.layers.size()) {
        model.mean_square.clear();
        for (const DenseLayer& l : model.layers) model.mean_square.emplace_back(l.inputs, l.outputs);
    }

    const std::size_t n = train.size();
    std::vector<std::uint32_t> order(n);
    std::vector<MlnEpoch> history;
    std::vector<MlnGradient> chunk_grads(kBatchChunks, MlnGradient(model));
    std::vector<double> chunk_loss(kBatchChunks);
    MlnGradient grad(model);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0u);
        Rng rng = Rng::derive(cfg.seed, epoch);
        rng.shuffle(std::span(order));
        const std::uint64_t epoch_key = mix_seed(cfg.seed ^ mix_seed(epoch + 1));

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const double weight = 1.0 / static_cast<double>(end - start);
            const std::size_t chunks = std::min(kBatchChunks, end - start);
            parallel_chunks(end - start, chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
                Workspace ws(model);
                std::vector<double> x(train.width());
                MlnGradient& g = chunk_grads[c];
                g.clear();
                double s = 0.0;
                for (std::size_t k = start + b; k < start + e; ++k) {
                    const std::uint32_t idx = order[k];
                    train.features(idx, x);
                    const std::uint64_t key = mix_seed(epoch_key ^ (static_cast<std::uint64_t>(idx) << 1));
                    const double y = train.target(idx);
                    const double h = forward(model, x, ForwardMode::train, key, ws);
                    backward(model, x, h, y, weight, ws, g);
                    s += std::abs(h - y);
                }
                chunk_loss[c] = s;
            });
            grad.clear();
            for (std::size_t c = 0; c < chunks; ++c) {
                grad.add(chunk_grads[c]);
                loss_sum += chunk_loss[c];
            }

            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& layer = model.layers[l];
                DenseLayer& ms = model.mean_square[l];
                const DenseLayer& g = grad.layers[l];
                auto step = [&](std::vector<double>& param, std::vector<double>& acc, const std::vector<double>& gv) {
                    for (std::size_t k = 0; k < param.size(); ++k) {
                        acc[k] = cfg.decay * acc[k] + (1.0 - cfg.decay) * gv[k] * gv[k];
                        param[k] -= cfg.learning_rate * gv[k] / std::sqrt(acc[k] + cfg.epsilon);
                    }
                };
                step(layer.weights, ms.weights, g.weights);
                step(layer.bias, ms.bias, g.bias);
            }
        }

        const double train_mae = loss_sum / static_cast<double>(n);
        if (!std::isfinite(train_mae) || !model.all_finite()) {
            throw DivergenceError("network training diverged at epoch " + std::to_string(epoch + 1) +
                                  " (non-finite loss); try a smaller learning rate");
        }
        MlnEpoch stats{epoch + 1, train_mae, std::nullopt};
        if (validation && validation->size() > 0) stats.validation_mae = mln_mae(model, *validation);
        history.push_back(stats);
    }
    return history;
}

double predict_loss(const MlnModel& model, std::span<const double> p, std::span<const double> q, double beta) {
    std::vector<double> x;
    x.reserve(p.size() + q.size() + 1);
    x.insert(x.end(), p.begin(), p.end());
    x.insert(x.end(), q.begin(), q.end());
    x.push_back(beta);
    return mln_forward(model, x, ForwardMode::infer);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {
constexpr char kMlnMagic[8] = {'F', 'R', 'M', 'L', 'N', '\0', '\0', '\0'};
constexpr std::uint32_t kMlnVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("network file truncated", 0);
    return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& in, std::vector<double>& v) {
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
        throw ParseError("network file truncated", 0);
    }
}
}  // namespace

void save_mln(std::ostream& out, const MlnModel& model) {
    out.write(kMlnMagic, sizeof kMlnMagic);
    put(out, kMlnVersion);
    put(out, static_cast<std::uint64_t>(model.layers.size()));
    for (const DenseLayer& l : model.layers) {
        put(out, static_cast<std::uint64_t>(l.inputs));
        put(out, static_cast<std::uint64_t>(l.outputs));
    }
    put(out, model.dropout_rate);
    for (const DenseLayer& l : model.layers) {
        put_doubles(out, l.weights);
        put_doubles(out, l.bias);
    }
    const bool has_state = model.mean_square.size() == model.layers.size();
    put(out, static_cast<std::uint8_t>(has_state));
    if (has_state) {
        for (const DenseLayer& l : model.mean_square) {
            put_doubles(out, l.weights);
            put_doubles(out, l.bias);
        }
    }
    if (!out) throw IoError("failed to write network model");
}

MlnModel load_mln(std::istream& in) {
    char magic[sizeof kMlnMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMlnMagic, sizeof magic) != 0) {
        throw ParseError("not a network model file", 0);
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kMlnVersion) throw ParseError("unsupported network model version " + std::to_string(version), 0);
    const auto count = get<std::uint64_t>(in);
    if (count == 0 || count > 64) throw ParseError("implausible layer count", 0);
    MlnModel m;
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto inputs = get<std::uint64_t>(in);
        const auto outputs = get<std::uint64_t>(in);
        if (inputs == 0 || outputs == 0 || inputs > (1u << 20) || outputs > (1u << 20)) {
            throw ParseError("implausible layer size", 0);
        }
        m.layers.emplace_back(inputs, outputs);
    }
    m.dropout_rate = get<double>(in);
    for (DenseLayer& l : m.layers) {
        get_doubles(in, l.weights);
        get_doubles(in, l.bias);
    }
    for (const DenseLayer& l : m.layers) m.mean_square.emplace_back(l.inputs, l.outputs);
    if (get<std::uint8_t>(in)) {
        for (DenseLayer& l : m.mean_square) {
            get_doubles(in, l.weights);
            get_doubles(in, l.bias);
        }
    }
    return m;
}

void write_mln_log(std::ostream& out, std::span<const MlnEpoch> history) {
    CsvWriter csv(out, {"epoch", "train_mae", "validation_mae"});
    for (const MlnEpoch& e : history) {
        auto row = csv.row();
        row << e.epoch << e.train_mae;
        if (e.validation_mae) row << *e.validation_mae;
    }
}

}  // namespace fairrec
