#include "fairrec/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fairrec/errors.hpp"
#include "fairrec/random.hpp"

namespace fairrec {

FactorModel::FactorModel(std::size_t num_users, std::size_t num_items, std::size_t factors)
    : num_users_(num_users),
      num_items_(num_items),
      factors_(factors),
      p_(num_users * factors, 0.0),
      q_(num_items * factors, 0.0) {}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
    return s;
}

double FactorModel::predict(UserId u, ItemId i) const {
    if (u >= num_users_) throw std::out_of_range("user index " + std::to_string(u) + " out of range");
    if (i >= num_items_) throw std::out_of_range("item index " + std::to_string(i) + " out of range");
    return dot(user(u), item(i));
}

bool FactorModel::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(p_.begin(), p_.end(), finite) && std::all_of(q_.begin(), q_.end(), finite);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("PMF learning rate must be > 0");
    if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
        throw ConfigError("PMF regularization must be >= 0");
    }
    if (epochs < 1) throw ConfigError("PMF epochs must be >= 1");
    if (factors < 1) throw ConfigError("PMF factor count must be >= 1");
    if (!(init_scale >= 0.0)) throw ConfigError("PMF init scale must be >= 0");
}

FactorModel init_factors(std::size_t num_users, std::size_t num_items, std::size_t factors, double init_scale,
                         std::uint64_t seed) {
    if (num_users == 0 || num_items == 0 || factors == 0) {
        throw ConfigError("factor model dimensions must be positive");
    }
    FactorModel m(num_users, num_items, factors);
    Rng rng(seed);
    for (double& v : m.p()) v = rng.uniform(-init_scale, init_scale);
    for (double& v : m.q()) v = rng.uniform(-init_scale, init_scale);
    return m;
}

double rating_loss(double rating, std::span<const double> p, std::span<const double> q, double lambda) {
    const double e = rating - dot(p, q);
    return e * e + 0.5 * lambda * (dot(p, p) + dot(q, q));
}

void rating_loss_gradient(double rating, std::span<const double> p, std::span<const double> q, double lambda,
                          std::span<double> grad_p, std::span<double> grad_q) {
    const double e = rating - dot(p, q);
    for (std::size_t f = 0; f < p.size(); ++f) {
        grad_p[f] = -2.0 * q[f] * e + lambda * p[f];
        grad_q[f] = -2.0 * p[f] * e + lambda * q[f];
    }
}

void sgd_step(std::span<double> p, std::span<double> q, double rating, double learning_rate, double lambda) {
    const double e = rating - dot(p, q);
    for (std::size_t f = 0; f < p.size(); ++f) {
        const double pf = p[f];
        const double qf = q[f];
        p[f] = pf + learning_rate * (2.0 * qf * e - lambda * pf);
        q[f] = qf + learning_rate * (2.0 * pf * e - lambda * qf);
    }
}

double mean_regularized_loss(const FactorModel& model, const RatingMatrix& ratings, double lambda) {
    if (ratings.empty()) return 0.0;
    double total = 0.0;
    for (const Rating& r : ratings.entries()) total += rating_loss(r.value, model.user(r.user), model.item(r.item), lambda);
    return total / static_cast<double>(ratings.size());
}

double sgd_epoch(FactorModel& model, const RatingMatrix& train, const TrainConfig& cfg, std::size_t epoch) {
    if (model.num_users() != train.num_users() || model.num_items() != train.num_items()) {
        throw ConfigError("factor model dimensions do not match the rating matrix");
    }
    const auto entries = train.entries();
    std::vector<std::uint32_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0u);
    Rng rng = Rng::derive(cfg.seed, epoch);
    rng.shuffle(std::span(order));

    for (std::uint32_t k : order) {
        const Rating& r = entries[k];
        sgd_step(model.user(r.user), model.item(r.item), r.value, cfg.learning_rate, cfg.regularization);
    }
    const double loss = mean_regularized_loss(model, train, cfg.regularization);
    if (!std::isfinite(loss)) {
        throw DivergenceError("PMF training diverged at epoch " + std::to_string(epoch + 1) +
                              " (non-finite loss); try a smaller learning rate");
    }
    return loss;
}

ErrorStats prediction_error(const FactorModel& model, const RatingMatrix& ratings) {
    ErrorStats s;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (const Rating& r : ratings.entries()) {
        const double e = r.value - model.predict(r.user, r.item);
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    s.count = ratings.size();
    if (s.count) {
        s.mae = abs_sum / static_cast<double>(s.count);
        s.rmse = std::sqrt(sq_sum / static_cast<double>(s.count));
    }
    return s;
}

PmfResult train_pmf(const RatingMatrix& train, const TrainConfig& cfg, const RatingMatrix* heldout) {
    cfg.validate();
    if (train.empty()) throw ConfigError("PMF training set is empty");
    PmfResult result{init_factors(train.num_users(), train.num_items(), cfg.factors, cfg.init_scale, cfg.seed), {}};
    result.history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        PmfEpoch stats{epoch + 1, sgd_epoch(result.model, train, cfg, epoch), std::nullopt};
        if (heldout && !heldout->empty()) stats.heldout = prediction_error(result.model, *heldout);
        result.history.push_back(stats);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {
constexpr char kFactorMagic[8] = {'F', 'R', 'P', 'M', 'F', '\0', '\0', '\0'};
constexpr std::uint32_t kFactorVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("factor file truncated", 0);
    return v;
}
}  // namespace

void save_factors(std::ostream& out, const FactorModel& model) {
    out.write(kFactorMagic, sizeof kFactorMagic);
    put(out, kFactorVersion);
    put(out, static_cast<std::uint64_t>(model.num_users()));
    put(out, static_cast<std::uint64_t>(model.num_items()));
    put(out, static_cast<std::uint64_t>(model.factors()));
    out.write(reinterpret_cast<const char*>(model.p().data()), static_cast<std::streamsize>(model.p().size_bytes()));
    out.write(reinterpret_cast<const char*>(model.q().data()), static_cast<std::streamsize>(model.q().size_bytes()));
    if (!out) throw IoError("failed to write factor model");
}

FactorModel load_factors(std::istream& in) {
    char magic[sizeof kFactorMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kFactorMagic, sizeof magic) != 0) {
        throw ParseError("not a factor model file", 0);
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kFactorVersion) throw ParseError("unsupported factor model version " + std::to_string(version), 0);
    const auto nu = get<std::uint64_t>(in);
    const auto ni = get<std::uint64_t>(in);
    const auto f = get<std::uint64_t>(in);
    FactorModel m(nu, ni, f);
    if (!in.read(reinterpret_cast<char*>(m.p().data()), static_cast<std::streamsize>(m.p().size_bytes())) ||
        !in.read(reinterpret_cast<char*>(m.q().data()), static_cast<std::streamsize>(m.q().size_bytes()))) {
        throw ParseError("factor file truncated", 0);
    }
    return m;
}

}  // namespace fairrec
