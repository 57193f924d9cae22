#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/heuristic.hpp"
#include "fairrec/minority_index.hpp"
#include "fairrec/neural.hpp"
#include "fairrec/pmf.hpp"
#include "fairrec/recommend.hpp"

namespace fairrec {

struct Histogram {
    double min = 0.0;
    double max = 0.0;
    std::vector<std::size_t> counts;

    double bin_width() const { return counts.empty() ? 0.0 : (max - min) / static_cast<double>(counts.size()); }
    double bin_lower(std::size_t k) const { return min + bin_width() * static_cast<double>(k); }
    std::size_t total() const;
    std::size_t modal_bin() const;
};

/// Uniform bins over [min, max]; the maximum lands in the last bin. A constant
/// population puts all mass in the first bin. Throws ConfigError on empty input.
Histogram histogram(std::span<const double> values, std::size_t bins);

/// Items recommended (or predicted) to one user.
struct UserItems {
    UserId user;
    std::vector<ItemId> items;
};

struct GroupMeans {
    double minority = 0.0;
    double majority = 0.0;
    std::size_t minority_items = 0;
    std::size_t majority_items = 0;
};

/// Group means of one scheme, with the group names used in reports.
struct SchemeMeans {
    Scheme scheme;
    std::string minority_name;
    std::string majority_name;
    GroupMeans means;
};

/// Mean IM over every listed item, pooled per group. Unknown-label users are
/// ignored. Throws ConfigError when a group has no listed items.
GroupMeans group_im_mean(std::span<const UserItems> lists, const ImIndex& im, std::span<const GroupLabel> labels);

struct AccuracyResult {
    double mse = 0.0;
    std::size_t covered = 0;  // listed items with a held-out vote
    std::size_t total = 0;    // listed items

    double coverage() const { return total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0; }
    /// No listed item had ground truth; mse is meaningless.
    bool flagged() const { return covered == 0; }
};

/// Mean squared difference between the held-out vote and the factor
/// prediction over listed items that appear in `heldout`.
AccuracyResult accuracy_error(std::span<const UserItems> lists, const RatingMatrix& heldout,
                              const FactorModel& factors);

struct FairnessResult {
    double minority = 0.0;
    double majority = 0.0;
    double overall = 0.0;
    std::size_t minority_users = 0;
    std::size_t majority_users = 0;
    std::size_t users = 0;
};

/// Per user (UM'_u - mean IM' of the list)^2, averaged within each group and
/// overall. Empty lists are skipped. Throws ConfigError when a listed user has
/// no UM' value.
FairnessResult fairness_error(std::span<const UserItems> lists, const NormalizedIndex& um_norm,
                              const NormalizedIndex& im_norm, std::span<const GroupLabel> labels);

/// Min-max scaling of a series to [0, 1]; a constant series maps to 0.5.
std::vector<double> normalize_series(std::span<const double> values);

enum class CandidatePool : std::uint8_t {
    heldout,  // the user's held-out items (full ground-truth coverage)
    unrated,  // every item the user has not voted in the training data
};

std::string_view to_string(CandidatePool p);
CandidatePool parse_candidate_pool(std::string_view text);

/// Per-user held-out item lists, ascending user id; users without held-out votes are skipped.
std::vector<UserItems> heldout_items(const RatingMatrix& heldout);

struct SweepPoint {
    double beta;
    AccuracyResult accuracy;
    FairnessResult fairness;
};

struct BetaSweep {
    std::vector<SweepPoint> points;
    std::vector<double> norm_accuracy;
    std::vector<double> norm_minority;
    std::vector<double> norm_majority;
    std::vector<double> score;  // norm_accuracy + mean(norm_minority, norm_majority)
    double optimum_beta = 0.0;
};

struct SweepData {
    const FactorModel& factors;
    const RatingMatrix& train;
    const RatingMatrix& heldout;
    const NormalizedIndex& im_norm;
    const NormalizedIndex& um_norm;
    std::span<const GroupLabel> labels;  // by internal user id
};

/// DL recommendations of N items for every user with a UM' value (and, for
/// the held-out pool, at least one held-out vote), evaluated per beta.
/// The optimum is the grid point with the smallest score, ties to the lower beta.
BetaSweep beta_sweep(const MlnModel& mln, const SweepData& data, std::span<const double> beta_grid, std::size_t n,
                     CandidatePool pool = CandidatePool::heldout);

struct GroupCurve {
    double mean_im = 0.0;      // signed mean IM of surviving predictions
    double mean_abs_im = 0.0;  // mean |IM| of surviving predictions
    std::size_t survivors = 0;
    AccuracyResult accuracy;   // top-N heuristic recommendations
};

struct AlphaPoint {
    double alpha;
    GroupCurve minority;
    GroupCurve majority;
    AccuracyResult accuracy;  // both groups pooled
};

/// Held-out predictions per user, optionally restricted to predicted values
/// >= min_prediction.
std::vector<UserItems> heldout_predictions(const FactorModel& factors, const RatingMatrix& heldout,
                                           std::optional<double> min_prediction);

/// Heuristic sweep over the held-out predictions of labeled users: prediction
/// filtering statistics and top-N recommendation accuracy per alpha.
std::vector<AlphaPoint> alpha_sweep(const FactorModel& factors, const RatingMatrix& heldout, const ImIndex& im,
                                    std::span<const GroupLabel> labels, std::span<const double> alpha_grid,
                                    std::size_t n, std::optional<double> min_prediction);

// CSV writers (header row, comma-delimited).
void write_table3_csv(std::ostream& out, std::span<const std::pair<std::string, Classification>> rows);
void write_table4_csv(std::ostream& out, std::span<const SchemeMeans> rows);
void write_histograms_csv(std::ostream& out, std::span<const std::pair<std::string, Histogram>> series);
void write_fig5_csv(std::ostream& out, std::span<const AlphaPoint> points);
void write_fig6_csv(std::ostream& out, std::span<const AlphaPoint> points);
void write_fig7_csv(std::ostream& out, const BetaSweep& sweep);

}  // namespace fairrec
