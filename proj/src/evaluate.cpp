#include "fairrec/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/parallel.hpp"

namespace fairrec {

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t Histogram::modal_bin() const {
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw ConfigError("histogram of an empty population");
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    Histogram h;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    h.min = *lo;
    h.max = *hi;
    h.counts.assign(bins, 0);
    const double width = h.max - h.min;
    for (double v : values) {
        std::size_t k = 0;
        if (width > 0.0) {
            k = static_cast<std::size_t>((v - h.min) / width * static_cast<double>(bins));
            k = std::min(k, bins - 1);
        }
        ++h.counts[k];
    }
    return h;
}

GroupMeans group_im_mean(std::span<const UserItems> lists, const ImIndex& im, std::span<const GroupLabel> labels) {
    GroupMeans m;
    double sum_min = 0.0, sum_maj = 0.0;
    for (const UserItems& l : lists) {
        const GroupLabel g = l.user < labels.size() ? labels[l.user] : GroupLabel::unknown;
        if (g == GroupLabel::unknown) continue;
        for (ItemId i : l.items) {
            if (g == GroupLabel::minority) {
                sum_min += im.value(i);
                ++m.minority_items;
            } else {
                sum_maj += im.value(i);
                ++m.majority_items;
            }
        }
    }
    if (m.minority_items == 0) throw ConfigError("minority group has no listed items");
    if (m.majority_items == 0) throw ConfigError("majority group has no listed items");
    m.minority = sum_min / static_cast<double>(m.minority_items);
    m.majority = sum_maj / static_cast<double>(m.majority_items);
    return m;
}

AccuracyResult accuracy_error(std::span<const UserItems> lists, const RatingMatrix& heldout,
                              const FactorModel& factors) {
    AccuracyResult r;
    double sq = 0.0;
    for (const UserItems& l : lists) {
        for (ItemId i : l.items) {
            ++r.total;
            const auto truth = heldout.rating(l.user, i);
            if (!truth) continue;
            const double e = *truth - factors.predict(l.user, i);
            sq += e * e;
            ++r.covered;
        }
    }
    if (r.covered) r.mse = sq / static_cast<double>(r.covered);
    return r;
}

FairnessResult fairness_error(std::span<const UserItems> lists, const NormalizedIndex& um_norm,
                              const NormalizedIndex& im_norm, std::span<const GroupLabel> labels) {
    FairnessResult r;
    double s_min = 0.0, s_maj = 0.0, s_all = 0.0;
    for (const UserItems& l : lists) {
        if (l.items.empty()) continue;
        if (!um_norm.has(l.user)) throw ConfigError("no normalized UM value for user index " + std::to_string(l.user));
        double mean_im = 0.0;
        for (ItemId i : l.items) mean_im += im_norm.at(i);
        mean_im /= static_cast<double>(l.items.size());
        const double d = um_norm.at(l.user) - mean_im;
        const double e = d * d;
        s_all += e;
        ++r.users;
        const GroupLabel g = l.user < labels.size() ? labels[l.user] : GroupLabel::unknown;
        if (g == GroupLabel::minority) {
            s_min += e;
            ++r.minority_users;
        } else if (g == GroupLabel::majority) {
            s_maj += e;
            ++r.majority_users;
        }
    }
    if (r.users) r.overall = s_all / static_cast<double>(r.users);
    if (r.minority_users) r.minority = s_min / static_cast<double>(r.minority_users);
    if (r.majority_users) r.majority = s_maj / static_cast<double>(r.majority_users);
    return r;
}

std::vector<double> normalize_series(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.5);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi == *lo) return out;
    for (std::size_t k = 0; k < values.size(); ++k) out[k] = (values[k] - *lo) / (*hi - *lo);
    return out;
}

std::string_view to_string(CandidatePool p) { return p == CandidatePool::heldout ? "heldout" : "unrated"; }

CandidatePool parse_candidate_pool(std::string_view text) {
    if (text == "heldout") return CandidatePool::heldout;
    if (text == "unrated") return CandidatePool::unrated;
    throw ConfigError("unknown candidate pool '" + std::string(text) + "' (expected heldout or unrated)");
}

std::vector<UserItems> heldout_items(const RatingMatrix& heldout) {
    std::vector<UserItems> out;
    for (UserId u = 0; u < heldout.num_users(); ++u) {
        const auto row = heldout.user_ratings(u);
        if (row.empty()) continue;
        UserItems l{u, {}};
        for (const Rating& r : row) l.items.push_back(r.item);
        out.push_back(std::move(l));
    }
    return out;
}

BetaSweep beta_sweep(const MlnModel& mln, const SweepData& data, std::span<const double> beta_grid, std::size_t n,
                     CandidatePool pool) {
    if (beta_grid.empty()) throw ConfigError("beta grid is empty");

    // Candidate sets do not depend on beta.
    std::vector<UserItems> candidates;
    if (pool == CandidatePool::heldout) {
        for (UserItems& l : heldout_items(data.heldout)) {
            if (data.um_norm.has(l.user)) candidates.push_back(std::move(l));
        }
    } else {
        for (UserId u = 0; u < data.train.num_users(); ++u) {
            if (!data.um_norm.has(u)) continue;
            UserItems l{u, {}};
            const auto row = data.train.user_ratings(u);
            auto voted = row.begin();
            for (ItemId i = 0; i < data.factors.num_items(); ++i) {
                while (voted != row.end() && voted->item < i) ++voted;
                if (voted != row.end() && voted->item == i) continue;
                l.items.push_back(i);
            }
            candidates.push_back(std::move(l));
        }
    }

    BetaSweep sweep;
    for (double beta : beta_grid) {
        std::vector<UserItems> lists(candidates.size());
        parallel_for(candidates.size(), [&](std::size_t k) {
            const auto rec = recommend_dl_among(mln, data.factors, candidates[k].user, candidates[k].items, beta, n);
            lists[k] = {candidates[k].user, rec.item_ids()};
        });
        sweep.points.push_back({beta, accuracy_error(lists, data.heldout, data.factors),
                                fairness_error(lists, data.um_norm, data.im_norm, data.labels)});
    }

    std::vector<double> acc, fmin, fmaj;
    for (const SweepPoint& p : sweep.points) {
        acc.push_back(p.accuracy.mse);
        fmin.push_back(p.fairness.minority);
        fmaj.push_back(p.fairness.majority);
    }
    sweep.norm_accuracy = normalize_series(acc);
    sweep.norm_minority = normalize_series(fmin);
    sweep.norm_majority = normalize_series(fmaj);
    std::size_t best = 0;
    for (std::size_t k = 0; k < sweep.points.size(); ++k) {
        sweep.score.push_back(sweep.norm_accuracy[k] + 0.5 * (sweep.norm_minority[k] + sweep.norm_majority[k]));
        if (sweep.score[k] < sweep.score[best]) best = k;
    }
    sweep.optimum_beta = sweep.points[best].beta;
    return sweep;
}

std::vector<UserItems> heldout_predictions(const FactorModel& factors, const RatingMatrix& heldout,
                                           std::optional<double> min_prediction) {
    std::vector<UserItems> out;
    for (UserItems& l : heldout_items(heldout)) {
        if (min_prediction) {
            std::erase_if(l.items, [&](ItemId i) { return factors.predict(l.user, i) < *min_prediction; });
        }
        if (!l.items.empty()) out.push_back(std::move(l));
    }
    return out;
}

std::vector<AlphaPoint> alpha_sweep(const FactorModel& factors, const RatingMatrix& heldout, const ImIndex& im,
                                    std::span<const GroupLabel> labels, std::span<const double> alpha_grid,
                                    std::size_t n, std::optional<double> min_prediction) {
    // Phase 1 once: score every held-out pair of labeled users.
    struct UserCandidates {
        UserId user;
        GroupLabel label;
        std::vector<ScoredCandidate> scored;       // all held-out items (recommendation pool)
        std::vector<ScoredCandidate> predictions;  // items passing min_prediction
    };
    std::vector<UserCandidates> users;
    for (const UserItems& l : heldout_items(heldout)) {
        const GroupLabel g = l.user < labels.size() ? labels[l.user] : GroupLabel::unknown;
        if (g == GroupLabel::unknown) continue;
        UserCandidates uc{l.user, g, score_items(factors, im, l.user, l.items), {}};
        for (const ScoredCandidate& c : uc.scored) {
            if (!min_prediction || c.prediction >= *min_prediction) uc.predictions.push_back(c);
        }
        users.push_back(std::move(uc));
    }

    std::vector<AlphaPoint> points;
    for (double alpha : alpha_grid) {
        AlphaPoint p{alpha, {}, {}, {}};
        std::vector<UserItems> rec_min, rec_maj;
        double sum_im[2] = {0.0, 0.0}, sum_abs[2] = {0.0, 0.0};
        for (const UserCandidates& uc : users) {
            const int side = uc.label == GroupLabel::minority ? 0 : 1;
            GroupCurve& curve = side == 0 ? p.minority : p.majority;
            for (const ScoredCandidate& c : filter_by_alpha(uc.predictions, uc.label, alpha)) {
                sum_im[side] += c.im;
                sum_abs[side] += std::abs(c.im);
                ++curve.survivors;
            }
            const HeuristicList top = select_top_n(uc.scored, uc.user, uc.label, alpha, n);
            UserItems rec{uc.user, {}};
            for (const ScoredCandidate& c : top.items) rec.items.push_back(c.item);
            (side == 0 ? rec_min : rec_maj).push_back(std::move(rec));
        }
        for (int side = 0; side < 2; ++side) {
            GroupCurve& curve = side == 0 ? p.minority : p.majority;
            if (curve.survivors) {
                curve.mean_im = sum_im[side] / static_cast<double>(curve.survivors);
                curve.mean_abs_im = sum_abs[side] / static_cast<double>(curve.survivors);
            } else {
                curve.mean_im = curve.mean_abs_im = std::nan("");
            }
        }
        p.minority.accuracy = accuracy_error(rec_min, heldout, factors);
        p.majority.accuracy = accuracy_error(rec_maj, heldout, factors);
        std::vector<UserItems> all = rec_min;
        all.insert(all.end(), rec_maj.begin(), rec_maj.end());
        p.accuracy = accuracy_error(all, heldout, factors);
        points.push_back(std::move(p));
    }
    return points;
}

// ---------------------------------------------------------------------------
// CSV

void write_table3_csv(std::ostream& out, std::span<const std::pair<std::string, Classification>> rows) {
    CsvWriter csv(out, {"scheme", "group", "role", "correct", "incorrect", "correct_pct"});
    for (const auto& [scheme, c] : rows) {
        for (const ClassificationRow* r : {&c.minority, &c.majority}) {
            csv.row() << scheme << r->name << to_string(r->label) << r->correct << r->incorrect << r->percent();
        }
    }
}

void write_table4_csv(std::ostream& out, std::span<const SchemeMeans> rows) {
    CsvWriter csv(out, {"scheme", "group", "role", "im_mean", "items"});
    for (const SchemeMeans& r : rows) {
        csv.row() << to_string(r.scheme) << r.minority_name << "minority" << r.means.minority << r.means.minority_items;
        csv.row() << to_string(r.scheme) << r.majority_name << "majority" << r.means.majority << r.means.majority_items;
    }
}

void write_histograms_csv(std::ostream& out, std::span<const std::pair<std::string, Histogram>> series) {
    CsvWriter csv(out, {"series", "bin", "lower", "upper", "count"});
    for (const auto& [name, h] : series) {
        for (std::size_t k = 0; k < h.counts.size(); ++k) {
            const double upper = k + 1 == h.counts.size() ? h.max : h.bin_lower(k + 1);
            csv.row() << name << k << h.bin_lower(k) << upper << h.counts[k];
        }
    }
}

void write_fig5_csv(std::ostream& out, std::span<const AlphaPoint> points) {
    CsvWriter csv(out, {"alpha", "minority_mean_im", "minority_mean_abs_im", "minority_count", "majority_mean_im",
                        "majority_mean_abs_im", "majority_count"});
    for (const AlphaPoint& p : points) {
        csv.row() << p.alpha << p.minority.mean_im << p.minority.mean_abs_im << p.minority.survivors
                  << p.majority.mean_im << p.majority.mean_abs_im << p.majority.survivors;
    }
}

void write_fig6_csv(std::ostream& out, std::span<const AlphaPoint> points) {
    CsvWriter csv(out, {"alpha", "minority_error", "minority_coverage", "majority_error", "majority_coverage",
                        "overall_error", "overall_coverage"});
    for (const AlphaPoint& p : points) {
        csv.row() << p.alpha << p.minority.accuracy.mse << p.minority.accuracy.coverage() << p.majority.accuracy.mse
                  << p.majority.accuracy.coverage() << p.accuracy.mse << p.accuracy.coverage();
    }
}

void write_fig7_csv(std::ostream& out, const BetaSweep& sweep) {
    CsvWriter csv(out, {"beta", "accuracy_error", "coverage", "minority_fairness", "majority_fairness",
                        "norm_accuracy", "norm_minority", "norm_majority", "score", "optimum"});
    for (std::size_t k = 0; k < sweep.points.size(); ++k) {
        const SweepPoint& p = sweep.points[k];
        csv.row() << p.beta << p.accuracy.mse << p.accuracy.coverage() << p.fairness.minority << p.fairness.majority
                  << sweep.norm_accuracy[k] << sweep.norm_minority[k] << sweep.norm_majority[k] << sweep.score[k]
                  << (p.beta == sweep.optimum_beta ? 1 : 0);
    }
}

}  // namespace fairrec
