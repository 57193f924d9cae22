#include "fairrec/heuristic.hpp"

#include <algorithm>
#include <ostream>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"

namespace fairrec {

std::vector<ScoredCandidate> score_items(const FactorModel& factors, const ImIndex& im, UserId user,
                                         std::span<const ItemId> items) {
    std::vector<ScoredCandidate> out;
    out.reserve(items.size());
    for (ItemId i : items) out.push_back({i, factors.predict(user, i), im.value(i), im.is_neutral(i)});
    return out;
}

std::vector<ScoredCandidate> score_unrated(const FactorModel& factors, const ImIndex& im, const RatingMatrix& known,
                                           UserId user) {
    std::vector<ItemId> unrated;
    const auto row = known.user_ratings(user);
    auto voted = row.begin();
    for (ItemId i = 0; i < factors.num_items(); ++i) {
        while (voted != row.end() && voted->item < i) ++voted;
        if (voted != row.end() && voted->item == i) continue;
        unrated.push_back(i);
    }
    return score_items(factors, im, user, unrated);
}

std::vector<ScoredCandidate> filter_by_alpha(std::span<const ScoredCandidate> candidates, GroupLabel label,
                                             double alpha) {
    if (label == GroupLabel::unknown) {
        throw ConfigError("alpha filtering needs the user's demographic group; this user has none");
    }
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    std::vector<ScoredCandidate> kept;
    for (const ScoredCandidate& c : candidates) {
        if (c.neutral && alpha > 0.0) continue;
        const bool keep = label == GroupLabel::minority ? c.im <= -alpha : c.im >= alpha;
        if (keep) kept.push_back(c);
    }
    return kept;
}

HeuristicList select_top_n(std::span<const ScoredCandidate> candidates, UserId user, GroupLabel label, double alpha,
                           std::size_t n) {
    if (n < 1) throw ConfigError("N must be >= 1");
    HeuristicList list{user, alpha, n, filter_by_alpha(candidates, label, alpha), false};
    auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        return a.prediction != b.prediction ? a.prediction > b.prediction : a.item < b.item;
    };
    const std::size_t keep = std::min(n, list.items.size());
    std::partial_sort(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(keep), list.items.end(),
                      better);
    list.items.resize(keep);
    list.empty_after_filter = list.items.empty();
    return list;
}

HeuristicList recommend_heuristic(const FactorModel& factors, const ImIndex& im, const RatingMatrix& known,
                                  UserId user, GroupLabel label, double alpha, std::size_t n) {
    if (label == GroupLabel::unknown) {
        throw ConfigError("heuristic recommendation needs the user's demographic group; this user has none");
    }
    return select_top_n(score_unrated(factors, im, known, user), user, label, alpha, n);
}

void write_heuristic_csv(std::ostream& out, const IdSpace& ids, std::span<const HeuristicList> lists) {
    CsvWriter csv(out, {"user", "rank", "item", "prediction", "im"});
    for (const HeuristicList& list : lists) {
        std::size_t rank = 1;
        for (const ScoredCandidate& c : list.items) {
            csv.row() << ids.raw_user(list.user) << rank++ << ids.raw_item(c.item) << c.prediction << c.im;
        }
    }
}

}  // namespace fairrec
