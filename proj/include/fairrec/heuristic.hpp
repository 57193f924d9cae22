#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/minority_index.hpp"
#include "fairrec/pmf.hpp"

namespace fairrec {

/// A prediction paired with the item's minority value.
struct ScoredCandidate {
    ItemId item;
    double prediction;
    double im;
    bool neutral;  // IM is a placeholder (insufficient votes)

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

/// Scores the given items for one user.
std::vector<ScoredCandidate> score_items(const FactorModel& factors, const ImIndex& im, UserId user,
                                         std::span<const ItemId> items);

/// Scores every item the user has not voted in `known`.
std::vector<ScoredCandidate> score_unrated(const FactorModel& factors, const ImIndex& im, const RatingMatrix& known,
                                           UserId user);

/// Keeps IM <= -alpha for minority users and IM >= +alpha for majority users
/// (inclusive). Neutral items survive only when alpha == 0.
/// Throws ConfigError for unknown labels or negative alpha.
std::vector<ScoredCandidate> filter_by_alpha(std::span<const ScoredCandidate> candidates, GroupLabel label,
                                             double alpha);

struct HeuristicList {
    UserId user = 0;
    double alpha = 0.0;
    std::size_t requested = 0;
    std::vector<ScoredCandidate> items;  // descending prediction, ties by item id
    bool empty_after_filter = false;
};

/// Filters, then keeps the N highest predictions (ties to the lower item id).
HeuristicList select_top_n(std::span<const ScoredCandidate> candidates, UserId user, GroupLabel label, double alpha,
                           std::size_t n);

/// Score all unrated items, filter by alpha, keep the top N.
HeuristicList recommend_heuristic(const FactorModel& factors, const ImIndex& im, const RatingMatrix& known,
                                  UserId user, GroupLabel label, double alpha, std::size_t n);

/// CSV: user,rank,item,prediction,im (raw ids, rank from 1)
void write_heuristic_csv(std::ostream& out, const IdSpace& ids, std::span<const HeuristicList> lists);

}  // namespace fairrec
