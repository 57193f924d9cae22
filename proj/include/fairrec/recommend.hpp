#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/neural.hpp"
#include "fairrec/pmf.hpp"

namespace fairrec {

struct ScoredItem {
    ItemId item;
    double h;  // predicted combined loss

    friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// The N unrated items with the smallest predicted loss, ascending h, ties
/// broken by the lower item id.
struct RecommendationList {
    UserId user = 0;
    double beta = 0.0;
    std::size_t requested = 0;
    std::vector<ScoredItem> items;

    /// True when no candidate item was available.
    bool exhausted() const { return items.empty(); }
    std::vector<ItemId> item_ids() const;

    friend bool operator==(const RecommendationList&, const RecommendationList&) = default;
};

/// Ranks every item the user has not voted in `known` by the network's
/// predicted loss. Uses only the factor rows and the user's vote row; no
/// demographic information is involved.
/// Throws std::out_of_range when the user has no factor row.
RecommendationList recommend_dl(const MlnModel& mln, const FactorModel& factors, const RatingMatrix& known,
                                UserId user, double beta, std::size_t n);

/// Same ranking restricted to an explicit candidate set.
RecommendationList recommend_dl_among(const MlnModel& mln, const FactorModel& factors, UserId user,
                                      std::span<const ItemId> candidates, double beta, std::size_t n);

struct BatchEntry {
    UserId user;
    std::optional<RecommendationList> list;
    std::string error;  // set when list is empty
};

/// recommend_dl per user, in input order. Per-user failures are recorded and
/// the batch continues.
std::vector<BatchEntry> recommend_batch(const MlnModel& mln, const FactorModel& factors, const RatingMatrix& known,
                                        std::span<const UserId> users, double beta, std::size_t n);

/// CSV: user,beta,rank,item,h (raw ids, rank from 1)
void write_recommendations_csv(std::ostream& out, const IdSpace& ids, std::span<const RecommendationList> lists);

}  // namespace fairrec
