#include "fairrec/recommend.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/parallel.hpp"

namespace fairrec {

std::vector<ItemId> RecommendationList::item_ids() const {
    std::vector<ItemId> out;
    out.reserve(items.size());
    for (const ScoredItem& s : items) out.push_back(s.item);
    return out;
}

RecommendationList recommend_dl_among(const MlnModel& mln, const FactorModel& factors, UserId user,
                                      std::span<const ItemId> candidates, double beta, std::size_t n) {
    if (user >= factors.num_users()) {
        throw std::out_of_range("user " + std::to_string(user) + " has no factor row");
    }
    if (n < 1) throw ConfigError("N must be >= 1");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
    if (mln.input_width() != 2 * factors.factors() + 1) {
        throw ConfigError("network input width does not match the factor model");
    }

    const std::size_t f = factors.factors();
    std::vector<double> x(2 * f + 1);
    const auto p = factors.user(user);
    std::copy(p.begin(), p.end(), x.begin());
    x[2 * f] = beta;

    RecommendationList list{user, beta, n, {}};
    list.items.reserve(candidates.size());
    for (ItemId i : candidates) {
        const auto q = factors.item(i);
        std::copy(q.begin(), q.end(), x.begin() + static_cast<std::ptrdiff_t>(f));
        list.items.push_back({i, mln_forward(mln, x, ForwardMode::infer)});
    }
    auto before = [](const ScoredItem& a, const ScoredItem& b) { return a.h != b.h ? a.h < b.h : a.item < b.item; };
    const std::size_t keep = std::min(n, list.items.size());
    std::partial_sort(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(keep), list.items.end(),
                      before);
    list.items.resize(keep);
    return list;
}

RecommendationList recommend_dl(const MlnModel& mln, const FactorModel& factors, const RatingMatrix& known,
                                UserId user, double beta, std::size_t n) {
    if (user >= factors.num_users()) {
        throw std::out_of_range("user " + std::to_string(user) + " has no factor row");
    }
    std::vector<ItemId> unrated;
    unrated.reserve(factors.num_items());
    const auto row = known.user_ratings(user);
    auto voted = row.begin();
    for (ItemId i = 0; i < factors.num_items(); ++i) {
        while (voted != row.end() && voted->item < i) ++voted;
        if (voted != row.end() && voted->item == i) continue;
        unrated.push_back(i);
    }
    return recommend_dl_among(mln, factors, user, unrated, beta, n);
}

std::vector<BatchEntry> recommend_batch(const MlnModel& mln, const FactorModel& factors, const RatingMatrix& known,
                                        std::span<const UserId> users, double beta, std::size_t n) {
    std::vector<BatchEntry> out(users.size());
    parallel_for(users.size(), [&](std::size_t k) {
        out[k].user = users[k];
        try {
            out[k].list = recommend_dl(mln, factors, known, users[k], beta, n);
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    });
    return out;
}

void write_recommendations_csv(std::ostream& out, const IdSpace& ids, std::span<const RecommendationList> lists) {
    CsvWriter csv(out, {"user", "beta", "rank", "item", "h"});
    for (const RecommendationList& list : lists) {
        std::size_t rank = 1;
        for (const ScoredItem& s : list.items) {
            csv.row() << ids.raw_user(list.user) << list.beta << rank++ << ids.raw_item(s.item) << s.h;
        }
    }
}

}  // namespace fairrec
