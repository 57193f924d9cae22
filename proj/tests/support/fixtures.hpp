#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/minority_index.hpp"
#include "fairrec/random.hpp"

namespace fixtures {

using namespace fairrec;

// Five users and four items: raw users 1, 2, 5 are male, 3 and 4 female;
// raw items 1..4 stand for a..d.
inline RatingMatrix toy_ratings() {
    const std::vector<RawRating> raw{
        {1, 1, 5}, {1, 2, 2}, {1, 4, 4},                //
        {2, 1, 5}, {2, 2, 2}, {2, 3, 4}, {2, 4, 2},     //
        {3, 1, 2}, {3, 2, 4}, {3, 3, 1}, {3, 4, 4},     //
        {4, 1, 1}, {4, 2, 5}, {4, 3, 4}, {4, 4, 5},     //
        {5, 1, 4}, {5, 2, 1}, {5, 3, 4}, {5, 4, 2},
    };
    return RatingMatrix::from_raw(raw, 5);
}

inline DemographicTable toy_demographics() {
    DemographicTable t;
    t.add(1, {Gender::male, 25});
    t.add(2, {Gender::male, 35});
    t.add(3, {Gender::female, 25});
    t.add(4, {Gender::female, 45});
    t.add(5, {Gender::male, 56});
    return t;
}

inline ThresholdConfig toy_thresholds() { return {4, 2, 0}; }

/// Random votes on a small grid; each cell is voted with probability `density`.
inline RatingMatrix random_ratings(Rng& rng, std::size_t users, std::size_t items, double density) {
    std::vector<RawRating> raw;
    for (std::size_t u = 0; u < users; ++u) {
        for (std::size_t i = 0; i < items; ++i) {
            if (rng.bernoulli(density)) {
                raw.push_back({static_cast<RawId>(u + 1), static_cast<RawId>(i + 1),
                               static_cast<int>(1 + rng.uniform_index(5))});
            }
        }
    }
    return RatingMatrix::from_raw(raw, 5);
}

/// Random minority/majority labels for every user of `ids`, both groups non-empty
/// when there are at least two users.
inline GroupAssignment random_groups(Rng& rng, const IdSpace& ids, Scheme scheme = Scheme::gender) {
    std::unordered_map<RawId, GroupLabel> labels;
    for (RawId raw : ids.raw_users()) labels[raw] = rng.bernoulli(0.4) ? GroupLabel::minority : GroupLabel::majority;
    if (ids.num_users() >= 2) {
        labels[ids.raw_user(0)] = GroupLabel::minority;
        labels[ids.raw_user(1)] = GroupLabel::majority;
    }
    return GroupAssignment(scheme, std::move(labels));
}

}  // namespace fixtures
