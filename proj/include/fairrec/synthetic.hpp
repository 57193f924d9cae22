#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fairrec/dataset.hpp"

namespace fairrec {

/// Parameters of a MovieLens-shaped synthetic population.
///
/// Each user has a gender and an age bucket drawn from MovieLens-like
/// proportions. Items carry a gender lean and an age lean; users carry
/// matching affinities centred on their group (with overlap, so some users
/// hold the other group's tastes). Votes come from a low-rank taste model plus
/// these group terms, quantized to 1..5. Users vote more often on popular
/// items and on items they like.
struct SyntheticSpec {
    std::size_t users = 1000;
    std::size_t items = 400;
    std::size_t latent = 4;
    double female_fraction = 0.283;  // MovieLens 1M: 1709 / 6040
    double group_strength = 0.6;     // weight of the group-lean terms
    double affinity_spread = 0.8;    // within-group spread of user affinities
    double noise = 0.45;
    std::size_t min_votes_per_user = 20;
    double mean_extra_votes = 40.0;
    std::uint64_t seed = 2024;
};

struct SyntheticData {
    std::vector<RawRating> ratings;
    DemographicTable demographics;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// MovieLens 1M text layouts ("::"-delimited).
void write_ratings_dat(std::ostream& out, std::span<const RawRating> ratings);
void write_users_dat(std::ostream& out, const DemographicTable& demographics);

}  // namespace fairrec
