#include "fairrec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fairrec/errors.hpp"
#include "fairrec/random.hpp"

namespace fairrec {

namespace {

// MovieLens 1M age-bucket populations.
constexpr std::array<int, 7> kAgeCodes{1, 18, 25, 35, 45, 50, 56};
constexpr std::array<double, 7> kAgeCounts{222, 1103, 2096, 1193, 550, 496, 380};

int draw_age(Rng& rng) {
    const double total = std::accumulate(kAgeCounts.begin(), kAgeCounts.end(), 0.0);
    double x = rng.uniform01() * total;
    for (std::size_t k = 0; k < kAgeCodes.size(); ++k) {
        if (x < kAgeCounts[k]) return kAgeCodes[k];
        x -= kAgeCounts[k];
    }
    return kAgeCodes.back();
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.users == 0 || spec.items == 0) throw ConfigError("synthetic population needs users and items");
    Rng rng(spec.seed);
    const std::size_t k_dim = std::max<std::size_t>(1, spec.latent);
    const double latent_scale = 1.0 / std::sqrt(static_cast<double>(k_dim));

    struct Item {
        double bias, gender_lean, age_lean, log_popularity;
        std::vector<double> taste;
    };
    std::vector<Item> items(spec.items);
    std::vector<std::size_t> rank(spec.items);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    rng.shuffle(std::span(rank));
    for (std::size_t i = 0; i < spec.items; ++i) {
        Item& it = items[i];
        it.bias = 0.45 * rng.normal();
        it.gender_lean = rng.normal();
        it.age_lean = rng.normal();
        it.log_popularity = -0.9 * std::log(static_cast<double>(rank[i]) + 8.0);
        it.taste.resize(k_dim);
        for (double& v : it.taste) v = latent_scale * rng.normal();
    }

    SyntheticData out;
    for (std::size_t u = 0; u < spec.users; ++u) {
        const RawId raw_user = static_cast<RawId>(u + 1);
        const bool female = rng.bernoulli(spec.female_fraction);
        const int age = draw_age(rng);
        out.demographics.add(raw_user, {female ? Gender::female : Gender::male, age});

        // Majority groups (male, young) lean positive.
        const double gender_affinity = (female ? -1.0 : 1.0) + spec.affinity_spread * rng.normal();
        const double age_affinity = (age >= kSeniorAgeCode ? -1.0 : 1.0) + spec.affinity_spread * rng.normal();
        const double user_bias = 0.3 * rng.normal();
        std::vector<double> taste(k_dim);
        for (double& v : taste) v = latent_scale * rng.normal();

        std::vector<double> score(spec.items);
        std::vector<std::pair<double, std::size_t>> keys(spec.items);
        for (std::size_t i = 0; i < spec.items; ++i) {
            const Item& it = items[i];
            double s = 3.55 + it.bias + user_bias;
            for (std::size_t f = 0; f < k_dim; ++f) s += 0.9 * taste[f] * it.taste[f];
            s += 0.5 * spec.group_strength * (gender_affinity * it.gender_lean + age_affinity * it.age_lean);
            score[i] = s + spec.noise * rng.normal();
            // Weighted sampling without replacement (exponential keys):
            // popular and liked items are voted more often.
            const double log_weight = it.log_popularity + 0.6 * (s - 3.5);
            double e = rng.uniform01();
            while (e <= 0.0) e = rng.uniform01();
            keys[i] = {std::log(-std::log(e)) - log_weight, i};
        }

        double extra = 0.0;
        if (spec.mean_extra_votes > 0.0) {
            double e = rng.uniform01();
            while (e <= 0.0) e = rng.uniform01();
            extra = -spec.mean_extra_votes * std::log(e);
        }
        const std::size_t votes =
            std::min(spec.items, spec.min_votes_per_user + static_cast<std::size_t>(std::floor(extra)));
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(votes), keys.end());
        std::vector<std::size_t> chosen;
        for (std::size_t k = 0; k < votes; ++k) chosen.push_back(keys[k].second);
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t i : chosen) {
            const int r = static_cast<int>(std::clamp(std::lround(score[i]), 1L, 5L));
            out.ratings.push_back({raw_user, static_cast<RawId>(i + 1), r});
        }
    }
    return out;
}

void write_ratings_dat(std::ostream& out, std::span<const RawRating> ratings) {
    // Synthetic timestamps: a fixed epoch plus the line number.
    long long t = 978300000;
    for (const RawRating& r : ratings) out << r.user << "::" << r.item << "::" << r.value << "::" << t++ << '\n';
}

void write_users_dat(std::ostream& out, const DemographicTable& demographics) {
    std::vector<RawId> ids;
    for (const auto& [id, d] : demographics.records()) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (RawId id : ids) {
        const Demographics& d = *demographics.find(id);
        out << id << "::" << (d.gender == Gender::female ? 'F' : 'M') << "::" << d.age_code << "::0::00000\n";
    }
}

}  // namespace fairrec
