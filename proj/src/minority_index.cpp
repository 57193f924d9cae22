#include "fairrec/minority_index.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fairrec/csv.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/parallel.hpp"

namespace fairrec {

void ThresholdConfig::validate(int max_rating) const {
    if (!(1 <= dislike && dislike < like && like <= max_rating)) {
        throw ConfigError("thresholds must satisfy 1 <= dislike < like <= " + std::to_string(max_rating) +
                          " (got dislike=" + std::to_string(dislike) + ", like=" + std::to_string(like) + ")");
    }
}

std::string_view to_string(ImMode m) { return m == ImMode::pooled ? "pooled" : "scorediff"; }
std::string_view to_string(UmMode m) { return m == UmMode::per_formula ? "formula" : "toy"; }

ImMode parse_im_mode(std::string_view text) {
    if (text == "pooled") return ImMode::pooled;
    if (text == "scorediff" || text == "score_difference") return ImMode::score_difference;
    throw ConfigError("unknown IM mode '" + std::string(text) + "' (expected pooled or scorediff)");
}

UmMode parse_um_mode(std::string_view text) {
    if (text == "formula" || text == "per_formula") return UmMode::per_formula;
    if (text == "toy" || text == "toy_divide_by_max") return UmMode::toy_divide_by_max;
    throw ConfigError("unknown UM mode '" + std::string(text) + "' (expected formula or toy)");
}

ImIndex compute_im(const RatingMatrix& train, const GroupAssignment& groups, const ThresholdConfig& cfg,
                   ImMode mode) {
    cfg.validate(train.max_rating());
    const std::vector<GroupLabel> labels = groups.labels_for(train.ids());
    const bool has_minority = std::find(labels.begin(), labels.end(), GroupLabel::minority) != labels.end();
    const bool has_majority = std::find(labels.begin(), labels.end(), GroupLabel::majority) != labels.end();
    if (!has_minority) {
        throw ConfigError("minority group (" + std::string(groups.group_name(GroupLabel::minority)) +
                          ") has no users in the rating data");
    }
    if (!has_majority) {
        throw ConfigError("majority group (" + std::string(groups.group_name(GroupLabel::majority)) +
                          ") has no users in the rating data");
    }

    const std::size_t ni = train.num_items();
    ImIndex im;
    im.mode = mode;
    im.values.assign(ni, 0.0);
    im.votes.assign(ni, ItemVotes{});
    im.neutral.assign(ni, 0);
    const auto entries = train.entries();

    parallel_for(ni, [&](std::size_t i) {
        ItemVotes v;
        for (std::uint32_t pos : train.item_entry_positions(static_cast<ItemId>(i))) {
            const Rating& r = entries[pos];
            const GroupLabel g = labels[r.user];
            if (g == GroupLabel::unknown) continue;
            SideVotes& side = g == GroupLabel::minority ? v.minority : v.majority;
            if (r.value >= cfg.like) {
                ++side.like;
            } else if (r.value <= cfg.dislike) {
                ++side.dislike;
            }
        }
        im.votes[i] = v;

        const auto diff = [](const SideVotes& s) {
            return static_cast<double>(s.like) - static_cast<double>(s.dislike);
        };
        bool neutral = v.majority.decided() < cfg.min_side_votes || v.minority.decided() < cfg.min_side_votes;
        double value = 0.0;
        if (mode == ImMode::pooled) {
            const double total = static_cast<double>(v.majority.decided() + v.minority.decided());
            if (total == 0.0) {
                neutral = true;
            } else {
                value = (diff(v.majority) - diff(v.minority)) / total;
            }
        } else {
            if (v.majority.decided() == 0 || v.minority.decided() == 0) {
                neutral = true;
            } else {
                value = diff(v.majority) / v.majority.decided() - diff(v.minority) / v.minority.decided();
            }
        }
        im.values[i] = neutral ? 0.0 : value;
        im.neutral[i] = neutral ? 1 : 0;
    });
    return im;
}

UmIndex compute_um(const RatingMatrix& train, const ImIndex& im, const ThresholdConfig& cfg, UmMode mode) {
    cfg.validate(train.max_rating());
    if (im.size() != train.num_items()) throw ConfigError("IM index does not cover the rating matrix items");
    const double mid = cfg.midpoint();
    const double max_rating = train.max_rating();

    UmIndex um;
    um.mode = mode;
    um.scores.assign(train.num_users(), std::nullopt);
    um.values.assign(train.num_users(), std::nullopt);
    for (UserId u = 0; u < train.num_users(); ++u) {
        const auto row = train.user_ratings(u);
        if (row.empty()) continue;
        double score = 0.0;
        for (const Rating& r : row) score += (r.value - mid) * im.values[r.item];
        um.scores[u] = score;
        um.values[u] = mode == UmMode::per_formula ? score / ((max_rating - mid) * static_cast<double>(row.size()))
                                                   : score / max_rating;
    }
    return um;
}

double NormalizedIndex::apply(double raw) const {
    if (max == min) return 0.5;
    return std::clamp((raw - min) / (max - min), 0.0, 1.0);
}

double NormalizedIndex::at(std::size_t k) const {
    if (!has(k)) throw std::out_of_range("normalized index has no value for entity " + std::to_string(k));
    return *values[k];
}

namespace {
NormalizedIndex fit(std::span<const std::optional<double>> values) {
    NormalizedIndex n;
    bool any = false;
    for (const auto& v : values) {
        if (!v) continue;
        n.min = any ? std::min(n.min, *v) : *v;
        n.max = any ? std::max(n.max, *v) : *v;
        any = true;
    }
    if (!any) throw ConfigError("cannot normalize an empty index");
    n.values.resize(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k]) n.values[k] = n.apply(*values[k]);
    }
    return n;
}
}  // namespace

NormalizedIndex normalize(std::span<const double> values) {
    std::vector<std::optional<double>> wrapped(values.begin(), values.end());
    return fit(wrapped);
}

NormalizedIndex normalize(const ImIndex& im) { return normalize(std::span<const double>(im.values)); }

NormalizedIndex normalize(const UmIndex& um) { return fit(um.values); }

Classification classify_users(const UmIndex& um, const GroupAssignment& groups, const IdSpace& ids) {
    Classification c;
    c.minority = {GroupLabel::minority, std::string(groups.group_name(GroupLabel::minority))};
    c.majority = {GroupLabel::majority, std::string(groups.group_name(GroupLabel::majority))};
    for (UserId u = 0; u < um.size() && u < ids.num_users(); ++u) {
        if (!um.values[u]) continue;
        const double v = *um.values[u];
        switch (groups.label(ids.raw_user(u))) {
            case GroupLabel::minority:
                ++(v < 0.0 ? c.minority.correct : c.minority.incorrect);
                break;
            case GroupLabel::majority:
                ++(v > 0.0 ? c.majority.correct : c.majority.incorrect);
                break;
            case GroupLabel::unknown:
                break;
        }
    }
    return c;
}

void write_im_csv(std::ostream& out, const IdSpace& ids, const ImIndex& im) {
    CsvWriter csv(out, {"raw_id", "value", "flag"});
    for (ItemId i = 0; i < im.size(); ++i) {
        csv.row() << ids.raw_item(i) << im.values[i] << (im.neutral[i] ? "neutral" : "");
    }
}

void write_um_csv(std::ostream& out, const IdSpace& ids, const UmIndex& um) {
    CsvWriter csv(out, {"raw_id", "value", "flag"});
    for (UserId u = 0; u < um.size(); ++u) {
        if (um.values[u]) {
            csv.row() << ids.raw_user(u) << *um.values[u] << "";
        } else {
            csv.row() << ids.raw_user(u) << "" << "absent";
        }
    }
}

namespace {

struct IndexRow {
    RawId raw;
    std::optional<double> value;
    std::string flag;
};

std::vector<IndexRow> read_index_rows(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty() || rows.front() != std::vector<std::string>{"raw_id", "value", "flag"}) {
        throw ParseError("expected header raw_id,value,flag", rows.empty() ? 0 : 1);
    }
    std::vector<IndexRow> out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& r = rows[k];
        if (r.size() != 3) throw ParseError("expected 3 fields", k + 1);
        IndexRow row{0, std::nullopt, r[2]};
        const auto [p, ec] = std::from_chars(r[0].data(), r[0].data() + r[0].size(), row.raw);
        if (ec != std::errc() || p != r[0].data() + r[0].size()) throw ParseError("bad id '" + r[0] + "'", k + 1);
        if (!r[1].empty()) {
            double v = 0.0;
            const auto [q, ec2] = std::from_chars(r[1].data(), r[1].data() + r[1].size(), v);
            if (ec2 != std::errc() || q != r[1].data() + r[1].size()) {
                throw ParseError("bad value '" + r[1] + "'", k + 1);
            }
            row.value = v;
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

ImIndex read_im_csv(std::istream& in, const IdSpace& ids, ImMode mode) {
    ImIndex im;
    im.mode = mode;
    im.values.assign(ids.num_items(), 0.0);
    im.votes.assign(ids.num_items(), {});
    im.neutral.assign(ids.num_items(), 0);
    std::vector<std::uint8_t> seen(ids.num_items(), 0);
    for (const IndexRow& row : read_index_rows(in)) {
        const auto item = ids.find_item(row.raw);
        if (!item) throw ParseError("item " + std::to_string(row.raw) + " is not in the id space", 0);
        if (!row.value) throw ParseError("item " + std::to_string(row.raw) + " has no value", 0);
        im.values[*item] = *row.value;
        im.neutral[*item] = row.flag == "neutral" ? 1 : 0;
        seen[*item] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ParseError("IM table does not cover every item", 0);
    return im;
}

UmIndex read_um_csv(std::istream& in, const IdSpace& ids, UmMode mode) {
    UmIndex um;
    um.mode = mode;
    um.scores.assign(ids.num_users(), std::nullopt);
    um.values.assign(ids.num_users(), std::nullopt);
    for (const IndexRow& row : read_index_rows(in)) {
        const auto user = ids.find_user(row.raw);
        if (!user) throw ParseError("user " + std::to_string(row.raw) + " is not in the id space", 0);
        um.values[*user] = row.value;
    }
    return um;
}

}  // namespace fairrec
