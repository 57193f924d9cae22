#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrec/dataset.hpp"

namespace fairrec {

/// Like/dislike vote thresholds. A vote >= like is relevant, a vote <= dislike
/// is non-relevant, anything in between is indifferent.
struct ThresholdConfig {
    int like = 4;
    int dislike = 2;
    /// Each side (minority and majority) of an item needs at least this many
    /// non-indifferent voters, otherwise the item is neutral.
    std::size_t min_side_votes = 5;

    /// Throws ConfigError unless 1 <= dislike < like <= max_rating.
    void validate(int max_rating) const;
    double midpoint() const { return 0.5 * (like + dislike); }
};

enum class ImMode : std::uint8_t {
    /// Both groups' (likes - dislikes) differences over one pooled denominator. Range [-1, 1].
    pooled,
    /// Majority score minus minority score, each normalized separately. Range [-2, 2].
    score_difference,
};

enum class UmMode : std::uint8_t {
    /// Divides by (max_rating - midpoint) * votes. Range [-1, 1] with pooled IM.
    per_formula,
    /// Divides the raw score by max_rating, as in the worked toy example.
    toy_divide_by_max,
};

std::string_view to_string(ImMode m);
std::string_view to_string(UmMode m);
ImMode parse_im_mode(std::string_view text);  // "pooled" | "scorediff"
UmMode parse_um_mode(std::string_view text);  // "formula" | "toy"

struct SideVotes {
    std::uint32_t like = 0;
    std::uint32_t dislike = 0;
    std::uint32_t decided() const { return like + dislike; }
};

struct ItemVotes {
    SideVotes majority;
    SideVotes minority;
};

/// Item minority index. Negative values mean minority-preferred items.
struct ImIndex {
    ImMode mode = ImMode::pooled;
    std::vector<double> values;      // by internal item id
    std::vector<ItemVotes> votes;    // by internal item id
    std::vector<std::uint8_t> neutral;  // 1 = insufficient votes, value forced to 0

    std::size_t size() const { return values.size(); }
    double value(ItemId i) const { return values.at(i); }
    bool is_neutral(ItemId i) const { return neutral.at(i) != 0; }
};

/// User minority index. Users without votes carry no value.
struct UmIndex {
    UmMode mode = UmMode::per_formula;
    std::vector<std::optional<double>> scores;  // raw rating-weighted sums
    std::vector<std::optional<double>> values;  // normalized per mode

    std::size_t size() const { return values.size(); }
};

/// Frozen min-max normalization to [0, 1]. Entities outside the fitted range
/// are clamped; a constant population maps to 0.5.
struct NormalizedIndex {
    double min = 0.0;
    double max = 0.0;
    std::vector<std::optional<double>> values;

    double apply(double raw) const;
    bool has(std::size_t k) const { return k < values.size() && values[k].has_value(); }
    double at(std::size_t k) const;  // throws std::out_of_range when absent
};

/// Item minority index over the training votes.
/// Throws ConfigError when either group has no labeled users.
ImIndex compute_im(const RatingMatrix& train, const GroupAssignment& groups, const ThresholdConfig& cfg,
                   ImMode mode = ImMode::pooled);

/// Rating-weighted average of IM over each user's votes.
UmIndex compute_um(const RatingMatrix& train, const ImIndex& im, const ThresholdConfig& cfg,
                   UmMode mode = UmMode::per_formula);

/// Min-max normalization of a value population. Throws on empty input.
NormalizedIndex normalize(std::span<const double> values);
NormalizedIndex normalize(const ImIndex& im);
NormalizedIndex normalize(const UmIndex& um);

struct ClassificationRow {
    GroupLabel label;
    std::string name;
    std::size_t correct = 0;
    std::size_t incorrect = 0;

    std::size_t total() const { return correct + incorrect; }
    double percent() const { return total() ? 100.0 * static_cast<double>(correct) / static_cast<double>(total()) : 0.0; }
};

/// Sign agreement between UM and group label. Minority users are expected
/// below zero, majority users above; UM == 0 counts as incorrect.
struct Classification {
    ClassificationRow minority;
    ClassificationRow majority;
};

Classification classify_users(const UmIndex& um, const GroupAssignment& groups, const IdSpace& ids);

/// CSV export: raw_id,value,flag
void write_im_csv(std::ostream& out, const IdSpace& ids, const ImIndex& im);
void write_um_csv(std::ostream& out, const IdSpace& ids, const UmIndex& um);

/// Reads tables written by the functions above. Vote counts and raw UM scores
/// are not part of the export and come back empty. Throws ParseError.
ImIndex read_im_csv(std::istream& in, const IdSpace& ids, ImMode mode);
UmIndex read_um_csv(std::istream& in, const IdSpace& ids, UmMode mode);

}  // namespace fairrec
