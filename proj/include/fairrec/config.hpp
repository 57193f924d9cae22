#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairrec/dataset.hpp"
#include "fairrec/evaluate.hpp"
#include "fairrec/minority_index.hpp"
#include "fairrec/neural.hpp"
#include "fairrec/pmf.hpp"

namespace fairrec {

enum class RecommendMode : std::uint8_t { dl, heuristic };

std::string_view to_string(RecommendMode m);
RecommendMode parse_recommend_mode(std::string_view text);  // "dl" | "heuristic"

/// Everything one pipeline run needs. Every field has a default and every
/// field is reachable through a configuration key (see config_entries()).
struct RunConfig {
    std::filesystem::path ratings;
    std::filesystem::path users;
    std::filesystem::path out = "fairrec_out";
    std::string delimiter = "::";
    int max_rating = 5;

    Scheme scheme = Scheme::gender;
    ThresholdConfig thresholds;
    ImMode im_mode = ImMode::score_difference;
    UmMode um_mode = UmMode::per_formula;

    /// Factor model train/test partition of the votes.
    SplitSpec split{0.8, 0.0, 0.2, 42};
    TrainConfig pmf;

    /// Network corpus: the factor-model training votes, optionally
    /// subsampled, partitioned into network train/validation/test.
    SplitSpec mln_split{0.7, 0.1, 0.2, 9};
    std::size_t mln_max_ratings = 0;  // 0 keeps every vote
    std::vector<std::size_t> mln_hidden{80, 10};
    double mln_dropout = 0.2;
    std::uint64_t mln_init_seed = 13;
    AccuracyScale label_scale = AccuracyScale::normalized;
    MlnTrainConfig mln;

    std::vector<double> beta_grid = default_beta_grid();
    std::vector<double> alpha_grid{0.0, 0.025, 0.05, 0.1, 0.2};
    double beta = 0.4;
    double alpha = 0.0;
    std::size_t n = 10;
    RecommendMode recommend = RecommendMode::dl;

    CandidatePool pool = CandidatePool::heldout;
    std::size_t histogram_bins = 20;
    /// Held-out pairs counted as predictions in the group-mean and alpha
    /// filtering reports; nullopt keeps every pair.
    std::optional<double> min_prediction = 4.0;

    /// Overrides every stage seed (split, factors, network corpus, network
    /// weights, network batches) with values derived from one number.
    void set_base_seed(std::uint64_t seed);

    /// Throws ConfigError on inconsistent values. Does not touch the file system.
    void validate() const;
};

/// Applies one "key = value" assignment. Throws ConfigError on an unknown key
/// or a malformed value.
void set_option(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses a configuration stream: one "key = value" per line, '#' starts a
/// comment, lists are comma-separated. Relative paths resolve against `base_dir`.
void apply_config(RunConfig& cfg, std::istream& in, const std::filesystem::path& base_dir = {});

/// Reads a configuration file; relative paths resolve against its directory.
RunConfig load_config(const std::filesystem::path& file);

/// Every key with its current value, in a fixed order. Feeding the result back
/// through set_option reproduces the configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

}  // namespace fairrec
