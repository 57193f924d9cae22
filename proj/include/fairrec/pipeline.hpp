#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>

#include "fairrec/config.hpp"

namespace fairrec {

enum class Stage : std::uint8_t { ingest, indexes, train_mf, train_mln, recommend, evaluate, all };

std::string_view to_string(Stage s);  // command-line spelling, e.g. "train-mf"
std::optional<Stage> parse_stage(std::string_view text);

/// The concrete stages in execution order (everything except `all`).
std::span<const Stage> stage_order();

/// File names inside the output directory.
namespace artifact {
inline constexpr std::string_view ratings = "ratings.snap";
inline constexpr std::string_view train = "train.snap";
inline constexpr std::string_view validation = "validation.snap";
inline constexpr std::string_view test = "test.snap";
inline constexpr std::string_view users = "users.dat";
inline constexpr std::string_view im = "im.csv";
inline constexpr std::string_view um = "um.csv";
inline constexpr std::string_view table3 = "table3.csv";
inline constexpr std::string_view histograms = "histograms.csv";
inline constexpr std::string_view factors = "pmf.bin";
inline constexpr std::string_view factors_log = "pmf_log.csv";
inline constexpr std::string_view network = "mln.bin";
inline constexpr std::string_view network_log = "mln_log.csv";
inline constexpr std::string_view recommendations_dl = "recommendations_dl.csv";
inline constexpr std::string_view recommendations_heuristic = "recommendations_heuristic.csv";
inline constexpr std::string_view table4 = "table4.csv";
inline constexpr std::string_view fig5 = "fig5_curves.csv";
inline constexpr std::string_view fig6 = "fig6_curves.csv";
inline constexpr std::string_view fig7 = "fig7_curves.csv";
inline constexpr std::string_view manifest = "manifest.json";
}  // namespace artifact

/// Runs one stage (or all of them) against cfg.out, reading the artifacts of
/// earlier stages from there, and records the stage in manifest.json.
/// Progress lines go to `log`.
///
/// Errors: ConfigError, IoError (missing input or artifact), ParseError,
/// DivergenceError.
void run_stage(Stage stage, const RunConfig& cfg, std::ostream& log);

/// 64-bit FNV-1a digest of a file's bytes. Throws IoError.
std::uint64_t file_checksum(const std::filesystem::path& file);

}  // namespace fairrec
