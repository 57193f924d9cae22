// Command-line driver for the staged pipeline.
//
//   fairrec <stage> [--config FILE] [overrides...]
//
// Exit status: 0 success, 1 usage or unexpected error, 2 configuration,
// 3 I/O, 4 parse, 5 training divergence.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairrec/config.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/pipeline.hpp"

namespace {

enum Exit : int { ok = 0, usage = 1, config = 2, io = 3, parse = 4, divergence = 5 };

int fail(int code, std::string_view kind, const std::string& message) {
    std::cerr << "fairrec: " << kind << " error: " << message << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware recommendation pipeline", "fairrec"};
    app.require_subcommand(1, 1);

    std::string config_file;
    std::optional<std::string> scheme, im_mode, um_mode, recommend_mode, ratings, users, out;
    std::optional<double> beta, alpha;
    std::optional<std::size_t> n, min_votes;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> assignments;

    app.add_option("--config", config_file, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--scheme", scheme, "Minority scheme")->check(CLI::IsMember({"gender", "youth"}));
    app.add_option("--beta", beta, "Accuracy/fairness balance for dl recommendations");
    app.add_option("--alpha", alpha, "IM threshold for heuristic recommendations");
    app.add_option("--n", n, "Recommendation list length");
    app.add_option("--seed", seed, "Base seed overriding every stage seed");
    app.add_option("--im-mode", im_mode, "Item index mode")->check(CLI::IsMember({"pooled", "scorediff"}));
    app.add_option("--um-mode", um_mode, "User index mode")->check(CLI::IsMember({"formula", "toy"}));
    app.add_option("--out", out, "Output directory");
    app.add_option("--ratings", ratings, "Ratings file (UserID::ItemID::Rating::Timestamp)");
    app.add_option("--users", users, "Users file (UserID::Gender::Age::Occupation::Zip)");
    app.add_option("--mode", recommend_mode, "Recommendation mode")->check(CLI::IsMember({"dl", "heuristic"}));
    app.add_option("--min-votes", min_votes, "Minimum decided votes per group side for a non-neutral item");
    app.add_option("--set", assignments, "Override any configuration key (key=value), repeatable");

    const std::vector<std::pair<fairrec::Stage, const char*>> stages{
        {fairrec::Stage::ingest, "Parse inputs, split votes, write snapshots"},
        {fairrec::Stage::indexes, "Item and user minority indexes, classification table, histograms"},
        {fairrec::Stage::train_mf, "Train the factor model"},
        {fairrec::Stage::train_mln, "Build the loss corpus and train the network"},
        {fairrec::Stage::recommend, "Write top-N lists (dl or heuristic)"},
        {fairrec::Stage::evaluate, "Group means, alpha curves, beta sweep"},
        {fairrec::Stage::all, "Run every stage in order"},
    };
    for (const auto& [stage, description] : stages) {
        app.add_subcommand(std::string(fairrec::to_string(stage)), description)->fallthrough();
    }

    if (argc > 1 && argv[1][0] != '-' && !fairrec::parse_stage(argv[1])) {
        std::cerr << "fairrec: usage error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
        return Exit::usage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "fairrec: usage error: " << e.what() << "\n\n" << app.help();
        return Exit::usage;
    }

    const auto stage = fairrec::parse_stage(app.get_subcommands().front()->get_name());
    try {
        fairrec::RunConfig cfg = config_file.empty() ? fairrec::RunConfig{} : fairrec::load_config(config_file);
        if (seed) cfg.set_base_seed(*seed);
        auto set = [&cfg](std::string_view key, const std::optional<std::string>& v) {
            if (v) fairrec::set_option(cfg, key, *v);
        };
        set("scheme", scheme);
        set("im_mode", im_mode);
        set("um_mode", um_mode);
        set("recommend", recommend_mode);
        if (ratings) cfg.ratings = *ratings;
        if (users) cfg.users = *users;
        if (out) cfg.out = *out;
        if (beta) cfg.beta = *beta;
        if (alpha) cfg.alpha = *alpha;
        if (n) cfg.n = *n;
        if (min_votes) cfg.thresholds.min_side_votes = *min_votes;
        for (const std::string& a : assignments) {
            const auto eq = a.find('=');
            if (eq == std::string::npos) throw fairrec::ConfigError("--set expects key=value, got '" + a + "'");
            fairrec::set_option(cfg, a.substr(0, eq), a.substr(eq + 1));
        }
        fairrec::run_stage(*stage, cfg, std::cout);
    } catch (const fairrec::ConfigError& e) {
        return fail(Exit::config, "config", e.what());
    } catch (const fairrec::IoError& e) {
        return fail(Exit::io, "I/O", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(Exit::io, "I/O", e.what());
    } catch (const fairrec::ParseError& e) {
        return fail(Exit::parse, "parse", e.what());
    } catch (const fairrec::DivergenceError& e) {
        return fail(Exit::divergence, "divergence", e.what());
    } catch (const std::exception& e) {
        return fail(Exit::usage, "unexpected", e.what());
    }
    return Exit::ok;
}
