// ksmc command line front end.
//
//   ksmc generate --config c.cfg --out-dir d      truth trajectories only
//   ksmc run      --config c.cfg --out-dir d      full campaign (truth + filters)
//   ksmc rates    --config c.cfg --mode n|dt ...  convergence sweeps
//   ksmc compare  --config c.cfg [--out-dir d]    multi-filter summary table
//
// The seed is taken from --seed-override, else the KSMC_SEED environment
// variable, else the config file; the source is recorded in the manifest.
// Exit codes: 0 ok, 2 config problem, 3 numeric failure, 4 I/O failure,
// 1 anything else.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ksmc/config.hpp"
#include "ksmc/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed_override = 0;
    bool have_seed_override = false;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonArgs& args, bool out_dir_required) {
    sub->add_option("--config", args.config_path, "campaign config file")->required();
    auto* out = sub->add_option("--out-dir", args.out_dir, "output directory");
    if (out_dir_required) out->required();
    sub->add_option("--seed-override", args.seed_override, "replace the config seed")
        ->each([&args](const std::string&) { args.have_seed_override = true; });
    sub->add_option("--jobs", args.jobs, "parallel seed workers")->check(CLI::PositiveNumber);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::int64_t parse_seed(const std::string& s, const std::string& origin) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ksmc::config_error(origin + ": bad seed value '" + s + "'");
    return v;
}

double parse_level(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !(v > 0))
        throw ksmc::config_error("--levels: bad entry '" + s + "'");
    return v;
}

// Returns the seed source tag and applies the winning override to cfg.
std::string resolve_seed(ksmc::ExperimentConfig& cfg, const CommonArgs& args) {
    if (args.have_seed_override) {
        cfg.seed = args.seed_override;
        return "cli";
    }
    if (const char* env = std::getenv("KSMC_SEED")) {
        cfg.seed = parse_seed(env, "KSMC_SEED");
        return "env";
    }
    return "config";
}

void print_sweep(const ksmc::SweepResult& res, const char* level_name) {
    std::printf("%-10s %14s\n", level_name, "error");
    for (std::size_t i = 0; i < res.levels.size(); ++i)
        std::printf("%-10g %14.6g\n", res.levels[i], res.errors[i]);
    std::printf("fit: slope=%.4f intercept=%.4f r2=%.4f\n", res.fit.slope,
                res.fit.intercept, res.fit.r_squared);
}

void write_sweep_csv(const ksmc::SweepResult& res, const std::string& out_dir,
                     const char* level_name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ksmc::io_error("cannot create output directory '" + out_dir + "'");
    const std::string path = out_dir + "/rates.csv";
    std::ofstream out(path);
    if (!out) throw ksmc::io_error("cannot write '" + path + "'");
    char buf[128];
    out << level_name << ",error\n";
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", res.levels[i], res.errors[i]);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "# slope=%.17g r2=%.17g\n", res.fit.slope,
                  res.fit.r_squared);
    out << buf;
    if (!out) throw ksmc::io_error("write failed for '" + path + "'");
}

int run_dispatch(int argc, char** argv) {
    CLI::App app{"Monte Carlo nonlinear filtering benchmarks"};
    app.require_subcommand(1);

    CommonArgs gen_args, run_args, rates_args, cmp_args;
    std::string rates_mode = "n";
    std::string rates_levels;
    int sweep_seeds = 8;
    std::vector<std::string> cmp_filters;

    auto* gen = app.add_subcommand("generate", "simulate truth trajectories only");
    add_common(gen, gen_args, true);
    auto* run = app.add_subcommand("run", "run the configured filters on fresh truth");
    add_common(run, run_args, true);
    auto* rates = app.add_subcommand("rates", "ensemble-size or step-size convergence sweep");
    add_common(rates, rates_args, false);
    rates->add_option("--mode", rates_mode, "'n' (ensemble size) or 'dt' (step size)")
        ->check(CLI::IsMember({"n", "dt"}));
    rates->add_option("--levels", rates_levels, "comma separated sweep levels")->required();
    rates->add_option("--sweep-seeds", sweep_seeds, "independent repetitions per level")
        ->check(CLI::PositiveNumber);
    auto* cmp = app.add_subcommand("compare", "run several filters, print a summary table");
    add_common(cmp, cmp_args, false);
    cmp->add_option("--filters", cmp_filters, "override the config filter list")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed() || run->parsed()) {
        const bool truth_only = gen->parsed();
        const CommonArgs& args = truth_only ? gen_args : run_args;
        ksmc::ExperimentConfig cfg = ksmc::load_experiment_config(args.config_path);
        const std::string seed_source = resolve_seed(cfg, args);
        const ksmc::CampaignResult result = ksmc::run_campaign(cfg, args.jobs, truth_only);
        const std::uint64_t mhash = ksmc::write_campaign(result, args.out_dir, seed_source);
        if (!truth_only) std::printf("%s", ksmc::render_summary(ksmc::summarize(result)).c_str());
        std::printf("wrote %s (manifest_hash=%016" PRIx64 ")\n", args.out_dir.c_str(), mhash);
        return 0;
    }

    if (rates->parsed()) {
        ksmc::ExperimentConfig cfg = ksmc::load_experiment_config(rates_args.config_path);
        resolve_seed(cfg, rates_args);
        ksmc::SweepResult res;
        const char* level_name;
        if (rates_mode == "n") {
            std::vector<int> sizes;
            for (const auto& tok : split(rates_levels, ',')) {
                const double v = parse_level(tok);
                if (v != static_cast<int>(v))
                    throw ksmc::config_error("--levels: ensemble sizes must be integers");
                sizes.push_back(static_cast<int>(v));
            }
            res = ksmc::n_sweep(cfg, sizes, sweep_seeds);
            level_name = "N";
        } else {
            std::vector<double> dts;
            for (const auto& tok : split(rates_levels, ',')) dts.push_back(parse_level(tok));
            res = ksmc::dt_sweep(cfg, dts, sweep_seeds);
            level_name = "dt";
        }
        print_sweep(res, level_name);
        if (!rates_args.out_dir.empty()) write_sweep_csv(res, rates_args.out_dir, level_name);
        return 0;
    }

    ksmc::ExperimentConfig cfg = ksmc::load_experiment_config(cmp_args.config_path);
    const std::string seed_source = resolve_seed(cfg, cmp_args);
    if (!cmp_filters.empty()) {
        cfg.filters = cmp_filters;
        cfg.validate();
    }
    const ksmc::CampaignResult result = ksmc::run_campaign(cfg, cmp_args.jobs, false);
    std::printf("%s", ksmc::render_summary(ksmc::summarize(result)).c_str());
    if (!cmp_args.out_dir.empty()) {
        const std::uint64_t mhash = ksmc::write_campaign(result, cmp_args.out_dir, seed_source);
        std::printf("wrote %s (manifest_hash=%016" PRIx64 ")\n", cmp_args.out_dir.c_str(), mhash);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_dispatch(argc, argv);
    } catch (const ksmc::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ksmc::invalid_model& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ksmc::numeric_overflow& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const ksmc::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
