#include "ctraj/parallel.hpp"
#include "ctraj/runs.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace ctraj;

namespace {

constexpr int kOk = 0, kConfigError = 1, kNumericalFailure = 2, kCheckFailure = 3;

struct Options {
    std::string config;
    unsigned threads = 0;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string selector = "all";
};

RunConfig load(const Options& o) {
    RunConfig c = o.config.empty() ? parse_config_string("") : parse_config_file(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    return c;
}

std::filesystem::path output_path(const RunConfig& c, const std::string& suffix) {
    std::filesystem::create_directories(c.output_dir);
    return std::filesystem::path(c.output_dir) / (c.output_prefix + suffix);
}

void write(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    f << text;
    std::cerr << "wrote " << path.string() << "\n";
}

int summarize(const SemiclassicalField& f) {
    int empty = 0, failed = 0;
    for (const auto& t : f.targets) {
        empty += t.empty;
        if (!t.error.empty()) {
            ++failed;
            std::cerr << "target " << t.X.transpose() << ": " << t.error << "\n";
        }
    }
    std::cerr << f.targets.size() << " targets, " << empty << " empty, " << failed << " failed, "
              << f.shooting_attempts() << " shooting attempts, " << f.newton_iterations() << " Newton iterations\n";
    return failed;
}

int cmd_propagate(const Options& o) {
    const RunConfig c = load(o);
    write(output_path(c, "_config.ini"), to_ini(c));
    const auto field = run_propagate(c);
    write(output_path(c, "_wavefunction.csv"), field_to_csv(field));
    summarize(field);
    return kOk;
}

int cmd_compare(const Options& o) {
    const RunConfig c = load(o);
    write(output_path(c, "_config.ini"), to_ini(c));
    const auto out = run_compare(c);
    write(output_path(c, "_wavefunction.csv"), field_to_csv(out.field));
    write(output_path(c, "_compare.json"), compare_to_json(c, out));
    write(output_path(c, "_oracle.csv"), grid_to_csv(out.oracle));
    write(output_path(c, "_oracle.json"), grid_metadata_json(out.oracle) + "\n");
    summarize(out.field);
    std::cout << "relative_L2 " << out.comparison.relative_L2 << " over " << out.comparison.used << " targets ("
              << out.comparison.excluded.size() << " excluded, " << out.comparison.transitions.size()
              << " in transition regions)\n";
    return kOk;
}

int cmd_checks(const Options& o) {
    const RunConfig c = load(o);
    const auto reports = run_checks(c, check_selector_from_string(o.selector));
    write(output_path(c, "_checks.json"), reports_to_json(reports) + "\n");
    bool ok = true;
    for (const auto& r : reports) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured " << r.measured << "  tolerance "
                  << r.tolerance << "\n";
        ok = ok && r.passed;
    }
    return ok ? kOk : kCheckFailure;
}

int cmd_propagator(const Options& o) {
    const RunConfig c = load(o);
    write(output_path(c, "_config.ini"), to_ini(c));
    const auto out = run_propagator(c);
    write(output_path(c, "_propagator.json"), propagator_to_json(out));
    std::cout << "P = " << out.overlap.P << "  normalized " << out.overlap.P_normalized << "  branches "
              << out.overlap.branches << "\n";
    return kOk;
}

int cmd_branches(const Options& o) {
    const RunConfig c = load(o);
    const auto field = run_propagate(c);
    write(output_path(c, "_branches.json"), branches_to_json(field));
    summarize(field);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-trajectory semiclassical wave packet propagation"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    app.add_option("--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
    app.add_option("--threads", o.threads, "worker threads (0: hardware)");
    app.add_option("--out", o.out, "output directory (overrides [output] dir)");
    auto* seed_opt = app.add_option("--seed", seed, "seed for jittered multi-start (overrides [search] seed)");

    // global options may also follow the subcommand; subcommands copy this at creation
    app.fallthrough();

    auto* propagate = app.add_subcommand("propagate", "semiclassical wave function on the target grid");
    auto* compare = app.add_subcommand("compare", "semiclassical field against the split-step oracle");
    auto* checks = app.add_subcommand("checks", "path-integral identity checks");
    checks->add_option("selector", o.selector, "determinant|ainv|moments|foc1|stirling|fsubst|all")
        ->check(CLI::IsMember({"determinant", "ainv", "moments", "foc1", "stirling", "fsubst", "all"}));
    auto* propagator = app.add_subcommand("propagator", "coherent-state overlap between [packet] and [final_packet]");
    auto* branches = app.add_subcommand("branches", "branch search diagnostics per target");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    if (*seed_opt) o.seed = seed;
    set_default_threads(o.threads);

    const auto start = std::chrono::steady_clock::now();
    int code = kOk;
    try {
        if (*propagate) code = cmd_propagate(o);
        if (*compare) code = cmd_compare(o);
        if (*checks) code = cmd_checks(o);
        if (*propagator) code = cmd_propagator(o);
        if (*branches) code = cmd_branches(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const bool config = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::UnsupportedOrder;
        return config ? kConfigError : kNumericalFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalFailure;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "elapsed " << secs << " s\n";
    return code;
}
