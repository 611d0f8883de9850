#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rotwin/config.hpp"
#include "rotwin/dataset.hpp"
#include "rotwin/errors.hpp"
#include "rotwin/report.hpp"
#include "rotwin/simgen.hpp"
#include "rotwin/study.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rotwin;

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    bool seed_given = false;
    int bootstrap = -1;
    bool stratified = false;
    bool exclude_undersized = false;
    bool paper_scale = false;
    int threads = 0;
    std::string dump_dataset;
};

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

int cmd_analyze(const CommonArgs& args) {
    const StudyConfigFile cfg = load_config(args.config_path);
    if (cfg.endpoints.empty())
        throw ConfigError(args.config_path + ": analyze requires an endpoints section");
    const auto subjects = parse_dataset_file(args.data_path, cfg.endpoints);

    AnalysisOptions opt;
    opt.alpha = cfg.alpha;
    opt.stratified = cfg.strata.stratified || args.stratified;
    opt.exclude_undersized = cfg.strata.exclude_undersized || args.exclude_undersized;
    opt.bootstrap_replicates = args.bootstrap >= 0 ? args.bootstrap : cfg.bootstrap.replicates;
    opt.seed = args.seed_given ? args.seed : cfg.bootstrap.seed;
    opt.threads = args.threads;
    opt.rotation_cap = cfg.rotation_cap;
    opt.stratum_weights = cfg.strata.weights;

    const AnalysisReport report = analyze(subjects, cfg.endpoints, cfg.hierarchy, opt);
    const std::string text = report_to_text(report);
    std::cout << text;
    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        std::ofstream jf(fs::path(args.out_dir) / "report.json");
        if (!jf) throw IoError("cannot write report.json under " + args.out_dir);
        jf << report_to_json(report).dump(2) << "\n";
        write_text_file(fs::path(args.out_dir) / "report.txt", text);
    }
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    StudyConfigFile cfg = load_config(args.config_path);
    if (!cfg.study)
        throw ConfigError(args.config_path + ": simulate requires a scenario section");
    StudyConfig study = *cfg.study;
    if (args.seed_given) study.seed = args.seed;
    study.threads = args.threads;
    if (args.paper_scale) {
        study.replicates = 5000;
        if (std::holds_alternative<CopulaStudyGrid>(study.grid))
            std::get<CopulaStudyGrid>(study.grid).base.n_per_arm = 600;
        else
            std::get<FrailtyStudyGrid>(study.grid).base.n_per_arm = 600;
    }

    if (!args.dump_dataset.empty()) {
        // One generated dataset from the first grid cell, in the same CSV
        // schema `analyze` ingests.
        if (std::holds_alternative<CopulaStudyGrid>(study.grid)) {
            const auto& grid = std::get<CopulaStudyGrid>(study.grid);
            CopulaScenario scenario = grid.base;
            if (!grid.study_days.empty()) scenario.study_days = grid.study_days.front();
            if (!grid.alpha_nonfatal_configs.empty())
                scenario.alpha_nonfatal = grid.alpha_nonfatal_configs.front();
            const auto data = generate_copula_dataset(scenario, study.seed);
            write_dataset_file(args.dump_dataset, data, copula_endpoints());
        } else {
            const auto& grid = std::get<FrailtyStudyGrid>(study.grid);
            FrailtyScenario scenario = grid.base;
            scenario.alpha_death = grid.alpha_death.front();
            scenario.max_recurrences = grid.j_values.front();
            scenario.alpha_gap.assign(static_cast<std::size_t>(scenario.max_recurrences), 0.0);
            if (grid.effects.front() == GapEffect::Homogeneous)
                std::fill(scenario.alpha_gap.begin(), scenario.alpha_gap.end(),
                          scenario.alpha_death);
            else
                scenario.alpha_gap[0] = scenario.alpha_death;
            const auto data = generate_frailty_dataset(scenario, study.seed);
            write_dataset_file(args.dump_dataset, data, frailty_endpoints());
        }
        std::cout << "dataset written to " << args.dump_dataset << "\n";
        return 0;
    }

    const StudyResult result = run_study(study);
    const std::string out = args.out_dir.empty() ? std::string("study_out") : args.out_dir;
    emit_results(result, out);
    std::cout << "study complete: " << result.cells.size() << " cells, " << result.replicates
              << " replicates each; results under " << out << "\n";
    for (const auto& cell : result.cells) {
        std::cout << "  " << cell.key.label() << ": ";
        for (const auto& m : cell.methods)
            std::cout << m.method << "=" << m.rejection_rate << " ";
        std::cout << "\n";
    }
    return 0;
}

int cmd_rotations(const CommonArgs& args) {
    const StudyConfigFile cfg = load_config(args.config_path);
    if (cfg.endpoints.empty())
        throw ConfigError(args.config_path + ": rotations requires an endpoints section");
    const RotationSet set = build_rotation_set(cfg.hierarchy, cfg.rotation_cap);
    std::cout << set.rotation_count() << " rotations over " << set.endpoint_count
              << " endpoints\n";
    for (std::size_t k = 0; k < set.orders.size(); ++k) {
        std::cout << "rotation " << (k + 1) << ": ";
        std::size_t block = 0;
        for (std::size_t pos = 0; pos < set.orders[k].size(); ++pos) {
            if (block < set.block_spans.size() &&
                static_cast<int>(pos) == set.block_spans[block].second) {
                std::cout << " | ";
                ++block;
            } else if (pos) {
                std::cout << ", ";
            }
            std::cout << cfg.endpoints[static_cast<std::size_t>(set.orders[k][pos])].id;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    const StudyConfigFile cfg = load_config(args.config_path);
    bool ok = true;
    if (!cfg.endpoints.empty()) {
        const auto findings = validate_hierarchy(cfg.hierarchy, cfg.endpoints, cfg.rotation_cap);
        for (const auto& f : findings) {
            std::cout << "finding: " << f.message << "\n";
            ok = false;
        }
    }
    if (cfg.study) std::cout << "scenario section: ok\n";
    if (!args.data_path.empty()) {
        if (cfg.endpoints.empty())
            throw ConfigError(args.config_path + ": cannot validate data without endpoints");
        const auto subjects = parse_dataset_file(args.data_path, cfg.endpoints);
        std::cout << "dataset: " << subjects.size() << " subjects parsed\n";
    }
    std::cout << (ok ? "configuration valid\n" : "configuration invalid\n");
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotation win statistics: analysis and simulation"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool needs_data) {
        sub->add_option("--config", args.config_path, "study configuration file (JSON)")
            ->required();
        if (needs_data)
            sub->add_option("--data", args.data_path, "subject-level CSV dataset");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
            args.seed_given = true;
        });
        sub->add_option("--threads", args.threads, "worker threads (0 = auto)");
    };

    CLI::App* analyze_cmd = app.add_subcommand("analyze", "analyze a dataset");
    add_common(analyze_cmd, true);
    analyze_cmd->get_option("--data")->required();
    analyze_cmd->add_option("--bootstrap", args.bootstrap, "bootstrap replicate count");
    analyze_cmd->add_flag("--stratified", args.stratified, "stratify by the stratum column");
    analyze_cmd->add_flag("--exclude-undersized-strata", args.exclude_undersized,
                          "drop strata with fewer than 2 subjects per arm");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run a Monte Carlo study");
    add_common(simulate_cmd, false);
    simulate_cmd->add_flag("--paper-scale", args.paper_scale,
                           "N=1200 and 5000 replicates instead of the desk-scale defaults");
    simulate_cmd->add_option("--dump-dataset", args.dump_dataset,
                             "write one generated dataset as CSV and exit");

    CLI::App* rotations_cmd = app.add_subcommand("rotations", "print the rotation set");
    add_common(rotations_cmd, false);

    CLI::App* validate_cmd = app.add_subcommand("validate", "lint a config and optional dataset");
    add_common(validate_cmd, true);

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(analyze_cmd)) return cmd_analyze(args);
        if (app.got_subcommand(simulate_cmd)) return cmd_simulate(args);
        if (app.got_subcommand(rotations_cmd)) return cmd_rotations(args);
        if (app.got_subcommand(validate_cmd)) return cmd_validate(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
