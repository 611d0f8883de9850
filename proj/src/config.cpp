#include "rotwin/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rotwin/errors.hpp"

namespace rotwin {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& origin, const std::string& where,
                      const std::string& what) {
    throw ConfigError(origin + ": " + where + ": " + what);
}

EndpointKind parse_kind(const std::string& origin, const std::string& where,
                        const std::string& s) {
    if (s == "time_to_event") return EndpointKind::TimeToEvent;
    if (s == "event_count") return EndpointKind::EventCount;
    if (s == "continuous") return EndpointKind::Continuous;
    bad(origin, where, "unknown endpoint kind '" + s + "'");
}

Direction parse_direction(const std::string& origin, const std::string& where,
                          const std::string& s) {
    if (s == "larger_wins") return Direction::LargerWins;
    if (s == "smaller_wins") return Direction::SmallerWins;
    bad(origin, where, "unknown direction '" + s + "'");
}

GapEffect parse_effect(const std::string& origin, const std::string& where,
                       const std::string& s) {
    if (s == "homogeneous") return GapEffect::Homogeneous;
    if (s == "heterogeneous") return GapEffect::Heterogeneous;
    bad(origin, where, "unknown effect pattern '" + s + "'");
}

MethodFlags parse_methods(const std::string& origin, const json& arr) {
    MethodFlags mf;
    mf.rwr = false;
    for (const auto& m : arr) {
        const std::string name = m.get<std::string>();
        if (name == "rwr") mf.rwr = true;
        else if (name == "rnb") mf.rnb = true;
        else if (name == "rwo") mf.rwo = true;
        else if (name == "wr_orders") mf.wr_orders = true;
        else if (name == "wr_f") mf.wr_first = true;
        else if (name == "wr_l") mf.wr_last = true;
        else if (name == "logrank") mf.logrank = true;
        else bad(origin, "study.methods", "unknown method '" + name + "'");
    }
    if (!mf.rwr) bad(origin, "study.methods", "the method list must include 'rwr'");
    return mf;
}

StudyConfig parse_study_section(const std::string& origin, const json& root) {
    const json& sc = root.at("scenario");
    StudyConfig study;
    const std::string family = sc.value("family", std::string());
    if (family == "copula") {
        CopulaStudyGrid grid;
        CopulaScenario& base = grid.base;
        base.n_per_arm = sc.value("n_per_arm", base.n_per_arm);
        base.lambda_death = sc.value("lambda_death", base.lambda_death);
        if (sc.contains("lambda_nonfatal")) {
            const auto v = sc.at("lambda_nonfatal").get<std::vector<double>>();
            if (v.size() != 3) bad(origin, "scenario.lambda_nonfatal", "expected 3 values");
            std::copy(v.begin(), v.end(), base.lambda_nonfatal.begin());
        }
        base.beta = sc.value("beta", base.beta);
        base.alpha_death = sc.value("alpha_death", 0.0);
        base.accrual_days = sc.value("accrual_days", base.accrual_days);
        base.dropout_rate = sc.value("dropout_rate", base.dropout_rate);
        if (!sc.contains("study_days")) bad(origin, "scenario", "missing study_days");
        if (sc.at("study_days").is_array())
            grid.study_days = sc.at("study_days").get<std::vector<double>>();
        else
            grid.study_days.push_back(sc.at("study_days").get<double>());
        if (sc.contains("alpha_nonfatal")) {
            for (const auto& cfg : sc.at("alpha_nonfatal")) {
                const auto v = cfg.get<std::vector<double>>();
                if (v.size() != 3) bad(origin, "scenario.alpha_nonfatal", "expected 3 values per config");
                grid.alpha_nonfatal_configs.push_back({v[0], v[1], v[2]});
            }
        }
        study.grid = grid;
    } else if (family == "frailty") {
        FrailtyStudyGrid grid;
        FrailtyScenario& base = grid.base;
        base.n_per_arm = sc.value("n_per_arm", base.n_per_arm);
        base.lambda_death = sc.value("lambda_death", base.lambda_death);
        base.lambda_gap = sc.value("lambda_gap", base.lambda_gap);
        base.gamma = sc.value("gamma", base.gamma);
        base.study_days = sc.value("study_days", base.study_days);
        base.accrual_days = sc.value("accrual_days", base.accrual_days);
        base.dropout_rate = sc.value("dropout_rate", base.dropout_rate);
        if (!sc.contains("alpha_death")) bad(origin, "scenario", "missing alpha_death");
        if (sc.at("alpha_death").is_array())
            grid.alpha_death = sc.at("alpha_death").get<std::vector<double>>();
        else
            grid.alpha_death.push_back(sc.at("alpha_death").get<double>());
        if (sc.contains("j"))
            grid.j_values = sc.at("j").is_array() ? sc.at("j").get<std::vector<int>>()
                                                  : std::vector<int>{sc.at("j").get<int>()};
        else
            grid.j_values = {2};
        if (sc.contains("effects"))
            for (const auto& e : sc.at("effects"))
                grid.effects.push_back(parse_effect(origin, "scenario.effects", e.get<std::string>()));
        else
            grid.effects = {GapEffect::Homogeneous};
        study.grid = grid;
    } else {
        bad(origin, "scenario.family", "expected 'copula' or 'frailty'");
    }

    if (root.contains("study")) {
        const json& st = root.at("study");
        study.replicates = st.value("replicates", study.replicates);
        study.alpha = st.value("alpha", study.alpha);
        study.seed = st.value("seed", study.seed);
        study.reference_multiplier = st.value("reference_multiplier", study.reference_multiplier);
        study.max_failure_fraction = st.value("max_failure_fraction", study.max_failure_fraction);
        if (st.contains("methods")) study.methods = parse_methods(origin, st.at("methods"));
    }
    return study;
}

} // namespace

StudyConfigFile parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    StudyConfigFile cfg;
    try {
        cfg.schema_version = root.value("schema_version", 1);
        if (cfg.schema_version != 1)
            bad(origin, "schema_version", "unsupported version " + std::to_string(cfg.schema_version));
        cfg.alpha = root.value("alpha", 0.05);
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) bad(origin, "alpha", "must be in (0,1)");
        cfg.rotation_cap = root.value("rotation_cap", kDefaultRotationCap);

        if (root.contains("endpoints")) {
            std::map<std::string, int> index_of;
            for (std::size_t i = 0; i < root.at("endpoints").size(); ++i) {
                const json& e = root.at("endpoints")[i];
                const std::string where = "endpoints[" + std::to_string(i) + "]";
                EndpointSpec spec;
                if (!e.contains("id")) bad(origin, where, "missing id");
                spec.id = e.at("id").get<std::string>();
                spec.kind = parse_kind(origin, where, e.value("kind", std::string("time_to_event")));
                spec.direction =
                    parse_direction(origin, where, e.value("direction", std::string("larger_wins")));
                spec.margin = e.value("margin", 0.0);
                if (spec.margin < 0.0) bad(origin, where, "margin must be >= 0");
                if (!index_of.emplace(spec.id, static_cast<int>(i)).second)
                    bad(origin, where, "duplicate endpoint id '" + spec.id + "'");
                cfg.endpoints.push_back(std::move(spec));
            }
            if (root.contains("hierarchy")) {
                for (std::size_t b = 0; b < root.at("hierarchy").size(); ++b) {
                    const std::string where = "hierarchy[" + std::to_string(b) + "]";
                    std::vector<int> block;
                    for (const auto& name : root.at("hierarchy")[b]) {
                        const std::string id = name.get<std::string>();
                        const auto it = index_of.find(id);
                        if (it == index_of.end())
                            bad(origin, where, "unknown endpoint id '" + id + "'");
                        block.push_back(it->second);
                    }
                    cfg.hierarchy.blocks.push_back(std::move(block));
                }
            } else {
                // Default: fully prioritized in declaration order.
                for (int i = 0; i < static_cast<int>(cfg.endpoints.size()); ++i)
                    cfg.hierarchy.blocks.push_back({i});
            }
        }

        cfg.strata.stratified = root.value("stratified", false);
        if (root.contains("strata")) {
            const json& st = root.at("strata");
            cfg.strata.exclude_undersized = st.value("exclude_undersized", false);
            if (st.contains("weights"))
                for (const auto& [key, value] : st.at("weights").items()) {
                    const double w = value.get<double>();
                    if (w <= 0.0) bad(origin, "strata.weights." + key, "weight must be > 0");
                    cfg.strata.weights[key] = w;
                }
        }

        if (root.contains("bootstrap")) {
            const json& bs = root.at("bootstrap");
            cfg.bootstrap.replicates = bs.value("replicates", 0);
            cfg.bootstrap.seed = bs.value("seed", static_cast<std::uint64_t>(1));
        }

        if (root.contains("scenario")) cfg.study = parse_study_section(origin, root);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

StudyConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace rotwin
