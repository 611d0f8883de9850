#include "rotwin/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rotwin/errors.hpp"

namespace rotwin {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

[[noreturn]] void fail(const std::string& origin, std::size_t row, const std::string& what) {
    throw ConfigError(origin + ": row " + std::to_string(row) + ": " + what);
}

double parse_number(const std::string& origin, std::size_t row, const std::string& column,
                    const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(origin, row, "column '" + column + "': cannot parse '" + text + "' as a number");
    }
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<Subject> parse_dataset(std::istream& in, std::span<const EndpointSpec> specs,
                                   const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(origin + ": empty dataset file");
    const std::vector<std::string> header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[lower(header[i])] = i;

    auto need = [&](const std::string& name) -> std::size_t {
        const auto it = col.find(name);
        if (it == col.end()) throw ConfigError(origin + ": missing column '" + name + "'");
        return it->second;
    };

    const std::size_t id_col = need("id");
    const std::size_t arm_col = need("arm");
    const auto stratum_it = col.find("stratum");
    const auto followup_it = col.find("followup");

    struct EndpointCols {
        std::size_t a = 0, b = 0; // time/event, or single value column in a
    };
    std::vector<EndpointCols> ecols;
    for (const auto& spec : specs) {
        EndpointCols ec;
        const std::string base = lower(spec.id);
        switch (spec.kind) {
            case EndpointKind::TimeToEvent:
                ec.a = need(base + "_time");
                ec.b = need(base + "_event");
                break;
            case EndpointKind::EventCount:
                ec.a = need(base + "_count");
                break;
            case EndpointKind::Continuous:
                ec.a = need(base + "_value");
                break;
        }
        ecols.push_back(ec);
    }

    std::vector<Subject> subjects;
    std::size_t row = 1;
    bool any_treated = false, any_control = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() < header.size())
            fail(origin, row, "expected " + std::to_string(header.size()) + " columns, found " +
                                  std::to_string(fields.size()));
        Subject s;
        s.id = fields[id_col];
        const std::string arm = lower(fields[arm_col]);
        if (arm == "treatment" || arm == "t") {
            s.arm = Arm::Treatment;
            any_treated = true;
        } else if (arm == "control" || arm == "c") {
            s.arm = Arm::Control;
            any_control = true;
        } else {
            fail(origin, row, "unknown arm label '" + fields[arm_col] + "'");
        }
        if (stratum_it != col.end() && !fields[stratum_it->second].empty())
            s.stratum = fields[stratum_it->second];
        if (followup_it != col.end() && !fields[followup_it->second].empty()) {
            const double fu = parse_number(origin, row, "followup", fields[followup_it->second]);
            if (fu < 0.0) fail(origin, row, "negative followup");
            s.followup = fu;
        }

        for (std::size_t e = 0; e < specs.size(); ++e) {
            const auto& spec = specs[e];
            switch (spec.kind) {
                case EndpointKind::TimeToEvent: {
                    const std::string tc = lower(spec.id) + "_time";
                    const std::string evc = lower(spec.id) + "_event";
                    const double t = parse_number(origin, row, tc, fields[ecols[e].a]);
                    if (t < 0.0) fail(origin, row, "column '" + tc + "': negative time");
                    const std::string& ev = fields[ecols[e].b];
                    if (ev != "0" && ev != "1")
                        fail(origin, row, "column '" + evc + "': event flag must be 0 or 1");
                    if (s.followup && t > *s.followup + 1e-9)
                        fail(origin, row, "column '" + tc + "': time exceeds followup");
                    s.outcomes.push_back(TimeToEventOutcome{t, ev == "1"});
                    break;
                }
                case EndpointKind::EventCount: {
                    const std::string cc = lower(spec.id) + "_count";
                    const double v = parse_number(origin, row, cc, fields[ecols[e].a]);
                    if (v < 0.0 || v != std::floor(v))
                        fail(origin, row, "column '" + cc + "': must be a nonnegative integer");
                    s.outcomes.push_back(EventCountOutcome{static_cast<long long>(v)});
                    break;
                }
                case EndpointKind::Continuous: {
                    const double v = parse_number(origin, row, lower(spec.id) + "_value",
                                                  fields[ecols[e].a]);
                    s.outcomes.push_back(ContinuousOutcome{v});
                    break;
                }
            }
        }
        subjects.push_back(std::move(s));
    }
    if (!any_treated || !any_control)
        throw ConfigError(origin + ": dataset must contain both treatment and control subjects");
    return subjects;
}

std::vector<Subject> parse_dataset_file(const std::string& path,
                                        std::span<const EndpointSpec> specs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    return parse_dataset(in, specs, path);
}

void write_dataset(std::ostream& out, std::span<const Subject> subjects,
                   std::span<const EndpointSpec> specs) {
    out << "id,arm,stratum";
    for (const auto& spec : specs) {
        switch (spec.kind) {
            case EndpointKind::TimeToEvent:
                out << "," << spec.id << "_time," << spec.id << "_event";
                break;
            case EndpointKind::EventCount:
                out << "," << spec.id << "_count";
                break;
            case EndpointKind::Continuous:
                out << "," << spec.id << "_value";
                break;
        }
    }
    out << ",followup\n";
    for (const auto& s : subjects) {
        out << s.id << "," << (s.arm == Arm::Treatment ? "treatment" : "control") << ","
            << s.stratum;
        for (std::size_t e = 0; e < specs.size(); ++e) {
            const Outcome& o = s.outcomes[e];
            switch (specs[e].kind) {
                case EndpointKind::TimeToEvent: {
                    const auto& v = std::get<TimeToEventOutcome>(o);
                    out << "," << format_full(v.time) << "," << (v.event ? 1 : 0);
                    break;
                }
                case EndpointKind::EventCount:
                    out << "," << std::get<EventCountOutcome>(o).count;
                    break;
                case EndpointKind::Continuous:
                    out << "," << format_full(std::get<ContinuousOutcome>(o).value);
                    break;
            }
        }
        out << ",";
        if (s.followup) out << format_full(*s.followup);
        out << "\n";
    }
}

void write_dataset_file(const std::string& path, std::span<const Subject> subjects,
                        std::span<const EndpointSpec> specs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file '" + path + "'");
    write_dataset(out, subjects, specs);
}

} // namespace rotwin
