#include "cosym/scenario.hpp"

#include "cosym/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace cosym {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct IniEntry {
    std::string key, value;
    std::size_t line = 0;
};
struct IniSection {
    std::string name;
    std::vector<IniEntry> entries;
};

// line-oriented: [section], key = value, full-line comments with # or ;
std::vector<IniSection> parse_ini(std::istream& in, const std::string& path,
                                  std::vector<Diagnostic>& errors) {
    std::vector<IniSection> sections;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        if (text.front() == '[') {
            if (text.back() != ']') {
                errors.push_back({"ini-syntax", path + ":" + std::to_string(line_no) +
                                                    ": unterminated section header"});
                continue;
            }
            sections.push_back({trim(text.substr(1, text.size() - 2)), {}});
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            errors.push_back({"ini-syntax", path + ":" + std::to_string(line_no) +
                                                ": expected 'key = value'"});
            continue;
        }
        if (sections.empty()) {
            errors.push_back({"ini-syntax", path + ":" + std::to_string(line_no) +
                                                ": entry before any [section]"});
            continue;
        }
        IniEntry entry{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line_no};
        if (entry.key.empty() || entry.value.empty()) {
            errors.push_back({"ini-syntax", path + ":" + std::to_string(line_no) +
                                                ": empty key or value"});
            continue;
        }
        for (const IniEntry& prev : sections.back().entries)
            if (prev.key == entry.key)
                errors.push_back({"duplicate-key",
                                  path + ":" + std::to_string(line_no) + ": key '" + entry.key +
                                      "' already set in [" + sections.back().name + "]"});
        sections.back().entries.push_back(std::move(entry));
    }
    return sections;
}

// comma-separated expression list (expressions never contain commas)
std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string current;
    for (char c : value) {
        if (c == ',') {
            out.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    out.push_back(trim(current));
    return out;
}

class Builder {
public:
    explicit Builder(std::string path) : path_(std::move(path)) {}

    ScenarioLoad run() {
        std::ifstream in(path_);
        if (!in) {
            fail("file-io", "cannot open '" + path_ + "'");
            return finish();
        }
        sections_ = parse_ini(in, path_, errors_);
        if (!errors_.empty()) return finish();

        check_section_names();
        read_system();
        read_params();
        if (!errors_.empty()) return finish();

        build_energy_and_laws();
        if (!errors_.empty()) return finish();

        read_state();
        read_integrator();
        read_tolerances();
        read_output();
        return finish();
    }

private:
    void fail(const std::string& code, const std::string& message) {
        errors_.push_back({code, message});
    }

    const IniSection* section(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return &s;
        return nullptr;
    }

    const std::string* value(const std::string& section_name, const std::string& key) const {
        const IniSection* s = section(section_name);
        if (!s) return nullptr;
        for (const auto& e : s->entries)
            if (e.key == key) return &e.value;
        return nullptr;
    }

    bool parse_double(const std::string& text, const std::string& where, double& out) {
        char* end = nullptr;
        out = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0' || !std::isfinite(out)) {
            fail("bad-number", where + ": '" + text + "' is not a finite number");
            return false;
        }
        return true;
    }

    bool parse_count(const std::string& text, const std::string& where, std::size_t& out) {
        double v = 0.0;
        if (!parse_double(text, where, v)) return false;
        if (v < 0.0 || std::floor(v) != v || v > 1e6) {
            fail("bad-count", where + ": '" + text + "' is not a small nonnegative integer");
            return false;
        }
        out = static_cast<std::size_t>(v);
        return true;
    }

    void check_section_names() {
        static const std::set<std::string> known = {"system",     "params", "forces", "fluxes",
                                                    "state",      "integrator", "output",
                                                    "tolerances"};
        for (const auto& s : sections_)
            if (!known.count(s.name)) fail("unknown-section", "unknown section [" + s.name + "]");
        if (!section("system")) fail("missing-key", "missing [system] section");
        if (!section("state")) fail("missing-key", "missing [state] section");
        if (!section("integrator")) fail("missing-key", "missing [integrator] section");
    }

    void read_system() {
        const IniSection* sys = section("system");
        if (!sys) return;
        static const std::set<std::string> known = {"class",      "pairs",   "compartments",
                                                    "subsystems", "ports",   "sources",
                                                    "hamiltonian", "lagrangian"};
        for (const auto& e : sys->entries)
            if (!known.count(e.key))
                fail("unknown-key", "[system] has no key '" + e.key + "'");

        const std::string* cls = value("system", "class");
        if (!cls || !system_class_from_string(*cls, class_)) {
            fail("bad-class", "[system] class must be one of simple_closed, mass_transfer, "
                              "non_simple, open_simple");
            return;
        }
        const std::string* pairs = value("system", "pairs");
        if (!pairs || !parse_count(*pairs, "[system] pairs", pairs_)) {
            if (!pairs) fail("missing-key", "[system] needs 'pairs'");
            return;
        }
        if (const std::string* v = value("system", "compartments"))
            parse_count(*v, "[system] compartments", compartments_);
        if (const std::string* v = value("system", "subsystems"))
            parse_count(*v, "[system] subsystems", subsystems_);
        if (const std::string* v = value("system", "ports"))
            parse_count(*v, "[system] ports", ports_);
        if (const std::string* v = value("system", "sources"))
            parse_count(*v, "[system] sources", sources_);

        const std::string* h = value("system", "hamiltonian");
        const std::string* l = value("system", "lagrangian");
        if (static_cast<bool>(h) == static_cast<bool>(l)) {
            fail("exclusive-energy",
                 "[system] needs exactly one of 'hamiltonian' or 'lagrangian'");
            return;
        }
        lagrangian_side_ = (l != nullptr);
        energy_src_ = lagrangian_side_ ? *l : *h;

        try {
            momentum_chart_ = ChartSpec::make(class_, pairs_, compartments_, subsystems_,
                                              ports_, sources_);
        } catch (const LayoutMismatch& e) {
            fail("layout", e.what());
        }
    }

    void read_params() {
        const IniSection* s = section("params");
        if (!s) return;
        std::optional<ChartSpec> velocity;
        if (momentum_chart_) velocity = momentum_chart_->velocity_variant();
        for (const auto& e : s->entries) {
            double v = 0.0;
            if (!parse_double(e.value, "[params] " + e.key, v)) continue;
            if (momentum_chart_ && (momentum_chart_->index_of(e.key) != ChartSpec::npos ||
                                    velocity->index_of(e.key) != ChartSpec::npos))
                fail("param-shadows-coordinate",
                     "[params] '" + e.key + "' collides with a chart coordinate");
            params_.names.push_back(e.key);
            params_.values.push_back(v);
        }
    }

    // parse an expression against a chart, turning parser faults into diagnostics
    std::optional<expr::Ast> parse_expr(const ChartSpec& chart, const std::string& src,
                                        const std::string& where) {
        try {
            return expr::parse(src, params_.vocabulary(chart));
        } catch (const UnknownVariable& e) {
            fail("unknown-variable", where + ": " + e.what());
        } catch (const SyntaxError& e) {
            fail("expr-syntax", where + ": " + e.what());
        } catch (const Error& e) {
            fail("expr-syntax", where + ": " + e.what());
        }
        return std::nullopt;
    }

    bool parse_indexed_key(const std::string& key, const std::string& prefix, std::size_t count,
                           std::size_t& index, const std::string& where) {
        const std::string tail = key.substr(prefix.size());
        std::size_t parsed = 0;
        if (!parse_count(tail, where, parsed)) return false;
        if (parsed == 0 || parsed > count) {
            fail("bad-count", where + ": index " + tail + " out of range");
            return false;
        }
        index = parsed - 1;
        return true;
    }

    void read_forces(const ChartSpec& law_chart) {
        const IniSection* s = section("forces");
        if (!s) return;
        const std::size_t eta_count = law_chart.eta_count();
        forces_.friction.assign(eta_count, {});
        bool any_friction = false;
        for (const auto& e : s->entries) {
            if (e.key == "external") {
                const std::vector<std::string> list = split_list(e.value);
                if (list.size() != law_chart.pairs) {
                    fail("bad-count", "[forces] external needs one component per pair");
                    continue;
                }
                for (const auto& src : list)
                    if (auto ast = parse_expr(law_chart, src, "[forces] external"))
                        forces_.external.push_back(std::move(*ast));
                continue;
            }
            std::size_t row = 0;
            if (e.key == "friction") {
                if (eta_count != 1) {
                    fail("bad-count",
                         "[forces] use friction_1 ... friction_" + std::to_string(eta_count) +
                             " for this class");
                    continue;
                }
            } else if (e.key.rfind("friction_", 0) == 0) {
                if (!parse_indexed_key(e.key, "friction_", eta_count, row,
                                       "[forces] " + e.key))
                    continue;
            } else {
                fail("unknown-key", "[forces] has no key '" + e.key + "'");
                continue;
            }
            const std::vector<std::string> list = split_list(e.value);
            if (list.size() != law_chart.pairs) {
                fail("bad-count", "[forces] " + e.key + " needs one component per pair");
                continue;
            }
            forces_.friction[row].clear();
            for (const auto& src : list)
                if (auto ast = parse_expr(law_chart, src, "[forces] " + e.key))
                    forces_.friction[row].push_back(std::move(*ast));
            any_friction = true;
        }
        if (!any_friction) {
            forces_.friction.clear();
        } else {
            // rows never touched become explicit zeros
            for (auto& row : forces_.friction)
                if (row.empty())
                    for (std::size_t i = 0; i < law_chart.pairs; ++i)
                        row.push_back(expr::parse("0", params_.vocabulary(law_chart)));
        }
    }

    void read_fluxes(const ChartSpec& law_chart) {
        const IniSection* s = section("fluxes");
        std::vector<std::optional<std::array<expr::Ast, 4>>> ports(ports_);
        std::vector<std::optional<std::array<expr::Ast, 2>>> sources(sources_);
        if (s) {
            std::set<std::pair<std::size_t, std::size_t>> matter_pairs;
            for (const auto& e : s->entries) {
                if (e.key.rfind("matter_", 0) == 0) {
                    std::size_t from = 0, to = 0;
                    if (!read_pair_key(e.key, "matter_", law_chart.compartments, from, to))
                        continue;
                    if (from >= to) {
                        fail("flux-pair",
                             "[fluxes] " + e.key +
                                 ": only the lower-index ordering may be supplied; the "
                                 "mirrored rate is implied by antisymmetry");
                        continue;
                    }
                    if (!matter_pairs.insert({from, to}).second) {
                        fail("flux-pair", "[fluxes] duplicate matter entry " + e.key);
                        continue;
                    }
                    if (auto ast = parse_expr(law_chart, e.value, "[fluxes] " + e.key))
                        fluxes_.matter.push_back({from, to, std::move(*ast)});
                } else if (e.key.rfind("heat_", 0) == 0) {
                    std::size_t row = 0, col = 0;
                    if (!read_pair_key(e.key, "heat_", law_chart.subsystems, row, col)) continue;
                    if (row == col) {
                        fail("flux-pair", "[fluxes] " + e.key +
                                              ": the diagonal is derived from the column sums");
                        continue;
                    }
                    if (auto ast = parse_expr(law_chart, e.value, "[fluxes] " + e.key))
                        fluxes_.heat.push_back({row, col, std::move(*ast)});
                } else if (e.key.rfind("port_", 0) == 0) {
                    std::size_t index = 0;
                    if (!parse_indexed_key(e.key, "port_", ports_, index, "[fluxes] " + e.key))
                        continue;
                    const std::vector<std::string> list = split_list(e.value);
                    if (list.size() != 4) {
                        fail("bad-count",
                             "[fluxes] " + e.key +
                                 " needs: flow, chemical potential, temperature, molar entropy");
                        continue;
                    }
                    std::array<std::optional<expr::Ast>, 4> parsed;
                    for (std::size_t i = 0; i < 4; ++i)
                        parsed[i] = parse_expr(law_chart, list[i], "[fluxes] " + e.key);
                    if (parsed[0] && parsed[1] && parsed[2] && parsed[3])
                        ports[index] = std::array<expr::Ast, 4>{*parsed[0], *parsed[1],
                                                                *parsed[2], *parsed[3]};
                } else if (e.key.rfind("source_", 0) == 0) {
                    std::size_t index = 0;
                    if (!parse_indexed_key(e.key, "source_", sources_, index,
                                           "[fluxes] " + e.key))
                        continue;
                    const std::vector<std::string> list = split_list(e.value);
                    if (list.size() != 2) {
                        fail("bad-count",
                             "[fluxes] " + e.key + " needs: entropy flow, temperature");
                        continue;
                    }
                    auto flow = parse_expr(law_chart, list[0], "[fluxes] " + e.key);
                    auto temp = parse_expr(law_chart, list[1], "[fluxes] " + e.key);
                    if (flow && temp) sources[index] = std::array<expr::Ast, 2>{*flow, *temp};
                } else {
                    fail("unknown-key", "[fluxes] has no key '" + e.key + "'");
                }
            }
        }
        for (std::size_t a = 0; a < ports_; ++a) {
            if (!ports[a]) {
                fail("missing-key", "[fluxes] needs port_" + std::to_string(a + 1));
                continue;
            }
            fluxes_.ports.push_back(
                {(*ports[a])[0], (*ports[a])[1], (*ports[a])[2], (*ports[a])[3]});
        }
        for (std::size_t b = 0; b < sources_; ++b) {
            if (!sources[b]) {
                fail("missing-key", "[fluxes] needs source_" + std::to_string(b + 1));
                continue;
            }
            fluxes_.sources.push_back({(*sources[b])[0], (*sources[b])[1]});
        }
    }

    bool read_pair_key(const std::string& key, const std::string& prefix, std::size_t count,
                       std::size_t& first, std::size_t& second) {
        const std::string tail = key.substr(prefix.size());
        const std::size_t underscore = tail.find('_');
        if (underscore == std::string::npos) {
            fail("bad-count", "[fluxes] " + key + " needs two indices");
            return false;
        }
        std::size_t a = 0, b = 0;
        if (!parse_count(tail.substr(0, underscore), "[fluxes] " + key, a) ||
            !parse_count(tail.substr(underscore + 1), "[fluxes] " + key, b))
            return false;
        if (a == 0 || b == 0 || a > count || b > count) {
            fail("bad-count", "[fluxes] " + key + ": index out of range");
            return false;
        }
        first = a - 1;
        second = b - 1;
        return true;
    }

    void build_energy_and_laws() {
        if (!momentum_chart_) return;
        const ChartSpec law_chart = *momentum_chart_; // laws use momentum-side names
        read_forces(law_chart);
        read_fluxes(law_chart);
        if (!errors_.empty()) return;

        const ChartSpec energy_chart =
            lagrangian_side_ ? momentum_chart_->velocity_variant() : *momentum_chart_;
        auto energy_ast = parse_expr(energy_chart, energy_src_,
                                     lagrangian_side_ ? "[system] lagrangian"
                                                      : "[system] hamiltonian");
        if (!energy_ast) return;
        auto field = std::make_shared<ExprScalarField>(
            std::move(*energy_ast), energy_chart.dimension(), params_.values);

        try {
            if (lagrangian_side_) {
                lagrangian_.emplace(LagrangianSystem::make(*momentum_chart_, field, forces_,
                                                           fluxes_, params_));
            } else {
                system_.emplace(SystemInstance::make(*momentum_chart_, field, forces_, fluxes_,
                                                     params_));
            }
        } catch (const LayoutMismatch& e) {
            fail("layout", e.what());
        } catch (const Error& e) {
            fail("layout", e.what());
        }
    }

    void read_state() {
        const IniSection* s = section("state");
        if (!s || !momentum_chart_) return;
        const ChartSpec chart =
            lagrangian_side_ ? momentum_chart_->velocity_variant() : *momentum_chart_;
        std::map<std::string, double> given;
        for (const auto& e : s->entries) {
            if (chart.index_of(e.key) == ChartSpec::npos) {
                fail("state-unknown", "[state] '" + e.key + "' is not a chart coordinate");
                continue;
            }
            double v = 0.0;
            if (parse_double(e.value, "[state] " + e.key, v)) given[e.key] = v;
        }
        initial_state_.clear();
        for (const auto& name : chart.coordinates) {
            const auto it = given.find(name);
            if (it == given.end()) {
                fail("state-missing", "[state] is missing coordinate '" + name + "'");
                return;
            }
            initial_state_.push_back(it->second);
        }
    }

    void read_integrator() {
        const IniSection* s = section("integrator");
        if (!s) return;
        static const std::set<std::string> known = {"scheme", "dt",        "rel_tol",
                                                    "abs_tol", "t_end",    "max_steps"};
        for (const auto& e : s->entries) {
            if (!known.count(e.key)) {
                fail("unknown-key", "[integrator] has no key '" + e.key + "'");
                continue;
            }
            if (e.key == "scheme") {
                if (e.value == "rk4") integrator_.scheme = IntegratorConfig::Scheme::Rk4;
                else if (e.value == "rk45") integrator_.scheme = IntegratorConfig::Scheme::Rk45;
                else fail("integrator-invalid", "[integrator] scheme must be rk4 or rk45");
                continue;
            }
            double v = 0.0;
            if (!parse_double(e.value, "[integrator] " + e.key, v)) continue;
            if (e.key == "dt") integrator_.dt = v;
            else if (e.key == "rel_tol") integrator_.rel_tol = v;
            else if (e.key == "abs_tol") integrator_.abs_tol = v;
            else if (e.key == "t_end") integrator_.t_end = v;
            else if (e.key == "max_steps") integrator_.max_steps = static_cast<std::size_t>(v);
        }
        try {
            integrator_.validate();
        } catch (const Error& e) {
            fail("integrator-invalid", e.what());
        }
    }

    void read_tolerances() {
        const IniSection* s = section("tolerances");
        if (!s) return;
        std::map<std::string, double*> slots = {
            {"entropy_identity", &tolerances_.entropy_identity},
            {"oracle_gap", &tolerances_.oracle_gap},
            {"energy_balance", &tolerances_.energy_balance},
            {"energy_drift", &tolerances_.energy_drift},
            {"matter_drift", &tolerances_.matter_drift},
            {"gauge_gap", &tolerances_.gauge_gap},
            {"bookkeeping", &tolerances_.bookkeeping},
            {"euler_lagrange", &tolerances_.euler_lagrange},
            {"monotonicity_slack", &tolerances_.monotonicity_slack},
            {"legendre_transport", &legendre_tolerance_},
        };
        for (const auto& e : s->entries) {
            const auto it = slots.find(e.key);
            if (it == slots.end()) {
                fail("unknown-key", "[tolerances] has no key '" + e.key + "'");
                continue;
            }
            double v = 0.0;
            if (parse_double(e.value, "[tolerances] " + e.key, v)) {
                if (v <= 0.0)
                    fail("bad-number", "[tolerances] " + e.key + " must be positive");
                else
                    *it->second = v;
            }
        }
    }

    void read_output() {
        const IniSection* s = section("output");
        const std::string stem = std::filesystem::path(path_).stem().string();
        series_name_ = stem + "_series.csv";
        report_name_ = stem + "_report.txt";
        if (!s) return;
        for (const auto& e : s->entries) {
            if (e.key == "series") series_name_ = e.value;
            else if (e.key == "report") report_name_ = e.value;
            else fail("unknown-key", "[output] has no key '" + e.key + "'");
        }
    }

    ScenarioLoad finish() {
        ScenarioLoad out;
        out.errors = std::move(errors_);
        if (!out.errors.empty()) return out;

        ScenarioConfig cfg;
        cfg.name = std::filesystem::path(path_).stem().string();
        cfg.path = path_;
        cfg.system_class = class_;
        cfg.lagrangian_side = lagrangian_side_;
        cfg.system = std::move(system_);
        cfg.lagrangian = std::move(lagrangian_);
        cfg.initial_state = std::move(initial_state_);
        cfg.integrator = integrator_;
        cfg.tolerances = tolerances_;
        cfg.legendre_tolerance = legendre_tolerance_;
        cfg.series_name = series_name_;
        cfg.report_name = report_name_;
        out.config = std::move(cfg);
        return out;
    }

    std::string path_;
    std::vector<IniSection> sections_;
    std::vector<Diagnostic> errors_;

    SystemClass class_ = SystemClass::SimpleClosed;
    std::size_t pairs_ = 0, compartments_ = 0, subsystems_ = 0, ports_ = 0, sources_ = 0;
    bool lagrangian_side_ = false;
    std::string energy_src_;
    std::optional<ChartSpec> momentum_chart_;
    ParameterSet params_;
    ForceSpec forces_;
    FluxSpec fluxes_;
    std::optional<SystemInstance> system_;
    std::optional<LagrangianSystem> lagrangian_;
    std::vector<double> initial_state_;
    IntegratorConfig integrator_;
    Tolerances tolerances_;
    double legendre_tolerance_ = 1e-6;
    std::string series_name_, report_name_;
};

} // namespace

ScenarioLoad load_scenario(const std::string& path) {
    return Builder(path).run();
}

void write_series_csv(std::ostream& os, const Trajectory& traj, const ChartSpec& chart) {
    const std::string energy = chart.velocity_side ? "E_L" : "H";
    os << "t";
    for (const auto& name : chart.coordinates) os << "," << name;
    os << "," << energy;
    for (const auto& name : traj.diagnostic_names)
        if (name != energy) os << "," << name;
    os << "\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << g17(traj.times[i]);
        for (double v : traj.states[i]) os << "," << g17(v);
        os << "," << g17(traj.diagnostic(i, energy));
        for (std::size_t d = 0; d < traj.diagnostic_names.size(); ++d)
            if (traj.diagnostic_names[d] != energy) os << "," << g17(traj.diagnostics[i][d]);
        os << "\n";
    }
}

void write_report(std::ostream& os, const ScenarioConfig& cfg, const Trajectory& traj,
                  const InvariantReport& report, const RunSummary& summary) {
    os << "scenario = " << cfg.name << "\n";
    os << "class = " << to_string(cfg.system_class) << "\n";
    os << "picture = " << (cfg.lagrangian_side ? "lagrangian" : "hamiltonian") << "\n";
    os << "seed = " << summary.seed << "\n";
    os << "status = " << summary.status << "\n";
    if (!summary.detail.empty()) os << "detail = " << summary.detail << "\n";
    os << "steps = " << (traj.size() == 0 ? 0 : traj.size() - 1) << "\n";
    os << "t_final = " << (traj.times.empty() ? "none" : g17(traj.times.back())) << "\n";
    for (const auto& e : report.entries) {
        os << "invariant." << e.name << ".max = " << g17(e.max_residual) << "\n";
        os << "invariant." << e.name << ".at_t = " << g17(e.at_time) << "\n";
        os << "invariant." << e.name << ".tol = " << g17(e.tolerance) << "\n";
        os << "invariant." << e.name << ".pass = " << (e.pass ? "true" : "false") << "\n";
    }
    const bool ok = summary.status == "completed" && report.pass();
    os << "overall = " << (ok ? "PASS" : "FAIL") << "\n";
}

} // namespace cosym
