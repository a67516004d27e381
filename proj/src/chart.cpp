#include "cosym/chart.hpp"

#include "cosym/errors.hpp"

#include <algorithm>

namespace cosym {

const char* to_string(SystemClass c) {
    switch (c) {
    case SystemClass::SimpleClosed: return "simple_closed";
    case SystemClass::MassTransfer: return "mass_transfer";
    case SystemClass::NonSimple: return "non_simple";
    case SystemClass::OpenSimple: return "open_simple";
    }
    return "?";
}

bool system_class_from_string(const std::string& name, SystemClass& out) {
    if (name == "simple_closed") out = SystemClass::SimpleClosed;
    else if (name == "mass_transfer") out = SystemClass::MassTransfer;
    else if (name == "non_simple") out = SystemClass::NonSimple;
    else if (name == "open_simple") out = SystemClass::OpenSimple;
    else return false;
    return true;
}

namespace {

// "q" for a singleton block, "q1", "q2", ... otherwise
void append_block(std::vector<std::string>& names, const char* base, std::size_t count) {
    if (count == 1) {
        names.emplace_back(base);
        return;
    }
    for (std::size_t i = 1; i <= count; ++i) names.push_back(base + std::to_string(i));
}

} // namespace

std::size_t ChartSpec::eta_count() const {
    return system_class == SystemClass::NonSimple ? subsystems : 1;
}

std::size_t ChartSpec::q_index(std::size_t i) const { return i; }
std::size_t ChartSpec::p_index(std::size_t i) const { return pairs + i; }
std::size_t ChartSpec::w_index(std::size_t k) const { return 2 * pairs + k; }
std::size_t ChartSpec::n_index(std::size_t k) const { return 2 * pairs + compartments + k; }
std::size_t ChartSpec::gamma_index(std::size_t a) const { return 2 * pairs + 2 * compartments + a; }

std::size_t ChartSpec::s_index(std::size_t a) const {
    if (system_class == SystemClass::SimpleClosed || system_class == SystemClass::MassTransfer)
        return 2 * pairs + 2 * compartments; // single S, no Gamma block
    return 2 * pairs + 2 * compartments + subsystems + a;
}

std::size_t ChartSpec::sigma_index(std::size_t a) const {
    return 2 * pairs + 2 * compartments + 2 * subsystems + a;
}

bool ChartSpec::has_w_block() const { return compartments > 0; }

bool ChartSpec::has_gamma_block() const {
    return system_class == SystemClass::NonSimple || system_class == SystemClass::OpenSimple;
}

std::size_t ChartSpec::index_of(const std::string& name) const {
    const auto it = std::find(coordinates.begin(), coordinates.end(), name);
    return it == coordinates.end() ? npos : static_cast<std::size_t>(it - coordinates.begin());
}

std::vector<std::string> ChartSpec::displacement_names() const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < compartments; ++k) out.push_back(coordinates[w_index(k)]);
    if (has_gamma_block()) {
        for (std::size_t a = 0; a < subsystems; ++a) {
            out.push_back(coordinates[gamma_index(a)]);
            out.push_back(coordinates[sigma_index(a)]);
        }
    }
    return out;
}

ChartSpec ChartSpec::make(SystemClass c, std::size_t pairs, std::size_t compartments,
                          std::size_t subsystems, std::size_t ports, std::size_t heat_sources) {
    if (pairs == 0) throw LayoutMismatch("chart needs at least one mechanical (q, p) pair");

    ChartSpec chart;
    chart.system_class = c;
    chart.pairs = pairs;

    switch (c) {
    case SystemClass::SimpleClosed:
        if (compartments != 0 || subsystems != 0 || ports != 0 || heat_sources != 0)
            throw LayoutMismatch("simple_closed chart takes only mechanical pairs and one entropy");
        break;
    case SystemClass::MassTransfer:
        if (compartments == 0)
            throw LayoutMismatch("mass_transfer chart needs at least one compartment");
        if (subsystems != 0 || ports != 0 || heat_sources != 0)
            throw LayoutMismatch("mass_transfer chart has no subsystem or port blocks");
        chart.compartments = compartments;
        break;
    case SystemClass::NonSimple:
        if (subsystems == 0)
            throw LayoutMismatch("non_simple chart needs at least one subsystem");
        if (compartments != 0 && compartments != subsystems)
            throw LayoutMismatch("non_simple chart carries one compartment per subsystem");
        if (ports != 0 || heat_sources != 0)
            throw LayoutMismatch("non_simple chart has no ports");
        chart.compartments = subsystems;
        chart.subsystems = subsystems;
        break;
    case SystemClass::OpenSimple:
        if (compartments > 1 || subsystems > 1)
            throw LayoutMismatch("open_simple chart has exactly one compartment and one entropy");
        chart.compartments = 1;
        chart.subsystems = 1;
        chart.ports = ports;
        chart.heat_sources = heat_sources;
        break;
    }

    auto& names = chart.coordinates;
    append_block(names, "q", chart.pairs);
    append_block(names, chart.velocity_side ? "qdot" : "p", chart.pairs);
    append_block(names, "W", chart.compartments);
    append_block(names, "N", chart.compartments);
    if (chart.has_gamma_block()) {
        append_block(names, "Gamma", chart.subsystems);
        append_block(names, "S", chart.subsystems);
        append_block(names, "Sigma", chart.subsystems);
    } else {
        names.emplace_back("S");
    }
    return chart;
}

ChartSpec ChartSpec::velocity_variant() const {
    ChartSpec v = *this;
    v.velocity_side = true;
    for (std::size_t i = 0; i < pairs; ++i) {
        std::string name = "qdot";
        if (pairs > 1) name += std::to_string(i + 1);
        v.coordinates[p_index(i)] = name;
    }
    return v;
}

ChartSpec ChartSpec::momentum_variant() const {
    ChartSpec m = *this;
    m.velocity_side = false;
    for (std::size_t i = 0; i < pairs; ++i) {
        std::string name = "p";
        if (pairs > 1) name += std::to_string(i + 1);
        m.coordinates[p_index(i)] = name;
    }
    return m;
}

} // namespace cosym
