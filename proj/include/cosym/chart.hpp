#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cosym {

/// The four system classes the engine knows how to assemble.
enum class SystemClass { SimpleClosed, MassTransfer, NonSimple, OpenSimple };

const char* to_string(SystemClass c);
bool system_class_from_string(const std::string& name, SystemClass& out);

/// Coordinate layout of the state manifold in a single global chart.
/// Block order is fixed: q, p (or qdot), W, N, Gamma, S, Sigma. Blocks a
/// class does not use are empty.
///
/// Dimensions per class:
///   SimpleClosed  2n + 1            (q, p, S)
///   MassTransfer  2n + 2K + 1       (q, p, W^k, N_k, S)
///   NonSimple     2n + 2K + 3P      (K = P, one compartment per subsystem)
///   OpenSimple    2n + 5            (q, p, W, N, Gamma, S, Sigma)
struct ChartSpec {
    SystemClass system_class = SystemClass::SimpleClosed;
    std::size_t pairs = 0;        // n mechanical (q, p) pairs
    std::size_t compartments = 0; // K
    std::size_t subsystems = 0;   // P
    std::size_t ports = 0;        // A (OpenSimple only; no coordinates)
    std::size_t heat_sources = 0; // B (OpenSimple only; no coordinates)
    bool velocity_side = false;   // p-block replaced by qdot-block

    std::vector<std::string> coordinates; // layout order, unique names

    std::size_t dimension() const { return coordinates.size(); }

    /// number of eta covectors of the structure (1, or P for NonSimple)
    std::size_t eta_count() const;
    /// number of entropy coordinates (matches eta_count())
    std::size_t entropy_count() const { return eta_count(); }

    std::size_t q_index(std::size_t i) const;
    std::size_t p_index(std::size_t i) const; // qdot slot on the velocity side
    std::size_t w_index(std::size_t k) const;
    std::size_t n_index(std::size_t k) const;
    std::size_t gamma_index(std::size_t a) const;
    std::size_t s_index(std::size_t a) const;
    std::size_t sigma_index(std::size_t a) const;

    bool has_w_block() const;
    bool has_gamma_block() const; // Gamma/Sigma blocks (NonSimple, OpenSimple)

    /// index of a coordinate name, or npos
    std::size_t index_of(const std::string& name) const;

    /// coordinate names a Hamiltonian/Lagrangian (and internal forces and
    /// fluxes) must not depend on: the displacement blocks W, Gamma and the
    /// auxiliary Sigma block
    std::vector<std::string> displacement_names() const;

    /// Builds the chart for a class, checking block counts. Throws
    /// LayoutMismatch on inconsistent sizes.
    static ChartSpec make(SystemClass c, std::size_t pairs, std::size_t compartments = 0,
                          std::size_t subsystems = 0, std::size_t ports = 0,
                          std::size_t heat_sources = 0);

    /// Same layout with the p-block renamed to qdot; used for the
    /// Lagrangian picture.
    ChartSpec velocity_variant() const;

    /// Inverse of velocity_variant().
    ChartSpec momentum_variant() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

} // namespace cosym
