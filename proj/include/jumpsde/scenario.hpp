#pragma once

#include "jumpsde/analysis.hpp"
#include "jumpsde/expr.hpp"
#include "jumpsde/model.hpp"
#include "jumpsde/simulator.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jumpsde {

/// A scenario file: `[section]` headers, `key = value` lines, `#` comments.
///
///   [model]          builtin = NAME, or d, noise, b1..bd, s11..sdq (also
///                    written σ11), jump = none|scaled, jump_amp (c = amp(x) u),
///                    compensate_large
///   [levy]           family = none|power_law|uniform_ball|atoms, alpha, r_lo,
///                    r_hi, scale, radius, mass, atoms = "u1 u2 : m; ...", threshold
///   [sim]            dt, horizon, paths, scheme, seed, explosion_radius,
///                    truncation, threads, x0 = "a, b, ..."
///   [check]          probes = ball|grid|pairs, count, radius, delta0, min_sep,
///                    probe_seed, modulus, modulus_c, modulus_p, kappa, lambda0, V
///   [coupling]       kind, lambda0, glue_radius, z0
///   [fk]             T, f, rho, g, t, x
///   [ergodicity]     t_max, t_step, V, cells, reference_horizon
///   [irreducibility] t, targets = "a1 a2 : r; ..."
///
/// Missing keys take defaults, which emit() writes out, so
/// emit(parse(text)) is the normalized text.
struct Scenario {
    /// Section -> key -> normalized value, in the canonical key order.
    std::map<std::string, std::map<std::string, std::string>> values;
    std::vector<std::string> sections;        ///< present sections, canonical order
    std::vector<std::string> defaulted;       ///< "section.key" filled from defaults

    bool has(const std::string& section) const;
    const std::string& get(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    long integer(const std::string& section, const std::string& key) const;
    Vec vector(const std::string& section, const std::string& key) const;
    std::optional<double> optional_number(const std::string& section, const std::string& key) const;
    /// Expression in section.key; time allowed only for the fk source terms.
    Expr expr(const std::string& section, const std::string& key, bool with_t = false) const;

    int dim() const;
    Model model() const;
    SimConfig sim() const;
    Vec x0() const;
};

/// Throws SyntaxError (position = line number), UnknownSymbol,
/// DimensionMismatch or InvalidArgument, each message prefixed "line N:".
Scenario parse_scenario(const std::string& text);
std::string emit_scenario(const Scenario& s);
/// emit(parse(text)).
std::string normalize_scenario(const std::string& text);

/// Points in "a b : r; ..." or "a b : m; ..." lists.
std::vector<std::pair<Vec, double>> parse_point_list(const std::string& text, int d);

}  // namespace jumpsde
