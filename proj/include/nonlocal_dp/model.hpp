#ifndef NONLOCAL_DP_MODEL_HPP
#define NONLOCAL_DP_MODEL_HPP

#include "nonlocal_dp/payoff.hpp"
#include "nonlocal_dp/penalty.hpp"
#include "nonlocal_dp/types.hpp"

#include <string>
#include <vector>

namespace nldp {

/// A complete problem instance.
struct Model {
    TimeGrid time;
    SpaceGrid space;
    GammaMap gamma;
    Penalty penalty;
    Payoff payoff;
    Bounds bounds;
    std::vector<std::string> warnings;  // filled by the loader, not serialized

    /// Terminal payoff sampled at every cell.
    Vec terminal_samples() const { return payoff.sample(space); }

    /// Throws Error with the combined report on any violated invariant.
    void validate() const;

    bool operator==(const Model& o) const;
};

/// Parses model text (see README for the schema). Throws ParseError on syntax
/// or schema problems and Error on invariant violations.
Model load_model(const std::string& text);
Model load_model_file(const std::string& path);

/// Emits text that load_model parses back to a structurally equal model.
std::string serialize_model(const Model& model);

/// Control file round trip (subdivision + selectors).
Control load_control_file(const std::string& path, const Model& model);
std::string serialize_control(const Control& control);

}  // namespace nldp

#endif
