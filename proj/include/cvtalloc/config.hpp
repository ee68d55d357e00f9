#pragma once

// Text and JSON forms of densities and domains used by config files and the CLI.
//
// A density is a JSON object with a "family" and its named parameters, where
// the string "free" marks the unknown parameter:
//   {"family":"gaussian","mu":"free","sigma2":4.0}
// The CLI also accepts the shorthand `family[:name=value,...]`, e.g.
// `gaussian:mu=free,sigma2=4` or just `uniform`.

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cvtalloc/density.hpp"
#include "cvtalloc/tessellation.hpp"

namespace cvtalloc::config {

/// Throws InvalidDensitySpec for unknown families or keys, missing
/// parameters, or more than one free parameter. A uniform density with no
/// bounds takes them from `dom` when given.
DensitySpec density_from_json(const nlohmann::json& j, std::optional<Domain1D> dom = std::nullopt);

nlohmann::json density_to_json(const DensitySpec& d);

/// JSON object text or the shorthand form.
DensitySpec parse_density(std::string_view text, std::optional<Domain1D> dom = std::nullopt);

/// "a,b" -> Domain1D (InvalidDomain on bad input).
Domain1D parse_domain(std::string_view text);

/// Comma-separated reals (InvalidArgument on bad input).
std::vector<double> parse_list(std::string_view text);

}  // namespace cvtalloc::config
