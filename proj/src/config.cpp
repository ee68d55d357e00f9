#include "cvtalloc/config.hpp"

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <string>

#include "cvtalloc/errors.hpp"

namespace cvtalloc::config {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

Family family_from_name(std::string_view name) {
  if (name == "uniform") return Family::Uniform;
  if (name == "gaussian" || name == "normal") return Family::Gaussian;
  if (name == "exponential") return Family::Exponential;
  if (name == "gamma") return Family::Gamma;
  throw Error(ErrorKind::InvalidDensitySpec, fmt::format("unknown density family '{}'", name));
}

// Canonical parameter names per family, in DensitySpec order.
std::vector<std::string_view> names_of(Family f) {
  switch (f) {
    case Family::Uniform: return {"a", "b"};
    case Family::Gaussian: return {"mu", "sigma2"};
    case Family::Exponential: return {"lambda"};
    case Family::Gamma: return {"k", "theta"};
  }
  return {};
}

}  // namespace

DensitySpec density_from_json(const nlohmann::json& j, std::optional<Domain1D> dom) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidDensitySpec, "density must be a JSON object");
  if (!j.contains("family") || !j["family"].is_string())
    throw Error(ErrorKind::InvalidDensitySpec, "density needs a string \"family\"");
  const Family fam = family_from_name(j["family"].get<std::string>());
  const auto names = names_of(fam);

  for (const auto& [key, _] : j.items()) {
    if (key == "family") continue;
    if (std::find(names.begin(), names.end(), key) == names.end())
      throw Error(ErrorKind::InvalidDensitySpec, fmt::format("{} has no parameter '{}'", to_string(fam), key));
  }

  std::array<double, 2> values{};
  std::optional<std::string_view> free_name;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string key(names[i]);
    if (!j.contains(key)) {
      if (fam == Family::Uniform && dom) {
        values[i] = i == 0 ? dom->a : dom->b;
        continue;
      }
      throw Error(ErrorKind::InvalidDensitySpec, fmt::format("{} needs parameter '{}'", to_string(fam), key));
    }
    const auto& v = j[key];
    if (v.is_string() && v.get<std::string>() == "free") {
      if (free_name)
        throw Error(ErrorKind::InvalidDensitySpec, "at most one parameter may be \"free\"");
      free_name = names[i];
    } else if (v.is_number()) {
      values[i] = v.get<double>();
    } else {
      throw Error(ErrorKind::InvalidDensitySpec, fmt::format("parameter '{}' must be a number or \"free\"", key));
    }
  }
  try {
    return DensitySpec::make(fam, std::span<const double>(values.data(), names.size()), free_name);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidParameterValue) throw Error(ErrorKind::InvalidDensitySpec, e.what());
    throw;
  }
}

nlohmann::json density_to_json(const DensitySpec& d) {
  nlohmann::json j;
  j["family"] = std::string(to_string(d.family()));
  const auto free = d.free_parameter();
  for (std::size_t i = 0; i < d.param_count(); ++i) {
    const std::string name(d.param_name(i));
    if (free && *free == d.param_name(i))
      j[name] = "free";
    else
      j[name] = d.param(i);
  }
  return j;
}

DensitySpec parse_density(std::string_view text, std::optional<Domain1D> dom) {
  text = trim(text);
  if (!text.empty() && text.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidDensitySpec, fmt::format("density JSON: {}", e.what()));
    }
    return density_from_json(j, dom);
  }
  nlohmann::json j;
  const auto colon = text.find(':');
  j["family"] = std::string(trim(text.substr(0, colon)));
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorKind::InvalidDensitySpec, fmt::format("expected name=value, got '{}'", item));
      const std::string key(trim(item.substr(0, eq)));
      const std::string_view val = trim(item.substr(eq + 1));
      if (val == "free") {
        j[key] = "free";
      } else if (const auto v = to_double(val)) {
        j[key] = *v;
      } else {
        throw Error(ErrorKind::InvalidDensitySpec, fmt::format("'{}' is not a number", val));
      }
    }
  }
  return density_from_json(j, dom);
}

Domain1D parse_domain(std::string_view text) {
  const auto v = [&] {
    try {
      return parse_list(text);
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidDomain, e.what());
    }
  }();
  if (v.size() != 2) throw Error(ErrorKind::InvalidDomain, fmt::format("domain '{}' must be 'a,b'", text));
  return Domain1D::make(v[0], v[1]);
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const auto comma = text.find(',');
    const auto v = to_double(text.substr(0, comma));
    if (!v) throw Error(ErrorKind::InvalidArgument, fmt::format("'{}' is not a number", trim(text.substr(0, comma))));
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

}  // namespace cvtalloc::config
