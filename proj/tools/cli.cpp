#include "cvtalloc/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "cvtalloc/config.hpp"
#include "cvtalloc/dynamic_alloc.hpp"
#include "cvtalloc/errors.hpp"
#include "cvtalloc/static_alloc.hpp"

namespace cvtalloc::cli {
namespace {

using nlohmann::json;

std::string cell(double v) { return fmt::format("{:.15g}", v); }

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw UsageError(UsageErrorKind::BadValue, fmt::format("--{}: {}", key, why));
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Settings merged from the config file and the command line. Flags arrive
// as strings; config values may be strings or native JSON.
class Settings {
 public:
  Settings(json merged, const char* sub) : j_(std::move(merged)), sub_(sub) {}

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& require(const std::string& key) const {
    if (!has(key))
      throw UsageError(UsageErrorKind::MissingRequired,
                       fmt::format("{}: --{} is required (flag or config)", sub_, flag_name(key)));
    return j_.at(key);
  }

  double number(const std::string& key) const {
    const auto& v = require(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      double out = 0.0;
      const char* first = s.data() + (!s.empty() && s.front() == '+' ? 1 : 0);
      const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
      if (ec == std::errc{} && ptr == s.data() + s.size() && first != s.data() + s.size()) return out;
    }
    bad_value(flag_name(key), fmt::format("'{}' is not a number", v.is_string() ? v.get<std::string>() : v.dump()));
  }

  long long integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::fabs(v) > 1e15) bad_value(flag_name(key), fmt::format("{} is not an integer", v));
    return static_cast<long long>(v);
  }

  std::size_t count(const std::string& key) const {
    const auto v = integer(key);
    if (v < 1) bad_value(flag_name(key), "must be at least 1");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key) const {
    if (!has(key)) return false;
    const auto& v = j_.at(key);
    if (v.is_boolean()) return v.get<bool>();
    bad_value(flag_name(key), "must be true or false");
  }

  Domain1D domain() const {
    const auto& v = require("domain");
    if (v.is_string()) return config::parse_domain(v.get<std::string>());
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return Domain1D::make(v[0].get<double>(), v[1].get<double>());
    throw Error(ErrorKind::InvalidDomain, "domain must be \"a,b\" or [a, b]");
  }

  DensitySpec density(Domain1D dom) const {
    const auto& v = require("density");
    if (v.is_string()) return config::parse_density(v.get<std::string>(), dom);
    return config::density_from_json(v, dom);
  }

  std::vector<double> list(const std::string& key) const {
    if (!has(key)) return {};
    const auto& v = j_.at(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "uniform") return {};
      try {
        return config::parse_list(s);
      } catch (const Error& e) {
        bad_value(flag_name(key), e.what());
      }
    }
    if (v.is_array()) {
      std::vector<double> out;
      for (const auto& x : v) {
        if (!x.is_number()) bad_value(flag_name(key), "entries must be numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    bad_value(flag_name(key), "must be a list of numbers or \"uniform\"");
  }

 private:
  json j_;
  const char* sub_;
};

json read_json_file(const std::filesystem::path& path, ErrorKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(kind, fmt::format("cannot open config {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(kind, fmt::format("{}: {}", path.string(), e.what()));
  }
}

// Config keys and whether each is a boolean switch, per subcommand.
const std::map<std::string, bool>& keys_for(Subcommand s) {
  static const std::map<std::string, bool> cvt{
      {"domain", false}, {"n", false}, {"density", false}, {"init", false}, {"tol", false}, {"max_iter", false}};
  static const std::map<std::string, bool> stat{{"domain", false}, {"n", false},   {"density", false},
                                                {"r", false},      {"csv", true},  {"cross_validate", true}};
  static const std::map<std::string, bool> shift{{"domain", false}, {"n", false},     {"sigma2", false},
                                                 {"mu", false},     {"delta", false}, {"tol", false}};
  static const std::map<std::string, bool> none;
  switch (s) {
    case Subcommand::Cvt: return cvt;
    case Subcommand::StaticAlloc: return stat;
    case Subcommand::ShiftCheck: return shift;
    case Subcommand::DynamicSim: return none;
  }
  return none;
}

const char* describe(const std::string& key) {
  static const std::map<std::string, const char*> text{
      {"domain", "Domain as a,b"},
      {"n", "Number of generators or agents"},
      {"density", "family[:name=value,...] or density JSON; mark one parameter free for static-alloc"},
      {"init", "Comma-separated starting generators (default: equally spaced)"},
      {"tol", "Stopping tolerance"},
      {"max_iter", "Iteration cap"},
      {"r", "Total resource to allocate"},
      {"csv", "Also write tessellation.csv"},
      {"cross_validate", "Check the solution against Lloyd's algorithm"},
      {"sigma2", "Gaussian variance"},
      {"mu", "Gaussian mean before the shift"},
      {"delta", "Decrease of the mean"}};
  const auto it = text.find(key);
  return it == text.end() ? "" : it->second;
}

const char* name_of(Subcommand s) {
  switch (s) {
    case Subcommand::Cvt: return "cvt";
    case Subcommand::StaticAlloc: return "static-alloc";
    case Subcommand::ShiftCheck: return "shift-check";
    case Subcommand::DynamicSim: return "dynamic-sim";
  }
  return "?";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f || !(f << text)) throw Error(ErrorKind::InvalidArgument, fmt::format("cannot write {}", path.string()));
}

void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorKind::InvalidArgument, fmt::format("output directory {} is not writable", dir.string()));
}

int run_cvt(const CommandSpec& spec, std::ostream& out) {
  const auto& a = spec.cvt;
  std::vector<double> init = a.init.empty() ? uniform_init(a.n, a.domain) : a.init;
  if (init.size() != a.n)
    throw Error(ErrorKind::InvalidArgument, fmt::format("--init has {} points for --n {}", init.size(), a.n));

  std::string csv = "iter,i,z_i,cell_left,cell_right\n";
  const auto emit = [&](const std::string& iter, std::span<const double> z) {
    const auto t = voronoi_regions(z, a.domain);
    for (std::size_t i = 0; i < z.size(); ++i)
      csv += fmt::format("{},{},{},{},{}\n", iter, i + 1, cell(z[i]), cell(t.boundaries[i]), cell(t.boundaries[i + 1]));
  };
  LloydOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.observer = [&](int k, std::span<const double> z) { emit(std::to_string(k), z); };
  const auto res = lloyd(init, a.density, a.domain, opts);
  const auto& t = res.tessellation;
  emit("final", t.generators);

  ensure_out_dir(spec.out_dir);
  write_file(spec.out_dir / "generators.csv", csv);
  json j{{"converged", res.converged},
         {"iterations", res.iterations},
         {"displacement", res.displacement},
         {"generators", t.generators},
         {"boundaries", t.boundaries},
         {"energy", energy_K(t.generators, a.density, a.domain)}};
  out << j.dump(2) << '\n';
  return res.converged ? 0 : 2;
}

int run_static(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  const auto& a = spec.static_alloc;
  const auto problem = StaticProblem::make(a.domain, a.n, a.density, a.r);
  const auto sol = solve(problem);
  json j{{"family", std::string(to_string(a.density.family()))},
         {"free_parameter", std::string(*a.density.free_parameter())},
         {"v_k", sol.v_k},
         {"centroids", sol.centroids},
         {"boundaries", sol.tessellation.boundaries},
         {"residual_norm", sol.residual_norm},
         {"sum", sol.sum},
         {"r", a.r},
         {"converged", sol.converged},
         {"iterations", sol.iterations}};
  int code = 0;
  if (!sol.converged) {
    j["diagnostic"] = sol.diagnostic;
    err << "static-alloc: SolverDiverged: " << sol.diagnostic << '\n';
    code = 2;
  } else if (a.cross_validate) {
    const auto cv = cross_validate(sol, problem);
    j["cross_validation"] = {{"max_discrepancy", cv.max_discrepancy}, {"threshold", cv.threshold},
                             {"snle_sum", cv.snle_sum},               {"lloyd_sum", cv.lloyd_sum},
                             {"lloyd_converged", cv.lloyd_converged}, {"lloyd_iterations", cv.lloyd_iterations},
                             {"lloyd_generators", cv.lloyd_generators}, {"pass", cv.pass}};
    if (!cv.pass) {
      err << "static-alloc: cross-validation against Lloyd failed\n";
      code = 2;
    }
  }
  ensure_out_dir(spec.out_dir);
  write_file(spec.out_dir / "static_alloc.json", j.dump(2) + "\n");
  if (a.write_csv && sol.converged) {
    std::string csv = "i,z_i,cell_left,cell_right\n";
    const auto& t = sol.tessellation;
    for (std::size_t i = 0; i < t.size(); ++i)
      csv += fmt::format("{},{},{},{}\n", i + 1, cell(t.generators[i]), cell(t.boundaries[i]), cell(t.boundaries[i + 1]));
    write_file(spec.out_dir / "tessellation.csv", csv);
  }
  out << j.dump(2) << '\n';
  return code;
}

int run_shift(const CommandSpec& spec, std::ostream& out) {
  const auto& a = spec.shift_check;
  const auto rep = verify_shift_property(DensitySpec::gaussian(a.mu, a.sigma2), a.domain, static_cast<int>(a.n),
                                         a.delta, a.tol);
  json j{{"mu", a.mu},          {"mu_shifted", a.mu - a.delta}, {"delta", a.delta},
         {"before", rep.before}, {"after", rep.after},           {"max_deviation", rep.max_deviation},
         {"tol", rep.tol},       {"pass", rep.pass}};
  ensure_out_dir(spec.out_dir);
  write_file(spec.out_dir / "shift_check.json", j.dump(2) + "\n");
  out << j.dump(2) << '\n';
  return rep.pass ? 0 : 2;
}

int run_sim(const CommandSpec& spec, std::ostream& out) {
  ensure_out_dir(spec.out_dir);
  const auto trace = sim::run(spec.scenario);
  sim::write_outputs(trace, spec.out_dir);
  out << sim::metrics_to_json(sim::metrics(trace)).dump(2) << '\n';
  return 0;
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::SolverDiverged:
    case ErrorKind::DomainTooNarrow:
    case ErrorKind::QuadratureNonConvergence:
    case ErrorKind::EmptyCell:
    case ErrorKind::NonHurwitz:
    case ErrorKind::Uncontrollable:
      return 2;
    default:
      return 1;
  }
}

CommandSpec parse_args(const std::vector<std::string>& argv) {
  CLI::App app{"Centroidal Voronoi tessellation resource allocation", "cvtalloc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, seed;
  app.add_option("--config", config_path, "JSON config; flags override its values");
  app.add_option("--out", out_dir, "Output directory (default .)");
  app.add_option("--seed", seed, "Random seed for dynamic-sim");

  // Flag values land here keyed by config name; std::map nodes stay put.
  std::map<Subcommand, std::map<std::string, std::string>> values;
  std::map<Subcommand, std::map<std::string, bool>> switches;
  std::map<Subcommand, CLI::App*> subs;
  const auto add_sub = [&](Subcommand s, const char* help) {
    auto* sc = app.add_subcommand(name_of(s), help);
    for (const auto& [key, is_switch] : keys_for(s)) {
      const std::string flag = "--" + flag_name(key);
      if (is_switch)
        sc->add_flag(flag, switches[s][key], describe(key));
      else
        sc->add_option(flag, values[s][key], describe(key));
    }
    subs[s] = sc;
    return sc;
  };
  add_sub(Subcommand::Cvt, "Lloyd's algorithm on a 1-D domain; writes generators.csv");
  add_sub(Subcommand::StaticAlloc, "Solve the constrained CVT allocation; writes static_alloc.json");
  add_sub(Subcommand::ShiftCheck, "Check that a Gaussian CVT translates with its mean; writes shift_check.json");
  auto* dyn = add_sub(Subcommand::DynamicSim, "Run the HVAC demand-response scenario; writes trace and metrics");
  std::string rounds;
  dyn->add_option("--rounds-per-step", rounds, "Negotiation rounds per step");

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    CommandSpec spec;
    spec.help = app.help();
    return spec;
  } catch (const CLI::CallForAllHelp&) {
    CommandSpec spec;
    spec.help = app.help("", CLI::AppFormatMode::All);
    return spec;
  } catch (const CLI::ExtrasError& e) {
    for (const auto& a : args)
      for (Subcommand s : {Subcommand::Cvt, Subcommand::StaticAlloc, Subcommand::ShiftCheck, Subcommand::DynamicSim})
        if (a == name_of(s))
          throw UsageError(UsageErrorKind::Usage, fmt::format("exactly one subcommand is allowed ({})", e.what()));
    throw UsageError(UsageErrorKind::UnknownFlag, e.what());
  } catch (const CLI::RequiredError& e) {
    throw UsageError(UsageErrorKind::Usage, e.what());
  } catch (const CLI::ParseError& e) {
    throw UsageError(UsageErrorKind::Usage, e.what());
  }

  CommandSpec spec;
  for (const auto& [s, sc] : subs)
    if (sc->parsed()) spec.subcommand = s;
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (!seed.empty()) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), v);
    if (ec != std::errc{} || ptr != seed.data() + seed.size()) bad_value("seed", "must be a nonnegative integer");
    spec.seed = v;
  }

  const Subcommand s = spec.subcommand;
  if (s == Subcommand::DynamicSim) {
    sim::Scenario sc = config_path.empty()
                           ? sim::default_scenario()
                           : sim::scenario_from_json(read_json_file(config_path, ErrorKind::InvalidScenario));
    if (spec.seed) sc.seed = *spec.seed;
    if (!rounds.empty()) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(rounds.data(), rounds.data() + rounds.size(), v);
      if (ec != std::errc{} || ptr != rounds.data() + rounds.size() || v < 0)
        bad_value("rounds-per-step", "must be a nonnegative integer");
      sc.rounds_per_step = v;
    }
    sc.validate();
    spec.scenario = std::move(sc);
    return spec;
  }

  json merged = json::object();
  if (!config_path.empty()) {
    merged = read_json_file(config_path, ErrorKind::InvalidArgument);
    if (!merged.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    for (const auto& [key, _] : merged.items())
      if (!keys_for(s).contains(key))
        throw Error(ErrorKind::InvalidArgument, fmt::format("{} config has no field '{}'", name_of(s), key));
  }
  for (const auto& [key, is_switch] : keys_for(s)) {
    const std::string flag = "--" + flag_name(key);
    if (subs[s]->count(flag) == 0) continue;
    if (is_switch)
      merged[key] = switches[s][key];
    else
      merged[key] = values[s][key];
  }
  const Settings set(std::move(merged), name_of(s));

  switch (s) {
    case Subcommand::Cvt: {
      auto& a = spec.cvt;
      a.domain = set.domain();
      a.n = set.count("n");
      a.density = set.density(a.domain);
      a.init = set.list("init");
      if (set.has("tol")) a.tol = set.number("tol");
      if (set.has("max_iter")) a.max_iter = static_cast<int>(set.count("max_iter"));
      break;
    }
    case Subcommand::StaticAlloc: {
      auto& a = spec.static_alloc;
      a.domain = set.domain();
      a.n = set.count("n");
      a.density = set.density(a.domain);
      a.r = set.number("r");
      a.write_csv = set.boolean("csv");
      a.cross_validate = set.boolean("cross_validate");
      break;
    }
    case Subcommand::ShiftCheck: {
      auto& a = spec.shift_check;
      a.domain = set.domain();
      a.n = set.count("n");
      a.sigma2 = set.number("sigma2");
      a.mu = set.number("mu");
      a.delta = set.number("delta");
      if (set.has("tol")) a.tol = set.number("tol");
      break;
    }
    case Subcommand::DynamicSim: break;
  }
  return spec;
}

int execute(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.help) {
    out << *spec.help;
    return 0;
  }
  try {
    switch (spec.subcommand) {
      case Subcommand::Cvt: return run_cvt(spec, out);
      case Subcommand::StaticAlloc: return run_static(spec, out, err);
      case Subcommand::ShiftCheck: return run_shift(spec, out);
      case Subcommand::DynamicSim: return run_sim(spec, out);
    }
  } catch (const Error& e) {
    err << name_of(spec.subcommand) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 1;
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CommandSpec spec;
  try {
    spec = parse_args(argv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return 1;
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }
  return execute(spec, out, err);
}

}  // namespace cvtalloc::cli
