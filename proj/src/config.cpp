#include "kgs/config.hpp"

#include <cmath>
#include <fstream>

#include "kgs/smooth.hpp"

namespace kgs {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& pointer, const std::string& why) {
  fail(ErrorCode::ConfigInvalid, pointer + ": " + why);
}

double num_at(const json& j, const std::string& ptr, double fallback,
              bool required = false) {
  const json::json_pointer p(ptr);
  if (!j.contains(p)) {
    if (required) bad(ptr, "missing required number");
    return fallback;
  }
  if (!j.at(p).is_number()) bad(ptr, "expected a number");
  return j.at(p).get<double>();
}

Profile parse_profile(const json& j, const std::string& ptr, double base) {
  const json::json_pointer p(ptr);
  if (!j.contains(p)) return [base](double) { return base; };
  const json& pj = j.at(p);
  if (pj.is_number()) {
    const double v = pj.get<double>();
    return [v](double) { return v; };
  }
  if (!pj.is_object() || !pj.contains("profile"))
    bad(ptr, "expected a number or an object with a \"profile\" key");
  const std::string name = pj.at("profile").get<std::string>();

  auto get = [&](const std::string& key, double dflt,
                 bool required = false) -> double {
    if (!pj.contains(key)) {
      if (required) bad(ptr + "/" + key, "missing");
      return dflt;
    }
    return pj.at(key).get<double>();
  };

  if (name == "constant") {
    const double v = get("value", base);
    return [v](double) { return v; };
  }
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "gaussian_well") {
    const double A = get("amplitude", 1.0, true);
    const double w = get("width", 3.0);
    const double s = get("sign", -1.0);
    return [A, w, s](double x) { return s * A * std::exp(-(x / w) * (x / w)); };
  }
  if (name == "smoothed_square_well") {
    const double A = get("amplitude", 1.0, true);
    const double r = get("radius", 5.0);
    const double ramp = get("ramp", 2.0);
    const double s = get("sign", -1.0);
    SmoothFunction f = smooth_indicator(-r - ramp, r + ramp, ramp);
    return [A, s, f](double x) { return s * A * f(x); };
  }
  if (name == "power_tail") {
    const double A = get("amplitude", 1.0, true);
    const double mu = get("mu", 0.5);
    const double s = get("sign", 1.0);
    return [A, mu, s](double x) {
      return s * A * std::pow(std::hypot(1.0, x), -mu);
    };
  }
  if (name == "one_plus_power_tail") {
    const double A = get("amplitude", 0.0, true);
    const double mu = get("mu", 1.0);
    return [A, mu](double x) {
      return 1.0 + A * std::pow(std::hypot(1.0, x), -mu);
    };
  }
  if (name == "gaussian_bump") {
    const double basev = get("base", base);
    const double A = get("amplitude", 0.0, true);
    const double w = get("width", 3.0);
    return [basev, A, w](double x) {
      return basev + A * std::exp(-(x / w) * (x / w));
    };
  }
  bad(ptr + "/profile", "unknown profile \"" + name + "\"");
}

void deep_merge(json& base, const json& over) {
  if (!over.is_object() || !base.is_object()) {
    base = over;
    return;
  }
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key()))
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"free",        "shortrange_well",   "pontryagin_well",
          "supercritical_well", "longrange_tail", "kleinsweep"};
}

nlohmann::json stock_scenario(const std::string& name) {
  json j;
  j["grid"] = {{"X", 60.0}, {"N", 256}};
  j["coefficients"] = {{"m_inf", 1.0}, {"mu0", 1.0}};
  j["run"] = {{"command", "check"}};
  j["seed"] = 42;

  if (name == "free") {
    j["potential"] = {{"short_range", {{"profile", "zero"}}},
                      {"long_range", {{"profile", "zero"}}},
                      {"mu_s", 2.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 0}};
    return j;
  }
  if (name == "shortrange_well") {
    j["grid"] = {{"X", 70.0}, {"N", 512}};
    j["potential"] = {{"short_range",
                       {{"profile", "smoothed_square_well"},
                        {"amplitude", 0.3},
                        {"radius", 4.0},
                        {"ramp", 2.0},
                        {"sign", -1.0}}},
                      {"long_range", {{"profile", "zero"}}},
                      {"mu_s", 4.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 0}};
    j["run"] = {{"command", "scatter"},
                {"horizons", {{"T", 40.0}}},
                {"direction", 1},
                {"use_modifier", false},
                {"packets", json::array({
                    {{"x0", -6.0}, {"xi0", -1.4}, {"sigma", 4.0}, {"shell", "upper"}},
                    {{"x0", 6.0}, {"xi0", 1.4}, {"sigma", 4.0}, {"shell", "upper"}},
                })}};
    return j;
  }
  if (name == "pontryagin_well") {
    j["potential"] = {{"short_range",
                       {{"profile", "gaussian_well"},
                        {"amplitude", 1.45},
                        {"width", 3.0},
                        {"sign", -1.0}}},
                      {"long_range", {{"profile", "zero"}}},
                      {"mu_s", 4.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 0}};
    j["run"] = {{"command", "spectrum"}};
    return j;
  }
  if (name == "supercritical_well") {
    j["potential"] = {{"short_range",
                       {{"profile", "smoothed_square_well"},
                        {"amplitude", 2.5},
                        {"radius", 7.0},
                        {"ramp", 3.0},
                        {"sign", -1.0}}},
                      {"long_range", {{"profile", "zero"}}},
                      {"mu_s", 4.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 0}};
    j["run"] = {{"command", "spectrum"}};
    return j;
  }
  if (name == "longrange_tail") {
    j["grid"] = {{"X", 80.0}, {"N", 512}};
    j["potential"] = {{"short_range", {{"profile", "zero"}}},
                      {"long_range",
                       {{"profile", "power_tail"},
                        {"amplitude", 0.2},
                        {"mu", 0.5},
                        {"sign", 1.0}}},
                      {"mu_s", 4.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 1}};
    j["run"] = {{"command", "scatter"},
                {"horizons", {{"T", 48.0}}},
                {"direction", 1},
                {"use_modifier", true},
                {"eikonal", {{"R", 45.0}, {"alpha", 0.25}}},
                {"packets", json::array({
                    {{"x0", -8.0}, {"xi0", -1.2}, {"sigma", 4.0}, {"shell", "upper"}},
                    {{"x0", 8.0}, {"xi0", 1.2}, {"sigma", 4.0}, {"shell", "upper"}},
                })}};
    return j;
  }
  if (name == "kleinsweep") {
    j["potential"] = {{"short_range",
                       {{"profile", "smoothed_square_well"},
                        {"amplitude", 1.0},
                        {"radius", 7.0},
                        {"ramp", 3.0},
                        {"sign", -1.0}}},
                      {"long_range", {{"profile", "zero"}}},
                      {"mu_s", 4.0},
                      {"mu_l", 0.5},
                      {"lr_sign", 0}};
    j["run"] = {{"command", "sweep"},
                {"sweep", {{"param", "coupling"},
                           {"values", {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5,
                                       1.75, 2.0, 2.25, 2.5, 2.75, 3.0}}}}};
    return j;
  }
  fail(ErrorCode::ConfigInvalid, "unknown scenario \"" + name + "\"");
}

ExperimentConfig parse_config(const nlohmann::json& in) {
  json j = in;
  if (j.contains("scenario")) {
    if (!j.at("scenario").is_string()) bad("/scenario", "expected a string");
    json base = stock_scenario(j.at("scenario").get<std::string>());
    json over = j;
    over.erase("scenario");
    deep_merge(base, over);
    j = base;
  }

  ExperimentConfig cfg;
  cfg.echo = j;

  cfg.X = num_at(j, "/grid/X", 60.0);
  const double Nd = num_at(j, "/grid/N", 256.0);
  if (Nd < 16 || Nd != std::floor(Nd)) bad("/grid/N", "need integer N >= 16");
  cfg.N = static_cast<int>(Nd);
  if (!(cfg.X > 0)) bad("/grid/X", "need X > 0");

  cfg.coefficients.m_inf = num_at(j, "/coefficients/m_inf", 1.0);
  if (!(cfg.coefficients.m_inf > 0)) bad("/coefficients/m_inf", "need m > 0");
  cfg.coefficients.mu0 = num_at(j, "/coefficients/mu0", 1.0);
  cfg.coefficients.a = parse_profile(j, "/coefficients/a", 1.0);
  cfg.coefficients.b = parse_profile(j, "/coefficients/b", 0.0);
  cfg.coefficients.c = parse_profile(j, "/coefficients/c", 1.0);
  cfg.coefficients.m_x = parse_profile(j, "/coefficients/m", cfg.coefficients.m_inf);

  cfg.potential.v_s = parse_profile(j, "/potential/short_range", 0.0);
  cfg.potential.v_l = parse_profile(j, "/potential/long_range", 0.0);
  cfg.potential.mu_s = num_at(j, "/potential/mu_s", 2.0);
  cfg.potential.mu_l = num_at(j, "/potential/mu_l", 0.5);
  const double lrs = num_at(j, "/potential/lr_sign", 0.0);
  if (lrs != 0.0 && lrs != 1.0 && lrs != -1.0)
    bad("/potential/lr_sign", "expected -1, 0 or 1");
  cfg.potential.lr_sign = static_cast<int>(lrs);

  cfg.command = j.value(json::json_pointer("/run/command"), std::string("check"));
  const std::vector<std::string> known = {"check", "spectrum", "evolve",
                                          "scatter", "sweep"};
  if (std::find(known.begin(), known.end(), cfg.command) == known.end())
    bad("/run/command", "unknown command \"" + cfg.command + "\"");

  if (j.contains(json::json_pointer("/run/times"))) {
    const json& t = j.at(json::json_pointer("/run/times"));
    if (t.is_array()) {
      for (const auto& v : t) cfg.times.push_back(v.get<double>());
    } else if (t.is_object()) {
      const double start = t.value("start", 0.0);
      const double stop = t.value("stop", 50.0);
      const int count = t.value("count", 26);
      if (count < 2) bad("/run/times/count", "need >= 2");
      for (int i = 0; i < count; ++i)
        cfg.times.push_back(start + (stop - start) * i / (count - 1));
    } else {
      bad("/run/times", "expected array or {start, stop, count}");
    }
  } else {
    for (int i = 0; i <= 25; ++i) cfg.times.push_back(2.0 * i);
  }
  for (size_t i = 1; i < cfg.times.size(); ++i)
    if (!(cfg.times[i] >= cfg.times[i - 1])) bad("/run/times", "must be sorted");

  cfg.horizon_T = num_at(j, "/run/horizons/T", 40.0);
  const double dir = num_at(j, "/run/direction", 1.0);
  if (dir != 1.0 && dir != -1.0) bad("/run/direction", "expected 1 or -1");
  cfg.direction = static_cast<int>(dir);
  cfg.use_modifier = j.value(json::json_pointer("/run/use_modifier"), true);

  if (j.contains(json::json_pointer("/run/theta_list")))
    for (const auto& v : j.at(json::json_pointer("/run/theta_list")))
      cfg.theta_list.push_back(v.get<double>());
  else
    cfg.theta_list = {1.2};
  cfg.theta0 = num_at(j, "/run/theta0", 0.1);

  cfg.filter.center = num_at(j, "/run/filter/center", 1.5);
  cfg.filter.halfwidth = num_at(j, "/run/filter/halfwidth", 0.3);
  cfg.filter.ramp = num_at(j, "/run/filter/ramp", 0.1);

  if (j.contains(json::json_pointer("/run/packets"))) {
    const json& ps = j.at(json::json_pointer("/run/packets"));
    if (!ps.is_array()) bad("/run/packets", "expected an array");
    int idx = 0;
    for (const auto& pj : ps) {
      WavePacketSpec s;
      s.x0 = pj.value("x0", 0.0);
      s.xi0 = pj.value("xi0", 1.0);
      s.sigma = pj.value("sigma", 3.0);
      const std::string shell = pj.value("shell", std::string("upper"));
      if (shell == "upper") s.shell = WavePacketSpec::Shell::Upper;
      else if (shell == "lower") s.shell = WavePacketSpec::Shell::Lower;
      else bad("/run/packets/" + std::to_string(idx) + "/shell", "upper|lower");
      if (!(s.sigma > 0))
        bad("/run/packets/" + std::to_string(idx) + "/sigma", "need > 0");
      cfg.packets.push_back(s);
      ++idx;
    }
  }

  if (j.contains(json::json_pointer("/run/sweep"))) {
    SweepSpec sw;
    sw.param = j.value(json::json_pointer("/run/sweep/param"), std::string("coupling"));
    if (!j.contains(json::json_pointer("/run/sweep/values")))
      bad("/run/sweep/values", "missing");
    for (const auto& v : j.at(json::json_pointer("/run/sweep/values")))
      sw.values.push_back(v.get<double>());
    if (sw.values.size() < 2) bad("/run/sweep/values", "need >= 2 values");
    for (size_t i = 1; i < sw.values.size(); ++i)
      if (!(sw.values[i] > sw.values[i - 1]))
        bad("/run/sweep/values", "must be finite and strictly sorted");
    cfg.sweep = sw;
  }

  cfg.eikonal_R = num_at(j, "/run/eikonal/R", 10.0);
  cfg.eikonal_alpha = num_at(j, "/run/eikonal/alpha", 0.4);

  cfg.output_dir = j.value(json::json_pointer("/output/directory"), std::string("out"));
  if (j.contains(json::json_pointer("/output/formats"))) {
    cfg.formats.clear();
    for (const auto& f : j.at(json::json_pointer("/output/formats")))
      cfg.formats.push_back(f.get<std::string>());
  }
  cfg.seed = static_cast<std::uint64_t>(num_at(j, "/seed", 42.0));
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("JSON parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace kgs
