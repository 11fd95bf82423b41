#include "kgs/reporting.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>

#include "kgs/matrix_io.hpp"
#include "kgs/smooth.hpp"

namespace kgs {

using nlohmann::json;

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string csv_row(const std::vector<double>& vals) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  for (size_t i = 0; i < vals.size(); ++i) {
    if (i) os << ",";
    os << vals[i];
  }
  return os.str();
}

}  // namespace

void ReportBundle::write(const std::string& dir,
                         const std::vector<std::string>& formats) const {
  std::filesystem::create_directories(dir);
  const bool want_json =
      std::find(formats.begin(), formats.end(), "json") != formats.end();
  const bool want_csv =
      std::find(formats.begin(), formats.end(), "csv") != formats.end();
  if (want_json || formats.empty())
    atomic_write_text(dir + "/bundle.json", doc.dump(2) + "\n");
  if (want_csv && doc.contains("trajectory")) {
    const json& tr = doc.at("trajectory");
    std::ostringstream os;
    os << "t [1],h [1],q [1],norm [1]\n";
    const auto& ts = tr.at("times");
    for (size_t i = 0; i < ts.size(); ++i)
      os << csv_row({ts[i].get<double>(), tr.at("h")[i].get<double>(),
                     tr.at("q")[i].get<double>(), tr.at("norm")[i].get<double>()})
         << "\n";
    atomic_write_text(dir + "/trajectory.csv", os.str());
  }
  if (want_csv && doc.contains("velocity")) {
    const json& v = doc.at("velocity");
    std::ostringstream os;
    os << "t [1]";
    for (const auto& th : v.at("theta_values"))
      os << ",tail_mass(theta=" << th.get<double>() << ") [1]";
    os << ",inner_mass [1]\n";
    const auto& ts = v.at("times");
    for (size_t i = 0; i < ts.size(); ++i) {
      std::vector<double> row{ts[i].get<double>()};
      for (const auto& curve : v.at("tail_mass"))
        row.push_back(curve[i].get<double>());
      row.push_back(v.at("inner_mass")[i].get<double>());
      os << csv_row(row) << "\n";
    }
    atomic_write_text(dir + "/velocity.csv", os.str());
  }
  if (want_csv && doc.contains("sweep")) {
    std::ostringstream os;
    os << "value [1],kappa [1],complex_pairs [1],max_im [1],min_energy_eig [1]\n";
    for (const auto& r : doc.at("sweep").at("rows"))
      os << csv_row({r.at("value").get<double>(),
                     double(r.at("kappa").get<int>()),
                     double(r.at("complex_pairs").get<int>()),
                     r.at("max_im").get<double>(),
                     r.at("min_energy_eig").get<double>()})
         << "\n";
    atomic_write_text(dir + "/sweep.csv", os.str());
  }
}

json to_json(const HypothesisReport& rep) {
  json j;
  j["neg_index_energy"] = rep.neg_index_energy;
  j["all_pass"] = rep.all_pass();
  json entries = json::array();
  for (const auto& e : rep.entries)
    entries.push_back({{"name", e.name},
                       {"pass", e.pass},
                       {"margin", e.margin},
                       {"detail", e.detail},
                       {"proxy", e.proxy}});
  j["entries"] = entries;
  return j;
}

json to_json(const SpectrumClassification& S) {
  json j;
  j["pairing_residual"] = S.pairing_residual;
  j["cluster_radius"] = S.cluster_radius;
  j["spectral_radius"] = S.spectral_radius;
  json pairs = json::array();
  for (const auto& p : S.complex_pairs)
    pairs.push_back({{"re", p.z.real()},
                     {"im", p.z.imag()},
                     {"riesz_rank", p.riesz_rank},
                     {"riesz_index", p.riesz_index}});
  j["complex_pairs"] = pairs;
  json reals = json::array();
  for (const auto& r : S.real_points)
    reals.push_back({{"lambda", r.lambda},
                     {"alg_mult", r.alg_mult},
                     {"geo_mult", r.geo_mult},
                     {"jordan_index", r.jordan_index},
                     {"sign_char", sign_char_name(r.sign_char)},
                     {"is_critical", r.is_critical}});
  j["real_points"] = reals;
  return j;
}

json to_json(const TrajectoryReport& rep) {
  json j;
  j["times"] = rep.times;
  j["h"] = rep.h_values;
  j["q"] = rep.q_values;
  j["norm"] = rep.norms;
  j["h_drift"] = rep.h_drift;
  j["q_drift"] = rep.q_drift;
  j["growth_class"] = growth_class_name(rep.growth_class);
  j["poly_order"] = rep.poly_order;
  j["exp_rate"] = rep.exp_rate;
  j["fit_residual"] = rep.fit_residual;
  return j;
}

json to_json(const VelocityDiagnostic& rep) {
  json j;
  j["times"] = rep.times;
  j["theta_values"] = rep.theta_values;
  j["tail_mass"] = rep.tail_mass;
  j["inner_mass"] = rep.inner_mass;
  j["theta0"] = rep.theta0;
  j["energy_filter"] = rep.energy_filter_desc;
  j["tail_trend_pass"] = rep.tail_trend_pass;
  j["inner_trend_pass"] = rep.inner_trend_pass;
  return j;
}

json to_json(const ScatteringReport& rep) {
  json j;
  j["horizon_T"] = rep.horizon_T;
  j["direction"] = rep.direction;
  j["modified"] = rep.modified;
  j["unitarity_defect"] = rep.unitarity_defect;
  j["unitarity_defect_half"] = rep.unitarity_defect_half;
  j["max_completeness_defect"] = rep.max_completeness_defect;
  j["max_intertwining_residual"] = rep.max_intertwining_residual;
  j["mean_convergence_ratio"] = rep.mean_convergence_ratio;
  j["max_inverse_residual"] = rep.max_inverse_residual;
  j["symplectic_residual"] = rep.symplectic_residual;
  json packets = json::array();
  for (const auto& p : rep.packets)
    packets.push_back({{"x0", p.spec.x0},
                       {"xi0", p.spec.xi0},
                       {"sigma", p.spec.sigma},
                       {"shell", p.spec.shell == WavePacketSpec::Shell::Upper
                                     ? "upper"
                                     : "lower"},
                       {"completeness_defect", p.completeness_defect},
                       {"intertwining_residual", p.intertwining_residual},
                       {"increment_T", p.increment_T},
                       {"increment_half", p.increment_half},
                       {"convergence_ratio", p.convergence_ratio},
                       {"inverse_residual", p.inverse_residual}});
  j["packets"] = packets;
  return j;
}

namespace {

// scale the potential by gamma (the "coupling" sweep axis)
PotentialSplit scaled_potential(const PotentialSplit& p, double gamma) {
  PotentialSplit q = p;
  const Profile vs = p.v_s, vl = p.v_l;
  q.v_s = [vs, gamma](double x) { return gamma * vs(x); };
  q.v_l = [vl, gamma](double x) { return gamma * vl(x); };
  return q;
}

SweepRow sweep_point(const ExperimentConfig& cfg, const Grid1D& grid,
                     const CMat& eps2, double gamma) {
  SweepRow row;
  row.value = gamma;
  const int N = grid.points;
  RVec v(N);
  for (int j = 0; j < N; ++j) v(j) = gamma * cfg.potential.v(grid.nodes(j));

  CMat E = eps2 - CMat(RVec(v.array().square()).asDiagonal());
  E = 0.5 * (E + E.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(E, Eigen::EigenvaluesOnly);
  row.min_energy_eig = es.eigenvalues().minCoeff();
  row.kappa = 0;
  for (int i = 0; i < N; ++i)
    if (es.eigenvalues()(i) < 0) ++row.kappa;

  CMat B = CMat::Zero(2 * N, 2 * N);
  B.block(0, N, N, N) = -CMat::Identity(N, N);
  B.block(N, 0, N, N) = -E;
  B.block(N, N, N, N) = CMat((-2.0 * v).asDiagonal());
  Eigen::ComplexEigenSolver<CMat> bes(B, false);
  double specrad = 0.0;
  for (int i = 0; i < 2 * N; ++i)
    specrad = std::max(specrad, std::abs(bes.eigenvalues()(i)));
  const double im_tol = 1e-8 * std::max(specrad, 1.0);
  int pairs = 0;
  for (int i = 0; i < 2 * N; ++i) {
    const double im = bes.eigenvalues()(i).imag();
    row.max_im = std::max(row.max_im, std::abs(im));
    if (im > im_tol) ++pairs;
  }
  row.complex_pairs = pairs;
  return row;
}

}  // namespace

KleinScanResult klein_paradox_scan(const ExperimentConfig& cfg, int parallel) {
  if (!cfg.sweep) fail(ErrorCode::ConfigInvalid, "/run/sweep: missing");
  if (cfg.sweep->param != "coupling")
    fail(ErrorCode::ConfigInvalid,
         "klein_paradox_scan needs sweep over \"coupling\"");

  const Grid1D grid = make_grid(cfg.X, cfg.N);
  const CMat eps2 = build_epsilon2(grid, cfg.coefficients);
  const auto& values = cfg.sweep->values;

  KleinScanResult res;
  res.rows.resize(values.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      try {
        res.rows[i] = sweep_point(cfg, grid, eps2, values[i]);
      } catch (const Error& e) {
        res.rows[i].value = values[i];
        res.rows[i].error = e.what();
      }
    }
  };
  const int nw = std::max(1, parallel);
  std::vector<std::thread> threads;
  for (int t = 1; t < nw; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  // gamma_pos: bisection on min eig of eps^2 - gamma^2 v^2
  const int N = grid.points;
  RVec v0(N);
  for (int j = 0; j < N; ++j) v0(j) = cfg.potential.v(grid.nodes(j));
  auto min_eig = [&](double gamma) {
    CMat E = eps2 - CMat(RVec((gamma * v0).array().square()).asDiagonal());
    Eigen::SelfAdjointEigenSolver<CMat> es(E, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  int bracket = -1;
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    if (res.rows[i].min_energy_eig > 0 && res.rows[i + 1].min_energy_eig <= 0) {
      bracket = static_cast<int>(i);
      break;
    }
  }
  if (bracket < 0 && !res.rows.empty() && res.rows.front().min_energy_eig <= 0)
    fail(ErrorCode::SweepTooCoarse,
         "first sweep point already lost positivity; cannot bracket gamma_pos");
  if (bracket >= 0) {
    double lo = values[bracket], hi = values[bracket + 1];
    while ((hi - lo) > 1e-3 * std::max(hi, 1e-12)) {
      const double mid = 0.5 * (lo + hi);
      (min_eig(mid) > 0 ? lo : hi) = mid;
    }
    res.has_gamma_pos = true;
    res.gamma_pos = 0.5 * (lo + hi);
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (res.rows[i].error.empty() && res.rows[i].complex_pairs > 0) {
      res.has_gamma_cplx = true;
      res.gamma_cplx = values[i];
      break;
    }
  }
  if (res.has_gamma_cplx) {
    res.ordering_ok = res.has_gamma_pos &&
                      res.gamma_cplx >= res.gamma_pos -
                                            (values[1] - values[0]);
  }
  return res;
}

ReportBundle run_command(const ExperimentConfig& cfg, int parallel) {
  ReportBundle bundle;
  json& doc = bundle.doc;
  doc["config"] = cfg.echo;
  doc["provenance"] = {{"version", kVersion},
                       {"seed", cfg.seed},
                       {"timestamp", timestamp_utc()}};

  if (cfg.command == "sweep") {
    const KleinScanResult scan = klein_paradox_scan(cfg, parallel);
    json rows = json::array();
    for (const auto& r : scan.rows)
      rows.push_back({{"value", r.value},
                      {"kappa", r.kappa},
                      {"complex_pairs", r.complex_pairs},
                      {"max_im", r.max_im},
                      {"min_energy_eig", r.min_energy_eig},
                      {"error", r.error}});
    doc["sweep"] = {{"rows", rows},
                    {"has_gamma_pos", scan.has_gamma_pos},
                    {"gamma_pos", scan.gamma_pos},
                    {"has_gamma_cplx", scan.has_gamma_cplx},
                    {"gamma_cplx", scan.gamma_cplx},
                    {"ordering_ok", scan.ordering_ok}};
    return bundle;
  }

  const Grid1D grid = make_grid(cfg.X, cfg.N);
  KGOperators model;
  try {
    model = build_generator(grid, cfg.coefficients, cfg.potential);
  } catch (const Error& e) {
    throw Error(ErrorCode::ModelBuildFailed, e.what());
  }
  const HypothesisReport hyp =
      check_hypotheses(model, cfg.coefficients, cfg.potential);
  doc["hypotheses"] = to_json(hyp);
  doc["model"] = {{"kappa", model.kappa},
                  {"m_grid", model.m_grid},
                  {"adjustment_radius", model.adjustment_radius},
                  {"diag_residual", model.diag_residual}};

  if (cfg.command == "check") return bundle;

  if (cfg.command == "spectrum") {
    auto gram = std::make_shared<GramStructure>(build_gram(model.M_h));
    const KreinOperator B = make_krein_operator(gram, model.B);
    const SpectrumClassification S = classify_spectrum(B);
    doc["spectrum"] = to_json(S);
    try {
      const DefinitizingPolynomial p = definitizing_polynomial(B, S);
      std::vector<double> coeffs(p.coeffs.data(), p.coeffs.data() + p.coeffs.size());
      doc["definitizing_polynomial"] = {
          {"coeffs_ascending", coeffs},
          {"degree", p.degree()},
          {"certificate_residual", p.certificate_residual},
          {"critical_points", p.critical_points}};
    } catch (const Error& e) {
      doc["definitizing_polynomial"] = {{"error", e.what()}};
    }
    doc["completeness_residual"] = completeness_identity(B, S);
    return bundle;
  }

  if (cfg.command == "evolve") {
    const Propagator P_B = make_propagator_B(model);
    std::vector<CVec> states;
    if (!cfg.packets.empty())
      for (const auto& s : cfg.packets) states.push_back(make_packet(model, s));
    else
      states.push_back(
          CVec(random_cvec(model.dim2(), cfg.seed).normalized() /
               std::sqrt(grid.dx)));
    const TrajectoryReport tr =
        conservation_report(model, P_B, states.front(), cfg.times);
    doc["trajectory"] = to_json(tr);

    if (!cfg.packets.empty()) {
      const Propagator P_L = make_propagator_L(model);
      const CVec u = model.U * states.front();
      const SmoothFunction chi = smooth_indicator(
          cfg.filter.center - cfg.filter.halfwidth,
          cfg.filter.center + cfg.filter.halfwidth, cfg.filter.ramp);
      std::vector<double> vt;
      for (double t : cfg.times)
        if (t > 0) vt.push_back(t);
      try {
        const VelocityDiagnostic vd = velocity_diagnostics(
            model, P_L, u, chi, cfg.theta_list, cfg.theta0, vt);
        doc["velocity"] = to_json(vd);
      } catch (const Error& e) {
        doc["velocity"] = {{"error", e.what()}};
      }
    }
    return bundle;
  }

  if (cfg.command == "scatter") {
    if (cfg.packets.empty())
      fail(ErrorCode::ConfigInvalid, "/run/packets: scatter needs packets");
    const Propagator P_B = make_propagator_B(model);
    const Propagator P_B_inf = make_propagator_B_inf(model);
    auto gram = std::make_shared<GramStructure>(build_gram(model.M_h));
    const KreinOperator B = make_krein_operator(gram, model.B);
    const SpectrumClassification S = classify_spectrum(B);
    const Decomposition dec = bound_scatt_decomposition(model, P_B, S);
    doc["decomposition"] = {{"pp_rank", dec.pp_rank},
                            {"selfadjoint_residual", dec.selfadjoint_residual},
                            {"idempotent_residual", dec.idempotent_residual},
                            {"h_orthogonality", dec.h_orthogonality},
                            {"omega_orthogonality", dec.omega_orthogonality},
                            {"cross_norm", dec.cross_norm}};
    WaveOpInputs in{&model, &P_B, &P_B_inf, &dec};
    const bool long_range = model.v_l.cwiseAbs().maxCoeff() > 1e-14;
    ScatteringReport rep;
    if (long_range || cfg.use_modifier) {
      const EikonalPhase phase =
          eikonal_phase_1d(cfg.potential, cfg.coefficients.m_inf, grid,
                           cfg.eikonal_R, cfg.eikonal_alpha);
      doc["eikonal"] = {{"max_residual", phase.max_residual},
                        {"correction_coeff", phase.correction_coeff},
                        {"certified", phase.certified}};
      const CMat T_mod = build_modifier_T(model, phase, cfg.potential.lr_sign);
      rep = long_range_wave_operator(in, T_mod, cfg.packets, cfg.horizon_T,
                                     cfg.direction);
    } else {
      rep = short_range_wave_operator(in, cfg.packets, cfg.horizon_T,
                                      cfg.direction);
    }
    doc["scattering"] = to_json(rep);
    return bundle;
  }

  fail(ErrorCode::Internal, "unhandled command " + cfg.command);
}

}  // namespace kgs
