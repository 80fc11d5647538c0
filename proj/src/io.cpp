#include "releq/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

namespace releq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

// --- branches ----------------------------------------------------------------

namespace {

const char* kind_name(BranchKind k) {
  return k == BranchKind::Curve ? "curve" : "line";
}

void put_mu(std::ostream& os, const Vec3& mu) {
  os << '(' << format_double(mu[0]) << ',' << format_double(mu[1]) << ','
     << format_double(mu[2]) << ')';
}

}  // namespace

void write_branch_csv(std::ostream& os, const REBranch& branch) {
  os << "# releq-branches schema=" << kSchemaVersion << " branch="
     << branch.id << " kind=" << kind_name(branch.kind)
     << " contains_origin=" << (branch.contains_origin ? 1 : 0)
     << " wraps_infinity=" << (branch.wraps_infinity ? 1 : 0);
  if (branch.kind == BranchKind::Line) os << " line_axis=" << branch.line_axis;
  os << " lambda_begin=" << format_double(branch.lambda_begin)
     << " lambda_end=" << format_double(branch.lambda_end) << '\n';
  for (const auto& mk : branch.markers) {
    os << "# marker kind=" << to_string(mk.kind)
       << " lambda=" << format_double(mk.lambda) << " mu=";
    put_mu(os, mk.mu);
    os << " j=" << format_double(mk.j) << '\n';
  }
  os << "branch_id,lambda,x,y,z,j,h,stability\n";
  for (const auto& s : branch.samples) {
    os << branch.id << ',' << format_double(s.lambda) << ','
       << format_double(s.mu[0]) << ',' << format_double(s.mu[1]) << ','
       << format_double(s.mu[2]) << ',' << format_double(s.j) << ','
       << format_double(s.h) << ',' << to_string(s.stability) << '\n';
  }
}

namespace {

nlohmann::json sample_to_json(const BranchSample& s) {
  nlohmann::json out;
  if (std::isfinite(s.lambda)) out["lambda"] = s.lambda;
  out["mu"] = {s.mu[0], s.mu[1], s.mu[2]};
  out["j"] = s.j;
  out["h"] = s.h;
  out["stability"] = to_string(s.stability);
  if (s.at_bifurcation) out["at_bifurcation"] = true;
  return out;
}

nlohmann::json marker_to_json(const BifurcationMarker& m) {
  nlohmann::json out;
  out["kind"] = to_string(m.kind);
  if (std::isfinite(m.lambda)) out["lambda"] = m.lambda;
  out["mu"] = {m.mu[0], m.mu[1], m.mu[2]};
  out["j"] = m.j;
  return out;
}

StabilityClass stability_from_string(const std::string& s) {
  for (StabilityClass c :
       {StabilityClass::LyapunovStable, StabilityClass::StronglyLinearlyStable,
        StabilityClass::Elliptic, StabilityClass::SpectrallyStableDegenerate,
        StabilityClass::LinearlyUnstable, StabilityClass::Unclassified})
    if (s == to_string(c)) return c;
  return StabilityClass::Unclassified;
}

BifurcationKind kind_from_string(const std::string& s) {
  for (BifurcationKind k :
       {BifurcationKind::SaddleCentre, BifurcationKind::Pitchfork,
        BifurcationKind::ZeroMomentum})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown marker kind: " + s);
}

}  // namespace

nlohmann::json branch_to_json(const REBranch& branch) {
  nlohmann::json out;
  out["id"] = branch.id;
  out["kind"] = kind_name(branch.kind);
  out["contains_origin"] = branch.contains_origin;
  out["wraps_infinity"] = branch.wraps_infinity;
  if (branch.kind == BranchKind::Line) out["line_axis"] = branch.line_axis;
  out["lambda_begin"] = branch.lambda_begin;
  out["lambda_end"] = branch.lambda_end;
  auto samples = nlohmann::json::array();
  for (const auto& s : branch.samples) samples.push_back(sample_to_json(s));
  out["samples"] = std::move(samples);
  auto markers = nlohmann::json::array();
  for (const auto& m : branch.markers) markers.push_back(marker_to_json(m));
  out["markers"] = std::move(markers);
  return out;
}

nlohmann::json branches_to_json(const QuadraticModel& m,
                                const UnfoldingParam& alpha,
                                double window_radius,
                                const std::vector<REBranch>& branches) {
  nlohmann::json out;
  out["schema_version"] = kSchemaVersion;
  out["model"] = {{"a", m.a}, {"b", m.b}, {"c", m.c}};
  out["alpha"] = {alpha[0], alpha[1], alpha[2]};
  out["window_radius"] = window_radius;
  auto arr = nlohmann::json::array();
  for (const auto& br : branches) arr.push_back(branch_to_json(br));
  out["branches"] = std::move(arr);
  return out;
}

namespace {

BranchesDocument parse_branches(const nlohmann::json& doc) {
  BranchesDocument out;
  out.a = doc.at("model").at("a").get<double>();
  out.b = doc.at("model").at("b").get<double>();
  out.c = doc.at("model").at("c").get<double>();
  const auto& al = doc.at("alpha");
  out.alpha = Vec3(al.at(0).get<double>(), al.at(1).get<double>(),
                   al.at(2).get<double>());
  out.window_radius = doc.at("window_radius").get<double>();
  for (const auto& jb : doc.at("branches")) {
    REBranch br;
    br.id = jb.at("id").get<int>();
    br.kind = jb.at("kind").get<std::string>() == "line" ? BranchKind::Line
                                                         : BranchKind::Curve;
    br.contains_origin = jb.at("contains_origin").get<bool>();
    br.wraps_infinity = jb.at("wraps_infinity").get<bool>();
    if (jb.contains("line_axis")) br.line_axis = jb["line_axis"].get<int>();
    br.lambda_begin = jb.at("lambda_begin").get<double>();
    br.lambda_end = jb.at("lambda_end").get<double>();
    for (const auto& js : jb.at("samples")) {
      BranchSample s;
      s.lambda = js.contains("lambda") ? js["lambda"].get<double>() : kInf;
      const auto& mu = js.at("mu");
      s.mu = Vec3(mu.at(0).get<double>(), mu.at(1).get<double>(),
                  mu.at(2).get<double>());
      s.j = js.at("j").get<double>();
      s.h = js.at("h").get<double>();
      s.stability = stability_from_string(js.at("stability").get<std::string>());
      s.at_bifurcation = js.value("at_bifurcation", false);
      br.samples.push_back(s);
    }
    for (const auto& jm : jb.at("markers")) {
      BifurcationMarker m;
      m.kind = kind_from_string(jm.at("kind").get<std::string>());
      m.lambda = jm.contains("lambda") ? jm["lambda"].get<double>() : kInf;
      const auto& mu = jm.at("mu");
      m.mu = Vec3(mu.at(0).get<double>(), mu.at(1).get<double>(),
                  mu.at(2).get<double>());
      m.j = jm.at("j").get<double>();
      br.markers.push_back(m);
    }
    out.branches.push_back(std::move(br));
  }
  return out;
}

}  // namespace

BranchesDocument branches_from_json(const nlohmann::json& doc) {
  if (!doc.contains("schema_version") ||
      doc["schema_version"].get<std::string>() != kSchemaVersion)
    throw ConfigError("unsupported branches schema version");
  try {
    return parse_branches(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed branches document: ") + e.what());
  }
}

// --- energy-momentum ----------------------------------------------------------

void write_em_csv(std::ostream& os, const EMCurve& curve) {
  os << "# releq-em schema=" << kSchemaVersion << " branch=" << curve.branch_id
     << '\n';
  for (const auto& p : curve.folds)
    os << "# fold j=" << format_double(p[0]) << " h=" << format_double(p[1])
       << '\n';
  for (const auto& p : curve.crossings)
    os << "# crossing j=" << format_double(p[0])
       << " h=" << format_double(p[1]) << '\n';
  os << "branch_id,j,h\n";
  for (const auto& p : curve.points)
    os << curve.branch_id << ',' << format_double(p[0]) << ','
       << format_double(p[1]) << '\n';
}

nlohmann::json em_to_json(const QuadraticModel& m, const UnfoldingParam& alpha,
                          const std::vector<EMCurve>& curves) {
  nlohmann::json out;
  out["schema_version"] = kSchemaVersion;
  out["model"] = {{"a", m.a}, {"b", m.b}, {"c", m.c}};
  out["alpha"] = {alpha[0], alpha[1], alpha[2]};
  auto arr = nlohmann::json::array();
  for (const auto& c : curves) {
    nlohmann::json jc;
    jc["branch_id"] = c.branch_id;
    auto pts = nlohmann::json::array();
    for (const auto& p : c.points) pts.push_back({p[0], p[1]});
    jc["points"] = std::move(pts);
    auto folds = nlohmann::json::array();
    for (const auto& p : c.folds) folds.push_back({p[0], p[1]});
    jc["folds"] = std::move(folds);
    auto cross = nlohmann::json::array();
    for (const auto& p : c.crossings) cross.push_back({p[0], p[1]});
    jc["crossings"] = std::move(cross);
    arr.push_back(std::move(jc));
  }
  out["curves"] = std::move(arr);
  return out;
}

// --- bifurcations ---------------------------------------------------------------

nlohmann::json bifurcations_to_json(const QuadraticModel& m,
                                    const UnfoldingParam& alpha,
                                    const std::vector<SaddleCentrePoint>& sc,
                                    const std::vector<PitchforkPoint>& pf) {
  nlohmann::json out;
  out["schema_version"] = kSchemaVersion;
  out["model"] = {{"a", m.a}, {"b", m.b}, {"c", m.c}};
  out["alpha"] = {alpha[0], alpha[1], alpha[2]};
  auto jsc = nlohmann::json::array();
  for (const auto& p : sc)
    jsc.push_back({{"lambda", p.lambda},
                   {"mu", {p.mu[0], p.mu[1], p.mu[2]}},
                   {"j", p.j}});
  out["saddle_centres"] = std::move(jsc);
  auto jpf = nlohmann::json::array();
  for (const auto& p : pf)
    jpf.push_back({{"lambda", p.lambda},
                   {"mu", {p.mu[0], p.mu[1], p.mu[2]}},
                   {"line_axis", p.line_axis},
                   {"j", casimir(p.mu)}});
  out["pitchforks"] = std::move(jpf);
  return out;
}

void write_bifurcations_csv(std::ostream& os,
                            const std::vector<SaddleCentrePoint>& sc,
                            const std::vector<PitchforkPoint>& pf) {
  os << "# releq-bifurcations schema=" << kSchemaVersion << '\n';
  os << "kind,lambda,x,y,z,j\n";
  for (const auto& p : sc)
    os << "saddle-centre," << format_double(p.lambda) << ','
       << format_double(p.mu[0]) << ',' << format_double(p.mu[1]) << ','
       << format_double(p.mu[2]) << ',' << format_double(p.j) << '\n';
  for (const auto& p : pf)
    os << "pitchfork," << format_double(p.lambda) << ','
       << format_double(p.mu[0]) << ',' << format_double(p.mu[1]) << ','
       << format_double(p.mu[2]) << ',' << format_double(casimir(p.mu))
       << '\n';
}

// --- trajectories -----------------------------------------------------------------

void write_trajectory_csv(std::ostream& os, const ReducedTrajectory& traj) {
  os << "# releq-trajectory schema=" << kSchemaVersion
     << " h_drift=" << format_double(traj.h_drift)
     << " j_drift=" << format_double(traj.j_drift)
     << " max_distance_from_start="
     << format_double(traj.max_distance_from_start) << '\n';
  os << "t,x,y,z,h,j\n";
  for (size_t i = 0; i < traj.t.size(); ++i)
    os << format_double(traj.t[i]) << ',' << format_double(traj.mu[i][0])
       << ',' << format_double(traj.mu[i][1]) << ','
       << format_double(traj.mu[i][2]) << ',' << format_double(traj.h[i])
       << ',' << format_double(traj.j[i]) << '\n';
}

// --- rotors -------------------------------------------------------------------------

nlohmann::json scenario_to_json(const ScenarioReport& rep) {
  nlohmann::json out;
  out["schema_version"] = kSchemaVersion;
  out["model"] = {{"a", rep.mapping.model.a},
                  {"b", rep.mapping.model.b},
                  {"c", rep.mapping.model.c}};
  out["alpha"] = {rep.mapping.alpha[0], rep.mapping.alpha[1],
                  rep.mapping.alpha[2]};
  out["constant"] = rep.mapping.constant;
  out["axis_perm"] = {rep.mapping.axis_perm[0], rep.mapping.axis_perm[1],
                      rep.mapping.axis_perm[2]};
  out["stratum"] = to_string(rep.stratum);
  auto evs = nlohmann::json::array();
  for (const auto& ev : rep.events)
    evs.push_back(
        {{"kind", to_string(ev.kind)},
         {"j", ev.j},
         {"mu_model", {ev.mu_model[0], ev.mu_model[1], ev.mu_model[2]}},
         {"mu_body", {ev.mu_body[0], ev.mu_body[1], ev.mu_body[2]}}});
  out["events"] = std::move(evs);
  out["counts"] = rep.counts;
  out["count_levels"] = rep.count_levels;
  out["single_axis"] = rep.single_axis;
  if (rep.single_axis) {
    out["activated_model_axis"] = rep.activated_model_axis;
    out["first_pitchfork_on_lower_energy_side"] =
        rep.first_pitchfork_on_lower_energy_side;
    out["restabilizes"] = rep.restabilizes;
    out["simultaneous"] = rep.simultaneous;
  }
  auto brs = nlohmann::json::array();
  for (const auto& br : rep.branches) brs.push_back(branch_to_json(br));
  out["branches"] = std::move(brs);
  return out;
}

RotorBodySystem rotor_system_from_json(const nlohmann::json& cfg,
                                       double* j_max_out) {
  auto vec3_of = [](const nlohmann::json& a, const char* what) {
    if (!a.is_array() || a.size() != 3)
      throw ConfigError(std::string(what) + " must be a 3-array");
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(),
                a.at(2).get<double>());
  };
  if (!cfg.contains("inertia") || !cfg.contains("rotor_inertia"))
    throw ConfigError("rotor config needs 'inertia' and 'rotor_inertia'");
  const Vec3 inertia = vec3_of(cfg["inertia"], "inertia");
  const Vec3 rotor = vec3_of(cfg["rotor_inertia"], "rotor_inertia");
  const std::string mode = cfg.value("mode", std::string("free"));
  RotorBodySystem sys;
  if (mode == "free") {
    if (!cfg.contains("sigma"))
      throw ConfigError("free mode needs 'sigma'");
    sys = RotorBodySystem::free_gyrostat(inertia, rotor,
                                         vec3_of(cfg["sigma"], "sigma"));
  } else if (mode == "controlled") {
    if (!cfg.contains("rates"))
      throw ConfigError("controlled mode needs 'rates'");
    sys = RotorBodySystem::controlled(inertia, rotor,
                                      vec3_of(cfg["rates"], "rates"));
  } else {
    throw ConfigError("mode must be 'free' or 'controlled'");
  }
  if (j_max_out) {
    if (!cfg.contains("j_max"))
      throw ConfigError("rotor config needs 'j_max'");
    *j_max_out = cfg["j_max"].get<double>();
    if (!(*j_max_out > 0.0)) throw ConfigError("'j_max' must be positive");
  }
  return sys;
}

// --- versality -------------------------------------------------------------------------

nlohmann::json codim_report_to_json(const CodimReport& rep,
                                    const VersalityReport* versal,
                                    const bool* determined) {
  nlohmann::json out;
  out["schema_version"] = kSchemaVersion;
  out["degree"] = rep.degree;
  out["ambient_dim"] = rep.ambient_dim;
  out["tangent_dim"] = rep.tangent_dim;
  out["codim"] = rep.codim;
  out["constant_row_complement"] = rep.constant_row_complement;
  out["complement"] = rep.complement_names;
  if (versal) {
    out["versal"] = versal->versal;
    out["family_rank"] = versal->family_rank;
    out["missing"] = versal->missing;
  }
  if (determined) out["determined"] = *determined;
  return out;
}

}  // namespace releq
