#include "releq/io.hpp"
#include "releq/reduction.hpp"
#include "releq/stability.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace releq;

Vec3 parse_vec3(const std::string& text, const char* what) {
  Vec3 v;
  std::stringstream ss(text);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 3) throw ConfigError(std::string(what) + ": expected 3 values");
    try {
      size_t pos = 0;
      v[i] = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": cannot parse '" + tok + "'");
    }
    ++i;
  }
  if (i != 3) throw ConfigError(std::string(what) + ": expected 3 values");
  return v;
}

QuadraticModel parse_model(const std::string& abc) {
  const Vec3 v = parse_vec3(abc, "--abc");
  return QuadraticModel(v[0], v[1], v[2]);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

std::string csv_stem(const std::string& out) {
  if (out.size() > 4 && out.substr(out.size() - 4) == ".csv")
    return out.substr(0, out.size() - 4);
  return out;
}

struct BranchArgs {
  std::string abc;
  std::string alpha = "0,0,0";
  double radius = 1.0;
  std::string format = "csv";
  std::string out;
  std::string system_path;
  double tol_zero = 0.0;
  bool no_classify = false;
};

void run_branches(const BranchArgs& args) {
  std::vector<REBranch> branches;
  std::optional<QuadraticModel> model;
  Vec3 alpha = parse_vec3(args.alpha, "--alpha");

  if (!args.system_path.empty()) {
    const ReducedSystem sys = system_from_json_text(read_file(args.system_path));
    branches = re_set_general(sys, args.radius);
    if (!args.no_classify)
      for (auto& br : branches) classify_branch(sys, br);
  } else {
    if (args.abc.empty())
      throw ConfigError("either --abc or --system is required");
    model = parse_model(args.abc);
    BranchOptions opts;
    opts.zero_tol = args.tol_zero;
    branches = enumerate_branches(*model, alpha, args.radius, opts);
    if (!args.no_classify) {
      const ReducedSystem sys = from_universal(*model, alpha);
      for (auto& br : branches) classify_branch(sys, br);
    }
  }

  if (args.format == "json") {
    nlohmann::json doc;
    if (model) {
      doc = branches_to_json(*model, alpha, args.radius, branches);
    } else {
      doc["schema_version"] = kSchemaVersion;
      doc["window_radius"] = args.radius;
      auto arr = nlohmann::json::array();
      for (const auto& br : branches) arr.push_back(branch_to_json(br));
      doc["branches"] = std::move(arr);
    }
    if (args.out.empty())
      std::cout << doc.dump(2) << '\n';
    else
      write_file(args.out, doc.dump(2) + "\n");
  } else if (args.format == "csv") {
    if (args.out.empty()) {
      for (const auto& br : branches) write_branch_csv(std::cout, br);
    } else {
      const std::string stem = csv_stem(args.out);
      for (const auto& br : branches) {
        std::ostringstream os;
        write_branch_csv(os, br);
        write_file(stem + ".branch" + std::to_string(br.id) + ".csv",
                   os.str());
      }
    }
  } else {
    throw ConfigError("--format must be csv or json");
  }
  std::cerr << "branches: " << branches.size() << '\n';
}

void run_em(const BranchArgs& args) {
  if (args.abc.empty()) throw ConfigError("--abc is required");
  const QuadraticModel model = parse_model(args.abc);
  const Vec3 alpha = parse_vec3(args.alpha, "--alpha");
  BranchOptions opts;
  opts.zero_tol = args.tol_zero;
  const auto curves = em_discriminant(model, alpha, args.radius, opts);

  size_t folds = 0, crossings = 0;
  for (const auto& c : curves) {
    folds += c.folds.size();
    crossings += c.crossings.size();
  }
  if (args.format == "json") {
    const auto doc = em_to_json(model, alpha, curves);
    if (args.out.empty())
      std::cout << doc.dump(2) << '\n';
    else
      write_file(args.out, doc.dump(2) + "\n");
  } else {
    if (args.out.empty()) {
      for (const auto& c : curves) write_em_csv(std::cout, c);
    } else {
      const std::string stem = csv_stem(args.out);
      for (const auto& c : curves) {
        std::ostringstream os;
        write_em_csv(os, c);
        write_file(stem + ".branch" + std::to_string(c.branch_id) + ".csv",
                   os.str());
      }
    }
  }
  // crossings are recorded on both intersecting branches
  std::cerr << "folds: " << folds << " crossings: " << crossings / 2 << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relative equilibria of SO(3)-invariant Hamiltonian systems "
               "near zero momentum"};
  app.require_subcommand(1);

  BranchArgs bargs;
  auto* cmd_branches = app.add_subcommand(
      "branches", "enumerate relative-equilibrium branches in a window");
  cmd_branches->add_option("--abc", bargs.abc,
                           "model coefficients a,b,c (a>b>c)");
  cmd_branches->add_option("--alpha", bargs.alpha,
                           "unfolding parameter alpha,beta,gamma");
  cmd_branches->add_option("--radius", bargs.radius, "momentum window radius");
  cmd_branches->add_option("--format", bargs.format, "csv or json");
  cmd_branches->add_option("--out", bargs.out, "output path (csv: prefix)");
  cmd_branches->add_option("--system", bargs.system_path,
                           "JSON reduced-system description (continuation)");
  cmd_branches->add_option("--tol-zero", bargs.tol_zero,
                           "threshold below which alpha components are zero");
  cmd_branches->add_flag("--no-classify", bargs.no_classify,
                         "skip stability annotation");

  BranchArgs eargs;
  auto* cmd_em = app.add_subcommand(
      "em-discriminant", "energy-momentum image of the branches");
  cmd_em->add_option("--abc", eargs.abc, "model coefficients a,b,c");
  cmd_em->add_option("--alpha", eargs.alpha, "unfolding parameter");
  cmd_em->add_option("--radius", eargs.radius, "momentum window radius");
  cmd_em->add_option("--format", eargs.format, "csv or json");
  cmd_em->add_option("--out", eargs.out, "output path (csv: prefix)");
  cmd_em->add_option("--tol-zero", eargs.tol_zero, "zero threshold");

  std::string babc, balpha = "0,0,0", bformat = "csv", bout;
  double btol = 0.0;
  auto* cmd_bif = app.add_subcommand(
      "bifurcations", "saddle-centre and pitchfork points");
  cmd_bif->add_option("--abc", babc, "model coefficients")->required();
  cmd_bif->add_option("--alpha", balpha, "unfolding parameter");
  cmd_bif->add_option("--format", bformat, "csv or json");
  cmd_bif->add_option("--out", bout, "output path");
  cmd_bif->add_option("--tol-zero", btol, "zero threshold");

  std::string sabc, salpha = "0,0,0";
  double sj = 1.0, stol = 0.0;
  auto* cmd_count = app.add_subcommand(
      "sphere-count", "number of relative equilibria on the sphere j = j0");
  cmd_count->add_option("--abc", sabc, "model coefficients")->required();
  cmd_count->add_option("--alpha", salpha, "unfolding parameter");
  cmd_count->add_option("--j", sj, "momentum sphere level j0")->required();
  cmd_count->add_option("--tol-zero", stol, "zero threshold");

  std::string rconfig, rout, rtraj_out, rmu0;
  double rdt = 1e-3, rtfinal = 0.0;
  auto* cmd_rotors = app.add_subcommand(
      "rotors", "rigid body with rotors: scenario report and integration");
  cmd_rotors->add_option("--config", rconfig, "scenario config JSON")
      ->required();
  cmd_rotors->add_option("--out", rout, "scenario report output path");
  cmd_rotors->add_option("--integrate-from", rmu0,
                         "initial momentum x,y,z for direct integration");
  cmd_rotors->add_option("--t-final", rtfinal, "integration time");
  cmd_rotors->add_option("--dt", rdt, "integration step");
  cmd_rotors->add_option("--traj-out", rtraj_out, "trajectory CSV path");

  std::string vabc;
  int vdegree = 1;
  std::string vout;
  auto* cmd_versal = app.add_subcommand(
      "versality", "jet-space tangent dimensions and codimension report");
  cmd_versal->add_option("--abc", vabc, "model coefficients")->required();
  cmd_versal->add_option("--degree", vdegree, "maximum jet degree");
  cmd_versal->add_option("--out", vout, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_branches->parsed()) {
      run_branches(bargs);
    } else if (cmd_em->parsed()) {
      run_em(eargs);
    } else if (cmd_bif->parsed()) {
      const QuadraticModel model = parse_model(babc);
      const Vec3 alpha = parse_vec3(balpha, "--alpha");
      const Stratum st = classify_stratum(alpha, btol);
      std::vector<SaddleCentrePoint> sc;
      if (st.tag == StratumTag::Generic)
        sc = saddle_centre_points(model, alpha, btol);
      const auto pf = pitchfork_points(model, alpha, btol);
      if (bformat == "json") {
        const auto doc = bifurcations_to_json(model, alpha, sc, pf);
        if (bout.empty())
          std::cout << doc.dump(2) << '\n';
        else
          write_file(bout, doc.dump(2) + "\n");
      } else {
        std::ostringstream os;
        write_bifurcations_csv(os, sc, pf);
        if (bout.empty())
          std::cout << os.str();
        else
          write_file(bout, os.str());
      }
    } else if (cmd_count->parsed()) {
      const QuadraticModel model = parse_model(sabc);
      const Vec3 alpha = parse_vec3(salpha, "--alpha");
      std::cout << count_re_on_sphere(model, alpha, sj, stol) << '\n';
    } else if (cmd_rotors->parsed()) {
      const auto cfg = nlohmann::json::parse(read_file(rconfig));
      double j_max = 0.0;
      const RotorBodySystem sys = rotor_system_from_json(cfg, &j_max);
      const ScenarioReport rep = scenario_report(sys, j_max);
      const auto doc = scenario_to_json(rep);
      if (rout.empty())
        std::cout << doc.dump(2) << '\n';
      else
        write_file(rout, doc.dump(2) + "\n");
      if (!rmu0.empty()) {
        if (!(rtfinal > 0.0))
          throw ConfigError("--t-final must be positive for integration");
        const Vec3 mu0 = parse_vec3(rmu0, "--integrate-from");
        const ReducedTrajectory traj =
            integrate_reduced(sys, mu0, rtfinal, rdt);
        std::ostringstream os;
        write_trajectory_csv(os, traj);
        if (rtraj_out.empty())
          std::cout << os.str();
        else
          write_file(rtraj_out, os.str());
      }
    } else if (cmd_versal->parsed()) {
      const QuadraticModel model = parse_model(vabc);
      if (vdegree < 1) throw ConfigError("--degree must be >= 1");
      const Poly h = model_poly(model, std::max(2, vdegree + 1));
      auto reports = nlohmann::json::array();
      for (int d = 1; d <= vdegree; ++d) {
        const CodimReport rep = codim_report(h, d);
        const VersalityReport ver =
            versality_check(h, linear_family_directions(d), d);
        const bool det = determinacy_check(h, d);
        reports.push_back(codim_report_to_json(rep, &ver, &det));
      }
      nlohmann::json doc;
      doc["schema_version"] = kSchemaVersion;
      doc["reports"] = std::move(reports);
      if (vout.empty())
        std::cout << doc.dump(2) << '\n';
      else
        write_file(vout, doc.dump(2) + "\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateModel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateInertia& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
