#pragma once

#include "releq/family.hpp"
#include "releq/rotors.hpp"
#include "releq/types.hpp"
#include "releq/versality.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace releq {

inline constexpr const char* kSchemaVersion = "1";

/// Shortest round-trippable decimal form of a double (deterministic
/// across runs; used by every CSV and JSON writer).
std::string format_double(double v);

// --- branch sets -----------------------------------------------------------

/// One CSV stream per branch: header comment with the schema version and
/// branch metadata, then `branch_id,lambda,x,y,z,j,h,stability` rows.
void write_branch_csv(std::ostream& os, const REBranch& branch);

nlohmann::json branch_to_json(const REBranch& branch);
nlohmann::json branches_to_json(const QuadraticModel& m,
                                const UnfoldingParam& alpha,
                                double window_radius,
                                const std::vector<REBranch>& branches);

struct BranchesDocument {
  double a, b, c;
  UnfoldingParam alpha;
  double window_radius;
  std::vector<REBranch> branches;
};
BranchesDocument branches_from_json(const nlohmann::json& doc);

// --- energy-momentum discriminant ------------------------------------------

void write_em_csv(std::ostream& os, const EMCurve& curve);
nlohmann::json em_to_json(const QuadraticModel& m, const UnfoldingParam& alpha,
                          const std::vector<EMCurve>& curves);

// --- bifurcation inventories ------------------------------------------------

nlohmann::json bifurcations_to_json(const QuadraticModel& m,
                                    const UnfoldingParam& alpha,
                                    const std::vector<SaddleCentrePoint>& sc,
                                    const std::vector<PitchforkPoint>& pf);
void write_bifurcations_csv(std::ostream& os,
                            const std::vector<SaddleCentrePoint>& sc,
                            const std::vector<PitchforkPoint>& pf);

// --- trajectories ------------------------------------------------------------

/// `t,x,y,z,h,j` rows with a header comment carrying the drift summary.
void write_trajectory_csv(std::ostream& os, const ReducedTrajectory& traj);

// --- rotor scenarios ----------------------------------------------------------

nlohmann::json scenario_to_json(const ScenarioReport& report);
RotorBodySystem rotor_system_from_json(const nlohmann::json& cfg,
                                       double* j_max_out = nullptr);

// --- versality ----------------------------------------------------------------

nlohmann::json codim_report_to_json(const CodimReport& rep,
                                    const VersalityReport* versal = nullptr,
                                    const bool* determined = nullptr);

}  // namespace releq
