#include "releq/types.hpp"

#include <algorithm>
#include <limits>

namespace releq {

const char* to_string(StratumTag tag) {
  switch (tag) {
    case StratumTag::Delta0: return "Delta0";
    case StratumTag::Delta1: return "Delta1";
    case StratumTag::Delta2: return "Delta2";
    case StratumTag::Generic: return "Generic";
  }
  return "?";
}

std::string Stratum::label() const {
  static const char* mark[] = {"-", "0", "+"};
  std::string out = to_string(tag);
  out += '(';
  for (int i = 0; i < 3; ++i) out += mark[sign[i] + 1];
  out += ')';
  return out;
}

const char* to_string(StabilityClass cls) {
  switch (cls) {
    case StabilityClass::LyapunovStable: return "lyapunov";
    case StabilityClass::StronglyLinearlyStable: return "strong";
    case StabilityClass::Elliptic: return "elliptic";
    case StabilityClass::SpectrallyStableDegenerate: return "degenerate";
    case StabilityClass::LinearlyUnstable: return "unstable";
    case StabilityClass::Unclassified: return "unclassified";
  }
  return "?";
}

const char* color_of(StabilityClass cls) {
  switch (cls) {
    case StabilityClass::LyapunovStable: return "red";
    case StabilityClass::StronglyLinearlyStable: return "green";
    case StabilityClass::Elliptic: return "green";
    case StabilityClass::SpectrallyStableDegenerate: return "grey";
    case StabilityClass::LinearlyUnstable: return "brown";
    case StabilityClass::Unclassified: return "grey";
  }
  return "grey";
}

const char* to_string(BifurcationKind kind) {
  switch (kind) {
    case BifurcationKind::SaddleCentre: return "saddle-centre";
    case BifurcationKind::Pitchfork: return "pitchfork";
    case BifurcationKind::ZeroMomentum: return "zero-momentum";
  }
  return "?";
}

double REBranch::min_j() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) m = std::min(m, s.j);
  return m;
}

}  // namespace releq
