#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "laprecon/geometry.hpp"

namespace laprecon {

/// Relative flange motion A_i and the matching relative camera motion B_i.
struct MotionPair {
  Pose robot_motion;
  Pose camera_motion;
};

/// output[i] = poses[i]^-1 * poses[i+1]. Needs at least two poses.
std::vector<Pose> relative_motions(std::span<const Pose> poses);

struct HandEyeOptions {
  /// Allowed |angle(A_i) - angle(B_i)| before a warning is raised; ten times
  /// this is a hard error.
  double congruence_tolerance = 1e-3;
  /// Receives congruence warnings. Unset: written to std::clog.
  std::function<void(const std::string&)> on_warning;
};

/**
 * Solves A_i X = X B_i for the flange-to-camera transform X with the dual
 * quaternion method: the two smallest right singular vectors of the stacked
 * 6n x 8 screw-constraint matrix are combined so that the result is a unit
 * dual quaternion.
 *
 * Requires two or more pairs, every rotation angle above 1e-3 rad and at least
 * two rotation axes more than 1e-3 rad apart (RankDeficiency otherwise).
 */
Pose solve_hand_eye(std::span<const MotionPair> pairs, const HandEyeOptions& options = {});

struct HandEyeResidual {
  double rotation = 0.0;     ///< mean angle of (A X)^-1 (X B), radians
  double translation = 0.0;  ///< mean translation norm of the same, mm
};

HandEyeResidual hand_eye_residual(std::span<const MotionPair> pairs, const Pose& x);

}  // namespace laprecon
