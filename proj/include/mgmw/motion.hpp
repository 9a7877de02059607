#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace mgmw {

// Row-major so a motion flattens frame by frame.
using Frames = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Representation { kAngle, kPosition };

std::string_view to_string(Representation rep);
Representation parse_representation(std::string_view text);

/// A motion of n frames by m degrees of freedom, either joint angles
/// (radians) or joint positions (x, y, z per joint, joint-major).
struct Motion {
  Representation representation = Representation::kPosition;
  Frames frames;
  double frame_rate = 1.0;

  Eigen::Index frame_count() const { return frames.rows(); }
  Eigen::Index dof_count() const { return frames.cols(); }

  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {frames.data(), frames.size()};
  }
  Eigen::Map<Eigen::VectorXd> flat() { return {frames.data(), frames.size()}; }
};

/// Throws DimensionError for fewer than three frames and Error for
/// non-finite entries.
void validate_motion(const Motion& motion);

/// Linear-in-time resampling to `frames` frames. End frames are preserved.
Motion resample(const Motion& motion, Eigen::Index frames);

/// Mean per-frame deviation ||x - y||_F / n used as the attack distance.
double motion_distance(const Motion& x, const Motion& y);

}  // namespace mgmw
