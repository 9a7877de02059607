#include "mgmw/motion.hpp"

#include "mgmw/errors.hpp"

#include <cmath>
#include <string>

namespace mgmw {

std::string_view to_string(Representation rep) {
  return rep == Representation::kAngle ? "angle" : "position";
}

Representation parse_representation(std::string_view text) {
  if (text == "angle") return Representation::kAngle;
  if (text == "position") return Representation::kPosition;
  throw Error("unknown representation '" + std::string(text) + "'");
}

void validate_motion(const Motion& motion) {
  if (motion.frame_count() < 3) {
    throw DimensionError("motion needs at least 3 frames, got " +
                         std::to_string(motion.frame_count()));
  }
  if (!motion.frames.allFinite()) throw Error("motion contains non-finite values");
  if (!(motion.frame_rate > 0.0)) throw Error("frame rate must be positive");
}

Motion resample(const Motion& motion, Eigen::Index frames) {
  if (frames < 2 || motion.frame_count() < 2) {
    throw DimensionError("resampling needs at least 2 source and target frames");
  }
  if (frames == motion.frame_count()) return motion;
  Motion out{motion.representation, Frames(frames, motion.dof_count()), motion.frame_rate};
  const double scale = static_cast<double>(motion.frame_count() - 1) /
                       static_cast<double>(frames - 1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double s = static_cast<double>(t) * scale;
    auto lo = static_cast<Eigen::Index>(std::floor(s));
    if (lo >= motion.frame_count() - 1) lo = motion.frame_count() - 2;
    const double frac = s - static_cast<double>(lo);
    out.frames.row(t) = (1.0 - frac) * motion.frames.row(lo) + frac * motion.frames.row(lo + 1);
  }
  return out;
}

double motion_distance(const Motion& x, const Motion& y) {
  if (x.frames.rows() != y.frames.rows() || x.frames.cols() != y.frames.cols()) {
    throw DimensionError("motion_distance: shape mismatch");
  }
  return (x.frames - y.frames).norm() / static_cast<double>(x.frame_count());
}

}  // namespace mgmw
