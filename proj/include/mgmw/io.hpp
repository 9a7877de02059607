#pragma once

#include "mgmw/classifier.hpp"
#include "mgmw/motion.hpp"
#include "mgmw/skeleton.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mgmw {

using Json = nlohmann::ordered_json;

// Skeleton + motion document:
//   {"skeleton": {"parents", "offsets", "lengths", "limits_min", "limits_max",
//                 "spinal_flags"},
//    "representation": "angle" | "position", "frame_rate": r, "frames": [[...]]}
// Doubles are written in shortest round-trip decimal form, so a write/read
// cycle reproduces every value bit for bit.

Json skeleton_to_json(const Skeleton& skeleton);
Skeleton skeleton_from_json(const Json& j);

Json frames_to_json(const Frames& frames);
Frames frames_from_json(const Json& j);

struct MotionDocument {
  Skeleton skeleton;
  Motion motion;
};

Json motion_document_to_json(const Skeleton& skeleton, const Motion& motion);
MotionDocument motion_document_from_json(const Json& j);

/// Dataset file: skeleton, class count, split, seed and labelled samples.
/// When `frames` is given, every motion is resampled to that many frames.
Json dataset_to_json(const LabeledDataset& data);
LabeledDataset dataset_from_json(const Json& j, std::optional<int> frames = std::nullopt);

/// Versioned model checkpoint with full-precision weights.
Json model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const Json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Json read_json_file(const std::filesystem::path& path);
/// indent < 0 writes a single line.
void write_json_file(const std::filesystem::path& path, const Json& j, int indent = -1);

}  // namespace mgmw
