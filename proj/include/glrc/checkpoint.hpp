#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glrc/matrix.hpp"
#include "glrc/sparse.hpp"
#include "glrc/student.hpp"
#include "glrc/teacher.hpp"

namespace glrc {

enum class ModelKind : std::uint32_t { teacher = 1, student = 2 };

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all little-endian:
///   "GLRC" | u32 version | u32 kind | u32 users | u32 items | u32 dim |
///   u32 layers | f32 leaky_slope | u32 flags | f32 tensors...
/// Tensors: H_bar, then W_1..W_L' for students. flags bit 0 = averaged
/// teacher readout.
struct CheckpointHeader {
  ModelKind kind = ModelKind::student;
  std::uint32_t users = 0;
  std::uint32_t items = 0;
  std::uint32_t dim = 0;
  std::uint32_t layers = 0;
  float leaky_slope = 0.0f;
  std::uint32_t flags = 0;
};

struct CheckpointMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double validation_recall = 0.0;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<DenseMatrix> tensors;
};

/// Tensors are stored as 32-bit floats.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws DataError on bad magic, unknown version or length mismatch.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt, const CheckpointMeta& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Sidecar is `<path>.json`.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

Checkpoint to_checkpoint(const TeacherModel& teacher);
Checkpoint to_checkpoint(const StudentModel& student);

/// Teacher needs the train graph to rebuild the normalized adjacency.
TeacherModel teacher_from_checkpoint(const Checkpoint& ckpt, const InteractionSet& train);
StudentModel student_from_checkpoint(const Checkpoint& ckpt);

}  // namespace glrc
